"""Haar samplers and Monte Carlo estimates of centered eigenvalue statistics.

Ensembles: SO(2N), the determinant -1 coset O^-(2N+2), the compact symplectic
group USp(2N), and the equal-weight mixture of the first two ("O_full").
Each draw yields N free eigenphases theta_1 <= ... <= theta_N in [0, pi]
(the spectrum is {e^{+-i theta_j}}, plus forced eigenvalues +1 and -1 on the
O^- coset).  The centered product of one draw is

    prod_l [ sum_{0<|j|<=N} Phi_l(N theta_j / pi) - Phihat_l(0) - Phi_l(0)/2 ],

where the sum counts each free phase at +-j (= 2 sum_j Phi_l by evenness) and
the O^- coset adds the j=0 term Phi_l(0) for its forced +1 eigenvalue; the
forced -1 eigenvalue carries no index and is never summed.  Haar expectations
of these products converge (N -> infinity) to the closed forms in the
predictions module.

Sampling: QR of a Ginibre matrix with sign-corrected triangular factor for
SO(2N); a fixed reflection times an SO(2N+2) draw for O^- (translation
invariance of Haar measure); quaternionic modified Gram-Schmidt for USp(2N).
A tridiagonal Jacobi beta=2 sampler in x = 2 cos(theta) is available behind
the sampler="weyl" flag purely as an independent cross-check.
"""

import dataclasses
import math

import numpy as np
import scipy.stats

from .errors import (
    EstimateInvalidError,
    InvalidParameterError,
    SamplerFailureError,
)

MC_CHUNKS = 32  # fixed chunk count: identical estimates for any worker count
SAMPLE_BATCH = 256  # draws per vectorized linear-algebra batch
FORCED_TOL = 1e-8  # window booking the O^- forced phases at 0 and pi
PAIRING_TOL = 1e-8  # conjugation-pairing residual beyond this = solver failure

_TAGS = ("SO_even", "O_minus", "USp", "O_full")


# ----------------------------------------------------------------- domain types


@dataclasses.dataclass(frozen=True)
class EnsembleKind:
    """An ensemble tag (SO_even / O_minus / USp / O_full) plus free-phase count N."""

    tag: str
    N: int

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise InvalidParameterError(f"unknown ensemble tag {self.tag!r}")
        if int(self.N) < 1:
            raise InvalidParameterError("ensemble parameter N must be >= 1")
        object.__setattr__(self, "N", int(self.N))

    def matrix_dim(self, tag=None):
        """Matrix dimension of one draw of the given branch (2N, or 2N+2 on O^-)."""
        tag = self.tag if tag is None else tag
        if tag == "O_full":
            raise InvalidParameterError("O_full draws pick a branch; ask the branch")
        return 2 * self.N + 2 if tag == "O_minus" else 2 * self.N


@dataclasses.dataclass(frozen=True)
class EigenphaseSample:
    """Sorted free eigenphases of one draw plus residual diagnostics."""

    thetas: np.ndarray  # N ascending phases in [0, pi]
    forced_zero: bool  # +1 eigenvalue present (O^- coset)
    forced_pi: bool  # -1 eigenvalue present (O^- coset)
    residuals: dict

    def __post_init__(self):
        th = np.asarray(self.thetas, dtype=float)
        if th.ndim != 1 or th.size < 1:
            raise InvalidParameterError("thetas must be a nonempty 1-D array")
        if np.any(th < -1e-10) or np.any(th > np.pi + 1e-10):
            raise InvalidParameterError("eigenphases must lie in [0, pi]")
        if np.any(np.diff(th) < 0):
            raise InvalidParameterError("eigenphases must be sorted ascending")
        if self.forced_zero != self.forced_pi:
            raise InvalidParameterError("forced phases 0 and pi come as a pair")
        object.__setattr__(self, "thetas", np.clip(th, 0.0, np.pi))


@dataclasses.dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean and standard error of the centered product at finite N."""

    mean: float
    stderr: float
    samples: int
    seed: int
    kind: EnsembleKind
    failures: int = 0

    def __post_init__(self):
        if self.samples < 2:
            raise InvalidParameterError("an estimate needs at least two draws")


# ------------------------------------------------------------- matrix sampling


def _haar_so(dim, count, rng):
    """Haar SO(dim) batch: QR of a Ginibre matrix, R-diagonal sign corrected."""
    z = rng.standard_normal((count, dim, dim))
    q, r = np.linalg.qr(z)
    d = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    d[d == 0.0] = 1.0
    q *= d[:, None, :]
    # Fold the det = -1 half onto SO(dim) by a fixed right translation.
    sign, _ = np.linalg.slogdet(q)
    q[sign < 0.0, :, -1] *= -1.0
    return q


def _haar_o_minus(n_free, count, rng):
    """Haar batch on the coset O^-(2n+2): fixed row swap (det -1) times SO."""
    q = _haar_so(2 * n_free + 2, count, rng)
    q[:, [0, 1], :] = q[:, [1, 0], :]
    return q


def _jconj(v):
    """Quaternionic partner J conj(v) of complex vectors (interleaved pairs)."""
    w = np.empty_like(v)
    w[:, 0::2] = -np.conj(v[:, 1::2])
    w[:, 1::2] = np.conj(v[:, 0::2])
    return w


def _haar_usp(n_free, count, rng):
    """Haar USp(2n) batch via modified Gram-Schmidt over quaternionic columns.

    Column 2k is a Gaussian complex vector orthogonalized against all previous
    columns; column 2k+1 is its quaternionic partner (automatically orthogonal).
    Real-positive normalization plays the role of the QR sign correction.
    """
    dim = 2 * n_free
    z = rng.standard_normal((count, dim, n_free)) + 1j * rng.standard_normal(
        (count, dim, n_free)
    )
    q = np.empty((count, dim, dim), dtype=np.complex128)
    for k in range(n_free):
        v = z[:, :, k]
        if k:
            basis = q[:, :, : 2 * k]
            for _ in range(2):  # second MGS pass: orthogonality to roundoff
                coef = np.einsum("bij,bi->bj", np.conj(basis), v)
                v = v - np.einsum("bij,bj->bi", basis, coef)
        v = v / np.linalg.norm(v, axis=1, keepdims=True)
        q[:, :, 2 * k] = v
        q[:, :, 2 * k + 1] = _jconj(v)
    return q


def _draw_matrices(tag, n_free, count, rng):
    """A batch of Haar draws from a concrete (non-mixture) branch."""
    if tag == "SO_even":
        return _haar_so(2 * n_free, count, rng)
    if tag == "O_minus":
        return _haar_o_minus(n_free, count, rng)
    if tag == "USp":
        return _haar_usp(n_free, count, rng)
    raise InvalidParameterError(f"no direct sampler for {tag!r}")


# -------------------------------------------------------- eigenphase extraction


def _batch_eigvals(mat):
    """Eigenvalues per draw; per-draw salvage if the batched solver fails."""
    count = mat.shape[0]
    fail = np.zeros(count, dtype=bool)
    try:
        return np.linalg.eigvals(mat), fail
    except np.linalg.LinAlgError:
        ev = np.zeros(mat.shape[:2], dtype=complex)
        for i in range(count):
            try:
                ev[i] = np.linalg.eigvals(mat[i])
            except np.linalg.LinAlgError:
                ev[i] = 1.0  # placeholder spectrum; draw is discarded
                fail[i] = True
        return ev, fail


def _extract_phases(tag, mat):
    """Sorted free phases per draw plus failure flags and residuals.

    Returns (thetas, fail, forced, pairing): thetas has one row of N ascending
    phases per draw; forced is the worst O^- forced-eigenvalue residual per
    draw (zeros otherwise); pairing is the conjugation-pairing residual.
    """
    ev, fail = _batch_eigvals(mat)
    ang = np.sort(np.abs(np.angle(ev)), axis=1)
    if tag == "O_minus":
        forced = np.maximum(ang[:, 0], np.pi - ang[:, -1])
        core = ang[:, 1:-1]
    else:
        forced = np.zeros(mat.shape[0])
        core = ang
    thetas = np.clip(core[:, 0::2], 0.0, np.pi)
    pairing = np.max(core[:, 1::2] - core[:, 0::2], axis=1)
    fail = fail | (forced > FORCED_TOL) | (pairing > PAIRING_TOL)
    return thetas, fail, forced, pairing


def _branch_counts(tag, batch, rng):
    """Split a batch between mixture branches (a fixed-order coin per draw)."""
    if tag != "O_full":
        return ((tag, batch),)
    n_so = int(np.count_nonzero(rng.random(batch) < 0.5))
    return (("SO_even", n_so), ("O_minus", batch - n_so))


def sample_eigenphases(kind, rng):
    """One Haar draw: sorted eigenphases plus unitarity/determinant residuals."""
    tag = kind.tag
    if tag == "O_full":
        tag = "SO_even" if rng.random() < 0.5 else "O_minus"
    mat = _draw_matrices(tag, kind.N, 1, rng)
    thetas, fail, forced, pairing = _extract_phases(tag, mat)
    if fail[0]:
        raise SamplerFailureError(
            f"eigenphase extraction failed for {tag} (forced residual "
            f"{float(forced[0]):.3e}, pairing residual {float(pairing[0]):.3e})"
        )
    m = mat[0]
    gram = np.conj(m.T) @ m if np.iscomplexobj(m) else m.T @ m
    unit_res = float(np.max(np.abs(gram - np.eye(m.shape[0]))))
    sign, logabs = np.linalg.slogdet(m)
    det_target = -1.0 if tag == "O_minus" else 1.0
    det_res = float(np.abs(sign * np.exp(logabs) - det_target))
    residuals = {
        "unitarity": unit_res,
        "determinant": det_res,
        "pairing": float(pairing[0]),
    }
    if tag == "O_minus":
        residuals["forced"] = float(forced[0])
    return EigenphaseSample(
        thetas=thetas[0],
        forced_zero=tag == "O_minus",
        forced_pi=tag == "O_minus",
        residuals=residuals,
    )


# --------------------------------------------------------------- Weyl sampler

_WEYL_ENDPOINT_A = {"SO_even": -0.5, "O_minus": 0.5, "USp": 0.5}


def weyl_phases(tag, n_free, count, rng):
    """Eigenphase batch from the tridiagonal Jacobi beta=2 model (cross-check).

    Coefficients alpha_k = 1 - 2 Beta(s_k, t_k) on (-1, 1) feed the Geronimus
    relations; the spectrum of the resulting n x n Jacobi matrix is
    x = 2 cos(theta) distributed with density prop. to
    prod (x_i - x_j)^2 prod (2 - x_i)^a (2 + x_i)^a, where the endpoint
    exponent a is -1/2 for SO(2N) and +1/2 for USp(2N) and the free phases of
    O^-(2N+2).  Used only as an independent check on the matrix samplers.
    """
    if tag not in _WEYL_ENDPOINT_A:
        raise InvalidParameterError(f"no Weyl-density model for {tag!r}")
    a = _WEYL_ENDPOINT_A[tag]
    n = n_free
    alphas = np.empty((2 * n - 1, count))
    for k in range(2 * n - 1):
        if k % 2 == 0:
            s = (2 * n - k - 2) / 2 + a + 1
            t = s
        else:
            s = (2 * n - k - 3) / 2 + 2 * a + 2
            t = (2 * n - k - 1) / 2
        alphas[k] = 1.0 - 2.0 * rng.beta(s, t, size=count)
    diag = np.empty((count, n))
    diag[:, 0] = 2.0 * alphas[0]
    for k in range(1, n):
        a_odd = alphas[2 * k - 1]
        diag[:, k] = (1.0 - a_odd) * alphas[2 * k] - (1.0 + a_odd) * alphas[2 * k - 2]
    mats = np.zeros((count, n, n))
    idx = np.arange(n)
    mats[:, idx, idx] = diag
    if n > 1:
        off = np.empty((count, n - 1))
        off[:, 0] = np.sqrt(2.0 * (1.0 - alphas[0] ** 2) * (1.0 + alphas[1]))
        for k in range(1, n - 1):
            off[:, k] = np.sqrt(
                (1.0 - alphas[2 * k - 1])
                * (1.0 - alphas[2 * k] ** 2)
                * (1.0 + alphas[2 * k + 1])
            )
        mats[:, idx[:-1], idx[1:]] = off
        mats[:, idx[1:], idx[:-1]] = off
    x = np.linalg.eigvalsh(mats)
    theta = np.arccos(np.clip(x / 2.0, -1.0, 1.0))
    return np.sort(theta, axis=1)


# ------------------------------------------------------------ centered products


def _products_batch(thetas, forced_zero, req, scale_n, include_forced):
    """Centered products for a batch of draws (one row of phases per draw)."""
    x = thetas * (scale_n / np.pi)
    out = np.ones(thetas.shape[0])
    for l in range(1, req.n + 1):
        f = req.phi(l)
        stat = 2.0 * np.sum(f.phi_real(x), axis=1)
        if forced_zero and include_forced:
            stat += f.phi0
        out *= stat - f.fhat0 - 0.5 * f.phi0
    return out


def centered_product(sample, req, kind, include_forced=True):
    """Centered product of one draw; include_forced=False drops the O^- j=0 term."""
    if len(sample.thetas) != kind.N:
        raise InvalidParameterError("sample does not match the ensemble's N")
    vals = _products_batch(
        np.asarray(sample.thetas, dtype=float)[None, :],
        sample.forced_zero,
        req,
        kind.N,
        include_forced,
    )
    return float(vals[0])


def _batch_values(tag, n_free, req, count, rng, include_forced, sampler):
    """Centered products for `count` draws of one branch; failures dropped."""
    if sampler == "weyl":
        thetas = weyl_phases(tag, n_free, count, rng)
        good = thetas
    else:
        mat = _draw_matrices(tag, n_free, count, rng)
        thetas, fail, _, _ = _extract_phases(tag, mat)
        good = thetas[~fail]
    vals = _products_batch(good, tag == "O_minus", req, n_free, include_forced)
    return vals, count - good.shape[0]


def _chunk_values(kind, req, count, rng, include_forced, sampler):
    """All centered products of one chunk, in a fixed deterministic order."""
    parts = []
    failures = 0
    pos = 0
    while pos < count:
        b = min(SAMPLE_BATCH, count - pos)
        for tag, nb in _branch_counts(kind.tag, b, rng):
            if nb == 0:
                continue
            vals, nfail = _batch_values(
                tag, kind.N, req, nb, rng, include_forced, sampler
            )
            parts.append(vals)
            failures += nfail
        pos += b
    vals = np.concatenate(parts) if parts else np.zeros(0)
    return vals, failures


def _chunk_stats(args):
    """(sum, sum of squares, kept, failures) for one chunk; pool-friendly."""
    kind, req, count, seed, chunk, include_forced, sampler = args
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(chunk,)))
    )
    vals, failures = _chunk_values(kind, req, count, rng, include_forced, sampler)
    return float(np.sum(vals)), float(np.sum(vals * vals)), int(vals.size), failures


def mc_moment(
    kind, req, samples, seed, include_forced=True, sampler="matrix", workers=1
):
    """Monte Carlo estimate of the n-th centered moment integrand at finite N.

    Work is split into MC_CHUNKS chunks; chunk c uses the generator
    PCG64(SeedSequence(entropy=seed, spawn_key=(c,))) and partial sums merge
    in chunk order, so the result is bit-identical for any worker count.
    """
    if samples < 100:
        raise InvalidParameterError("mc_moment needs samples >= 100")
    if sampler not in ("matrix", "weyl"):
        raise InvalidParameterError(f"unknown sampler {sampler!r}")
    base, extra = divmod(int(samples), MC_CHUNKS)
    jobs = []
    for chunk in range(MC_CHUNKS):
        count = base + (1 if chunk < extra else 0)
        if count:
            jobs.append((kind, req, count, seed, chunk, include_forced, sampler))
    if workers > 1:
        import concurrent.futures

        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(_chunk_stats, jobs))
    else:
        partials = [_chunk_stats(job) for job in jobs]
    total = 0.0
    total_sq = 0.0
    kept = 0
    failures = 0
    for csum, csumsq, ckept, cfail in partials:  # fixed chunk order
        total += csum
        total_sq += csumsq
        kept += ckept
        failures += cfail
    if failures > 0.001 * samples:
        raise EstimateInvalidError(f"{failures} sampler failures in {samples} draws")
    mean = total / kept
    var = max(total_sq - kept * mean * mean, 0.0) / (kept - 1)
    return McEstimate(
        mean=mean,
        stderr=math.sqrt(var / kept),
        samples=kept,
        seed=seed,
        kind=kind,
        failures=failures,
    )


# ------------------------------------------------------------------ diagnostics


def _sin2_chisquare(phases, bins=40):
    """Chi-square GoF of phases against the rank-1 density (2/pi) sin^2(theta)."""
    edges = np.linspace(0.0, np.pi, bins + 1)
    observed, _ = np.histogram(phases, bins=edges)
    cdf = (edges - np.sin(2.0 * edges) / 2.0) / np.pi
    expected = phases.size * np.diff(cdf)
    stat, pvalue = scipy.stats.chisquare(observed, f_exp=expected)
    return {"name": "chisq_sin2", "statistic": float(stat), "pvalue": float(pvalue)}


def validate_sampler(kind, samples, seed, sampler="matrix"):
    """Residual statistics and rank-1 marginal goodness-of-fit diagnostics.

    Always returns a diagnostics dict; nothing here raises on bad fits.  For
    the matrix route the structural residuals (unitarity, determinant,
    conjugation pairing, forced phases) are maximized over every draw; the
    rank-1 marginal tests fire when N == 1 (KS against the uniform density for
    SO(2), chi-square against (2/pi) sin^2 for O^-(4) and USp(2)).
    """
    if sampler not in ("matrix", "weyl"):
        raise InvalidParameterError(f"unknown sampler {sampler!r}")
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(0,)))
    )
    maxima = {"unitarity": 0.0, "determinant": 0.0, "pairing": 0.0, "forced": 0.0}
    failures = 0
    collected = {}
    pos = 0
    while pos < samples:
        b = min(SAMPLE_BATCH, samples - pos)
        for tag, nb in _branch_counts(kind.tag, b, rng):
            if nb == 0:
                continue
            if sampler == "weyl":
                thetas = weyl_phases(tag, kind.N, nb, rng)
                collected.setdefault(tag, []).append(thetas)
                continue
            mat = _draw_matrices(tag, kind.N, nb, rng)
            thetas, fail, forced, pairing = _extract_phases(tag, mat)
            eye = np.eye(mat.shape[-1])
            adj = np.conj(mat) if np.iscomplexobj(mat) else mat
            gram = np.einsum("bij,bik->bjk", adj, mat)
            sign, logabs = np.linalg.slogdet(mat)
            det_target = -1.0 if tag == "O_minus" else 1.0
            maxima["unitarity"] = max(
                maxima["unitarity"], float(np.max(np.abs(gram - eye)))
            )
            maxima["determinant"] = max(
                maxima["determinant"],
                float(np.max(np.abs(sign * np.exp(logabs) - det_target))),
            )
            maxima["pairing"] = max(maxima["pairing"], float(np.max(pairing)))
            if tag == "O_minus":
                maxima["forced"] = max(maxima["forced"], float(np.max(forced)))
            failures += int(np.count_nonzero(fail))
            collected.setdefault(tag, []).append(thetas[~fail])
        pos += b
    diag = {
        "kind": kind,
        "sampler": sampler,
        "samples": int(samples),
        "failures": failures,
        "max_unitarity_residual": maxima["unitarity"],
        "max_determinant_residual": maxima["determinant"],
        "max_pairing_residual": maxima["pairing"],
    }
    if kind.tag in ("O_minus", "O_full"):
        diag["max_forced_residual"] = maxima["forced"]
    diag["marginal_test"] = None
    if kind.N == 1 and kind.tag != "O_full":
        phases = np.concatenate(collected[kind.tag])[:, 0]
        if kind.tag == "SO_even":
            stat, pvalue = scipy.stats.kstest(phases / np.pi, "uniform")
            diag["marginal_test"] = {
                "name": "ks_uniform",
                "statistic": float(stat),
                "pvalue": float(pvalue),
            }
        else:
            diag["marginal_test"] = _sin2_chisquare(phases)
    return diag
