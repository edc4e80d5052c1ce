"""Predicted centered moments of linear eigenvalue statistics.

The n-th centered moment prediction C(n) splits as C0(n) + C2(n): a
pair-partition (Gaussian) part built from the exact two-point integrals
I2, and a correction part built from the shifted-transform integrals
I(f1, f2; U1, U2) summed over ways of attaching the remaining indices to a
distinguished pair.  The even/odd refinements C_even/C_odd replace the
pair-correction by signed V(K', K'') factors: closed-form (Fourier-side)
when |K'| = 2, vertical-line contour integrals when |K'| is 1 or 3.

Everything Fourier-side is exact piecewise-polynomial arithmetic; every
contour is numerical quadrature from the quadrature module, so the two
routes stay independent and can be checked against each other.
"""

import hashlib
import itertools
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as cheb

from . import partitions as pt
from . import quadrature as quad
from . import splinefourier as sf
from .errors import (
    InvalidParameterError,
    InvalidRequestError,
    OutOfTruncationError,
    UnsupportedIntegrandError,
    UnsupportedRangeError,
)

SUPPORT_SUM_LIMIT = 4.0
SINGLE_DELTA = 0.5
PAIR_DELTAS = (0.45, 0.55)
TRIPLE_DELTAS = (0.4, 0.5, 0.6)
SINGLE_T_CAP = 200.0
PAIR_T_INNER = 60.0
PAIR_T_CAP = 50.0
J_GRID_T = 360.0
J_CHEB_POINTS = 12
BOX_SPEC = quad.QuadSpec(abs_tol=1e-8, max_subdivisions=20000)


class MomentRequest:
    """n test functions Phi_1..Phi_n; the C-family needs sum sigma_i < 4."""

    def __init__(self, phis):
        phis = tuple(phis)
        if not phis:
            raise InvalidParameterError("need at least one test function")
        self.phis = phis
        self.n = len(phis)
        self.support_sum = float(sum(f.sigma for f in phis))
        self._products = {}

    def require_support(self):
        if not self.support_sum < SUPPORT_SUM_LIMIT:
            raise InvalidRequestError(
                f"total transform support {self.support_sum:g} is not < "
                f"{SUPPORT_SUM_LIMIT:g}; the moment formulas do not apply"
            )

    def phi(self, k):
        if not 1 <= k <= self.n:
            raise InvalidParameterError(f"index {k} outside 1..{self.n}")
        return self.phis[k - 1]

    def product(self, k, G):
        """Phi_k * prod_{j in G} Phi_j as a TestFunction (cached)."""
        key = (k, tuple(sorted(G)))
        if key not in self._products:
            self._products[key] = sf.product_test_function(k, key[1], self.phis)
        return self._products[key]

    def digest(self):
        payload = repr([f.to_spec() for f in self.phis]).encode()
        return hashlib.sha256(payload).hexdigest()[:16]


@dataclass
class MomentReport:
    """A computed quantity with its method and accuracy bookkeeping."""

    quantity: str
    value: float
    method: str
    accuracy: float
    provenance: str

    def __post_init__(self):
        if self.accuracy <= 0:
            raise InvalidParameterError("accuracy must be positive")


# ------------------------------------------------------------- exact kernels


def i2(fa, fb):
    """I2 = 2 int |t| fhat_a(t) fhat_b(t) dt, exact."""
    if fa.is_zero or fb.is_zero:
        return 0.0
    return 2.0 * fa.fhat.multiply(fb.fhat).abs_t_integral()


def _a_integral(f, shift):
    """int_0^inf fhat(t + 1 + shift) dt, exact."""
    return f.fhat.integrate(1.0 + shift, None)


def _b_integral(f1, f2, u1, u2):
    """int_0^inf t fhat1(t+1+u1) fhat2(t+1+u2) dt, exact."""
    p = f1.fhat.translate(-(1.0 + u1))
    q = f2.fhat.translate(-(1.0 + u2))
    r = p.multiply(q)
    if r.is_zero:
        return 0.0
    return r.moment(1, 0.0, None)


def iscr(f1, f2, u1=0.0, u2=0.0):
    """I(f1, f2; u1, u2) = A1 A2 - 4B on the Fourier side, exact."""
    if f1.sigma <= 1.0 + u1 or f2.sigma <= 1.0 + u2:
        return 0.0
    a1 = _a_integral(f1, u1)
    a2 = _a_integral(f2, u2)
    b = _b_integral(f1, f2, u1, u2)
    return a1 * a2 - 4.0 * b


# ------------------------------------------------------------------- v_pair


def _v_pair_est(k1, k2, G, req, spec=None):
    """Fourier-side V({k1,k2}, G) with a quadrature-error estimate."""
    if not k1 < k2:
        raise InvalidParameterError("need k1 < k2")
    G = tuple(sorted(G))
    if k1 in G or k2 in G:
        raise InvalidParameterError("pair indices cannot appear in G")
    spec = spec or BOX_SPEC
    total = 0.0
    total_err = 0.0
    for g1, g2, g3, g4 in pt.four_way_splits(G):
        if any(j <= k1 for j in g3) or any(j <= k2 for j in g4):
            continue
        f1 = req.product(k1, g3)
        f2 = req.product(k2, g4)
        if f1.sigma <= 1.0 or f2.sigma <= 1.0:
            continue  # every I argument misses [0, inf): summand is exactly 0
        coef = (-2.0) ** (len(G) + len(g1) + len(g2))
        dims = list(g1) + list(g2)
        if not dims:
            total += coef * iscr(f1, f2, 0.0, 0.0)
            continue
        n1 = len(g1)
        box = [(0.0, req.phi(j).sigma) for j in dims]

        def integrand(*ws, _f1=f1, _f2=f2, _n1=n1, _dims=dims):
            u1 = sum(ws[:_n1])
            u2 = sum(ws[_n1:])
            v = iscr(_f1, _f2, u1, u2)
            if v != 0.0:
                for j, wj in zip(_dims, ws):
                    v *= req.phi(j).eval_fhat(wj)
            return v

        breaks = []
        for i, j in enumerate(dims):
            f_side = f1 if i < n1 else f2
            sigma_j = req.phi(j).sigma
            cuts = {
                float(b)
                for b in req.phi(j).fhat.breakpoints
                if 0.0 < b < sigma_j
            }
            cuts |= {
                float(b - 1.0)
                for b in np.abs(f_side.fhat.breakpoints)
                if 0.0 < b - 1.0 < sigma_j
            }
            breaks.append(sorted(cuts))
        val, err = quad.integrate_box(integrand, box, spec, breaks)
        total += coef * val
        total_err += abs(coef) * err
    return total, total_err


def v_pair(k1, k2, G, req):
    """V({k1,k2}, G) via the Fourier-side formula (shifted A/B integrals)."""
    return _v_pair_est(k1, k2, G, req)[0]


# -------------------------------------------------- contour V: |K'| = 1


def _bracket_freqs(phi_k, others):
    """Oscillation frequencies of the |K'|=1 contour integrand."""
    base = [0.0] + [float(b) for b in phi_k.kink_frequencies()]
    extras = [0.0]
    for f in others:
        extras.extend(float(b) for b in f.kink_frequencies())
    freqs = set()
    for x in base:
        for s1 in (-x, x):
            for y in extras:
                for s2 in (-y, y):
                    freqs.add(abs(1.0 + s1 + s2))
    return sorted(freqs)


def _v_single(k, Kpp, req, delta=SINGLE_DELTA, spec=None):
    """V({k}, K'') by direct vertical-line quadrature."""
    phi_k = req.phi(k)
    others = [(l, req.phi(l)) for l in sorted(Kpp)]

    def h(w):
        val = np.exp(-2.0 * np.pi * w) * phi_k.eval_phi(1j * w) / w
        for l, f in others:
            br = 4.0 * f.laplace_plus(2.0 * np.pi * w)
            if k < l:
                br = br - 2.0 * f.eval_phi(1j * w)
            val = val * br
        return val

    freqs = _bracket_freqs(phi_k, [f for _, f in others])
    out = quad.integrate_vertical_line(
        h,
        delta,
        phi_k.decay_order + 1,
        spec,
        osc_freqs=freqs,
        t_cap=SINGLE_T_CAP,
        vectorized=True,
    )
    return float(out.real)


# -------------------------------------------------- contour V: |K'| = 2


def _v_double_nested(k1, k2, Kpp, req, deltas=PAIR_DELTAS, spec=None):
    """V({k1,k2}, K'') as a nested two-variable contour integral."""
    f1, f2 = req.phi(k1), req.phi(k2)
    d1, d2 = deltas
    ls = sorted(Kpp)
    w1, W1, _ = quad.vertical_grid(
        d1, PAIR_T_INNER, freqs=_bracket_freqs(f1, [req.phi(l) for l in ls])
    )
    base1 = W1 * np.exp(-2.0 * np.pi * w1) * f1.eval_phi(1j * w1) / w1
    lap1 = {l: req.phi(l).laplace_plus(2.0 * np.pi * w1) for l in ls}
    phi1 = {l: req.phi(l).eval_phi(1j * w1) for l in ls}

    def g(w2):
        base2 = np.exp(-2.0 * np.pi * w2) * f2.eval_phi(1j * w2) / w2
        lap2 = {l: req.phi(l).laplace_plus(2.0 * np.pi * w2) for l in ls}
        phi2 = {l: req.phi(l).eval_phi(1j * w2) for l in ls}
        out = np.empty(len(w2), dtype=complex)
        for i in range(0, len(w2), 192):
            sl = slice(i, min(i + 192, len(w2)))
            a = w2[sl, None]
            ratio = (w1[None, :] - a) / (w1[None, :] + a)
            prod = base1[None, :] * (ratio * ratio)
            for l in ls:
                br = 4.0 * (lap1[l][None, :] + lap2[l][sl, None])
                if k1 < l:
                    br = br - 2.0 * phi1[l][None, :]
                if k2 < l:
                    br = br - 2.0 * phi2[l][sl, None]
                prod = prod * br
            out[sl] = prod.sum(axis=1)
        return base2 * out / (2.0 * np.pi)

    val = quad.integrate_vertical_line(
        g,
        d2,
        f2.decay_order + 1,
        spec,
        osc_freqs=_bracket_freqs(f2, [req.phi(l) for l in ls]),
        t_cap=PAIR_T_CAP,
        vectorized=True,
    )
    return float(val.real)


# ------------------------------------- contour V via kernel separation


class _JFunction:
    """J(c; m) = (1/2pi i) int_(delta) e^{-c w} w^{m-1} F(w) dw, c >= 2pi.

    F is a product of Phi_k(iw)-type and one-sided-Laplace factors; writing
    F(w) = int rho(s) e^{-2 pi s w} ds, the line integral concentrates on
    s = -c/(2 pi), so J(c;1) = rho(-c/2pi)/(2pi): piecewise polynomial in c
    with kinks at -2pi times the sums of the factors' transform kink
    locations.  J(.;1) is computed by tail-averaged contour quadrature at
    Chebyshev nodes inside each piece; J(.;2) is the negated derivative and
    J(.;0) the rightward integral of the per-piece interpolants.
    """

    def __init__(self, f_eval, delta, kink_sums, decay_order, degree):
        if decay_order < 2:
            raise UnsupportedIntegrandError(
                "contour factor decays too slowly for the w^0 integrand "
                f"(decay order {decay_order} < 2)"
            )
        us = sorted({round(-float(u), 9) for u in kink_sums if -u > 1.0 + 1e-9})
        if not us:
            self.edges = np.empty(0)
            self.coef1 = []
            self.coef0 = []
            self.coef2 = []
            return
        edges = [1.0] + us
        self.edges = 2.0 * np.pi * np.array(edges)
        self.coef1 = []
        all_nodes = []
        for lo, hi in zip(self.edges[:-1], self.edges[1:]):
            # keep nodes away from the kinks: nearby kinks mean slow
            # oscillation frequencies that the tail average handles poorly
            inset = min(0.15, max(0.04, 0.30 / (hi - lo))) * (hi - lo)
            x = np.cos((2 * np.arange(J_CHEB_POINTS) + 1) * np.pi / (2 * J_CHEB_POINTS))
            all_nodes.append(0.5 * (lo + inset + hi - inset) + 0.5 * (hi - lo - 2 * inset) * x)
        cnodes = np.concatenate(all_nodes)
        vals = _contour_batch(f_eval, delta, cnodes, np.array(edges))
        dfit = min(J_CHEB_POINTS - 1, degree + 2)
        pieces = []
        for i, (lo, hi) in enumerate(zip(self.edges[:-1], self.edges[1:])):
            xs = all_nodes[i]
            ys = vals[i * J_CHEB_POINTS : (i + 1) * J_CHEB_POINTS]
            mapped = (2.0 * xs - lo - hi) / (hi - lo)
            coefs = cheb.chebfit(mapped, ys, dfit)
            self.coef1.append(coefs)
            # rebase onto local coordinates y = s - (lo - 2pi) of the s-side
            # piecewise polynomial J1(2pi + s): x = (2/(hi-lo)) y - 1
            power_x = cheb.cheb2poly(coefs)
            comp = np.zeros(1)
            for a in power_x[::-1]:
                comp = np.polynomial.polynomial.polymul(
                    comp, [-1.0, 2.0 / (hi - lo)]
                )
                comp = np.polynomial.polynomial.polyadd(comp, [a])
            pieces.append(comp)
        self.pw1 = sf.PiecewisePoly(self.edges - 2.0 * np.pi, pieces)
        self.pw2 = self.pw1.derivative().scale_values(-1.0)

    @property
    def is_zero(self):
        return len(self.coef1) == 0

    def support_end(self):
        return 0.0 if self.is_zero else float(self.edges[-1])

    def j0_at_base(self):
        """J(2pi; 0) = integral of J(.;1) over its support."""
        return 0.0 if self.is_zero else self.pw1.integrate(0.0, None)

    def eval(self, c, m):
        c = np.atleast_1d(np.asarray(c, dtype=float))
        if self.is_zero:
            return np.zeros(c.shape)
        s = c - 2.0 * np.pi
        if m == 1:
            return self.pw1(s)
        if m == 2:
            return self.pw2(s)
        if m == 0:
            return np.array([self.pw1.integrate(max(si, 0.0), None) for si in s])
        raise InvalidParameterError(f"unsupported w-power m={m}")


def _contour_batch(f_eval, delta, cnodes, kink_sums_u):
    """Tail-averaged J(c;1) values for a batch of c nodes (shared grid).

    Each node gets its own oscillation-frequency set |c/2pi - u| over the
    kink sums u, realized as per-panel averaging weights on one shared panel
    grid; panel sums are then combined per node.
    """
    umax = float(np.max(kink_sums_u))
    fmax = max(1.0, float(np.max(cnodes)) / (2.0 * np.pi) + umax)
    width = min(0.25, 1.0 / (4.0 * fmax))
    schedules = []
    ext = 0.0
    for c in cnodes:
        u_c = c / (2.0 * np.pi)
        # floor keeps averaging tails short; slower components lean on the
        # real-part cancellation of the truncation error instead
        freqs = [max(abs(u_c - u), 0.02) for u in kink_sums_u] + [abs(u_c)]
        offs, wts = quad._tail_schedule(freqs, passes=2)
        schedules.append((offs, wts))
        if offs is not None:
            ext = max(ext, float(offs[-1]))
    t_end = J_GRID_T + ext
    n_panels = int(math.ceil(t_end / width))
    edges = np.linspace(0.0, n_panels * width, n_panels + 1)
    # per-node, per-panel averaging weight (1 in the core, step-down in tail)
    mids = 0.5 * (edges[:-1] + edges[1:])
    omega = np.ones((len(cnodes), n_panels))
    for i, (offs, wts) in enumerate(schedules):
        if offs is None:
            omega[i, mids > J_GRID_T] = 0.0
            continue
        tail = mids > J_GRID_T
        # weight remaining beyond each tail midpoint
        rel = mids[tail] - J_GRID_T
        cum = np.concatenate([np.cumsum(wts[::-1])[::-1], [0.0]])
        pos = np.searchsorted(offs, rel, side="left")
        omega[i, tail] = cum[pos]
    halfs = 0.5 * (edges[1:] - edges[:-1])
    out = np.zeros(len(cnodes), dtype=complex)
    chunk = max(1, int(2e5 / max(len(cnodes), 1)))
    for p0 in range(0, n_panels, chunk):
        p1 = min(p0 + chunk, n_panels)
        t = (
            0.5 * (edges[p0:p1, None] + edges[p0 + 1 : p1 + 1, None])
            + halfs[p0:p1, None] * quad.GK_NODES[None, :]
        )
        w = delta + 1j * t.ravel()
        fv = f_eval(w) * (halfs[p0:p1, None] * quad.GK_WEIGHTS[None, :]).ravel()
        ev = np.exp(-np.outer(cnodes, w)) * fv[None, :]
        psums = ev.reshape(len(cnodes), p1 - p0, 15).sum(axis=2)
        out += (psums * omega[:, p0:p1]).sum(axis=1)
    # one-sided grid: the mirror side is the conjugate, so take 2 Re / (2 pi)
    return out.real / np.pi


def _poly_degree(f):
    return max(len(c) for c in f.fhat.coeffs) - 1


def _factor_eval(k, tags, req):
    """Integrand factor F(w) = Phi_k(iw) * attached bracket factors.

    Returns (F, kink sums of its transform-side spectrum, decay order of F
    along the contour, per-piece polynomial degree of that spectrum).
    """
    phi_k = req.phi(k)
    fns = []
    kink_sets = [[float(b) for b in phi_k.fhat.breakpoints]]
    decay = phi_k.decay_order
    degree = _poly_degree(phi_k)
    for kind, l, coefsign in tags:
        f = req.phi(l)
        if kind == "L":
            fns.append(lambda w, _f=f: _f.laplace_plus(2.0 * np.pi * w))
            kink_sets.append(
                [0.0] + [float(b) for b in f.fhat.breakpoints if b > 0.0]
            )
        else:
            fns.append(lambda w, _f=f: _f.eval_phi(1j * w))
            kink_sets.append([float(b) for b in f.fhat.breakpoints])
        decay += 1 if kind == "L" else f.decay_order
        degree += _poly_degree(f) + 1

    def f_eval(w):
        out = phi_k.eval_phi(1j * w)
        for fn in fns:
            out = out * fn(w)
        return out

    sums = [0.0]
    for ks in kink_sets:
        sums = [s + b for s in sums for b in ks]
    return f_eval, sorted(set(round(s, 9) for s in sums)), decay, degree


_GAUSS18 = np.polynomial.legendre.leggauss(18)
_GAUSS12 = np.polynomial.legendre.leggauss(12)


def _pw_inner(p, q):
    """Exact integral of p(s) q(s) ds without forming the product polynomial."""
    if p.is_zero or q.is_zero:
        return 0.0
    a = max(p.support[0], q.support[0])
    b = min(p.support[1], q.support[1])
    if b <= a:
        return 0.0
    cuts = np.unique(
        np.concatenate(
            [
                [a, b],
                p.breakpoints[(p.breakpoints > a) & (p.breakpoints < b)],
                q.breakpoints[(q.breakpoints > a) & (q.breakpoints < b)],
            ]
        )
    )
    xg, wg = _GAUSS18
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xg
        total += 0.5 * (hi - lo) * float(wg @ (p(x) * q(x)))
    return total


def _sub_pieces(poly, lo, hi, extra=()):
    cuts = {float(lo), float(hi)}
    cuts |= {float(b) for b in poly.breakpoints if lo < b < hi}
    cuts |= {float(e) for e in extra if lo < e < hi}
    return sorted(cuts)


def _q3_integral(pa, pb, pc):
    """int over s1,s2,s3 >= 0 of s1 s2 s3 Ja2(s1+s2) Jb2(s1+s3) Jc2(s2+s3).

    In the variables v_a = s1+s2, v_b = s1+s3, v_c = s2+s3 the jump sets of
    the three J(.;2) factors become axis-aligned; the region is the triangle
    inequality set, the Jacobian is 1/2, and per cell everything is one
    polynomial, so nested per-piece Gauss rules integrate it exactly.
    """
    if pa.is_zero or pb.is_zero or pc.is_zero:
        return 0.0
    xg, wg = _GAUSS12
    va_hi = pa.support[1]
    vb_hi = pb.support[1]
    vc_hi = pc.support[1]
    total = 0.0
    for alo, ahi in itertools.pairwise(_sub_pieces(pa, 0.0, va_hi)):
        va_n = 0.5 * (alo + ahi) + 0.5 * (ahi - alo) * xg
        va_w = 0.5 * (ahi - alo) * wg
        for va, wa in zip(va_n, va_w):
            ja = wa * pa(np.array([va]))[0]
            if ja == 0.0:
                continue
            for blo, bhi in itertools.pairwise(
                _sub_pieces(pb, 0.0, vb_hi, extra=(va,))
            ):
                vb_n = 0.5 * (blo + bhi) + 0.5 * (bhi - blo) * xg
                vb_w = 0.5 * (bhi - blo) * wg
                jb = vb_w * pb(vb_n)
                for vb, jbw in zip(vb_n, jb):
                    if jbw == 0.0:
                        continue
                    clo, chi = abs(va - vb), min(va + vb, vc_hi)
                    if chi <= clo:
                        continue
                    for plo, phi in itertools.pairwise(
                        _sub_pieces(pc, clo, chi)
                    ):
                        vc = 0.5 * (plo + phi) + 0.5 * (phi - plo) * xg
                        wc = 0.5 * (phi - plo) * wg
                        tri = (
                            (va + vb - vc) * (va - vb + vc) * (-va + vb + vc)
                        )
                        total += ja * jbw * float(wc @ (tri * pc(vc)))
    # ds1 ds2 ds3 = dv/2 and s1 s2 s3 = prod(tri)/8
    return total / 16.0


def _v_kernel_separated(Kp, Kpp, req, spec=None):
    """V(K', K'') for |K'| in {2, 3} by separating the pair kernels.

    Each (w_a - w_b)^2/(w_a + w_b)^2 factor is written as
    1 - 4 w_a w_b int_0^inf s e^{-s(w_a + w_b)} ds, which reduces the
    |K'|-dimensional contour to products of one-variable contour functions
    J_k(c; m); since those are piecewise polynomials in c, the remaining
    s-integrals are done exactly by piecewise-polynomial algebra.
    """
    ks = sorted(Kp)
    deltas = dict(zip(ks, TRIPLE_DELTAS if len(ks) == 3 else PAIR_DELTAS))
    pairs = list(itertools.combinations(ks, 2))
    # expand the K'' brackets: each factor attaches to exactly one k
    bracket_lists = []
    for l in sorted(Kpp):
        opts = [("L", l, 4.0, k) for k in ks]
        opts += [("P", l, -2.0, k) for k in ks if k < l]
        bracket_lists.append(opts)
    total = 0.0
    jcache = {}
    for assign in itertools.product(*bracket_lists):
        coef = math.prod(a[2] for a in assign) if assign else 1.0
        tags = {k: tuple((a[0], a[1], a[2]) for a in assign if a[3] == k) for k in ks}
        js = {}
        for k in ks:
            key = (k, tags[k])
            if key not in jcache:
                f_eval, sums, decay, deg = _factor_eval(k, tags[k], req)
                jcache[key] = _JFunction(f_eval, deltas[k], sums, decay, deg)
            js[k] = jcache[key]
        if any(js[k].is_zero for k in ks):
            continue
        j0 = {k: js[k].j0_at_base() for k in ks}
        sj1 = {k: js[k].pw1._times_t() for k in ks}
        for q_set in itertools.chain.from_iterable(
            itertools.combinations(pairs, r) for r in range(len(pairs) + 1)
        ):
            sgn = (-4.0) ** len(q_set)
            r = len(q_set)
            if r == 0:
                term = math.prod(j0[k] for k in ks)
            elif r == 1:
                (i, j) = q_set[0]
                spectators = [k for k in ks if k not in q_set[0]]
                term = _pw_inner(sj1[i], js[j].pw1)
                term *= math.prod(j0[k] for k in spectators)
            elif r == 2:
                center = next(k for k in ks if all(k in q for q in q_set))
                legs = [k for k in ks if k != center]
                conv = sj1[legs[0]].convolve(sj1[legs[1]])
                term = _pw_inner(conv, js[center].pw2)
            else:
                term = _q3_integral(js[ks[0]].pw2, js[ks[1]].pw2, js[ks[2]].pw2)
            total += coef * sgn * term
    return total


def v_contour(Kp, Kpp, req, deltas=None, spec=None):
    """V(K', K'') by contour integration (dimension = |K'| <= 3)."""
    Kp = tuple(sorted(Kp))
    Kpp = tuple(sorted(Kpp))
    if set(Kp) & set(Kpp):
        raise InvalidParameterError("K' and K'' must be disjoint")
    if len(Kp) == 0:
        return 1.0 if not Kpp else 0.0
    if len(Kp) >= 4:
        raise OutOfTruncationError(
            f"|K'| = {len(Kp)} >= 4: vanishes under the support bound and is "
            "outside the implemented contour truncation"
        )
    if len(Kp) == 1:
        delta = deltas[0] if deltas else SINGLE_DELTA
        return _v_single(Kp[0], Kpp, req, delta, spec)
    if len(Kp) == 2:
        ds = tuple(deltas) if deltas else PAIR_DELTAS
        return _v_double_nested(Kp[0], Kp[1], Kpp, req, ds, spec)
    return _v_kernel_separated(Kp, Kpp, req, spec)


# ------------------------------------------------------------- moment sums


def _c0_blocks(indices, req):
    """Sum over pair partitions of `indices` of products of exact I2."""
    indices = tuple(sorted(indices))
    if len(indices) % 2 == 1:
        return 0.0
    total = 0.0
    for p in pt.pair_partitions(indices):
        term = 1.0
        for a, b in p:
            term *= i2(req.phi(a), req.phi(b))
        total += term
    if not indices:
        return 1.0
    return total


def c0(req):
    """C0(n): the pair-partition (Gaussian) part, exact.

    No support restriction: the Gaussian part is a finite sum of exact
    I2 products and stays meaningful at (and past) the Sum sigma = 4
    boundary that the full moment formula needs.
    """
    return _c0_blocks(range(1, req.n + 1), req)


def _c2_est(req, spec=None):
    req.require_support()
    if req.n < 2:
        return 0.0, 0.0
    total = 0.0
    err = 0.0
    for k0, kp, ksp in pt.splittings_with_pair(range(1, req.n + 1)):
        base = _c0_blocks(k0, req)
        if base == 0.0:
            continue
        v, e = _v_pair_est(kp[0], kp[1], ksp, req, spec)
        total += base * v
        err += abs(base) * e
    return total, err


def c2(req):
    """C2(n): the two-point correction part."""
    return _c2_est(req)[0]


def c_total(req):
    """C(n) = C0(n) + C2(n), reported with propagated accuracy."""
    base = c0(req)
    corr, err = _c2_est(req)
    return MomentReport(
        quantity="C",
        value=base + corr,
        method="closed-form",
        accuracy=max(err, 1e-14),
        provenance=f"request={req.digest()}",
    )


def c_even_odd(req):
    """(C_even(n), C_odd(n)) from the signed V(K', K'') expansion.

    |K'| = 2 uses the Fourier-side v_pair; |K'| in {1, 3} are contours.
    """
    req.require_support()
    even = 0.0
    odd = 0.0
    for k0, kp, ksp in pt.splittings_up_to(range(1, req.n + 1), 3):
        base = _c0_blocks(k0, req)
        if base == 0.0:
            continue
        if len(kp) == 0:
            v = 1.0 if not ksp else 0.0
        elif len(kp) == 2:
            v = v_pair(kp[0], kp[1], ksp, req)
        else:
            v = v_contour(kp, ksp, req)
        even += base * (-1.0) ** len(kp) * v
        odd += base * v
    return even, odd


def gaussian_limit(req):
    """(n-1)!! (sigma^2_Phi)^{n/2} for even n, plus C2(n); equal Phi only."""
    req.require_support()
    first = req.phis[0]
    for f in req.phis[1:]:
        if not f.equals(first):
            raise InvalidRequestError(
                "the Gaussian-limit formula requires identical test functions"
            )
    n = req.n
    if n % 2 == 0:
        var = sf.sigma_sq(first)
        main = pt.double_factorial_odd(n) * var ** (n // 2)
    else:
        main = 0.0
    return main + c2(req)


def one_level_integral(f, symmetry):
    """int Phi(x) W(x) dx for the one-level density of the given symmetry."""
    if f.is_zero:
        return 0.0
    if symmetry == "O":
        return f.fhat0 + 0.5 * f.phi0
    if symmetry in ("SO_even", "USp"):
        if f.sigma >= 1.0:
            raise UnsupportedRangeError(
                f"symmetry {symmetry} needs transform support inside (-1, 1); "
                f"got sigma = {f.sigma:g}"
            )
        sign = 1.0 if symmetry == "SO_even" else -1.0
        return f.fhat0 + sign * 0.5 * f.phi0
    raise InvalidParameterError(f"unknown symmetry tag {symmetry!r}")
