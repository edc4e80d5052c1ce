"""Test functions with compactly supported piecewise-polynomial transforms.

A test function here is an even function Phi whose Fourier transform
fhat(t) = int Phi(x) e^{-2*pi*i*t*x} dx is an exact piecewise polynomial with
compact support [-sigma, sigma].  Everything downstream (moment formulas,
contour integrands, Monte Carlo) only ever touches Phi through this module:

* fhat is evaluated exactly (PiecewisePoly);
* Phi(z) = int fhat(t) e^{2*pi*i*t*z} dt is evaluated in closed form for any
  complex z (piecewise integrals of t^k e^{at}), so Phi is available on the
  real line and on vertical lines in the complex plane;
* products of test functions are convolutions of their transforms, done
  exactly (degree df+dg+1, support = Minkowski sum);
* one-sided Laplace transforms int_0^inf fhat(t) e^{-s t} dt are closed-form.

Built-in families (all even, all closed under dilation, all normalized to
fhat(0) = 1): box, fejer (triangle), bspline2, bspline3.
"""

import math

import numpy as np

from .errors import InvalidParameterError

# Tolerance for coefficient equality in canonicalization, and the degree cap
# that convolution is allowed to raise automatically.
COEFF_TOL = 1e-14
MAX_DEGREE = 28

_BUILTIN_FAMILIES = ("box", "fejer", "bspline2", "bspline3")


def _trim_coeffs(c, scale):
    """Drop trailing coefficients that are zero at working precision."""
    c = np.asarray(c, dtype=float)
    n = len(c)
    while n > 1 and abs(c[n - 1]) <= COEFF_TOL * scale:
        n -= 1
    return c[:n].copy()


def _taylor_shift(c, dx):
    """Coefficients of p(s + dx) given coefficients of p(s)."""
    c = np.asarray(c, dtype=float)
    out = np.zeros_like(c)
    for j, cj in enumerate(c):
        if cj == 0.0:
            continue
        for k in range(j + 1):
            out[k] += cj * math.comb(j, k) * dx ** (j - k)
    return out


def _poly_int(c):
    """Antiderivative coefficients (constant 0) of a local polynomial."""
    c = np.asarray(c, dtype=float)
    return np.concatenate(([0.0], c / np.arange(1, len(c) + 1)))


def _polyval(c, x):
    return np.polynomial.polynomial.polyval(x, np.asarray(c, dtype=float))


def _exp_int_table(a, h, kmax):
    """I_k(a) = int_0^h s^k e^{a s} ds for k = 0..kmax, vectorized over a.

    a is a complex ndarray, h a positive scalar.  Two branches: a Taylor
    series in a*h (exact limit at a=0) where |a*h| is small, and the stable
    upward recurrence I_k = (h^k e^{ah} - k I_{k-1})/a elsewhere.
    """
    a = np.asarray(a, dtype=complex)
    q = a * h
    out = np.empty((kmax + 1,) + a.shape, dtype=complex)

    small = np.abs(q) <= 6.0
    if np.any(small):
        qs = q[small]
        # I_k = h^{k+1} * sum_m q^m / (m! (k+m+1))
        m_terms = 44
        qpow = np.ones((m_terms,) + qs.shape, dtype=complex)
        for m in range(1, m_terms):
            qpow[m] = qpow[m - 1] * qs / m
        for k in range(kmax + 1):
            denom = np.arange(k + 1, k + 1 + m_terms, dtype=float)
            out[k][small] = h ** (k + 1) * np.tensordot(
                1.0 / denom, qpow, axes=(0, 0)
            )
    big = ~small
    if np.any(big):
        ab = a[big]
        eb = np.exp(q[big])
        ik = (eb - 1.0) / ab
        out[0][big] = ik
        hk = 1.0
        for k in range(1, kmax + 1):
            hk *= h
            ik = (hk * eb - k * ik) / ab
            out[k][big] = ik
    return out


class PiecewisePoly:
    """A compactly supported piecewise polynomial.

    breakpoints are strictly increasing; piece i holds coefficients of the
    local polynomial p_i(s) = sum_k c[k] s^k with s = t - breakpoints[i],
    valid on [breakpoints[i], breakpoints[i+1]].  The function is exactly 0
    outside [breakpoints[0], breakpoints[-1]].  The zero function is the
    empty representation (no breakpoints).
    """

    __slots__ = ("breakpoints", "coeffs")

    def __init__(self, breakpoints, coeffs, _canonical=False):
        breakpoints = np.asarray(breakpoints, dtype=float)
        coeffs = [np.asarray(c, dtype=float) for c in coeffs]
        if breakpoints.size == 0 or not coeffs:
            self.breakpoints = np.empty(0)
            self.coeffs = []
            return
        if breakpoints.ndim != 1 or len(coeffs) != breakpoints.size - 1:
            raise InvalidParameterError(
                "need len(breakpoints) == len(coeffs) + 1"
            )
        if np.any(np.diff(breakpoints) <= 0):
            raise InvalidParameterError("breakpoints must be strictly increasing")
        if any(len(c) - 1 > MAX_DEGREE for c in coeffs):
            raise InvalidParameterError(f"piece degree exceeds cap {MAX_DEGREE}")
        self.breakpoints = breakpoints
        self.coeffs = coeffs
        if not _canonical:
            canon = self.canonicalize()
            self.breakpoints = canon.breakpoints
            self.coeffs = canon.coeffs

    # ------------------------------------------------------------------ basics

    @classmethod
    def zero(cls):
        return cls(np.empty(0), [])

    @property
    def is_zero(self):
        return self.breakpoints.size == 0

    @property
    def support(self):
        if self.is_zero:
            return (0.0, 0.0)
        return (self.breakpoints[0], self.breakpoints[-1])

    @property
    def degree(self):
        if self.is_zero:
            return -1
        return max(len(c) - 1 for c in self.coeffs)

    def _scale(self):
        if self.is_zero:
            return 1.0
        return max(1.0, max(np.max(np.abs(c)) for c in self.coeffs))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.zeros_like(t)
        if not self.is_zero:
            bp = self.breakpoints
            idx = np.searchsorted(bp, t, side="right") - 1
            # close the right endpoint of the last piece
            idx[t == bp[-1]] = len(self.coeffs) - 1
            inside = (idx >= 0) & (idx < len(self.coeffs)) & (t >= bp[0]) & (t <= bp[-1])
            for i in np.unique(idx[inside]):
                m = inside & (idx == i)
                out[m] = _polyval(self.coeffs[i], t[m] - bp[i])
        return out[0] if scalar else out

    def canonicalize(self):
        """Trim zero tails, merge adjacent identical pieces, trim degrees."""
        if self.is_zero:
            return PiecewisePoly.zero()
        scale = self._scale()
        bp = list(self.breakpoints)
        cs = [_trim_coeffs(c, scale) for c in self.coeffs]

        def piece_is_zero(c):
            return np.all(np.abs(c) <= COEFF_TOL * scale)

        while cs and piece_is_zero(cs[0]):
            cs.pop(0)
            bp.pop(0)
        while cs and piece_is_zero(cs[-1]):
            cs.pop()
            bp.pop()
        if not cs:
            return PiecewisePoly.zero()
        # merge neighbors that continue the same polynomial
        out_bp = [bp[0]]
        out_cs = []
        cur = cs[0]
        cur_left = bp[0]
        for i in range(1, len(cs)):
            cand = _taylor_shift(cur, bp[i] - cur_left)
            nxt = cs[i]
            n = max(len(cand), len(nxt))
            ca = np.zeros(n)
            cb = np.zeros(n)
            ca[: len(cand)] = cand
            cb[: len(nxt)] = nxt
            if np.all(np.abs(ca - cb) <= COEFF_TOL * scale):
                continue
            out_bp.append(bp[i])
            out_cs.append(cur)
            cur = nxt
            cur_left = bp[i]
        out_bp.append(bp[-1])
        out_cs.append(cur)
        return PiecewisePoly(out_bp, out_cs, _canonical=True)

    def allclose(self, other, tol=1e-12):
        """Equality as functions, up to tol * scale, on a shared refinement."""
        pts = np.concatenate(
            [self.breakpoints, other.breakpoints, [0.0]]
        )
        lo = min(pts.min(), -1.0)
        hi = max(pts.max(), 1.0)
        grid = np.linspace(lo, hi, 687)
        grid = np.concatenate([grid, pts])
        scale = max(self._scale(), other._scale())
        return np.max(np.abs(self(grid) - other(grid))) <= tol * scale

    # --------------------------------------------------------------- operators

    def scale_values(self, c):
        if self.is_zero or c == 0.0:
            return PiecewisePoly.zero() if c == 0.0 else self
        return PiecewisePoly(
            self.breakpoints, [ci * c for ci in self.coeffs], _canonical=True
        )

    def translate(self, dt):
        """Return q with q(t) = self(t - dt)."""
        if self.is_zero:
            return self
        return PiecewisePoly(
            self.breakpoints + dt, [c.copy() for c in self.coeffs], _canonical=True
        )

    def derivative(self):
        """Piecewise derivative (kinks become jumps)."""
        if self.is_zero:
            return self
        cs = []
        for c in self.coeffs:
            if len(c) == 1:
                cs.append(np.zeros(1))
            else:
                cs.append(c[1:] * np.arange(1, len(c)))
        return PiecewisePoly(self.breakpoints, cs, _canonical=True)

    def reflect(self):
        """Return q with q(t) = self(-t)."""
        if self.is_zero:
            return self
        bp = -self.breakpoints[::-1]
        cs = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            h = self.breakpoints[i + 1] - self.breakpoints[i]
            c = self.coeffs[i]
            # local coord of the reflected piece: s' in [0,h], value p(h - s')
            shifted = _taylor_shift(c, h)
            shifted[1::2] *= -1.0
            cs.append(shifted)
        return PiecewisePoly(bp, cs)

    def dilate(self, s):
        """Return q with q(t) = self(t / s), s > 0 (support scales by s)."""
        if s <= 0:
            raise InvalidParameterError("dilation scale must be positive")
        if self.is_zero:
            return self
        cs = [c / s ** np.arange(len(c)) for c in self.coeffs]
        return PiecewisePoly(self.breakpoints * s, cs, _canonical=True)

    def restrict(self, a, b):
        """The same function on [a, b], zero outside."""
        if self.is_zero or b <= a:
            return PiecewisePoly.zero()
        lo, hi = self.support
        a = max(a, lo)
        b = min(b, hi)
        if b <= a:
            return PiecewisePoly.zero()
        bp = [a]
        cs = []
        for i, c in enumerate(self.coeffs):
            l, r = self.breakpoints[i], self.breakpoints[i + 1]
            if r <= a or l >= b:
                continue
            cs.append(_taylor_shift(c, max(l, a) - l))
            bp.append(min(r, b))
        return PiecewisePoly(bp, cs)

    def __add__(self, other):
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        bp = np.unique(np.concatenate([self.breakpoints, other.breakpoints]))
        cs = []
        for i in range(len(bp) - 1):
            left = bp[i]
            c = np.zeros(1)
            for f in (self, other):
                lo, hi = f.support
                if lo <= left < hi:
                    j = np.searchsorted(f.breakpoints, left, side="right") - 1
                    cj = _taylor_shift(f.coeffs[j], left - f.breakpoints[j])
                    n = max(len(c), len(cj))
                    cc = np.zeros(n)
                    cc[: len(c)] = c
                    cc[: len(cj)] += cj
                    c = cc
            cs.append(c)
        return PiecewisePoly(bp, cs)

    def multiply(self, other):
        """Pointwise product, exact."""
        if self.is_zero or other.is_zero:
            return PiecewisePoly.zero()
        a = max(self.support[0], other.support[0])
        b = min(self.support[1], other.support[1])
        if b <= a:
            return PiecewisePoly.zero()
        bp = np.unique(
            np.concatenate(
                [
                    self.breakpoints[(self.breakpoints >= a) & (self.breakpoints <= b)],
                    other.breakpoints[
                        (other.breakpoints >= a) & (other.breakpoints <= b)
                    ],
                    [a, b],
                ]
            )
        )
        cs = []
        for i in range(len(bp) - 1):
            left = bp[i]
            js = np.searchsorted(self.breakpoints, left, side="right") - 1
            jo = np.searchsorted(other.breakpoints, left, side="right") - 1
            ps = _taylor_shift(self.coeffs[js], left - self.breakpoints[js])
            po = _taylor_shift(other.coeffs[jo], left - other.breakpoints[jo])
            cs.append(np.polynomial.polynomial.polymul(ps, po))
        return PiecewisePoly(bp, cs)

    def integrate(self, a=None, b=None):
        """Exact integral over [a, b] (defaults: whole support)."""
        if self.is_zero:
            return 0.0
        lo, hi = self.support
        a = lo if a is None else max(a, lo)
        b = hi if b is None else min(b, hi)
        if b <= a:
            return 0.0
        total = 0.0
        for i, c in enumerate(self.coeffs):
            l, r = self.breakpoints[i], self.breakpoints[i + 1]
            if r <= a or l >= b:
                continue
            ci = _poly_int(c)
            total += _polyval(ci, min(r, b) - l) - _polyval(ci, max(l, a) - l)
        return float(total)

    def moment(self, k, a=None, b=None):
        """Exact int t^k p(t) dt over [a, b]."""
        if k == 0:
            return self.integrate(a, b)
        q = self
        for _ in range(k):
            q = q._times_t()
        return q.integrate(a, b)

    def _times_t(self):
        if self.is_zero:
            return self
        cs = []
        for i, c in enumerate(self.coeffs):
            left = self.breakpoints[i]
            # t = s + left in local coordinates
            shifted = np.concatenate(([0.0], c)) + left * np.concatenate(
                (c, [0.0])
            )
            cs.append(shifted)
        return PiecewisePoly(self.breakpoints, cs, _canonical=True)

    def abs_t_integral(self):
        """Exact int |t| p(t) dt over the support."""
        if self.is_zero:
            return 0.0
        q = self._times_t()
        return q.integrate(0.0, None) - q.integrate(None, 0.0)

    # ------------------------------------------------------ transform kernels

    def fourier(self, z):
        """int p(t) e^{2 pi i t z} dt, exact per piece, vectorized over z."""
        z = np.asarray(z, dtype=complex)
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        out = np.zeros(z.shape, dtype=complex)
        if not self.is_zero:
            a = 2j * np.pi * z
            kmax = self.degree
            for i, c in enumerate(self.coeffs):
                left = self.breakpoints[i]
                h = self.breakpoints[i + 1] - left
                table = _exp_int_table(a, h, len(c) - 1)
                acc = np.zeros(z.shape, dtype=complex)
                for k, ck in enumerate(c):
                    if ck != 0.0:
                        acc += ck * table[k]
                out += np.exp(a * left) * acc
        return out[0] if scalar else out

    def laplace_plus(self, s):
        """int_0^inf p(t) e^{-s t} dt, exact per piece, vectorized over s."""
        p = self.restrict(0.0, self.support[1])
        s_arr = np.asarray(s, dtype=complex)
        scalar = s_arr.ndim == 0
        s_arr = np.atleast_1d(s_arr)
        out = np.zeros(s_arr.shape, dtype=complex)
        if not p.is_zero:
            a = -s_arr
            for i, c in enumerate(p.coeffs):
                left = p.breakpoints[i]
                h = p.breakpoints[i + 1] - left
                table = _exp_int_table(a, h, len(c) - 1)
                acc = np.zeros(s_arr.shape, dtype=complex)
                for k, ck in enumerate(c):
                    if ck != 0.0:
                        acc += ck * table[k]
                out += np.exp(a * left) * acc
        return out[0] if scalar else out

    def convolve(self, other):
        """Exact convolution (f*g)(x) = int f(t) g(x-t) dt.

        Output breakpoints are the pairwise sums of input breakpoints; on each
        output interval the result is a single polynomial of degree
        deg(f) + deg(g) + 1, recovered by sampling the exact integral at
        Chebyshev nodes and solving the local Vandermonde system.
        """
        if self.is_zero or other.is_zero:
            return PiecewisePoly.zero()
        sums = np.add.outer(self.breakpoints, other.breakpoints).ravel()
        sums = np.sort(sums)
        span = max(1.0, sums[-1] - sums[0])
        keep = [sums[0]]
        for v in sums[1:]:
            if v - keep[-1] > 1e-12 * span:
                keep.append(v)
        bp = np.array(keep)
        deg = self.degree + other.degree + 1
        grev = other.reflect()
        cs = []
        for i in range(len(bp) - 1):
            left, right = bp[i], bp[i + 1]
            h = right - left
            # Chebyshev nodes, strictly interior, in normalized coords [0,1]
            u = 0.5 * (1.0 - np.cos((2 * np.arange(deg + 1) + 1) * np.pi / (2 * (deg + 1))))
            xs = left + h * u
            vals = np.array(
                [self.multiply(grev.translate(x)).integrate() for x in xs]
            )
            V = np.vander(u, deg + 1, increasing=True)
            chat = np.linalg.solve(V, vals)
            c = chat / h ** np.arange(deg + 1)
            cs.append(c)
        return PiecewisePoly(bp, cs)

    def __repr__(self):
        if self.is_zero:
            return "PiecewisePoly(zero)"
        return (
            f"PiecewisePoly({len(self.coeffs)} pieces on "
            f"[{self.breakpoints[0]:g}, {self.breakpoints[-1]:g}], "
            f"degree {self.degree})"
        )


class TestFunction:
    """A Paley-Wiener pair: even compactly supported fhat, entire Phi.

    Parameters
    ----------
    fhat : PiecewisePoly
        The transform; must be even.
    label : str
        Display name.
    smoothness : int
        Largest m with fhat in C^m (-1 for merely piecewise continuous).
        Phi then decays like |x|^{-(m+2)}; used to pick contour truncations.
    family : str or None
        Set for built-ins so serialization can round-trip {family, sigma}.
    """

    __slots__ = ("fhat", "label", "smoothness", "family", "sigma", "phi0", "fhat0")

    def __init__(self, fhat, label="custom", smoothness=-1, family=None):
        fhat = fhat.canonicalize()
        if not fhat.is_zero:
            if not fhat.allclose(fhat.reflect(), tol=1e-12):
                raise InvalidParameterError("fhat must be even")
        self.fhat = fhat
        self.label = label
        self.smoothness = smoothness
        self.family = family
        lo, hi = fhat.support
        self.sigma = float(max(hi, -lo))
        self.phi0 = fhat.integrate()
        self.fhat0 = float(fhat(0.0))

    # ----------------------------------------------------------- evaluation

    def eval_fhat(self, t):
        return self.fhat(t)

    def eval_phi(self, z):
        """Phi(z) = int fhat(t) e^{2 pi i t z} dt, entire in z.

        The sign of z is canonicalized first so eval_phi(z) and eval_phi(-z)
        run the identical float computation (Phi is even because fhat is).
        """
        z = np.asarray(z, dtype=complex)
        scalar = z.ndim == 0
        z = np.atleast_1d(z).copy()
        flip = (z.real < 0) | ((z.real == 0) & (z.imag < 0))
        z[flip] = -z[flip]
        out = self.fhat.fourier(z)
        return out[0] if scalar else out

    def phi_real(self, x):
        """Phi on the real line, as floats (imaginary part is roundoff)."""
        return np.real(self.eval_phi(np.asarray(x, dtype=float) + 0j))

    def laplace_plus(self, s):
        """int_0^inf fhat(t) e^{-s t} dt for complex s (vectorized)."""
        return self.fhat.laplace_plus(s)

    @property
    def decay_order(self):
        """Phi(v+iy) = O(|v|^{-decay_order}) on horizontal strips."""
        return self.smoothness + 2

    @property
    def is_zero(self):
        return self.fhat.is_zero

    def kink_frequencies(self):
        """|breakpoints| of fhat: the oscillation rates Phi(i(d+it)) carries."""
        if self.fhat.is_zero:
            return np.zeros(1)
        return np.unique(np.abs(self.fhat.breakpoints))

    # ----------------------------------------------------------- constructors

    def dilate(self, s):
        """fhat_new(t) = fhat(t/s): support radius scales by s."""
        if s <= 0:
            raise InvalidParameterError("dilation scale must be positive")
        fam = self.family
        label = f"{fam}(sigma={self.sigma * s:g})" if fam else f"{self.label}*dil({s:g})"
        return TestFunction(
            self.fhat.dilate(s), label=label, smoothness=self.smoothness, family=fam
        )

    def equals(self, other):
        return (
            self.fhat.allclose(other.fhat, tol=COEFF_TOL * 10)
            and self.smoothness == other.smoothness
        )

    def to_spec(self):
        if self.family in _BUILTIN_FAMILIES:
            return {"family": self.family, "sigma": self.sigma}
        return {
            "breakpoints": [float(b) for b in self.fhat.breakpoints],
            "pieces": [[float(x) for x in c] for c in self.fhat.coeffs],
            "smoothness": self.smoothness,
        }

    def __repr__(self):
        return f"TestFunction({self.label})"


# --------------------------------------------------------------- built-ins


def box(sigma=1.0):
    """fhat = 1 on [-sigma, sigma]; Phi(x) = sin(2 pi sigma x)/(pi x)."""
    if sigma <= 0:
        raise InvalidParameterError("sigma must be positive")
    fhat = PiecewisePoly([-sigma, sigma], [[1.0]])
    return TestFunction(fhat, label=f"box(sigma={sigma:g})", smoothness=-1, family="box")


def fejer(sigma=1.0):
    """fhat = (1 - |t|/sigma)_+; Phi(x) = sigma (sin(pi sigma x)/(pi sigma x))^2."""
    if sigma <= 0:
        raise InvalidParameterError("sigma must be positive")
    fhat = PiecewisePoly([-sigma, 0.0, sigma], [[0.0, 1.0 / sigma], [1.0, -1.0 / sigma]])
    return TestFunction(
        fhat, label=f"fejer(sigma={sigma:g})", smoothness=0, family="fejer"
    )


def _iterated_box(sigma, nboxes, smoothness, family):
    h = sigma / nboxes
    b = PiecewisePoly([-h, h], [[1.0]])
    fhat = b
    for _ in range(nboxes - 1):
        fhat = fhat.convolve(b)
    fhat = fhat.scale_values(1.0 / fhat(0.0))
    return TestFunction(
        fhat, label=f"{family}(sigma={sigma:g})", smoothness=smoothness, family=family
    )


def bspline2(sigma=1.0):
    """Quadratic B-spline transform (3 boxes), C^1, normalized to fhat(0)=1."""
    if sigma <= 0:
        raise InvalidParameterError("sigma must be positive")
    return _iterated_box(sigma, 3, 1, "bspline2")


def bspline3(sigma=1.0):
    """Cubic B-spline transform (4 boxes), C^2, normalized to fhat(0)=1."""
    if sigma <= 0:
        raise InvalidParameterError("sigma must be positive")
    return _iterated_box(sigma, 4, 2, "bspline3")


def zero_function():
    return TestFunction(PiecewisePoly.zero(), label="zero", smoothness=10)


def from_spec(spec):
    """Build a TestFunction from its JSON form.

    {"family": name, "sigma": s} for built-ins, or
    {"breakpoints": [...], "pieces": [[c0, c1, ...], ...]} for a custom fhat
    (local-coordinate coefficients per piece, as in PiecewisePoly).
    """
    if "family" in spec:
        fam = spec["family"]
        if fam == "zero":
            return zero_function()
        if fam not in _BUILTIN_FAMILIES:
            raise InvalidParameterError(f"unknown family {fam!r}")
        sigma = float(spec.get("sigma", 1.0))
        return {"box": box, "fejer": fejer, "bspline2": bspline2, "bspline3": bspline3}[
            fam
        ](sigma)
    if "breakpoints" in spec:
        fhat = PiecewisePoly(spec["breakpoints"], spec["pieces"])
        return TestFunction(fhat, label="custom", smoothness=int(spec.get("smoothness", -1)))
    raise InvalidParameterError("test-function spec needs 'family' or 'breakpoints'")


# --------------------------------------------------------------- operations


def convolve_hats(f, g):
    """Exact convolution of two transforms (product of the Phi's)."""
    if f.is_zero or g.is_zero:
        return zero_function()
    return TestFunction(
        f.fhat.convolve(g.fhat),
        label=f"{f.label}*{g.label}",
        smoothness=f.smoothness + g.smoothness + 2,
    )


def product_test_function(k, G, phis):
    """The test function whose Phi is Phi_k * prod_{j in G} Phi_j.

    Indices are 1-based positions into phis, matching the moment formulas.
    """
    result = phis[k - 1]
    fhat = result.fhat
    smooth = result.smoothness
    label_parts = [result.label]
    for j in sorted(G):
        other = phis[j - 1]
        fhat = fhat.convolve(other.fhat)
        smooth = smooth + other.smoothness + 2
        label_parts.append(other.label)
    if len(label_parts) == 1:
        return result
    return TestFunction(fhat, label="*".join(label_parts), smoothness=smooth)


def sigma_sq(f):
    """sigma^2_Phi = 2 int |t| fhat(t)^2 dt (exact)."""
    if f.is_zero:
        return 0.0
    sq = f.fhat.multiply(f.fhat)
    return 2.0 * sq.abs_t_integral()
