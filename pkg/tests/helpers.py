"""Shared oracles and harnesses for the test suite.

Everything here is deliberately independent of the library's own quadrature:
Fourier-side integrals use composite Gauss-Legendre on the known smooth
pieces, and finite-N expectations come from the determinantal kernel of the
relevant eigenphase process (mode expansion, so only 1-D integrals appear).
"""

import io
import json
from contextlib import redirect_stdout, redirect_stderr

import numpy as np

from orthomoments import cli

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(40)


def run_cli(argv):
    """Run the CLI in-process; returns (exit_code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli.main(argv)
    return code, out.getvalue(), err.getvalue()


def write_config(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


def piecewise_gauss(g, a, b, inner_breaks=()):
    """int_a^b g via 40-point Gauss on each smooth piece (vectorized g)."""
    if b <= a:
        return 0.0
    cuts = [a] + sorted(c for c in set(inner_breaks) if a < c < b) + [b]
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        half = 0.5 * (hi - lo)
        x = 0.5 * (hi + lo) + half * _GL_NODES
        total = total + half * np.dot(_GL_WEIGHTS, g(x))
    return total


def _shift_breaks(f, u):
    """Kink positions of t -> fhat(t + u) on the positive axis."""
    kinks = set()
    for k in np.atleast_1d(f.kink_frequencies()):
        kinks.add(float(k) - u)
        kinks.add(-float(k) - u)
    return sorted(c for c in kinks if c > 0.0)


def tail_integral(f, u, z=0.0, t_weight=False):
    """int_0^inf fhat(t+u) e^{2 pi t z} [t] dt (exact smooth pieces)."""
    top = float(f.fhat.support[1]) - u
    if top <= 0.0:
        return 0.0

    def g(t):
        vals = f.eval_fhat(t + u) * np.exp(2.0 * np.pi * t * z)
        return vals * t if t_weight else vals

    return piecewise_gauss(g, 0.0, top, _shift_breaks(f, u))


def pair_tail_integral(f1, f2, u1, u2):
    """int_0^inf t fhat1(t+u1) fhat2(t+u2) dt (exact smooth pieces)."""
    top = min(float(f1.fhat.support[1]) - u1, float(f2.fhat.support[1]) - u2)
    if top <= 0.0:
        return 0.0

    def g(t):
        return t * f1.eval_fhat(t + u1) * f2.eval_fhat(t + u2)

    breaks = sorted(set(_shift_breaks(f1, u1)) | set(_shift_breaks(f2, u2)))
    return piecewise_gauss(g, 0.0, top, breaks)


def contour_freqs(f, u):
    """Oscillation shifts |±u ± kink| for a factor e^{-2 pi u w} Phi(iw)."""
    kinks = [0.0] + [float(k) for k in np.atleast_1d(f.kink_frequencies())]
    out = set()
    for k in kinks:
        for sk in (-k, k):
            out.add(abs(u + sk))
            out.add(abs(-u + sk))
    return sorted(out)


def kernel_modes(tag, n_free):
    """K(theta, phi) = sum c e(k theta) e(k phi) for the finite-N process."""
    if tag == "SO_even":
        return [(1.0 / np.pi, 0, np.cos)] + [
            (2.0 / np.pi, k, np.cos) for k in range(1, n_free)
        ]
    # USp(2N) free phases; O^-(2N+2) free phases share the same density.
    return [(2.0 / np.pi, k, np.sin) for k in range(1, n_free + 1)]


def exact_finite_n_moment(tag, n_free, f, n):
    """E[product of centered statistics] at finite N, equal phis, n <= 2."""
    from scipy.integrate import simpson

    th = np.linspace(0.0, np.pi, 20001)
    fv = f.phi_real(th * (n_free / np.pi))
    modes = kernel_modes(tag, n_free)
    rho1 = np.zeros_like(th)
    for c, k, fun in modes:
        rho1 += c * fun(k * th) ** 2
    center = f.fhat0 + 0.5 * f.phi0
    extra = f.phi0 if tag == "O_minus" else 0.0
    es = simpson(fv * rho1, x=th)
    if n == 1:
        return 2.0 * es + extra - center
    es2_diag = simpson(fv * fv * rho1, x=th)
    cross = 0.0
    for c1, k1, f1 in modes:
        for c2, k2, f2 in modes:
            cross += c1 * c2 * simpson(fv * f1(k1 * th) * f2(k2 * th), x=th) ** 2
    es2 = es2_diag + es**2 - cross
    ec = extra - center
    return 4.0 * es2 + 4.0 * ec * es + ec * ec
