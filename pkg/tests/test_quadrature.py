"""Tests for adaptive interval/box quadrature and vertical-line integrals."""

import numpy as np
import pytest

from orthomoments import quadrature as qd
from orthomoments import splinefourier as sf
from orthomoments.errors import (
    AccuracyError,
    InvalidParameterError,
    SizeLimitError,
    UnsupportedIntegrandError,
)

from helpers import contour_freqs, pair_tail_integral, tail_integral


def test_polynomial_interval():
    val, err = qd.integrate_interval(lambda t: t**3, 0.0, 1.0)
    assert val == pytest.approx(0.25, abs=1e-13)
    assert 0.0 <= err < 1e-10


def test_kinked_interval_with_breakpoints():
    val, _ = qd.integrate_interval(
        lambda t: abs(t - 1.0 / 3.0), -1.0, 1.0, breakpoints=(1.0 / 3.0,)
    )
    assert val == pytest.approx(10.0 / 9.0, abs=1e-12)


def test_vectorized_matches_scalar():
    g = lambda t: np.exp(-t) * np.cos(3.0 * t)
    v1, _ = qd.integrate_interval(g, 0.0, 2.0)
    v2, _ = qd.integrate_interval(g, 0.0, 2.0, vectorized=True)
    assert v1 == pytest.approx(v2, abs=1e-13)


def test_oscillatory_interval():
    val, _ = qd.integrate_interval(lambda t: np.cos(7.0 * t), 0.0, 10.0)
    assert val == pytest.approx(np.sin(70.0) / 7.0, abs=1e-11)


def test_unreachable_tolerance_raises():
    spec = qd.QuadSpec(abs_tol=1e-13, max_subdivisions=4)
    with pytest.raises(AccuracyError) as exc:
        qd.integrate_interval(lambda t: abs(t - np.pi / 7.0), 0.0, 1.0, spec)
    assert exc.value.error_estimate > 0.0


def test_box_separable():
    val, _ = qd.integrate_box(lambda a, b: a * b, ((0.0, 1.0), (0.0, 1.0)))
    assert val == pytest.approx(0.25, abs=1e-10)
    val3, _ = qd.integrate_box(lambda a, b, c: 1.0, ((0.0, 1.0),) * 3)
    assert val3 == pytest.approx(1.0, abs=1e-10)


def test_box_indicator_integrand():
    # int int (1-t1)(1-t2) over {t1 + t2 <= 1} = 5/24; adaptivity must
    # localize the diagonal jump without being told where it is.
    spec = qd.QuadSpec(abs_tol=5e-8, max_subdivisions=4000)
    val, _ = qd.integrate_box(
        lambda a, b: (1.0 - a) * (1.0 - b) * float(a + b <= 1.0),
        ((0.0, 1.0), (0.0, 1.0)),
        spec,
    )
    assert val == pytest.approx(5.0 / 24.0, abs=1e-6)


def test_box_dimension_cap():
    with pytest.raises(SizeLimitError):
        qd.integrate_box(lambda *a: 1.0, ((0.0, 1.0),) * (qd.MAX_BOX_DIM + 1))


def test_quadspec_validation():
    with pytest.raises(InvalidParameterError):
        qd.QuadSpec(abs_tol=-1.0)
    with pytest.raises(InvalidParameterError):
        qd.QuadSpec(max_subdivisions=0)


def test_gauss_legendre_exactness():
    x, w = qd.gauss_legendre(7)
    assert np.dot(w, x**12) == pytest.approx(2.0 / 13.0, abs=1e-13)
    assert np.dot(w, x**13) == pytest.approx(0.0, abs=1e-14)


def test_contour_phi_over_w():
    # (1/2pi i) int_(delta) Phi(iw)/w dw = Phi(0)/2; unit Fejer -> 0.5.
    f = sf.fejer(1.0)
    val = qd.integrate_vertical_line(
        lambda w: f.eval_phi(1j * w) / w, delta=0.5, decay_order=3, vectorized=True
    )
    assert val.real == pytest.approx(0.5, abs=1e-8)
    assert abs(val.imag) < 1e-8


def test_contour_delta_independence():
    f = sf.bspline2(1.2)
    h = lambda w: f.eval_phi(1j * w) / w
    a = qd.integrate_vertical_line(h, delta=0.3, decay_order=4, vectorized=True)
    b = qd.integrate_vertical_line(h, delta=0.7, decay_order=4, vectorized=True)
    assert a.real == pytest.approx(b.real, abs=1e-8)


def test_contour_rejects_weak_decay():
    with pytest.raises(UnsupportedIntegrandError):
        qd.integrate_vertical_line(lambda w: 1.0 / w, delta=0.5, decay_order=1)
    with pytest.raises(InvalidParameterError):
        qd.integrate_vertical_line(lambda w: 1.0 / w**2, delta=-0.5, decay_order=2)


def test_choose_truncation_caps():
    f = sf.fejer(1.0)
    h = lambda w: f.eval_phi(1j * w) / w
    t = qd.choose_truncation(h, 0.5, 3, qd.DEFAULT_1D, t_cap=120.0, vectorized=True)
    assert qd.MIN_T <= t <= 120.0


def test_shifted_pole_line_integral():
    # Single fixed config per branch of the shifted-pole identity; the
    # randomized sweep lives in the acceptance suite.
    f, u1 = sf.fejer(1.1), 0.35
    freqs = contour_freqs(f, u1)

    def lhs(z, delta):
        return qd.integrate_vertical_line(
            lambda w: np.exp(-2.0 * np.pi * u1 * w) * f.eval_phi(1j * w) / (w - z),
            delta=delta,
            decay_order=f.decay_order + 1,
            osc_freqs=freqs,
            t_cap=200.0,
            vectorized=True,
        ).real

    z = 0.3
    assert lhs(z, delta=0.6) == pytest.approx(tail_integral(f, u1, z=z), abs=1e-7)
    assert lhs(z, delta=0.1) == pytest.approx(-tail_integral(f, -u1, z=-z), abs=1e-7)


def test_double_pole_line_integral():
    # (1/2pi i)^2 nested double contour of Phi1 Phi2 e^{-2 pi (U1 w1 + U2 w2)}
    # / (w1+w2)^2 equals int_0^inf t fhat1(t+U1) fhat2(t+U2) dt.
    f1, f2 = sf.fejer(0.9), sf.bspline2(1.1)
    u1, u2 = 0.25, -0.15
    d1, d2 = 0.45, 0.35

    def outer(w1):
        inner = qd.integrate_vertical_line(
            lambda w2: np.exp(-2.0 * np.pi * u2 * w2)
            * f2.eval_phi(1j * w2)
            / (w1 + w2) ** 2,
            delta=d2,
            decay_order=f2.decay_order + 2,
            osc_freqs=contour_freqs(f2, u2),
            t_cap=20.0,
            vectorized=True,
        )
        return np.exp(-2.0 * np.pi * u1 * w1) * f1.eval_phi(1j * w1) * inner

    val = qd.integrate_vertical_line(
        outer,
        delta=d1,
        decay_order=f1.decay_order,
        osc_freqs=contour_freqs(f1, u1),
        t_cap=20.0,
        vectorized=False,
    )
    assert val.real == pytest.approx(pair_tail_integral(f1, f2, u1, u2), abs=1e-6)
