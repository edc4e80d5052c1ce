"""Tests for the piecewise-polynomial transform layer."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import simpson

from orthomoments import splinefourier as sf
from orthomoments.errors import InvalidParameterError

from helpers import piecewise_gauss

X_PROBE = np.array([0.17, 0.3, 0.77, 1.1, 2.7])


def grid_phi(f, x):
    """Phi(x) = int fhat(t) cos(2 pi t x) dt on a dense grid (oracle)."""
    lo, hi = f.fhat.support
    t = np.linspace(float(lo), float(hi), 40001)
    vals = f.eval_fhat(t)
    return np.array([simpson(vals * np.cos(2.0 * np.pi * t * xx), x=t) for xx in x])


def test_fejer_closed_form():
    for sigma in (0.7, 1.0, 1.5):
        f = sf.fejer(sigma)
        expected = sigma * (np.sin(np.pi * sigma * X_PROBE) / (np.pi * sigma * X_PROBE)) ** 2
        assert_allclose(f.phi_real(X_PROBE), expected, atol=1e-13)
        assert f.phi0 == pytest.approx(sigma, abs=1e-14)
        assert f.fhat0 == pytest.approx(1.0, abs=1e-14)


def test_box_closed_form():
    f = sf.box(0.8)
    expected = np.sin(2.0 * np.pi * 0.8 * X_PROBE) / (np.pi * X_PROBE)
    assert_allclose(f.phi_real(X_PROBE), expected, atol=1e-13)
    assert f.phi0 == pytest.approx(1.6, abs=1e-14)


def test_bsplines_match_grid_transform():
    for f in (sf.bspline2(0.9), sf.bspline3(1.3)):
        assert_allclose(f.phi_real(X_PROBE), grid_phi(f, X_PROBE), atol=1e-9)
        assert f.fhat0 == pytest.approx(1.0, abs=1e-12)


def test_phi_even_and_conjugate_symmetric():
    f = sf.bspline2(1.1)
    assert_allclose(f.phi_real(-X_PROBE), f.phi_real(X_PROBE), atol=1e-14)
    z = 0.4 + 0.9j
    assert f.eval_phi(np.conj(z)) == pytest.approx(np.conj(f.eval_phi(z)), abs=1e-12)
    # Phi(iy) is real for real y (fhat real and even).
    assert abs(f.eval_phi(0.3j).imag) < 1e-12
    assert f.eval_phi(0.0) == pytest.approx(f.phi0, abs=1e-14)


def test_sigma_sq_closed_forms():
    # 2 int |t| fhat^2: box sigma -> 2 sigma^2, fejer sigma -> sigma^2 / 3.
    assert sf.sigma_sq(sf.box(0.5)) == pytest.approx(0.5, abs=1e-14)
    assert sf.sigma_sq(sf.fejer(1.0)) == pytest.approx(1.0 / 3.0, abs=1e-14)
    assert sf.sigma_sq(sf.fejer(1.5)) == pytest.approx(0.75, abs=1e-14)
    f = sf.bspline3(0.8)
    t = np.linspace(-0.8, 0.8, 40001)
    oracle = simpson(2.0 * np.abs(t) * f.eval_fhat(t) ** 2, x=t)
    assert sf.sigma_sq(f) == pytest.approx(oracle, abs=1e-9)


def test_convolution_multiplies_phi():
    f, g = sf.fejer(1.2), sf.bspline2(0.8)
    conv = sf.convolve_hats(f, g)
    assert_allclose(
        conv.phi_real(X_PROBE), f.phi_real(X_PROBE) * g.phi_real(X_PROBE), atol=1e-12
    )
    lo, hi = conv.fhat.support
    assert (float(lo), float(hi)) == pytest.approx((-2.0, 2.0), abs=1e-12)
    assert conv.phi0 == pytest.approx(f.phi0 * g.phi0, abs=1e-12)


def test_product_test_function():
    phis = (sf.fejer(1.0), sf.fejer(0.6), sf.bspline2(0.5))
    prod = sf.product_test_function(1, (2, 3), phis)
    expected = np.ones_like(X_PROBE)
    for f in phis:
        expected = expected * f.phi_real(X_PROBE)
    assert_allclose(prod.phi_real(X_PROBE), expected, atol=1e-12)


def test_dilate_and_equals():
    assert sf.fejer(1.0).dilate(1.5).equals(sf.fejer(1.5))
    assert not sf.fejer(1.0).equals(sf.bspline2(1.0))


def test_spec_round_trip():
    for f in (sf.fejer(1.25), sf.bspline3(0.75), sf.convolve_hats(sf.fejer(0.5), sf.box(0.5))):
        back = sf.from_spec(f.to_spec())
        assert back.equals(f)
    with pytest.raises(InvalidParameterError):
        sf.from_spec({"family": "nonexistent", "sigma": 1.0})


def test_laplace_plus_box_closed_form():
    # L+(w) = int_0^sigma e^{-t w} dt = (1 - e^{-sigma w}) / w.
    f = sf.box(0.7)
    for w in (0.9, 0.4 + 0.3j, 2.0 - 1.1j):
        expected = (1.0 - np.exp(-0.7 * w)) / w
        assert f.laplace_plus(w) == pytest.approx(expected, abs=1e-12)


def test_laplace_plus_fejer_grid():
    f = sf.fejer(1.3)
    w = 1.1 + 0.7j
    oracle = piecewise_gauss(
        lambda t: f.eval_fhat(t) * np.exp(-t * w), 0.0, 1.3, (0.65,)
    )
    assert f.laplace_plus(w) == pytest.approx(oracle, abs=1e-10)


def test_zero_function():
    z = sf.zero_function()
    assert z.is_zero
    assert z.phi0 == 0.0 and z.fhat0 == 0.0
    assert np.all(z.phi_real(X_PROBE) == 0.0)


def test_kink_frequencies():
    assert_allclose(np.unique(sf.box(1.0).kink_frequencies()), [1.0])
    assert_allclose(np.unique(sf.fejer(1.5).kink_frequencies()), [0.0, 1.5])
    assert_allclose(np.unique(sf.bspline2(0.9).kink_frequencies()), [0.3, 0.9])


def test_decay_orders():
    assert sf.box(1.0).decay_order == 1
    assert sf.fejer(1.0).decay_order == 2
    assert sf.bspline2(1.0).decay_order == 3
    assert sf.bspline3(1.0).decay_order == 4


def test_piecewise_poly_surgery():
    pp = sf.fejer(1.5).fhat
    assert pp.integrate() == pytest.approx(1.5, abs=1e-14)
    shifted = pp.translate(0.25)
    assert shifted.support == pytest.approx((-1.25, 1.75), abs=1e-14)
    assert shifted.integrate() == pytest.approx(1.5, abs=1e-14)
    sq = pp.multiply(pp)
    assert sq.abs_t_integral() == pytest.approx(0.75 / 2.0, abs=1e-14)


def test_invalid_parameters():
    for bad in (-1.0, 0.0):
        with pytest.raises(InvalidParameterError):
            sf.fejer(bad)
        with pytest.raises(InvalidParameterError):
            sf.box(bad)
