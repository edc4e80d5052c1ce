"""Tests for Haar sampling, eigenphase extraction, and the MC estimator."""

import numpy as np
import pytest

from orthomoments import haarsim as hs
from orthomoments import predictions as pred
from orthomoments import splinefourier as sf
from orthomoments.errors import EstimateInvalidError, InvalidParameterError

from helpers import exact_finite_n_moment

UNIT = sf.fejer(1.0)


def rng(seed):
    return np.random.default_rng(seed)


def test_ensemble_kind_validation():
    with pytest.raises(InvalidParameterError):
        hs.EnsembleKind("SO_odd", 4)
    with pytest.raises(InvalidParameterError):
        hs.EnsembleKind("USp", 0)
    assert hs.EnsembleKind("SO_even", 3).matrix_dim() == 6
    assert hs.EnsembleKind("O_minus", 3).matrix_dim() == 8
    assert hs.EnsembleKind("USp", 3).matrix_dim() == 6
    full = hs.EnsembleKind("O_full", 3)
    with pytest.raises(InvalidParameterError):
        full.matrix_dim()
    assert full.matrix_dim("O_minus") == 8


def test_sample_eigenphases_structure():
    for tag, forced in (("SO_even", False), ("O_minus", True), ("USp", False)):
        kind = hs.EnsembleKind(tag, 4)
        s = hs.sample_eigenphases(kind, rng(5))
        assert s.thetas.shape == (4,)
        assert np.all(np.diff(s.thetas) >= 0.0)
        assert np.all(s.thetas >= 0.0) and np.all(s.thetas <= np.pi)
        assert s.forced_zero is forced and s.forced_pi is forced
        assert s.residuals["unitarity"] < 1e-10
        assert s.residuals["determinant"] < 1e-10
        assert s.residuals["pairing"] < 1e-10
    repeat_a = hs.sample_eigenphases(hs.EnsembleKind("O_full", 4), rng(9))
    repeat_b = hs.sample_eigenphases(hs.EnsembleKind("O_full", 4), rng(9))
    assert np.array_equal(repeat_a.thetas, repeat_b.thetas)


def _hand_sample(forced):
    return hs.EigenphaseSample(
        thetas=np.array([np.pi / 4.0, np.pi / 2.0]),
        forced_zero=forced,
        forced_pi=forced,
        residuals={},
    )


def test_centered_product_hand_values():
    # N=2, thetas {pi/4, pi/2}: scaled arguments {1/2, 1}; unit Fejer gives
    # Phi(1/2) = 4/pi^2, Phi(1) = 0, center = fhat(0) + Phi(0)/2 = 3/2.
    so = hs.EnsembleKind("SO_even", 2)
    base = 8.0 / np.pi**2 - 1.5
    r1 = pred.MomentRequest((UNIT,))
    assert hs.centered_product(_hand_sample(False), r1, so) == pytest.approx(
        base, abs=1e-14
    )
    r2 = pred.MomentRequest((UNIT, UNIT))
    assert hs.centered_product(_hand_sample(False), r2, so) == pytest.approx(
        base**2, abs=1e-14
    )
    # O^- coset: the forced theta = 0 adds Phi(0) = 1 to the raw statistic,
    # once, and include_forced=False drops exactly that term.
    om = hs.EnsembleKind("O_minus", 2)
    assert hs.centered_product(_hand_sample(True), r1, om) == pytest.approx(
        base + 1.0, abs=1e-14
    )
    assert hs.centered_product(
        _hand_sample(True), r1, om, include_forced=False
    ) == pytest.approx(base, abs=1e-14)


def test_centered_product_zero_function_and_mismatch():
    rz = pred.MomentRequest((sf.zero_function(),))
    assert hs.centered_product(_hand_sample(False), rz, hs.EnsembleKind("SO_even", 2)) == 0.0
    with pytest.raises(InvalidParameterError):
        hs.centered_product(
            _hand_sample(False), pred.MomentRequest((UNIT,)), hs.EnsembleKind("SO_even", 3)
        )


def test_mc_moment_deterministic_across_workers():
    kind = hs.EnsembleKind("O_full", 2)
    r = pred.MomentRequest((UNIT,))
    a = hs.mc_moment(kind, r, 640, seed=77)
    b = hs.mc_moment(kind, r, 640, seed=77)
    c = hs.mc_moment(kind, r, 640, seed=77, workers=2)
    assert (a.mean, a.stderr) == (b.mean, b.stderr)
    assert (a.mean, a.stderr) == (c.mean, c.stderr)
    assert a.samples == 640 and a.failures == 0 and a.kind == kind
    d = hs.mc_moment(kind, r, 640, seed=78)
    assert d.mean != a.mean


def test_mc_moment_minimum_samples():
    with pytest.raises(InvalidParameterError):
        hs.mc_moment(hs.EnsembleKind("SO_even", 2), pred.MomentRequest((UNIT,)), 99, 1)


def test_mc_moment_failure_budget(monkeypatch):
    kind = hs.EnsembleKind("SO_even", 2)

    def bad_draw(tag, n_free, count, gen):
        return np.full((count, 2 * n_free, 2 * n_free), np.nan)

    monkeypatch.setattr(hs, "_draw_matrices", bad_draw)
    with pytest.raises(EstimateInvalidError, match="sampler failures"):
        hs.mc_moment(kind, pred.MomentRequest((UNIT,)), 128, seed=3)


def test_mc_unbiased_against_finite_n_kernels():
    # Determinantal-kernel expectations (independent of the sampler) pin the
    # finite-N mean; the MC estimate must sit within 4 standard errors.
    cases = [
        ("SO_even", 3, sf.fejer(0.9), 1, 2024),
        ("USp", 3, sf.fejer(0.9), 1, 2025),
        ("O_minus", 3, sf.fejer(0.9), 1, 2026),
        ("SO_even", 4, sf.fejer(1.2), 2, 2027),
    ]
    for tag, n_free, f, n, seed in cases:
        est = hs.mc_moment(
            hs.EnsembleKind(tag, n_free), pred.MomentRequest((f,) * n), 30000, seed
        )
        exact = exact_finite_n_moment(tag, n_free, f, n)
        assert est.mean == pytest.approx(exact, abs=4.0 * est.stderr), (tag, n)


def test_weyl_phases_match_matrix_sampler():
    # Two-sample KS on pooled eigenphases, tridiagonal model vs matrices.
    from scipy.stats import ks_2samp

    gen = rng(31)
    for tag in ("SO_even", "USp"):
        w = hs.weyl_phases(tag, 4, 1200, gen).ravel()
        kind = hs.EnsembleKind(tag, 4)
        m = np.concatenate(
            [hs.sample_eigenphases(kind, gen).thetas for _ in range(1200)]
        )
        assert ks_2samp(w, m).pvalue > 1e-3, tag


def test_mc_moment_weyl_sampler_agrees():
    kind = hs.EnsembleKind("USp", 3)
    r = pred.MomentRequest((sf.fejer(0.9),))
    mat = hs.mc_moment(kind, r, 20000, seed=8)
    wey = hs.mc_moment(kind, r, 20000, seed=8, sampler="weyl")
    gap = np.hypot(mat.stderr, wey.stderr)
    assert mat.mean == pytest.approx(wey.mean, abs=4.0 * gap)


def test_validate_sampler_diagnostics():
    diag = hs.validate_sampler(hs.EnsembleKind("SO_even", 1), 4000, seed=17)
    assert diag["failures"] == 0
    assert diag["max_unitarity_residual"] < 1e-10
    assert diag["max_determinant_residual"] < 1e-10
    assert diag["marginal_test"]["name"] == "ks_uniform"
    assert diag["marginal_test"]["pvalue"] > 1e-3
    diag_usp = hs.validate_sampler(hs.EnsembleKind("USp", 1), 4000, seed=18)
    assert diag_usp["marginal_test"]["name"] == "chisq_sin2"
    assert diag_usp["marginal_test"]["pvalue"] > 1e-3
    # No marginal law is pinned beyond rank 1.
    assert hs.validate_sampler(hs.EnsembleKind("USp", 2), 500, 19)["marginal_test"] is None
    weyl = hs.validate_sampler(hs.EnsembleKind("O_minus", 1), 4000, 20, sampler="weyl")
    assert weyl["failures"] == 0
    assert weyl["marginal_test"]["pvalue"] > 1e-3
