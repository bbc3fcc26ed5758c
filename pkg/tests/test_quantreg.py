import numpy as np
import pytest

import src.quantreg as quantreg
from src.freqrep import harmonic_design, qreg_fit, regression_responses
from src.models import TimeSeries
from src.quantreg import (
    DegenerateDesign,
    SolverNotConverged,
    check_loss,
    rq_fit,
    sample_quantile,
)
from tests.oracles import enumerate_basic_solutions


def test_check_loss():
    residuals = np.array([2.0, -1.0, 0.0])
    assert check_loss(residuals, 0.25) == pytest.approx(2 * 0.25 + 1 * 0.75)


def test_intercept_only_is_sample_quantile():
    y = np.array([5.0, 1.0, 4.0, 2.0, 3.0])
    fit = rq_fit(np.ones((5, 1)), y, 0.5)
    assert fit.coefficients[0] == pytest.approx(3.0, abs=1e-8)


@pytest.mark.parametrize("tau", [0.1, 0.25, 0.5, 0.75, 0.9])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_objective_matches_enumeration(tau, seed):
    rng = np.random.default_rng(seed)
    n = 12
    t = np.arange(n)
    X = np.column_stack([np.ones(n), 2 * np.cos(2 * np.pi * t / n), -2 * np.sin(2 * np.pi * t / n)])
    y = rng.standard_normal(n)
    best, _ = enumerate_basic_solutions(X, y, tau)
    fit = rq_fit(X, y, tau)
    assert fit.objective == pytest.approx(best, rel=1e-8, abs=1e-9)
    assert check_loss(y - X @ fit.coefficients, tau) == pytest.approx(fit.objective)


def test_random_instances_match_enumeration():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        n = int(rng.integers(4, 13))
        p = int(rng.integers(1, 4))
        X = np.column_stack([np.ones(n), rng.standard_normal((n, p - 1))])
        y = rng.standard_normal(n)
        tau = float(rng.uniform(0.05, 0.95))
        best, _ = enumerate_basic_solutions(X, y, tau)
        assert rq_fit(X, y, tau).objective == pytest.approx(best, rel=1e-8, abs=1e-9)


def test_objective_matches_enumeration_with_ties():
    y = np.array([1.0, 2.0, 2.0, 3.0, 1.0, 2.0, 3.0, 3.0])
    n = len(y)
    t = np.arange(n)
    X = np.column_stack([np.ones(n), np.cos(np.pi * t)])
    best, _ = enumerate_basic_solutions(X, y, 0.5)
    assert rq_fit(X, y, 0.5).objective == pytest.approx(best, abs=1e-9)


def test_exact_fit_stops_immediately():
    X = np.column_stack([np.ones(6), np.arange(6.0)])
    y = 1.0 + 2.0 * np.arange(6.0)
    fit = rq_fit(X, y, 0.3)
    np.testing.assert_allclose(fit.coefficients, [1.0, 2.0], atol=1e-10)
    assert fit.iterations == 0


def test_degenerate_design():
    with pytest.raises(DegenerateDesign):
        rq_fit(np.ones((2, 3)), np.zeros(2), 0.5)
    with pytest.raises(DegenerateDesign):
        rq_fit(np.column_stack([np.ones(4), np.ones(4)]), np.arange(4.0), 0.5)


def test_tau_outside_unit_interval():
    with pytest.raises(ValueError):
        rq_fit(np.ones((3, 1)), np.arange(3.0), 1.0)


def test_not_converged_carries_gap():
    rng = np.random.default_rng(3)
    X = np.column_stack([np.ones(40), rng.standard_normal(40)])
    y = rng.standard_normal(40)
    with pytest.raises(SolverNotConverged) as info:
        rq_fit(X, y, 0.5, tol=1e-30, max_iter=1)
    assert info.value.gap > 0


# ============================================================
# Harmonic designs and numerical breakdown
# ============================================================

def _harmonic_coefficients(a: float, b: complex, columns: int) -> np.ndarray:
    if columns == 2:
        return np.array([a, b.real])
    return np.array([a, b.real, b.imag])


def test_harmonic_fits_match_enumeration():
    rng = np.random.default_rng(2581)
    for _ in range(200):
        n = int(rng.integers(4, 13))
        tau = float(rng.choice([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]))
        s = int(rng.integers(1, n))
        Y = TimeSeries(rng.standard_normal(n))
        a, b = qreg_fit(Y, tau, 2 * np.pi * s / n)

        X = harmonic_design(n, s)
        y = regression_responses(Y, True)
        best, _ = enumerate_basic_solutions(X, y, tau)
        objective = check_loss(y - X @ _harmonic_coefficients(a, b, X.shape[1]), tau)
        assert objective == pytest.approx(best, rel=1e-8, abs=1e-9)


def test_singular_normal_equations_fall_back_to_simplex(monkeypatch):
    monkeypatch.setattr(quantreg, "_newton_direction", lambda Q, rhs: None)
    rng = np.random.default_rng(6)
    n = 8
    X = harmonic_design(n, 3)
    y = rng.standard_normal(n)
    best, _ = enumerate_basic_solutions(X, y, 0.2)
    fit = rq_fit(X, y, 0.2)
    assert fit.objective == pytest.approx(best, rel=1e-8, abs=1e-9)
    assert fit.gap < 1e-8


def test_singular_system_is_reported_as_breakdown():
    Q = np.array([[1.0, 1.0], [1.0, 1.0]])
    assert quantreg._newton_direction(Q, np.array([1.0, 2.0])) is None
    assert quantreg._interior_collapsed(np.array([0.5, 0.0]), np.ones(2))
    assert not quantreg._interior_collapsed(np.array([0.5, 1e-12]))


@pytest.mark.parametrize("tau", [0.1, 0.25, 0.5, 0.8])
def test_sample_quantile_minimizes_intercept_loss(tau):
    y = np.random.default_rng(4).standard_normal(11)
    best, _ = enumerate_basic_solutions(np.ones((11, 1)), y, tau)
    assert check_loss(y - sample_quantile(y, tau), tau) == pytest.approx(best, abs=1e-12)
