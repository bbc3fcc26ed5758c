"""Frisch-Newton interior-point solver for check-function (quantile) regression"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import linalg, optimize

from src.models import QSpecError


logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITER = 200
STEP_DAMPING = 0.99995
TINY = 1e-300


class DegenerateDesign(QSpecError, ValueError):
    """Raised when the regression design cannot identify the coefficients"""
    pass


class SolverNotConverged(QSpecError, RuntimeError):
    """Raised when the duality gap stays above tolerance"""

    def __init__(self, message: str, gap: float):
        super().__init__(message)
        self.gap = gap


@dataclass
class RQResult:
    """Solution of one check-function minimization"""
    coefficients: np.ndarray
    objective: float
    gap: float
    iterations: int


def check_loss(residuals: np.ndarray, tau: float) -> float:
    """sum rho_tau(r) with rho_tau(x) = x (tau - I{x <= 0})"""
    residuals = np.asarray(residuals, dtype=np.float64)
    return float(np.sum(residuals * (tau - (residuals <= 0))))


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return 1e20
    return float(np.min(-v[neg] / dv[neg]))


def _basic_solution(X: np.ndarray, y: np.ndarray, beta: np.ndarray):
    """Interpolate the p observations closest to the current fit"""
    p = X.shape[1]
    order = np.argsort(np.abs(y - X @ beta), kind="stable")
    basis = order[:p]
    sub = X[basis]
    if np.linalg.matrix_rank(sub) < p:
        return None
    return np.linalg.solve(sub, y[basis])


def _newton_direction(Q: np.ndarray, rhs: np.ndarray) -> Optional[np.ndarray]:
    """Solve the normal equations; None once Q is numerically singular"""
    try:
        dy = linalg.solve(Q, rhs, assume_a="pos", check_finite=False)
    except (linalg.LinAlgError, ValueError):
        return None
    if not np.all(np.isfinite(dy)):
        return None
    return dy


def _interior_collapsed(*arrays: np.ndarray) -> bool:
    return any(float(np.min(v)) <= TINY or not np.all(np.isfinite(v)) for v in arrays)


def _highs_fit(X: np.ndarray, y: np.ndarray, tau: float) -> Optional[Tuple[np.ndarray, float]]:
    """
    Simplex solution of  min tau 1'u + (1-tau) 1'v  s.t.  X beta + u - v = y.

    Returns (beta, gap), or None unless HiGHS reports an optimal basis.
    """
    n, p = X.shape
    cost = np.concatenate([np.zeros(p), np.full(n, tau), np.full(n, 1 - tau)])
    A_eq = np.hstack([X, np.eye(n), -np.eye(n)])
    bounds = [(None, None)] * p + [(0, None)] * (2 * n)
    res = optimize.linprog(cost, A_eq=A_eq, b_eq=y, bounds=bounds, method="highs")
    if res.status != 0:
        return None
    beta = res.x[:p]
    gap = abs(check_loss(y - X @ beta, tau) - float(y @ res.eqlin.marginals))
    return beta, gap


def sample_quantile(y: np.ndarray, tau: float) -> float:
    """Order statistic y_(ceil(n tau)): a minimizer of sum rho_tau(y - a)"""
    y = np.sort(np.asarray(y, dtype=np.float64))
    k = int(np.ceil(y.shape[0] * tau - 1e-12))
    return float(y[min(max(k, 1), y.shape[0]) - 1])


def rq_fit(
    X: np.ndarray,
    y: np.ndarray,
    tau: float,
    tol: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
) -> RQResult:
    """
    Minimize sum rho_tau(y - X beta) over beta.

    Works on the bounded dual LP  max y'a  s.t.  X'a = (1-tau) X'1, 0 <= a <= 1
    with a Mehrotra predictor-corrector; beta is read off the dual multipliers.
    The final iterate is polished to the nearest basic (interpolating) solution
    when that does not increase the objective. Stops once
    objective - y'(a - (1-tau)) <= tol * (1 + |objective|).

    If the iterates collapse onto the boundary (singular normal equations or
    underflow) before that, the primal LP is handed to HiGHS. Exhausting
    max_iter raises SolverNotConverged.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if n < p or np.linalg.matrix_rank(X) < p:
        raise DegenerateDesign(f"Design with n={n} rows cannot identify {p} coefficients")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0,1), got {tau}")

    A = X.T
    c = -y
    b = (1 - tau) * X.sum(axis=0)

    x = np.full(n, 1 - tau)
    s = 1 - x
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    dual = -beta

    def exact_gap(beta_hat: np.ndarray) -> float:
        return check_loss(y - X @ beta_hat, tau) - float(y @ (x - (1 - tau)))

    objective = check_loss(y - X @ beta, tau)
    if exact_gap(beta) <= tol * (1 + abs(objective)):
        return RQResult(beta, objective, exact_gap(beta), 0)

    r = c - A.T @ dual
    delta = 1e-2 * (1.0 + np.mean(np.abs(r)))
    z = np.maximum(r, 0.0) + delta
    w = np.maximum(-r, 0.0) + delta
    gap = float(c @ x - b @ dual + w.sum())

    iterations = 0
    stalled = False
    while iterations < max_iter:
        objective = check_loss(y + X @ dual, tau)
        if gap <= tol * (1 + abs(objective)):
            break
        iterations += 1

        # Affine-scaling predictor
        q = 1.0 / (z / x + w / s)
        r = z - w
        AQ = A * q
        Q = AQ @ A.T
        rhs = AQ @ r
        dy = _newton_direction(Q, rhs)
        if dy is None:
            stalled = True
            break
        dx = q * (A.T @ dy - r)
        ds = -dx
        dz = -z * (dx / x + 1)
        dw = -w * (ds / s + 1)

        fp = min(STEP_DAMPING * min(_max_step(x, dx), _max_step(s, ds)), 1.0)
        fd = min(STEP_DAMPING * min(_max_step(w, dw), _max_step(z, dz)), 1.0)

        if min(fp, fd) < 1.0:
            # Mehrotra corrector
            mu = float(z @ x + w @ s)
            g = float((z + fd * dz) @ (x + fp * dx) + (w + fd * dw) @ (s + fp * ds))
            mu = mu * (g / mu) ** 3 / (2 * n)

            dxdz = dx * dz / x
            dsdw = ds * dw / s
            xi = mu * (1.0 / x - 1.0 / s)
            rhs = rhs + AQ @ (dxdz - dsdw - xi)
            dy = _newton_direction(Q, rhs)
            if dy is None:
                stalled = True
                break
            dx = q * (A.T @ dy + xi - r - dxdz + dsdw)
            ds = -dx
            dz = mu / x - z - (z / x) * dx - dxdz
            dw = mu / s - w - (w / s) * ds - dsdw

            fp = min(STEP_DAMPING * min(_max_step(x, dx), _max_step(s, ds)), 1.0)
            fd = min(STEP_DAMPING * min(_max_step(w, dw), _max_step(z, dz)), 1.0)

        x = x + fp * dx
        s = s + fp * ds
        dual = dual + fd * dy
        w = w + fd * dw
        z = z + fd * dz
        gap = float(c @ x - b @ dual + w.sum())
        if _interior_collapsed(x, s, z, w):
            stalled = True
            break

    beta = -dual
    objective = check_loss(y - X @ beta, tau) if np.all(np.isfinite(beta)) else np.inf

    polished = _basic_solution(X, y, beta) if np.isfinite(objective) else None
    if polished is not None:
        polished_objective = check_loss(y - X @ polished, tau)
        if polished_objective <= objective + 1e-12 * (1 + abs(objective)):
            beta, objective = polished, polished_objective

    limit = tol * (1 + abs(objective)) if np.isfinite(objective) else -1.0
    final_gap = exact_gap(beta) if np.isfinite(objective) else np.inf
    if final_gap > limit and not stalled:
        # A slightly infeasible dual point can overstate the gap; trust the LP gap too
        final_gap = min(final_gap, gap)
    if stalled and not final_gap <= limit:
        logger.debug("rq_fit: interior point stalled after %d iterations, switching to HiGHS", iterations)
        fallback = _highs_fit(X, y, tau)
        if fallback is not None:
            beta, final_gap = fallback
            objective = check_loss(y - X @ beta, tau)
            return RQResult(beta, objective, final_gap, iterations)
    if not final_gap <= limit:
        raise SolverNotConverged(
            f"Duality gap {final_gap:.3e} above tolerance after {iterations} iterations",
            gap=final_gap
        )
    logger.debug("rq_fit converged in %d iterations (gap %.3e)", iterations, final_gap)
    return RQResult(beta, objective, final_gap, iterations)
