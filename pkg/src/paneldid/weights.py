"""Simplex-constrained weight programs and alternative weighting schemes.

The two main programs pick unit weights that make the weighted control trend
track the treated-arm trend, and time weights that make weighted pre-period
control outcomes predict post-period control outcomes.  Both are convex
quadratics over a probability simplex with an unregularized free intercept;
they are solved by accelerated projected gradient with exact simplex
projection.  Entropy balancing and an elastic-net synthetic control with a
free intercept round out the alternatives.

All solvers are pure functions of their inputs: identical inputs produce
bit-identical solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.optimize import linprog

from .errors import ConvergenceError, DesignError, InfeasibleBalance
from .panel import PanelDataset, TreatmentDesign, arm_indices

# Ridge added to the time-weight program for numerical uniqueness, as a
# fraction of the variance of control pre-treatment outcomes.  The program
# as written has no penalty, so flat stretches of panel would otherwise make
# the optimum non-unique; the ridge breaks ties toward uniform weights.
TIME_RIDGE_SCALE = 1e-6

_SUM_TOL = 1e-10


@dataclass(frozen=True)
class SolverOptions:
    """Iteration budget and stopping rule for the projected-gradient solvers.

    Convergence is declared when the objective decrease in one iteration
    falls below ``tol * max(1, previous objective)``.
    """

    max_iter: int = 10_000
    tol: float = 1e-10


@dataclass(frozen=True)
class SimplexWeights:
    """Nonnegative weights summing to one."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0:
            raise DesignError("simplex weights must be a nonempty vector")
        if v.min() < -_SUM_TOL or v.max() > 1.0 + _SUM_TOL:
            raise DesignError("simplex weight entries must lie in [0, 1]")
        if abs(v.sum() - 1.0) > _SUM_TOL:
            raise DesignError(f"simplex weights sum to {v.sum()!r}, not 1")
        v = np.clip(v, 0.0, 1.0)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class UnitWeightSolution:
    """Solution of the unit-weight program.

    ``objective`` is the full criterion (squared trend mismatch plus the
    ridge term) evaluated at (omega0, omega).
    """

    omega0: float
    omega: SimplexWeights
    objective: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class TimeWeightSolution:
    """Solution of the time-weight program.

    ``objective`` is the squared prediction error alone; ``ridge`` is the
    coefficient of the ``||lambda||^2`` term the solver added for
    uniqueness (disclosed so callers can reconstruct the penalized value).
    """

    lambda0: float
    lam: SimplexWeights
    objective: float
    iterations: int
    converged: bool
    ridge: float


@dataclass(frozen=True)
class ZetaParams:
    """Regularization strength for the unit-weight program.

    ``sigma_hat`` is the standard deviation of one-period outcome changes
    among control units before treatment; ``zeta`` scales it by
    ``(n_treated * t_post) ** 0.25``.
    """

    sigma_hat: float
    zeta: float


@dataclass(frozen=True)
class RegularizedSCSolution:
    """Elastic-net synthetic-control fit: free intercept, unconstrained signs."""

    mu: float
    weights: np.ndarray
    l1: float
    l2: float
    objective: float
    iterations: int
    converged: bool
    cv_error: float | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Exact Euclidean projection onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, v.size + 1)
    cond = u - (css - 1.0) / idx > 0
    rho = idx[cond][-1]
    theta = (css[rho - 1] - 1.0) / rho
    return np.maximum(v - theta, 0.0)


def _fista_simplex(M, r, ridge, options):
    """Minimize ``||M w - r||^2 + ridge * ||w||^2`` over the simplex.

    Accelerated projected gradient from the uniform start, with a monotone
    safeguard: any momentum step that would increase the objective is
    replaced by a plain projected-gradient step (which cannot).  Returns
    (w, objective, iterations, converged).
    """
    n_dim = M.shape[1]
    w0 = np.full(n_dim, 1.0 / n_dim)

    def fval(w):
        res = M @ w - r
        return float(res @ res + ridge * (w @ w))

    def grad(w):
        return 2.0 * (M.T @ (M @ w - r) + ridge * w)

    if n_dim == 1:
        return np.ones(1), fval(np.ones(1)), 0, True

    sv = np.linalg.svd(M, compute_uv=False)
    lip = 2.0 * ((sv[0] ** 2 if sv.size else 0.0) + ridge)
    if lip <= 0.0:
        # objective is constant on the simplex
        return w0, fval(w0), 0, True
    step = 1.0 / lip

    x = w0
    fx = fval(x)
    y = x
    t_mom = 1.0
    for it in range(1, options.max_iter + 1):
        z = project_simplex(y - step * grad(y))
        fz = fval(z)
        if fz > fx:
            z = project_simplex(x - step * grad(x))
            fz = fval(z)
            t_mom = 1.0
            y = z
        else:
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
            y = z + ((t_mom - 1.0) / t_next) * (z - x)
            t_mom = t_next
        decrease = fx - fz
        x, fx = z, fz
        if decrease <= options.tol * max(1.0, abs(fx)):
            return x, fx, it, True
    return x, fx, options.max_iter, False


def _pre_post_blocks(panel: PanelDataset, design: TreatmentDesign):
    tr_idx, co_idx = arm_indices(panel, design)
    t_pre = design.t_pre
    y_co = panel.outcome[co_idx]
    y_tr = panel.outcome[tr_idx]
    return y_co[:, :t_pre], y_co[:, t_pre:], y_tr[:, :t_pre], y_tr[:, t_pre:]


def zeta_from_arrays(y_co_pre: np.ndarray, n_treated: int, t_post: int) -> ZetaParams:
    """Regularization strength from raw blocks; see :func:`compute_zeta`."""
    diffs = np.diff(np.asarray(y_co_pre, dtype=float), axis=1)
    sigma = float(diffs.std())  # population sd about the mean of all differences
    return ZetaParams(sigma_hat=sigma, zeta=(n_treated * t_post) ** 0.25 * sigma)


def compute_zeta(panel: PanelDataset, design: TreatmentDesign) -> ZetaParams:
    """Ridge strength for the unit-weight program.

    ``zeta = (n_treated * t_post)^(1/4) * sigma_hat`` where ``sigma_hat`` is
    the standard deviation of consecutive pre-period outcome changes across
    control units.
    """
    y_co_pre, _, _, _ = _pre_post_blocks(panel, design)
    return zeta_from_arrays(y_co_pre, design.n_treated, design.t_post)


def solve_unit_weights_arrays(
    y_co_pre: np.ndarray,
    y_tr_pre_mean: np.ndarray,
    zeta: float,
    options: SolverOptions | None = None,
    intercept: bool = True,
) -> UnitWeightSolution:
    """Array-level unit-weight solve; rows of ``y_co_pre`` are control units."""
    options = options or SolverOptions()
    if zeta < 0:
        raise DesignError("zeta must be nonnegative")
    a_mat = np.ascontiguousarray(np.asarray(y_co_pre, dtype=float).T)  # (t_pre, n_co)
    b = np.asarray(y_tr_pre_mean, dtype=float)
    t_pre = a_mat.shape[0]
    ridge = zeta * zeta * t_pre
    if intercept:
        col_means = a_mat.mean(axis=0)
        m_c, r_c = a_mat - col_means, b - b.mean()
    else:
        m_c, r_c = a_mat, b
    w, f_pen, iters, conv = _fista_simplex(m_c, r_c, ridge, options)
    omega0 = float(b.mean() - col_means @ w) if intercept else 0.0
    solution = UnitWeightSolution(
        omega0=omega0,
        omega=SimplexWeights(w),
        objective=f_pen,
        iterations=iters,
        converged=conv,
    )
    if not conv:
        raise ConvergenceError(
            f"unit-weight solver did not converge in {options.max_iter} iterations "
            f"(objective {f_pen!r})",
            solution=solution,
        )
    return solution


def solve_unit_weights(
    panel: PanelDataset,
    design: TreatmentDesign,
    zeta: float,
    options: SolverOptions | None = None,
) -> UnitWeightSolution:
    """Unit weights matching the treated pre-treatment trend.

    Minimizes, over an intercept ``omega0`` and simplex weights ``omega``,
    the squared gap between the weighted control series plus intercept and
    the treated-arm mean across pre-periods, plus
    ``zeta^2 * t_pre * ||omega||^2``.  The intercept is free, so only the
    trend (not the level) is matched.  Weights are ordered like
    ``design.control_units``.
    """
    y_co_pre, _, y_tr_pre, _ = _pre_post_blocks(panel, design)
    return solve_unit_weights_arrays(
        y_co_pre, y_tr_pre.mean(axis=0), zeta, options, intercept=True
    )


def solve_unit_weights_no_intercept(
    panel: PanelDataset,
    design: TreatmentDesign,
    zeta: float,
    options: SolverOptions | None = None,
) -> UnitWeightSolution:
    """Unit weights matching the treated pre-treatment *levels* (omega0 fixed at 0)."""
    y_co_pre, _, y_tr_pre, _ = _pre_post_blocks(panel, design)
    return solve_unit_weights_arrays(
        y_co_pre, y_tr_pre.mean(axis=0), zeta, options, intercept=False
    )


def solve_time_weights_arrays(
    y_co_pre: np.ndarray,
    y_co_post_mean: np.ndarray,
    options: SolverOptions | None = None,
) -> TimeWeightSolution:
    """Array-level time-weight solve; rows of ``y_co_pre`` are control units."""
    options = options or SolverOptions()
    m_mat = np.ascontiguousarray(np.asarray(y_co_pre, dtype=float))  # (n_co, t_pre)
    r = np.asarray(y_co_post_mean, dtype=float)
    n_co = m_mat.shape[0]
    ridge = TIME_RIDGE_SCALE * float(m_mat.var()) * n_co
    row_means = m_mat.mean(axis=0)
    m_c, r_c = m_mat - row_means, r - r.mean()
    lam, f_pen, iters, conv = _fista_simplex(m_c, r_c, ridge, options)
    lambda0 = float(r.mean() - row_means @ lam)
    ssr = f_pen - ridge * float(lam @ lam)
    solution = TimeWeightSolution(
        lambda0=lambda0,
        lam=SimplexWeights(lam),
        objective=max(ssr, 0.0),
        iterations=iters,
        converged=conv,
        ridge=ridge,
    )
    if not conv:
        raise ConvergenceError(
            f"time-weight solver did not converge in {options.max_iter} iterations "
            f"(objective {f_pen!r})",
            solution=solution,
        )
    return solution


def solve_time_weights(
    panel: PanelDataset,
    design: TreatmentDesign,
    options: SolverOptions | None = None,
) -> TimeWeightSolution:
    """Time weights making weighted pre-period control outcomes predict post means.

    Minimizes, over an intercept ``lambda0`` and simplex weights over
    pre-periods, the squared gap between each control unit's weighted
    pre-period outcomes plus intercept and its post-period mean.  A tiny
    ridge (``TIME_RIDGE_SCALE`` times the variance of control pre outcomes,
    reported on the solution) keeps the optimum unique on flat panels and
    breaks ties toward uniform weights.
    """
    y_co_pre, y_co_post, _, _ = _pre_post_blocks(panel, design)
    return solve_time_weights_arrays(y_co_pre, y_co_post.mean(axis=1), options)


def entropy_balance_arrays(
    y_co_pre: np.ndarray,
    target: np.ndarray,
    max_iter: int = 200,
    tol: float = 1e-10,
) -> SimplexWeights:
    """Array-level entropy balancing; rows of ``y_co_pre`` are control units."""
    x_mat = np.asarray(y_co_pre, dtype=float)
    target = np.asarray(target, dtype=float)
    n_co, n_mom = x_mat.shape
    scale = max(1.0, float(np.abs(target).max()))

    lo, hi = x_mat.min(axis=0), x_mat.max(axis=0)
    if np.any(target < lo - 1e-9 * scale) or np.any(target > hi + 1e-9 * scale):
        raise InfeasibleBalance(
            "target means lie outside the per-period range of control outcomes"
        )
    res = linprog(
        c=np.zeros(n_co),
        A_eq=np.vstack([x_mat.T, np.ones((1, n_co))]),
        b_eq=np.concatenate([target, [1.0]]),
        bounds=(0.0, None),
        method="highs",
    )
    if res.status == 2:
        raise InfeasibleBalance("moment conditions have no nonnegative solution")

    # Dual problem: minimize log(sum_i exp(z_i' beta)) over beta, where
    # z_i = y_i - target; the optimum satisfies the moment conditions with
    # w = softmax(Z beta), the minimum-KL-from-uniform feasible weights.
    z_mat = x_mat - target
    col_scale = np.maximum(z_mat.std(axis=0), 1e-12)
    z_mat = z_mat / col_scale
    beta = np.zeros(n_mom)

    def dual(b):
        s = z_mat @ b
        m = s.max()
        return m + math.log(np.exp(s - m).sum())

    g_val = dual(beta)
    for it in range(max_iter):
        s = z_mat @ beta
        s = s - s.max()
        w = np.exp(s)
        w /= w.sum()
        grad = z_mat.T @ w
        if np.abs(grad).max() <= tol:
            balanced = x_mat.T @ w
            if np.abs(balanced - target).max() > 1e-8 * scale:
                raise ConvergenceError(
                    "entropy-balancing moments drifted from target at the optimum"
                )
            return SimplexWeights(w)
        hess = z_mat.T @ (w[:, None] * z_mat) - np.outer(grad, grad)
        jitter = 1e-13 * max(1.0, float(np.trace(hess)))
        try:
            direction = np.linalg.solve(hess + jitter * np.eye(n_mom), -grad)
        except np.linalg.LinAlgError:
            direction = np.linalg.lstsq(hess, -grad, rcond=None)[0]
        # Armijo backtracking on the dual
        slope = grad @ direction
        if slope >= 0:
            direction = -grad
            slope = -(grad @ grad)
        step_len = 1.0
        for _ in range(60):
            cand = beta + step_len * direction
            if dual(cand) <= g_val + 1e-4 * step_len * slope:
                break
            step_len *= 0.5
        else:
            raise ConvergenceError("entropy-balancing line search stalled")
        beta = beta + step_len * direction
        g_val = dual(beta)
        if np.abs(beta).max() > 1e10:
            raise ConvergenceError(
                "entropy-balancing dual diverged (target on the hull boundary?)"
            )
    raise ConvergenceError(f"entropy balancing did not converge in {max_iter} iterations")


def entropy_balance(panel: PanelDataset, design: TreatmentDesign) -> SimplexWeights:
    """Control weights exactly matching treated pre-period means, closest to uniform.

    For every pre-period the weighted control mean equals the treated mean
    (within 1e-8); among all such weights the returned ones minimize KL
    divergence from uniform.  Raises InfeasibleBalance when no nonnegative
    weights can match the means.
    """
    y_co_pre, _, y_tr_pre, _ = _pre_post_blocks(panel, design)
    return entropy_balance_arrays(y_co_pre, y_tr_pre.mean(axis=0))


def _soft_threshold(z: float, gamma: float) -> float:
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def _prox_elastic_net(a_c, b_c, l1, l2, w0=None, max_iter=200_000, tol=1e-15):
    """Accelerated proximal gradient on the centered elastic-net objective.

    Does the heavy lifting on ill-conditioned instances (tiny ``l2`` with
    many columns) where cyclic coordinate descent needs tens of thousands of
    sweeps; the CD pass afterwards only polishes.  Same monotone-restart
    scheme as the simplex solver.
    """
    n_cols = a_c.shape[1]
    sv = np.linalg.svd(a_c, compute_uv=False)
    lip = 2.0 * ((sv[0] ** 2 if sv.size else 0.0) + l2)
    if lip <= 0.0:
        return np.zeros(n_cols), 0
    step = 1.0 / lip

    def fval(w):
        r = b_c - a_c @ w
        return float(r @ r + l1 * np.abs(w).sum() + l2 * (w @ w))

    def grad_smooth(w):
        return 2.0 * (a_c.T @ (a_c @ w - b_c) + l2 * w)

    def shrink(x):
        return np.sign(x) * np.maximum(np.abs(x) - step * l1, 0.0)

    x = np.zeros(n_cols) if w0 is None else np.array(w0, dtype=float, copy=True)
    fx = fval(x)
    y = x
    t_mom = 1.0
    for it in range(1, max_iter + 1):
        z = shrink(y - step * grad_smooth(y))
        fz = fval(z)
        if fz > fx:
            z = shrink(x - step * grad_smooth(x))
            fz = fval(z)
            t_mom = 1.0
            y = z
        else:
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
            y = z + ((t_mom - 1.0) / t_next) * (z - x)
            t_mom = t_next
        decrease = fx - fz
        x, fx = z, fz
        if decrease <= tol * max(1.0, abs(fx)):
            return x, it
    return x, max_iter


def _coordinate_descent(a_c, b_c, l1, l2, w0=None, max_sweeps=100_000, tol=1e-14):
    """Cyclic coordinate descent on the centered elastic-net objective.

    Each coordinate update is an exact scalar minimization, so the objective
    is non-increasing; a sweep whose objective decrease falls below
    ``tol * max(1, f)`` (or that moves no coordinate) terminates.  Supports
    warm starts for penalty-path traversal.
    """
    n_cols = a_c.shape[1]
    w = np.zeros(n_cols) if w0 is None else np.array(w0, dtype=float, copy=True)
    resid = b_c - a_c @ w if w0 is not None else b_c.copy()
    colsq = np.einsum("ij,ij->j", a_c, a_c)

    def objective():
        return float(resid @ resid + l1 * np.abs(w).sum() + l2 * (w @ w))

    f_prev = objective()
    for sweep in range(1, max_sweeps + 1):
        moved = False
        for j in range(n_cols):
            denom = colsq[j] + l2
            if denom <= 0.0:
                continue
            old = w[j]
            rho = a_c[:, j] @ resid + colsq[j] * old
            new = _soft_threshold(rho, 0.5 * l1) / denom
            if new != old:
                resid += a_c[:, j] * (old - new)
                w[j] = new
                moved = True
        f_new = objective()
        if not moved or f_prev - f_new <= tol * max(1.0, abs(f_prev)):
            return w, sweep, True
        f_prev = f_new
    return w, max_sweeps, False


def solve_regularized_sc_arrays(
    y_co_pre: np.ndarray,
    y_tr_pre_mean: np.ndarray,
    l1: float,
    l2: float,
) -> RegularizedSCSolution:
    """Array-level elastic-net synthetic control for fixed penalties."""
    if l1 < 0 or l2 < 0:
        raise DesignError("penalties must be nonnegative")
    a_mat = np.asarray(y_co_pre, dtype=float).T  # (t_pre, n_co)
    b = np.asarray(y_tr_pre_mean, dtype=float)
    col_means = a_mat.mean(axis=0)
    a_c = a_mat - col_means
    b_c = b - b.mean()
    if l1 == 0.0:
        if l2 == 0.0:
            w, *_ = np.linalg.lstsq(a_c, b_c, rcond=None)
            iters, conv = 0, True
        else:
            gram = a_c.T @ a_c + l2 * np.eye(a_c.shape[1])
            w = np.linalg.solve(gram, a_c.T @ b_c)
            iters, conv = 0, True
    else:
        w0, pre_iters = _prox_elastic_net(a_c, b_c, l1, l2)
        w, iters, conv = _coordinate_descent(a_c, b_c, l1, l2, w0=w0)
        iters += pre_iters
    resid = b_c - a_c @ w
    objective = float(resid @ resid + l1 * np.abs(w).sum() + l2 * (w @ w))
    solution = RegularizedSCSolution(
        mu=float(b.mean() - col_means @ w),
        weights=w,
        l1=l1,
        l2=l2,
        objective=objective,
        iterations=iters,
        converged=conv,
    )
    if not conv:
        raise ConvergenceError(
            "regularized-synthetic-control coordinate descent stalled", solution=solution
        )
    return solution


def _cv_grid(scale: float) -> np.ndarray:
    return np.geomspace(1e-4 * scale, 1e2 * scale, 20)


def solve_regularized_sc_cv_arrays(
    y_co_pre: np.ndarray, y_tr_pre_mean: np.ndarray
) -> RegularizedSCSolution:
    """Elastic-net synthetic control with penalties from leave-one-period-out CV.

    Both penalties range over a fixed 20-point logarithmic grid spanning
    ``1e-4`` to ``1e2`` times the variance of control pre outcomes.  Fits
    along the grid are warm-started from the neighbouring penalty (sparse to
    dense), and among equal CV errors the smallest (l1, l2) pair wins, so
    the selection is deterministic.
    """
    y_co_pre = np.asarray(y_co_pre, dtype=float)
    b = np.asarray(y_tr_pre_mean, dtype=float)
    t_pre = y_co_pre.shape[1]
    scale = float(y_co_pre.var())
    if scale <= 0.0:
        scale = 1.0
    grid = _cv_grid(scale)
    n_grid = len(grid)

    folds = []
    for hold in range(t_pre):
        keep = [t for t in range(t_pre) if t != hold]
        a_mat = y_co_pre[:, keep].T
        col_means = a_mat.mean(axis=0)
        folds.append(
            (a_mat - col_means, b[keep] - b[keep].mean(), col_means, b[keep].mean(), hold)
        )

    errors = np.empty((n_grid, n_grid))
    for i2, l2 in enumerate(grid):
        warm = {hold: None for hold in range(t_pre)}
        for i1 in range(n_grid - 1, -1, -1):  # large l1 first: warm starts stay cheap
            l1 = grid[i1]
            err = 0.0
            for a_c, b_c, col_means, b_mean, hold in folds:
                # scoring fits only rank penalties; the winner is refit tightly
                w, _ = _prox_elastic_net(a_c, b_c, l1, l2, w0=warm[hold], tol=1e-12)
                warm[hold] = w
                mu = b_mean - col_means @ w
                err += (mu + y_co_pre[:, hold] @ w - b[hold]) ** 2
            errors[i1, i2] = err

    best_flat = int(np.argmin(errors))  # row-major: l1 ascending, then l2
    i1, i2 = divmod(best_flat, n_grid)
    fit = solve_regularized_sc_arrays(y_co_pre, b, float(grid[i1]), float(grid[i2]))
    return RegularizedSCSolution(
        mu=fit.mu,
        weights=fit.weights,
        l1=float(grid[i1]),
        l2=float(grid[i2]),
        objective=fit.objective,
        iterations=fit.iterations,
        converged=fit.converged,
        cv_error=float(errors[i1, i2]),
    )


def solve_regularized_sc(
    panel: PanelDataset,
    design: TreatmentDesign,
    penalty: Mapping[str, float] | str = "cv",
) -> RegularizedSCSolution:
    """Synthetic control with a free intercept and elastic-net penalty.

    Minimizes the squared pre-period gap between ``mu + weighted controls``
    and the treated mean, plus ``l1 * ||w||_1 + l2 * ||w||^2``; weights are
    unconstrained in sign.  ``penalty`` is either a ``{"l1": ..., "l2": ...}``
    mapping or ``"cv"`` for leave-one-pre-period-out cross-validation.
    """
    y_co_pre, _, y_tr_pre, _ = _pre_post_blocks(panel, design)
    b = y_tr_pre.mean(axis=0)
    if penalty == "cv":
        return solve_regularized_sc_cv_arrays(y_co_pre, b)
    return solve_regularized_sc_arrays(y_co_pre, b, float(penalty["l1"]), float(penalty["l2"]))


def diagnostics_dict(
    unit_solution: UnitWeightSolution | None = None,
    time_solution: TimeWeightSolution | None = None,
    zeta: ZetaParams | None = None,
) -> dict:
    """JSON-ready diagnostic dump of weight solutions."""
    out: dict = {
        "intercept_domain": "real",  # intercepts are unrestricted in sign
        "time_ridge_scale": TIME_RIDGE_SCALE,
    }
    if zeta is not None:
        out["zeta"] = zeta.zeta
        out["sigma_hat"] = zeta.sigma_hat
    if unit_solution is not None:
        out["unit"] = {
            "omega0": unit_solution.omega0,
            "omega": unit_solution.omega.values.tolist(),
            "objective": unit_solution.objective,
            "iterations": unit_solution.iterations,
            "converged": unit_solution.converged,
        }
    if time_solution is not None:
        out["time"] = {
            "lambda0": time_solution.lambda0,
            "lambda": time_solution.lam.values.tolist(),
            "objective": time_solution.objective,
            "iterations": time_solution.iterations,
            "converged": time_solution.converged,
            "ridge": time_solution.ridge,
        }
    return out
