"""Weighted two-way fixed-effects estimation and the estimator-variant matrix.

The central operation is a difference-in-differences regression with unit
fixed effects, period fixed effects, and a product weighting scheme: treated
units and post periods carry uniform weight, control units and pre periods
carry weights from the weight module (or uniform).  For block adoption the
regression coefficient has a closed form, which is tracked alongside the
regression solve as a cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import weights as wt
from .errors import DegenerateWeights, DesignError
from .panel import PanelDataset, TreatmentDesign, arm_indices, group_trends

UNIT_SCHEMES = ("uniform", "sdid", "sdid_no_intercept", "entropy", "regularized_sc")
TIME_SCHEMES = ("uniform", "sdid")


@dataclass(frozen=True)
class EstimatorSpec:
    """Which unit and time weighting schemes to combine.

    ``(uniform, uniform)`` is the classical DiD regression;
    ``(sdid, sdid)`` uses both solved weight sets.  ``sdid_no_intercept``
    balances levels instead of trends and drops the unit fixed effects from
    the final regression; ``entropy`` and ``regularized_sc`` are the
    alternative weighting schemes and only combine with uniform time
    weights where time weighting has no effect on the estimate.
    """

    unit_scheme: str = "sdid"
    time_scheme: str = "sdid"

    def __post_init__(self):
        if self.unit_scheme not in UNIT_SCHEMES:
            raise DesignError(f"unknown unit scheme {self.unit_scheme!r}")
        if self.time_scheme not in TIME_SCHEMES:
            raise DesignError(f"unknown time scheme {self.time_scheme!r}")
        if self.unit_scheme == "regularized_sc" and self.time_scheme != "uniform":
            raise DesignError("regularized_sc combines only with uniform time weights")

    @classmethod
    def parse(cls, text: str) -> "EstimatorSpec":
        parts = [p.strip() for p in str(text).split(",")]
        if len(parts) != 2:
            raise DesignError(f"estimator spec must be 'unit,time', got {text!r}")
        return cls(unit_scheme=parts[0], time_scheme=parts[1])

    @property
    def label(self) -> str:
        return f"{self.unit_scheme},{self.time_scheme}"

    @property
    def uses_unit_weights(self) -> bool:
        return self.unit_scheme != "uniform"

    @property
    def uses_time_weights(self) -> bool:
        return self.time_scheme != "uniform"


@dataclass(frozen=True)
class EstimateResult:
    """Treatment-effect estimate with full weight provenance."""

    tau: float
    spec: EstimatorSpec
    n_treated: int
    n_control: int
    n_obs: int
    unit_solution: wt.UnitWeightSolution | None = None
    time_solution: wt.TimeWeightSolution | None = None
    rsc_solution: wt.RegularizedSCSolution | None = None
    unit_weights: np.ndarray | None = None
    time_weights: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)


def _check_weight_vectors(u, v, treated, t_pre):
    if np.any(u < 0) or np.any(v < 0):
        raise DesignError("regression weights must be nonnegative")
    masses = {
        "treated units": u[treated].sum(),
        "control units": u[~treated].sum(),
        "pre periods": v[:t_pre].sum(),
        "post periods": v[t_pre:].sum(),
    }
    for name, mass in masses.items():
        if mass <= 0.0:
            raise DegenerateWeights(f"zero total weight on {name}")


def _weighted_demean(mat, u, v, tol=1e-12, max_rounds=100):
    """Subtract weighted row and column means until both adjustments vanish."""
    out = np.array(mat, dtype=float, copy=True)
    u_sum, v_sum = u.sum(), v.sum()
    scale = max(1.0, float(np.abs(mat).max()))
    for _ in range(max_rounds):
        row_means = (out @ v) / v_sum
        out -= row_means[:, None]
        col_means = (u @ out) / u_sum
        out -= col_means[None, :]
        if max(np.abs(row_means).max(), np.abs(col_means).max()) <= tol * scale:
            break
    return out


def _treatment_matrix(n_units, n_periods, treated, t_pre):
    d_mat = np.zeros((n_units, n_periods))
    d_mat[np.ix_(treated, np.arange(t_pre, n_periods))] = 1.0
    return d_mat


def weighted_twfe_arrays(y, treated, t_pre, unit_weights, time_weights) -> float:
    """Array-level weighted two-way fixed-effects coefficient.

    ``treated`` is a boolean unit mask; weights are full per-unit and
    per-period vectors.
    """
    y = np.asarray(y, dtype=float)
    u = np.asarray(unit_weights, dtype=float)
    v = np.asarray(time_weights, dtype=float)
    treated = np.asarray(treated, dtype=bool)
    _check_weight_vectors(u, v, treated, t_pre)
    d_mat = _treatment_matrix(y.shape[0], y.shape[1], treated, t_pre)
    y_dm = _weighted_demean(y, u, v)
    d_dm = _weighted_demean(d_mat, u, v)
    num = float(np.einsum("i,it,it,t->", u, y_dm, d_dm, v))
    den = float(np.einsum("i,it,it,t->", u, d_dm, d_dm, v))
    if den <= 0.0:
        raise DegenerateWeights("treatment indicator has zero weighted variation")
    return num / den


def weighted_twfe(
    panel: PanelDataset,
    design: TreatmentDesign,
    unit_weights,
    time_weights,
) -> float:
    """Weighted DiD regression coefficient with unit and period fixed effects.

    ``unit_weights`` is ordered like ``panel.units`` and ``time_weights``
    like ``panel.periods``.  By convention treated units carry ``1/n_treated``
    and post periods ``1/t_post``; control and pre weights come from the
    weight module or are uniform.  The two-way solve uses weighted demeaning
    iterated to a fixed point; for block designs it agrees with
    :func:`closed_form_tau` to high precision.
    """
    from .panel import treated_mask

    return weighted_twfe_arrays(
        panel.outcome, treated_mask(panel, design), design.t_pre, unit_weights, time_weights
    )


def closed_form_tau_arrays(y, treated, t_pre, unit_weights, time_weights) -> float:
    """Double difference of weighted cell means (block-design closed form)."""
    y = np.asarray(y, dtype=float)
    u = np.asarray(unit_weights, dtype=float)
    v = np.asarray(time_weights, dtype=float)
    treated = np.asarray(treated, dtype=bool)
    _check_weight_vectors(u, v, treated, t_pre)

    def cell(rows, cols):
        uu, vv = u[rows], v[cols]
        return float(uu @ y[np.ix_(rows, cols)] @ vv) / float(uu.sum() * vv.sum())

    pre = np.arange(t_pre)
    post = np.arange(t_pre, y.shape[1])
    tr = np.flatnonzero(treated)
    co = np.flatnonzero(~treated)
    return cell(tr, post) - cell(tr, pre) - cell(co, post) + cell(co, pre)


def closed_form_tau(panel, design, unit_weights, time_weights) -> float:
    """Closed form for the block design; see :func:`weighted_twfe`."""
    from .panel import treated_mask

    return closed_form_tau_arrays(
        panel.outcome, treated_mask(panel, design), design.t_pre, unit_weights, time_weights
    )


def _weighted_time_fe_tau(y, treated, t_pre, u, v) -> float:
    """Weighted regression with period fixed effects only (no unit effects)."""
    _check_weight_vectors(u, v, treated, t_pre)
    d_mat = _treatment_matrix(y.shape[0], y.shape[1], treated, t_pre)
    u_sum = u.sum()
    y_dm = y - (u @ y)[None, :] / u_sum
    d_dm = d_mat - (u @ d_mat)[None, :] / u_sum
    num = float(np.einsum("i,it,it,t->", u, y_dm, d_dm, v))
    den = float(np.einsum("i,it,it,t->", u, d_dm, d_dm, v))
    if den <= 0.0:
        raise DegenerateWeights("treatment indicator has zero weighted variation")
    return num / den


def estimate_from_blocks(
    y_tr: np.ndarray,
    y_co: np.ndarray,
    t_pre: int,
    spec: EstimatorSpec,
    options: wt.SolverOptions | None = None,
    rsc_penalty="cv",
) -> EstimateResult:
    """Estimate from explicit treated and control outcome blocks.

    This is the kernel behind :func:`estimate`; the bootstrap resamples rows
    and calls it directly.
    """
    y_tr = np.asarray(y_tr, dtype=float)
    y_co = np.asarray(y_co, dtype=float)
    n_tr, n_periods = y_tr.shape
    n_co = y_co.shape[0]
    t_post = n_periods - t_pre
    y_co_pre, y_co_post = y_co[:, :t_pre], y_co[:, t_pre:]
    y_tr_pre_mean = y_tr[:, :t_pre].mean(axis=0)

    unit_solution = None
    time_solution = None
    rsc_solution = None
    zeta = None
    diagnostics: dict = {}

    if spec.unit_scheme == "uniform":
        omega = np.full(n_co, 1.0 / n_co)
    elif spec.unit_scheme in ("sdid", "sdid_no_intercept"):
        zeta = wt.zeta_from_arrays(y_co_pre, n_tr, t_post)
        unit_solution = wt.solve_unit_weights_arrays(
            y_co_pre,
            y_tr_pre_mean,
            zeta.zeta,
            options,
            intercept=(spec.unit_scheme == "sdid"),
        )
        omega = unit_solution.omega.values
        diagnostics["zeta"] = zeta.zeta
        diagnostics["sigma_hat"] = zeta.sigma_hat
    elif spec.unit_scheme == "entropy":
        omega = wt.entropy_balance_arrays(y_co_pre, y_tr_pre_mean).values
    elif spec.unit_scheme == "regularized_sc":
        if rsc_penalty == "cv":
            rsc_solution = wt.solve_regularized_sc_cv_arrays(y_co_pre, y_tr_pre_mean)
        else:
            rsc_solution = wt.solve_regularized_sc_arrays(
                y_co_pre, y_tr_pre_mean, float(rsc_penalty["l1"]), float(rsc_penalty["l2"])
            )
        omega = None
    else:  # pragma: no cover - guarded by EstimatorSpec
        raise DesignError(spec.unit_scheme)

    if spec.time_scheme == "uniform":
        lam = np.full(t_pre, 1.0 / t_pre)
    else:
        time_solution = wt.solve_time_weights_arrays(y_co_pre, y_co_post.mean(axis=1), options)
        lam = time_solution.lam.values

    y_stack = np.vstack([y_tr, y_co])
    treated = np.zeros(n_tr + n_co, dtype=bool)
    treated[:n_tr] = True
    u = np.empty(n_tr + n_co)
    u[:n_tr] = 1.0 / n_tr
    v = np.empty(n_periods)
    v[:t_pre] = lam
    v[t_pre:] = 1.0 / t_post

    if spec.unit_scheme == "regularized_sc":
        counterfactual_post = rsc_solution.mu + y_co_post.T @ rsc_solution.weights
        tau = float((y_tr[:, t_pre:].mean(axis=0) - counterfactual_post).mean())
    elif spec.unit_scheme == "sdid_no_intercept":
        u[n_tr:] = omega
        tau = _weighted_time_fe_tau(y_stack, treated, t_pre, u, v)
    else:
        u[n_tr:] = omega
        tau = weighted_twfe_arrays(y_stack, treated, t_pre, u, v)
        diagnostics["closed_form_tau"] = closed_form_tau_arrays(y_stack, treated, t_pre, u, v)

    if omega is not None:
        omega0 = unit_solution.omega0 if unit_solution is not None else 0.0
        gaps = y_tr_pre_mean - (omega0 + y_co_pre.T @ omega)
        diagnostics["pre_fit_gaps"] = gaps.tolist()
        diagnostics["max_abs_pre_gap"] = float(np.abs(gaps).max())
    diagnostics["converged"] = all(
        s.converged for s in (unit_solution, time_solution, rsc_solution) if s is not None
    )

    return EstimateResult(
        tau=tau,
        spec=spec,
        n_treated=n_tr,
        n_control=n_co,
        n_obs=(n_tr + n_co) * n_periods,
        unit_solution=unit_solution,
        time_solution=time_solution,
        rsc_solution=rsc_solution,
        unit_weights=omega,
        time_weights=lam,
        diagnostics=diagnostics,
    )


def estimate(
    panel: PanelDataset,
    design: TreatmentDesign,
    spec: EstimatorSpec,
    options: wt.SolverOptions | None = None,
    rsc_penalty="cv",
) -> EstimateResult:
    """Solve the weights required by ``spec`` and run the weighted regression.

    The result carries the resolved weight vectors (ordered like
    ``design.control_units`` and the pre-periods) and solver provenance in
    ``diagnostics``.
    """
    tr_idx, co_idx = arm_indices(panel, design)
    return estimate_from_blocks(
        panel.outcome[tr_idx],
        panel.outcome[co_idx],
        design.t_pre,
        spec,
        options,
        rsc_penalty,
    )


@dataclass(frozen=True)
class CounterfactualTrend:
    """Per-period treated mean and its synthetic counterfactual."""

    periods: tuple
    treated: np.ndarray
    counterfactual: np.ndarray
    kind: str  # "weighted" or "arm_means"


def counterfactual_trend(
    panel: PanelDataset,
    design: TreatmentDesign,
    result: EstimateResult,
) -> CounterfactualTrend:
    """Treated-arm series versus the weighted synthetic counterfactual.

    The counterfactual is the unit-weighted control series shifted so the
    time-weighted pre-period gap is zero.  When the estimate used uniform
    unit weights there is nothing synthetic to plot and the unweighted arm
    means are returned instead (``kind="arm_means"``).
    """
    tr_idx, co_idx = arm_indices(panel, design)
    treated_series = panel.outcome[tr_idx].mean(axis=0)
    if result.spec.unit_scheme == "uniform":
        trends = group_trends(panel, design)
        return CounterfactualTrend(
            periods=panel.periods,
            treated=trends.treated,
            counterfactual=trends.control,
            kind="arm_means",
        )
    if result.spec.unit_scheme == "regularized_sc":
        base = result.rsc_solution.mu + panel.outcome[co_idx].T @ result.rsc_solution.weights
        return CounterfactualTrend(
            periods=panel.periods,
            treated=treated_series,
            counterfactual=base,
            kind="weighted",
        )
    omega = result.unit_weights
    lam = result.time_weights
    base = panel.outcome[co_idx].T @ omega
    shift = float(lam @ (treated_series[: design.t_pre] - base[: design.t_pre]))
    return CounterfactualTrend(
        periods=panel.periods,
        treated=treated_series,
        counterfactual=base + shift,
        kind="weighted",
    )


def result_to_dict(result: EstimateResult, se: float | None = None) -> dict:
    """JSON-ready serialization of an estimate."""
    out = {
        "tau": result.tau,
        "se": se,
        "unit_scheme": result.spec.unit_scheme,
        "time_scheme": result.spec.time_scheme,
        "county_weights": result.spec.uses_unit_weights,
        "year_weights": result.spec.uses_time_weights,
        "n_treated": result.n_treated,
        "n_control": result.n_control,
        "n_units": result.n_treated + result.n_control,
        "n_obs": result.n_obs,
        "diagnostics": result.diagnostics,
    }
    if result.unit_weights is not None:
        out["unit_weights"] = np.asarray(result.unit_weights).tolist()
    if result.time_weights is not None:
        out["time_weights"] = np.asarray(result.time_weights).tolist()
    return out


def variant_table(results, ses=None) -> list[list]:
    """Rows for a variant-matrix table: estimates across specs, then the
    weight-scheme footer rows (mirrors the published table layout)."""
    ses = ses if ses is not None else [None] * len(results)
    header = ["quantity"] + [r.spec.label for r in results]
    rows = [header]
    rows.append(["tau"] + [repr(float(r.tau)) for r in results])
    rows.append(["se"] + ["" if s is None else repr(float(s)) for s in ses])
    rows.append(["n_treated"] + [r.n_treated for r in results])
    rows.append(["n_units"] + [r.n_treated + r.n_control for r in results])
    rows.append(["n_obs"] + [r.n_obs for r in results])
    rows.append(["county_weights"] + ["Yes" if r.spec.uses_unit_weights else "No" for r in results])
    rows.append(["year_weights"] + ["Yes" if r.spec.uses_time_weights else "No" for r in results])
    return rows
