"""Fixed-effects least squares with robust standard errors, plus binned scatters.

Fixed effects are absorbed by within-group demeaning (alternating over
dimensions until a fixed point) rather than dummy expansion; the degrees of
freedom lost to the absorbed dummies still enter the HC1 small-sample
factor, so the standard errors match a dense dummy regression exactly.
Interaction terms are written ``"a:b"`` and computed as elementwise products
before any demeaning.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd
import scipy.linalg

from .errors import BinError, DataError, RankDeficient


@dataclass(frozen=True)
class RegressionResult:
    """OLS coefficients with heteroskedasticity-robust (HC1) standard errors."""

    coefficients: dict
    robust_se: dict
    n_obs: int
    fe_groups: tuple
    r_squared: float
    n_dropped: int
    dof_model: int


def _term_matrix(data: pd.DataFrame, term: str) -> pd.Series:
    parts = [p.strip() for p in term.split(":")]
    for p in parts:
        if p not in data.columns:
            raise DataError(f"column {p!r} not found in regression data")
    col = pd.to_numeric(data[parts[0]], errors="coerce")
    for p in parts[1:]:
        col = col * pd.to_numeric(data[p], errors="coerce")
    return col


def _union_find_components(a_codes: np.ndarray, b_codes: np.ndarray, n_a: int, n_b: int) -> int:
    parent = list(range(n_a + n_b))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in zip(a_codes, b_codes):
        ra, rb = find(int(a)), find(int(b) + n_a)
        if ra != rb:
            parent[rb] = ra
    return len({find(i) for i in range(n_a + n_b)})


def _absorbed_dummy_count(fe_codes: list[np.ndarray], fe_levels: list[int]) -> int:
    """Rank of the absorbed fixed-effect dummy block (including an intercept).

    One dimension contributes all its levels; a second contributes its
    levels minus the number of connected components of the bipartite group
    graph (the exact redundancy).  Additional dimensions use the standard
    ``levels - 1`` approximation.
    """
    if not fe_codes:
        return 0
    count = fe_levels[0]
    if len(fe_codes) >= 2:
        comps = _union_find_components(fe_codes[0], fe_codes[1], fe_levels[0], fe_levels[1])
        count += fe_levels[1] - comps
    for levels in fe_levels[2:]:
        count += levels - 1
    return count


def fe_ols(
    data: pd.DataFrame,
    outcome: str,
    covariates,
    fixed_effects=(),
) -> RegressionResult:
    """OLS of ``outcome`` on ``covariates`` with absorbed fixed effects.

    Parameters
    ----------
    data : DataFrame
        One row per observation.  Rows with a missing outcome, covariate,
        or fixed-effect value are dropped (listwise), with the count
        reported on the result.
    outcome : str
        Outcome column name.
    covariates : sequence of str
        Covariate terms; ``"a:b"`` denotes the elementwise product of the
        two columns.  Without fixed effects an intercept ``"const"`` is
        added automatically.
    fixed_effects : sequence of str
        Columns whose levels are absorbed by weighted demeaning.

    Raises
    ------
    RankDeficient
        If the covariates are collinear after absorption; the exception
        names the offending column.
    """
    covariates = list(covariates)
    fixed_effects = list(fixed_effects)
    outcome_col = pd.to_numeric(data[outcome], errors="coerce") if outcome in data.columns else None
    if outcome_col is None:
        raise DataError(f"column {outcome!r} not found in regression data")

    cols = {outcome: outcome_col}
    for term in covariates:
        cols[term] = _term_matrix(data, term)
    fe_raw = {}
    for fe in fixed_effects:
        if fe not in data.columns:
            raise DataError(f"column {fe!r} not found in regression data")
        col = data[fe].astype(object)
        col = col.where(~pd.isna(col), other=np.nan)
        fe_raw[fe] = col

    used = pd.DataFrame(cols)
    keep = used.notna().all(axis=1)
    for fe, col in fe_raw.items():
        keep &= col.notna()
    n_dropped = int((~keep).sum())
    used = used[keep]
    n = len(used)
    if n == 0:
        raise DataError("no rows remain after listwise deletion")

    names = list(covariates)
    x_mat = used[covariates].to_numpy(dtype=float)
    y_vec = used[outcome].to_numpy(dtype=float)
    if not fixed_effects:
        names = ["const"] + names
        x_mat = np.hstack([np.ones((n, 1)), x_mat])

    fe_codes, fe_levels = [], []
    for fe in fixed_effects:
        codes, uniques = pd.factorize(fe_raw[fe][keep])
        fe_codes.append(codes)
        fe_levels.append(len(uniques))

    y_mean_all = y_vec.mean()
    sst = float(((y_vec - y_mean_all) ** 2).sum())

    if fe_codes:
        stacked = np.hstack([x_mat, y_vec[:, None]])
        scale = max(1.0, float(np.abs(stacked).max()))
        for _ in range(200):
            biggest = 0.0
            for codes, levels in zip(fe_codes, fe_levels):
                sums = np.zeros((levels, stacked.shape[1]))
                np.add.at(sums, codes, stacked)
                counts = np.bincount(codes, minlength=levels).astype(float)
                means = sums / counts[:, None]
                stacked -= means[codes]
                biggest = max(biggest, float(np.abs(means).max()))
            if biggest <= 1e-10 * scale:
                break
        x_mat, y_vec = stacked[:, :-1], stacked[:, -1]

    # tolerance-based rank check; name the first column QR pivots out
    _, r_mat, piv = scipy.linalg.qr(x_mat, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r_mat))
    tol = max(x_mat.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int((diag > tol).sum())
    if rank < x_mat.shape[1]:
        raise RankDeficient(
            f"column {names[piv[rank]]!r} is collinear after fixed-effect absorption",
            column=names[piv[rank]],
        )

    xtx = x_mat.T @ x_mat
    beta = np.linalg.solve(xtx, x_mat.T @ y_vec)
    resid = y_vec - x_mat @ beta

    k = x_mat.shape[1] + _absorbed_dummy_count(fe_codes, fe_levels)
    if n <= k:
        raise DataError(f"{n} observations cannot support {k} parameters")
    bread = np.linalg.inv(xtx)
    meat = (x_mat * (resid**2)[:, None]).T @ x_mat
    vcov = (n / (n - k)) * bread @ meat @ bread
    se = np.sqrt(np.diag(vcov))

    ssr = float(resid @ resid)
    r2 = 1.0 - ssr / sst if sst > 0 else 0.0

    return RegressionResult(
        coefficients=dict(zip(names, beta.tolist())),
        robust_se=dict(zip(names, se.tolist())),
        n_obs=n,
        fe_groups=tuple(fixed_effects),
        r_squared=r2,
        n_dropped=n_dropped,
        dof_model=k,
    )


def binned_scatter(x, y, n_bins: int) -> list[tuple[float, float, int]]:
    """Equal-count bins by rank of ``x``; per-bin unweighted means.

    Returns ``(mean x, mean y, count)`` per bin in ascending order of
    ``x``.  When the row count is not divisible by ``n_bins`` the remainder
    is spread one extra row each over the lowest bins.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n_bins < 1:
        raise BinError(f"need at least one bin, got {n_bins}")
    if n_bins > n:
        raise BinError(f"{n_bins} bins requested for {n} rows")
    order = np.argsort(x, kind="stable")
    base, rem = divmod(n, n_bins)
    out = []
    start = 0
    for b in range(n_bins):
        size = base + (1 if b < rem else 0)
        rows = order[start : start + size]
        out.append((float(x[rows].mean()), float(y[rows].mean()), int(size)))
        start += size
    return out
