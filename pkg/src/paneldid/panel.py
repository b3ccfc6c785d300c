"""Balanced unit-by-period panels with block treatment adoption.

A panel is an N x T outcome matrix plus ordered unit and period labels.
Treatment is a block design: every treated unit adopts in the final
``t_post`` periods, everyone else never does.  Loading, validation,
subsetting, and arm-level trend summaries live here; estimation does not.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import (
    ConfigError,
    DataError,
    DesignError,
    DuplicateCell,
    EmptyArmError,
    NonBlockTreatment,
    ParseError,
    UnbalancedPanel,
)

REQUIRED_ROLES = ("unit", "period", "outcome", "treated")

_TRUTHY = {"1", "true", "t", "yes", "y"}
_FALSY = {"0", "false", "f", "no", "n", ""}


@dataclass(frozen=True)
class PanelDataset:
    """Balanced panel: one finite outcome per (unit, period) pair.

    Attributes
    ----------
    units : tuple of str
        Unit identifiers, unique, in canonical (sorted) order for loaded
        panels.
    periods : tuple of int
        Period labels, strictly increasing.  Labels are ordinal only; no
        calendar arithmetic is ever performed on them.
    outcome : ndarray of shape (n_units, n_periods)
        Outcome matrix, read-only.
    unit_meta : dict or None
        Optional per-unit attribute map keyed by unit id.  Only subsetting
        and simulation read it; estimators never do.
    """

    units: tuple
    periods: tuple
    outcome: np.ndarray
    unit_meta: Mapping | None = None

    def __post_init__(self):
        y = np.asarray(self.outcome, dtype=float)
        if y.ndim != 2 or y.shape != (len(self.units), len(self.periods)):
            raise DesignError(
                f"outcome shape {y.shape} does not match "
                f"{len(self.units)} units x {len(self.periods)} periods"
            )
        if len(set(self.units)) != len(self.units):
            raise DesignError("unit identifiers must be unique")
        if any(b <= a for a, b in zip(self.periods, self.periods[1:])):
            raise DesignError("periods must be strictly increasing")
        if not np.all(np.isfinite(y)):
            raise ParseError("outcome matrix contains non-finite values")
        y = y.copy()
        y.flags.writeable = False
        object.__setattr__(self, "outcome", y)

    @property
    def n_units(self) -> int:
        return len(self.units)

    @property
    def n_periods(self) -> int:
        return len(self.periods)

    def unit_index(self, unit) -> int:
        try:
            return self.units.index(unit)
        except ValueError:
            raise KeyError(f"unknown unit {unit!r}") from None


@dataclass(frozen=True)
class TreatmentDesign:
    """Block treatment design over a panel.

    Treated units are treated in exactly the last ``t_post`` periods.
    """

    treated_units: tuple
    control_units: tuple
    t_pre: int
    t_post: int

    def __post_init__(self):
        if not self.treated_units or not self.control_units:
            raise DesignError("both treated and control arms must be nonempty")
        overlap = set(self.treated_units) & set(self.control_units)
        if overlap:
            raise DesignError(f"units in both arms: {sorted(overlap)[:5]}")
        if self.t_pre < 2:
            raise DesignError(f"need at least 2 pre-treatment periods, got {self.t_pre}")
        if self.t_post < 1:
            raise DesignError(f"need at least 1 post-treatment period, got {self.t_post}")

    @property
    def n_treated(self) -> int:
        return len(self.treated_units)

    @property
    def n_control(self) -> int:
        return len(self.control_units)


def make_design(panel: PanelDataset, treated_units: Iterable, t_post: int) -> TreatmentDesign:
    """Build a design for ``panel``, deriving the control arm as the complement."""
    treated = set(treated_units)
    unknown = treated - set(panel.units)
    if unknown:
        raise DesignError(f"treated units not in panel: {sorted(unknown)[:5]}")
    control = tuple(u for u in panel.units if u not in treated)
    treated_ordered = tuple(u for u in panel.units if u in treated)
    return TreatmentDesign(
        treated_units=treated_ordered,
        control_units=control,
        t_pre=panel.n_periods - t_post,
        t_post=t_post,
    )


def treated_mask(panel: PanelDataset, design: TreatmentDesign) -> np.ndarray:
    """Boolean unit mask, True for treated units, in panel unit order."""
    treated = set(design.treated_units)
    return np.array([u in treated for u in panel.units], dtype=bool)


def arm_indices(panel: PanelDataset, design: TreatmentDesign) -> tuple[np.ndarray, np.ndarray]:
    """Row indices of treated and control units, in design order.

    Weight vectors returned by the solvers align with
    ``design.control_units``; these indices map them back onto panel rows.
    """
    pos = {u: i for i, u in enumerate(panel.units)}
    try:
        tr = np.array([pos[u] for u in design.treated_units], dtype=int)
        co = np.array([pos[u] for u in design.control_units], dtype=int)
    except KeyError as exc:
        raise DesignError(f"design references unit {exc} not present in panel") from None
    return tr, co


def _parse_outcome(raw: str, unit, period):
    if raw is None:
        return None
    text = str(raw).strip()
    if text == "" or text.lower() in ("na", "nan"):
        return None
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"non-numeric outcome {raw!r} at unit={unit} period={period}") from None
    if math.isnan(value):
        return None
    if math.isinf(value):
        raise ParseError(f"non-finite outcome {raw!r} at unit={unit} period={period}")
    return value


def _parse_flag(raw, unit, period) -> bool:
    text = str(raw).strip().lower()
    if text in _TRUTHY:
        return True
    if text in _FALSY:
        return False
    raise ParseError(f"unparseable treated flag {raw!r} at unit={unit} period={period}")


def _parse_meta_value(raw):
    text = str(raw).strip()
    if text == "":
        return None
    try:
        return float(text)
    except ValueError:
        return text


def load_panel(source, schema: Mapping[str, str]) -> tuple[PanelDataset, TreatmentDesign]:
    """Load a long-format CSV into a validated panel and block design.

    Parameters
    ----------
    source : path or file-like
        UTF-8 CSV with a header row, one row per (unit, period).
    schema : mapping
        Role-to-column mapping.  Required roles: ``unit``, ``period``,
        ``outcome``, ``treated``.  Any other key declares a per-unit meta
        attribute read from the named column.  The reserved key
        ``outcome_bounds`` may give an inclusive [lo, hi] range the outcome
        must satisfy (for turnout-type outcomes declared in [0, 100]).

    Returns
    -------
    (PanelDataset, TreatmentDesign)
        Canonicalized: units sorted ascending, periods sorted ascending.
        The result is invariant to input row order.

    Raises
    ------
    DuplicateCell, UnbalancedPanel, NonBlockTreatment, ParseError,
    DesignError, DataError, ConfigError
    """
    schema = dict(schema)
    bounds = schema.pop("outcome_bounds", None)
    for role in REQUIRED_ROLES:
        if role not in schema:
            raise ConfigError(f"schema is missing required role {role!r}")
    meta_roles = {k: v for k, v in schema.items() if k not in REQUIRED_ROLES}

    frame = pd.read_csv(source, dtype=str, keep_default_na=False)
    for role, col in schema.items():
        if col not in frame.columns:
            raise ConfigError(f"column {col!r} (role {role!r}) not found in input header")

    units_raw = frame[schema["unit"]].astype(str).str.strip()
    periods_raw = frame[schema["period"]]

    periods = []
    for raw in periods_raw:
        text = str(raw).strip()
        try:
            periods.append(int(text))
        except ValueError:
            raise ParseError(f"non-integer period label {raw!r}") from None

    cells: dict = {}
    flags: dict = {}
    meta: dict = {}
    for row_i, (unit, period) in enumerate(zip(units_raw, periods)):
        key = (unit, period)
        if key in cells:
            raise DuplicateCell(f"duplicate cell for unit={unit} period={period}")
        value = _parse_outcome(frame[schema["outcome"]].iloc[row_i], unit, period)
        if value is None:
            raise UnbalancedPanel(f"missing outcome at unit={unit} period={period}")
        if bounds is not None and not (bounds[0] <= value <= bounds[1]):
            raise DataError(
                f"outcome {value} outside declared bounds {list(bounds)} "
                f"at unit={unit} period={period}"
            )
        cells[key] = value
        flags[key] = _parse_flag(frame[schema["treated"]].iloc[row_i], unit, period)
        if meta_roles:
            row_meta = {
                attr: _parse_meta_value(frame[col].iloc[row_i]) for attr, col in meta_roles.items()
            }
            if unit in meta and meta[unit] != row_meta:
                raise ParseError(f"meta attributes vary within unit {unit}")
            meta[unit] = row_meta

    unit_list = tuple(sorted(set(units_raw)))
    period_list = tuple(sorted(set(periods)))
    n, t = len(unit_list), len(period_list)
    if len(cells) != n * t:
        for u in unit_list:
            for p in period_list:
                if (u, p) not in cells:
                    raise UnbalancedPanel(f"missing cell for unit={u} period={p}")

    outcome = np.empty((n, t))
    for i, u in enumerate(unit_list):
        for j, p in enumerate(period_list):
            outcome[i, j] = cells[(u, p)]

    post_periods = sorted({p for (u, p), f in flags.items() if f})
    if not post_periods:
        raise DesignError("no treated observations found")
    t_post = len(post_periods)
    if tuple(post_periods) != period_list[t - t_post :]:
        raise NonBlockTreatment(
            f"treated flags appear in {post_periods}, which is not a suffix of the period list"
        )
    treated_units = []
    for u in unit_list:
        unit_flags = [flags[(u, p)] for p in period_list]
        pre_flags, post_flags = unit_flags[: t - t_post], unit_flags[t - t_post :]
        if any(pre_flags):
            raise NonBlockTreatment(f"unit {u} flagged treated in a pre-treatment period")
        if any(post_flags):
            if not all(post_flags):
                raise NonBlockTreatment(f"unit {u} has a varying flag inside the post block")
            treated_units.append(u)

    panel = PanelDataset(
        units=unit_list,
        periods=period_list,
        outcome=outcome,
        unit_meta=meta if meta_roles else None,
    )
    design = make_design(panel, treated_units, t_post)
    return panel, design


def subset(
    panel: PanelDataset,
    design: TreatmentDesign,
    predicate: Callable[[Mapping], bool],
) -> tuple[PanelDataset, TreatmentDesign]:
    """Restrict the panel to units whose meta attributes satisfy ``predicate``.

    The period set is unchanged; the treatment design is recomputed on the
    surviving units.  Raises EmptyArmError if either arm empties.
    """
    if panel.unit_meta is None:
        raise DataError("panel carries no unit meta attributes to subset on")
    keep = []
    for u in panel.units:
        try:
            if predicate(panel.unit_meta[u]):
                keep.append(u)
        except KeyError as exc:
            raise DataError(f"predicate references undeclared meta attribute {exc}") from None
    keep_set = set(keep)
    treated = [u for u in design.treated_units if u in keep_set]
    control = [u for u in design.control_units if u in keep_set]
    if not treated or not control:
        raise EmptyArmError(
            f"subset leaves {len(treated)} treated and {len(control)} control units"
        )
    idx = [i for i, u in enumerate(panel.units) if u in keep_set]
    sub = PanelDataset(
        units=tuple(panel.units[i] for i in idx),
        periods=panel.periods,
        outcome=panel.outcome[idx, :],
        unit_meta={u: panel.unit_meta[u] for u in keep},
    )
    return sub, make_design(sub, treated, design.t_post)


def tercile_assignments(values: Sequence[float]) -> np.ndarray:
    """Assign each value to tercile 0, 1, or 2 with ties placed in the lower tercile.

    Cutoffs are the 1/3 and 2/3 quantiles (linear interpolation); values equal
    to a cutoff fall below it.
    """
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        raise DataError("cannot split an empty value list into terciles")
    q1, q2 = np.quantile(vals, [1.0 / 3.0, 2.0 / 3.0])
    out = np.full(vals.shape, 2, dtype=int)
    out[vals <= q2] = 1
    out[vals <= q1] = 0
    return out


def tercile_split(
    panel: PanelDataset,
    design: TreatmentDesign,
    attribute: str,
    among: str = "treated",
) -> list[tuple[PanelDataset, TreatmentDesign]]:
    """Split into three sub-panels by terciles of a meta attribute.

    ``among="treated"`` splits only the treated arm (every control unit is
    kept in all three groups: the grant-size style of subgroup).
    ``among="all"`` splits every unit by its own tercile (the population
    style).
    """
    if panel.unit_meta is None:
        raise DataError("panel carries no unit meta attributes to split on")
    if among not in ("treated", "all"):
        raise DataError(f"among must be 'treated' or 'all', got {among!r}")
    pool = design.treated_units if among == "treated" else panel.units
    values = []
    for u in pool:
        v = panel.unit_meta[u].get(attribute)
        if v is None or not isinstance(v, float):
            raise DataError(f"unit {u} has no numeric meta attribute {attribute!r}")
        values.append(v)
    groups = tercile_assignments(values)
    member = dict(zip(pool, groups))
    rebuilt = []
    for g in range(3):
        if among == "treated":
            keep = set(design.control_units) | {u for u in pool if member[u] == g}
        else:
            keep = {u for u in pool if member[u] == g}
        idx = [i for i, u in enumerate(panel.units) if u in keep]
        sub = PanelDataset(
            units=tuple(panel.units[i] for i in idx),
            periods=panel.periods,
            outcome=panel.outcome[idx, :],
            unit_meta={panel.units[i]: panel.unit_meta[panel.units[i]] for i in idx},
        )
        treated = [u for u in design.treated_units if u in keep]
        control = [u for u in design.control_units if u in keep]
        if not treated or not control:
            raise EmptyArmError(f"tercile {g} leaves an empty arm")
        rebuilt.append((sub, make_design(sub, treated, design.t_post)))
    return rebuilt


@dataclass(frozen=True)
class GroupTrends:
    """Unweighted per-period arm means."""

    periods: tuple
    treated: np.ndarray
    control: np.ndarray


def group_trends(panel: PanelDataset, design: TreatmentDesign) -> GroupTrends:
    """Per-period unweighted means of the treated and control arms."""
    mask = treated_mask(panel, design)
    return GroupTrends(
        periods=panel.periods,
        treated=panel.outcome[mask].mean(axis=0),
        control=panel.outcome[~mask].mean(axis=0),
    )


def dump_panel(panel: PanelDataset, design: TreatmentDesign, path) -> None:
    """Write the canonical long-format dump: rows sorted by unit then period."""
    treated = set(design.treated_units)
    post_start = len(panel.periods) - design.t_post
    meta_attrs = []
    if panel.unit_meta is not None:
        seen = set()
        for m in panel.unit_meta.values():
            seen.update(m.keys())
        meta_attrs = sorted(seen)
    order = sorted(range(len(panel.units)), key=lambda i: panel.units[i])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["unit", "period", "outcome", "treated"] + meta_attrs)
        for i in order:
            u = panel.units[i]
            meta = panel.unit_meta.get(u, {}) if panel.unit_meta else {}
            for j, p in enumerate(panel.periods):
                flag = int(u in treated and j >= post_start)
                row = [u, p, repr(float(panel.outcome[i, j])), flag]
                row += ["" if meta.get(a) is None else meta.get(a) for a in meta_attrs]
                writer.writerow(row)
