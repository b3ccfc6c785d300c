"""Counterfactual state margins with estimated grant effects removed.

The exercise: subtract the estimated average turnout and Democratic
vote-share effects from every treated county's vote totals, impute treatment
where grant data is missing, and re-aggregate two-party presidential margins
by state.  Vote adjustments happen in share space: the turnout share and the
two-party Democratic share are each reduced by the effect (in percentage
points), then counts are rebuilt as ``vap * turnout * share``; fractional
votes are kept throughout.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError, ParseError

logger = logging.getLogger(__name__)

PROB_CLAMP = (0.001, 0.999)


@dataclass(frozen=True)
class CountyVotes:
    """One county's presidential vote totals and treatment status.

    ``treated`` may be True, False, or None for counties in states without
    grant records (treatment to be imputed).  Vote counts exceeding the
    voting-age population are tolerated with a logged warning; population
    denominators are noisy.
    """

    unit: str
    state: str
    dem_votes: float
    rep_votes: float
    vap: float
    treated: bool | None
    lag_dem_share: float | None = None

    def __post_init__(self):
        if self.dem_votes < 0 or self.rep_votes < 0 or self.vap < 0:
            raise DataError(f"negative counts for county {self.unit}")
        if self.dem_votes + self.rep_votes > self.vap > 0:
            logger.warning(
                "county %s: two-party votes %.0f exceed voting-age population %.0f",
                self.unit,
                self.dem_votes + self.rep_votes,
                self.vap,
            )


@dataclass(frozen=True)
class StateMargins:
    """Observed and counterfactual two-party margins for one state (pp)."""

    observed: float
    mean: float
    p025: float
    p975: float
    flip_probability: float


@dataclass(frozen=True)
class SimulationResult:
    """Per-state counterfactual margin distributions across assignment draws."""

    states: dict
    draws: int
    seed: int
    tau_turnout: float
    tau_dvs: float
    draw_margins: np.ndarray | None = None
    state_order: tuple = ()


def load_county_votes(path) -> list[CountyVotes]:
    """Read the county votes CSV.

    Expected header: unit, state, dem_votes, rep_votes, vap, treated,
    lag_dem_share.  ``treated`` is 1/0/true/false or the literal
    ``unknown`` for states without grant data.
    """
    counties = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"unit", "state", "dem_votes", "rep_votes", "vap", "treated"}
        missing = required - set(reader.fieldnames or ())
        if missing:
            raise ParseError(f"county votes file is missing columns {sorted(missing)}")
        for row in reader:
            raw = row["treated"].strip().lower()
            if raw == "unknown":
                treated = None
            elif raw in ("1", "true", "t", "yes"):
                treated = True
            elif raw in ("0", "false", "f", "no"):
                treated = False
            else:
                raise ParseError(f"unparseable treated value {row['treated']!r}")
            lag = row.get("lag_dem_share", "").strip()
            counties.append(
                CountyVotes(
                    unit=row["unit"].strip(),
                    state=row["state"].strip(),
                    dem_votes=float(row["dem_votes"]),
                    rep_votes=float(row["rep_votes"]),
                    vap=float(row["vap"]),
                    treated=treated,
                    lag_dem_share=float(lag) if lag else None,
                )
            )
    return counties


def remove_effects(county: CountyVotes, tau_turnout: float, tau_dvs: float) -> CountyVotes:
    """Strip the average effects (percentage points) from a treated county.

    Turnout share falls by ``tau_turnout / 100`` and the two-party
    Democratic share by ``tau_dvs / 100``; votes are rebuilt from the
    adjusted shares.  Shares are clamped to [0, 1] with a logged warning.
    Zero effects return the county object unchanged, bit for bit.
    """
    if county.treated is not True:
        raise ValueError(f"county {county.unit} is not treated; nothing to remove")
    if county.vap <= 0:
        raise DataError(f"county {county.unit} has no voting-age population")
    if tau_turnout == 0.0 and tau_dvs == 0.0:
        return county
    two_party = county.dem_votes + county.rep_votes
    turnout = two_party / county.vap
    dem_share = county.dem_votes / two_party if two_party > 0 else 0.0
    new_turnout = turnout - tau_turnout / 100.0
    new_share = dem_share - tau_dvs / 100.0
    if not 0.0 <= new_turnout <= 1.0:
        logger.warning("county %s: adjusted turnout %.4f clamped", county.unit, new_turnout)
        new_turnout = min(max(new_turnout, 0.0), 1.0)
    if not 0.0 <= new_share <= 1.0:
        logger.warning("county %s: adjusted Dem share %.4f clamped", county.unit, new_share)
        new_share = min(max(new_share, 0.0), 1.0)
    dem = county.vap * new_turnout * new_share
    rep = county.vap * new_turnout * (1.0 - new_share)
    return replace(county, dem_votes=dem, rep_votes=rep)


@dataclass(frozen=True)
class TreatmentModel:
    """Fitted treatment propensity as a function of lagged Democratic share."""

    kind: str  # "logistic" or "linear"
    intercept: float
    slope: float

    def probabilities(self, lag_shares) -> np.ndarray:
        x = np.asarray(lag_shares, dtype=float)
        z = self.intercept + self.slope * x
        if self.kind == "logistic":
            p = 1.0 / (1.0 + np.exp(-z))
        else:
            p = z
        return np.clip(p, PROB_CLAMP[0], PROB_CLAMP[1])


def fit_treatment_model(counties) -> TreatmentModel:
    """Logistic fit of treatment on lagged Democratic share over known counties.

    Falls back to the linear-probability fit (with a logged notice) when the
    maximum-likelihood fit separates or otherwise diverges.
    """
    known = [c for c in counties if c.treated is not None]
    if not known:
        raise DataError("no counties with known treatment to fit on")
    if any(c.lag_dem_share is None for c in known):
        raise DataError("every county needs lag_dem_share for the treatment model")
    x = np.array([c.lag_dem_share for c in known])
    y = np.array([1.0 if c.treated else 0.0 for c in known])
    design = np.column_stack([np.ones_like(x), x])

    beta = np.zeros(2)
    for _ in range(50):
        z = design @ beta
        z = np.clip(z, -35, 35)
        p = 1.0 / (1.0 + np.exp(-z))
        w = p * (1.0 - p)
        if w.max() < 1e-12:
            break
        grad = design.T @ (y - p)
        hess = design.T @ (design * w[:, None])
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            break
        beta_new = beta + step
        if np.abs(beta_new).max() > 30.0:
            break
        if np.abs(step).max() < 1e-10:
            return TreatmentModel("logistic", float(beta_new[0]), float(beta_new[1]))
        beta = beta_new
    logger.info("logistic fit separated or diverged; using linear-probability fit")
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return TreatmentModel("linear", float(coef[0]), float(coef[1]))


def assignment_stream(seed: int, draw_index: int) -> np.random.Generator:
    """Generator for one assignment draw, a pure function of (seed, index)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(draw_index,)))


def impute_treatment(counties, model: TreatmentModel, seed: int, draw_index: int = 0) -> dict:
    """One sampled treatment assignment for counties with unknown status.

    Returns ``{unit: bool}`` for every county whose ``treated`` is None,
    drawn Bernoulli with the model's clamped probability, deterministically
    per ``(seed, draw_index)``.
    """
    unknown = [c for c in counties if c.treated is None]
    if any(c.lag_dem_share is None for c in unknown):
        raise DataError("every unknown-treatment county needs lag_dem_share")
    probs = model.probabilities([c.lag_dem_share for c in unknown])
    rng = assignment_stream(seed, draw_index)
    draws = rng.random(len(unknown))
    return {c.unit: bool(u < p) for c, p, u in zip(unknown, probs, draws)}


def _two_party_margin(dem: float, rep: float) -> float:
    total = dem + rep
    if total <= 0:
        return 0.0
    return 100.0 * (dem - rep) / total


def simulate_margins(
    counties,
    tau_turnout: float,
    tau_dvs: float,
    draws: int = 1000,
    seed: int = 0,
    keep_draws: bool = False,
) -> SimulationResult:
    """Counterfactual state margins with effects removed from treated counties.

    For each draw, counties with unknown status get a sampled assignment,
    all treated counties lose the stated effects, and two-party margins are
    re-aggregated by state.  Fractional votes are carried through without
    rounding.  Assignments depend only on ``(seed, draw index)``, never on
    the effect sizes, so sweeps over effects hold assignments fixed.
    """
    if draws < 1:
        raise DataError("need at least one draw")
    states = sorted({c.state for c in counties})
    state_pos = {s: i for i, s in enumerate(states)}

    # Observed and counterfactual totals accumulate in the same order so
    # that zero effects reproduce the observed margins bit for bit.
    known_obs_dem = np.zeros(len(states))
    known_obs_rep = np.zeros(len(states))
    base_dem = np.zeros(len(states))
    base_rep = np.zeros(len(states))
    unknown = []
    for c in counties:
        i = state_pos[c.state]
        if c.treated is None:
            unknown.append(c)
            continue
        known_obs_dem[i] += c.dem_votes
        known_obs_rep[i] += c.rep_votes
        if c.treated:
            adj = remove_effects(c, tau_turnout, tau_dvs)
            base_dem[i] += adj.dem_votes
            base_rep[i] += adj.rep_votes
        else:
            base_dem[i] += c.dem_votes
            base_rep[i] += c.rep_votes

    unk_state = np.array([state_pos[c.state] for c in unknown], dtype=int)
    unk_obs = np.array([[c.dem_votes, c.rep_votes] for c in unknown]).reshape(len(unknown), 2)
    obs_dem = known_obs_dem.copy()
    obs_rep = known_obs_rep.copy()
    if unknown:
        np.add.at(obs_dem, unk_state, unk_obs[:, 0])
        np.add.at(obs_rep, unk_state, unk_obs[:, 1])
        model = fit_treatment_model(counties)
        adj_rows = [
            remove_effects(replace(c, treated=True), tau_turnout, tau_dvs) for c in unknown
        ]
        unk_adj = np.array([[a.dem_votes, a.rep_votes] for a in adj_rows])
    observed = np.array([_two_party_margin(obs_dem[i], obs_rep[i]) for i in range(len(states))])

    margins = np.empty((draws, len(states)))
    for r in range(draws):
        dem = base_dem.copy()
        rep = base_rep.copy()
        if unknown:
            assigned = impute_treatment(counties, model, seed, r)
            take = np.array([assigned[c.unit] for c in unknown], dtype=bool)
            picked = np.where(take[:, None], unk_adj, unk_obs)
            np.add.at(dem, unk_state, picked[:, 0])
            np.add.at(rep, unk_state, picked[:, 1])
        totals = dem + rep
        with np.errstate(invalid="ignore", divide="ignore"):
            m = np.where(totals > 0, 100.0 * (dem - rep) / totals, 0.0)
        margins[r] = m

    summaries = {}
    for s, i in state_pos.items():
        col = margins[:, i]
        flips = float(np.mean(col * observed[i] < 0))
        lo, hi = np.quantile(col, [0.025, 0.975])
        summaries[s] = StateMargins(
            observed=float(observed[i]),
            mean=float(col.mean()),
            p025=float(lo),
            p975=float(hi),
            flip_probability=flips,
        )
    return SimulationResult(
        states=summaries,
        draws=draws,
        seed=seed,
        tau_turnout=tau_turnout,
        tau_dvs=tau_dvs,
        draw_margins=margins if keep_draws else None,
        state_order=tuple(states),
    )
