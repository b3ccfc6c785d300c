"""Batch front-end: run estimation jobs from a config file, emit tables.

Every subcommand reads one YAML config; command-line flags override config
keys so scripted and interactive use share a single code path.  Outputs are
CSV tables plus a JSON provenance sidecar (input digests, seeds, resolved
settings) per artifact, written atomically.  Re-running an identical config
on identical inputs produces byte-identical files.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from pathlib import Path

import yaml

from . import __version__
from .errors import ConfigError, DataShapeError, NumericalError, PanelDidError
from .estimators import EstimatorSpec, counterfactual_trend, estimate, variant_table
from .inference import block_bootstrap, placebo_backdate, truncate_for_placebo
from .panel import dump_panel, load_panel, subset, tercile_split
from .regression import binned_scatter, fe_ols
from .simulation import load_county_votes, simulate_margins
from .weights import TIME_RIDGE_SCALE, diagnostics_dict

COMMANDS = (
    "validate",
    "estimate",
    "bootstrap",
    "placebo",
    "subgroup",
    "selection",
    "simulate",
    "export-figures",
)

DEFAULT_SPECS = ("uniform,uniform", "uniform,sdid", "sdid,uniform", "sdid,sdid")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paneldid",
        description="Panel causal-inference batch jobs driven by a YAML config.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the YAML job config")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads for bootstrap (0 = auto; never changes results)",
    )
    return parser


class Job:
    """Resolved configuration plus output plumbing for one invocation."""

    def __init__(self, config: dict, config_path: Path, args):
        if not isinstance(config, dict):
            raise ConfigError("config root must be a mapping")
        self.config = config
        self.config_path = config_path
        self.out_dir = Path(args.out or config.get("out", "."))
        self.seed_override = args.seed
        self.threads = args.threads if args.threads is not None else int(config.get("threads", 1))
        self._digests: dict = {str(config_path): _sha256(config_path)}
        self._panel_cache = None

    def section(self, name: str, required: bool = True) -> dict:
        sec = self.config.get(name)
        if sec is None:
            if required:
                raise ConfigError(f"config has no {name!r} section")
            return {}
        if not isinstance(sec, dict):
            raise ConfigError(f"config section {name!r} must be a mapping")
        return sec

    def seed_for(self, section: dict, purpose: str) -> int:
        if self.seed_override is not None:
            return self.seed_override
        seed = section.get("seed", self.config.get("seed"))
        if seed is None:
            raise ConfigError(f"{purpose} is stochastic: a seed is required")
        return int(seed)

    def load_panel(self):
        if self._panel_cache is None:
            sec = self.section("panel")
            path = sec.get("path")
            schema = sec.get("schema")
            if not path or not isinstance(schema, dict):
                raise ConfigError("panel section needs 'path' and a 'schema' mapping")
            self._digests[str(path)] = _sha256(path)
            self._panel_cache = load_panel(path, schema)
        return self._panel_cache

    def digest(self, path) -> None:
        self._digests[str(path)] = _sha256(path)

    def write_csv(self, name: str, rows, provenance: dict) -> Path:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for row in rows:
            writer.writerow(row)
        return self._write(name, buf.getvalue().encode("utf-8"), provenance)

    def write_json(self, name: str, payload: dict, provenance: dict) -> Path:
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
        return self._write(name, text.encode("utf-8"), provenance)

    def _write(self, name: str, data: bytes, provenance: dict) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / name
        _atomic_write(path, data)
        sidecar = dict(provenance)
        sidecar["tool"] = "paneldid"
        sidecar["version"] = __version__
        sidecar["inputs_sha256"] = dict(sorted(self._digests.items()))
        sidecar["decisions"] = {
            "intercept_domain": "real",
            "time_ridge_scale": TIME_RIDGE_SCALE,
            "robust_se": "HC1",
            "treated_weight_convention": "1/n_treated, post 1/t_post",
            "bootstrap_zeta": "resolved per replicate",
        }
        text = json.dumps(sidecar, sort_keys=True, indent=2) + "\n"
        _atomic_write(path.with_name(path.name + ".provenance.json"), text.encode("utf-8"))
        return path


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _parse_specs(raw) -> list[EstimatorSpec]:
    specs = []
    for entry in raw:
        if isinstance(entry, (list, tuple)):
            entry = ",".join(str(p) for p in entry)
        specs.append(EstimatorSpec.parse(entry))
    return specs


def _spec_from(section: dict, key: str = "spec") -> EstimatorSpec:
    raw = section.get(key, "sdid,sdid")
    if isinstance(raw, (list, tuple)):
        raw = ",".join(str(p) for p in raw)
    return EstimatorSpec.parse(raw)


def cmd_validate(job: Job) -> None:
    panel, design = job.load_panel()
    dump_name = "panel_canonical.csv"
    job.out_dir.mkdir(parents=True, exist_ok=True)
    tmp = job.out_dir / (dump_name + ".tmp")
    dump_panel(panel, design, tmp)
    os.replace(tmp, job.out_dir / dump_name)
    job.write_json(
        "validate_summary.json",
        {
            "n_units": panel.n_units,
            "n_periods": panel.n_periods,
            "n_treated": design.n_treated,
            "n_control": design.n_control,
            "t_pre": design.t_pre,
            "t_post": design.t_post,
            "periods": list(panel.periods),
            "n_obs": panel.n_units * panel.n_periods,
        },
        {"command": "validate"},
    )


def cmd_estimate(job: Job) -> None:
    panel, design = job.load_panel()
    sec = job.section("estimate", required=False)
    specs = _parse_specs(sec.get("specs", DEFAULT_SPECS))
    results = [estimate(panel, design, spec) for spec in specs]
    provenance = {
        "command": "estimate",
        "specs": [s.label for s in specs],
        "zeta": {
            r.spec.label: r.diagnostics.get("zeta") for r in results if "zeta" in r.diagnostics
        },
        "converged": {r.spec.label: r.diagnostics.get("converged") for r in results},
    }
    job.write_csv("estimates.csv", variant_table(results), provenance)
    for r in results:
        if r.unit_solution is not None or r.time_solution is not None:
            zeta = None
            job.write_json(
                f"weights_{r.spec.label.replace(',', '_')}.json",
                diagnostics_dict(r.unit_solution, r.time_solution, zeta),
                provenance,
            )


def cmd_bootstrap(job: Job) -> None:
    panel, design = job.load_panel()
    sec = job.section("bootstrap", required=False)
    spec = _spec_from(sec)
    b = int(sec.get("replicates", 1000))
    seed = job.seed_for(sec, "bootstrap")
    result = block_bootstrap(panel, design, spec, b=b, seed=seed, threads=job.threads)
    provenance = {"command": "bootstrap", "spec": spec.label, "seed": seed, "replicates": b}
    payload = {
        "tau": result.tau,
        "se": result.se,
        "ci_low": result.ci_low,
        "ci_high": result.ci_high,
        "n_requested": result.n_requested,
        "n_completed": result.n_completed,
        "n_redrawn": result.n_redrawn,
        "seed": result.seed,
        "diagnostics": result.diagnostics,
    }
    job.write_json(f"bootstrap_{spec.label.replace(',', '_')}.json", payload, provenance)
    if sec.get("dump_replicates"):
        rows = [["replicate", "tau"]]
        rows += [[i, repr(float(t))] for i, t in enumerate(result.replicates)]
        job.write_csv("bootstrap_replicates.csv", rows, provenance)


def cmd_placebo(job: Job) -> None:
    panel, design = job.load_panel()
    sec = job.section("placebo", required=False)
    spec = _spec_from(sec)
    drop_last = int(sec.get("drop_last", 1))
    result = placebo_backdate(panel, design, spec, drop_last=drop_last)
    payload = {
        "tau": result.tau,
        "spec": spec.label,
        "drop_last": drop_last,
        "n_treated": result.n_treated,
        "n_control": result.n_control,
        "n_obs": result.n_obs,
        "diagnostics": result.diagnostics,
    }
    provenance = {"command": "placebo", "spec": spec.label, "drop_last": drop_last}
    b = int(sec.get("bootstrap", 0))
    if b:
        seed = job.seed_for(sec, "placebo bootstrap")
        tp, td = truncate_for_placebo(panel, design, drop_last)
        boot = block_bootstrap(tp, td, spec, b=b, seed=seed, threads=job.threads)
        payload["se"] = boot.se
        payload["ci_low"] = boot.ci_low
        payload["ci_high"] = boot.ci_high
        provenance["seed"] = seed
    job.write_json("placebo.json", payload, provenance)


def _resolve_groups(job: Job, panel, design, sec):
    groups = sec.get("groups")
    if not groups:
        raise ConfigError("subgroup section needs a 'groups' list")
    for g in groups:
        if "tercile_of" in g:
            among = g.get("among", "treated")
            parts = tercile_split(panel, design, g["tercile_of"], among=among)
            base = g.get("name", g["tercile_of"])
            for i, (p, d) in enumerate(parts):
                yield f"{base}_tercile{i + 1}", p, d
        elif "attribute" in g:
            attr = g["attribute"]
            if "in" in g:
                allowed = set(str(v) for v in g["in"])
                pred = lambda m, a=attr, s=allowed: str(m.get(a)) in s
            elif "min" in g or "max" in g:
                lo = float(g.get("min", "-inf"))
                hi = float(g.get("max", "inf"))
                pred = lambda m, a=attr, lo=lo, hi=hi: m.get(a) is not None and lo <= m[a] <= hi
            else:
                raise ConfigError(f"group {g.get('name')!r} needs 'in' or 'min'/'max'")
            p, d = subset(panel, design, pred)
            yield g.get("name", attr), p, d
        else:
            raise ConfigError("each group needs 'attribute' or 'tercile_of'")


def cmd_subgroup(job: Job) -> None:
    panel, design = job.load_panel()
    sec = job.section("subgroup")
    spec = _spec_from(sec)
    rows = [["group", "tau", "n_treated", "n_units", "n_obs"]]
    for name, p, d in _resolve_groups(job, panel, design, sec):
        r = estimate(p, d, spec)
        rows.append([name, repr(float(r.tau)), r.n_treated, r.n_treated + r.n_control, r.n_obs])
    job.write_csv(
        "subgroup_estimates.csv", rows, {"command": "subgroup", "spec": spec.label}
    )


def cmd_selection(job: Job) -> None:
    import pandas as pd

    sec = job.section("selection")
    data_path = sec.get("data")
    if not data_path:
        raise ConfigError("selection section needs a 'data' path")
    job.digest(data_path)
    frame = pd.read_csv(data_path)
    models = sec.get("models")
    if not models:
        raise ConfigError("selection section needs a 'models' list")
    fits = []
    for m in models:
        for col in [m.get("outcome")] + list(m.get("covariates", [])):
            for base in str(col).split(":"):
                if base not in frame.columns:
                    raise ConfigError(f"column {base!r} not found in {data_path}")
        for col in m.get("fixed_effects", []):
            if col not in frame.columns:
                raise ConfigError(f"column {col!r} not found in {data_path}")
        fits.append(
            (
                m.get("name", f"model{len(fits) + 1}"),
                fe_ols(
                    frame,
                    m["outcome"],
                    m.get("covariates", []),
                    m.get("fixed_effects", []),
                ),
            )
        )
    terms = []
    for _, fit in fits:
        for t in fit.coefficients:
            if t not in terms:
                terms.append(t)
    rows = [["term"] + [name for name, _ in fits]]
    for t in terms:
        rows.append(
            [t] + [repr(float(f.coefficients[t])) if t in f.coefficients else "" for _, f in fits]
        )
        rows.append(
            [f"{t}_se"]
            + [repr(float(f.robust_se[t])) if t in f.robust_se else "" for _, f in fits]
        )
    rows.append(["n_obs"] + [f.n_obs for _, f in fits])
    rows.append(["fixed_effects"] + ["+".join(f.fe_groups) or "none" for _, f in fits])
    rows.append(["r_squared"] + [repr(float(f.r_squared)) for _, f in fits])
    job.write_csv(
        "selection_table.csv", rows, {"command": "selection", "robust": "HC1"}
    )
    binned = sec.get("binned")
    if binned:
        for col in (binned.get("x"), binned.get("y")):
            if col not in frame.columns:
                raise ConfigError(f"column {col!r} not found in {data_path}")
        sub = frame[[binned["x"], binned["y"]]].dropna()
        pts = binned_scatter(sub[binned["x"]], sub[binned["y"]], int(binned.get("bins", 20)))
        rows = [["bin", "mean_x", "mean_y", "count"]]
        rows += [[i, repr(mx), repr(my), c] for i, (mx, my, c) in enumerate(pts)]
        job.write_csv("binned_scatter.csv", rows, {"command": "selection", "part": "binned"})


def cmd_simulate(job: Job) -> None:
    sec = job.section("simulate")
    votes_path = sec.get("votes")
    if not votes_path:
        raise ConfigError("simulate section needs a 'votes' path")
    job.digest(votes_path)
    counties = load_county_votes(votes_path)
    tau = sec.get("tau")
    if isinstance(tau, dict) and "dvs" in tau and "turnout" in tau:
        tau_dvs, tau_turnout = float(tau["dvs"]), float(tau["turnout"])
    else:
        raise ConfigError("simulate.tau needs explicit 'dvs' and 'turnout' values")
    draws = int(sec.get("draws", 1000))
    has_unknown = any(c.treated is None for c in counties)
    seed = job.seed_for(sec, "simulation") if has_unknown or "seed" in sec else 0
    result = simulate_margins(counties, tau_turnout, tau_dvs, draws=draws, seed=seed)
    rows = [["state", "observed_margin", "mean_margin", "p2_5", "p97_5", "flip_probability"]]
    for s in result.state_order:
        sm = result.states[s]
        rows.append(
            [
                s,
                repr(sm.observed),
                repr(sm.mean),
                repr(sm.p025),
                repr(sm.p975),
                repr(sm.flip_probability),
            ]
        )
    provenance = {
        "command": "simulate",
        "tau_dvs": tau_dvs,
        "tau_turnout": tau_turnout,
        "draws": draws,
        "seed": seed,
    }
    job.write_csv("simulation_states.csv", rows, provenance)
    job.write_json(
        "simulation.json",
        {
            "draws": draws,
            "seed": seed,
            "tau_dvs": tau_dvs,
            "tau_turnout": tau_turnout,
            "states": {
                s: {
                    "observed": result.states[s].observed,
                    "mean": result.states[s].mean,
                    "p2_5": result.states[s].p025,
                    "p97_5": result.states[s].p975,
                    "flip_probability": result.states[s].flip_probability,
                }
                for s in result.state_order
            },
        },
        provenance,
    )


def cmd_export_figures(job: Job) -> None:
    panel, design = job.load_panel()
    sec = job.section("export_figures", required=False)
    specs = _parse_specs(sec.get("specs", ["sdid,sdid"]))
    for spec in specs:
        result = estimate(panel, design, spec)
        trend = counterfactual_trend(panel, design, result)
        other = "counterfactual" if trend.kind == "weighted" else "control"
        rows = [["period", "series", "value"]]
        for p, v in zip(trend.periods, trend.treated):
            rows.append([p, "treated", repr(float(v))])
        for p, v in zip(trend.periods, trend.counterfactual):
            rows.append([p, other, repr(float(v))])
        job.write_csv(
            f"figure_trends_{spec.label.replace(',', '_')}.csv",
            rows,
            {"command": "export-figures", "spec": spec.label, "kind": trend.kind},
        )


_HANDLERS = {
    "validate": cmd_validate,
    "estimate": cmd_estimate,
    "bootstrap": cmd_bootstrap,
    "placebo": cmd_placebo,
    "subgroup": cmd_subgroup,
    "selection": cmd_selection,
    "simulate": cmd_simulate,
    "export-figures": cmd_export_figures,
}


def _report(exc: Exception) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config_path = Path(args.config)
    try:
        if not config_path.exists():
            raise ConfigError(f"config file {config_path} does not exist")
        with open(config_path, "r", encoding="utf-8") as fh:
            try:
                config = yaml.safe_load(fh)
            except yaml.YAMLError as exc:
                raise ConfigError(f"config is not valid YAML: {exc}") from None
        job = Job(config or {}, config_path, args)
        _HANDLERS[args.command](job)
    except ConfigError as exc:
        _report(exc)
        return 2
    except DataShapeError as exc:
        _report(exc)
        return 3
    except NumericalError as exc:
        _report(exc)
        return 4
    except PanelDidError as exc:  # pragma: no cover - safety net
        _report(exc)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
