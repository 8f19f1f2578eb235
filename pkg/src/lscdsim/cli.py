"""Command line entry point: ``lscdsim {simulate,estimate,bounds,sweep,report}``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Sequence

import jsonschema

from . import bounds as bounds_mod
from . import seeding, sweep
from .estimators import arl_recursion, default_w_grid, estimate_sprt_stats
from .lscd import LocationConfig, Scenario, TraceWriter, UavConfig, simulate_run
from .models import DistributionModel, model_from_spec

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

_MODEL_SCHEMA = {
    "type": "object",
    "properties": {
        "family": {"enum": ["gaussian"]},
        "mu0": {"type": "number"},
        "mu1": {"type": "number"},
        "sigma": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["family", "mu0", "mu1", "sigma"],
    "additionalProperties": False,
}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "model_a": _MODEL_SCHEMA,
        "model_b": _MODEL_SCHEMA,
        "gamma_a": _POS,
        "gamma_b": _POS,
        "n_a": {"type": "integer", "minimum": 1},
        "n_b": {"type": "integer", "minimum": 1},
        "tau": {"type": "integer", "minimum": 0},
        "e_sense": _NONNEG,
        "e_move": _NONNEG,
        "e_budget": {"oneOf": [_POS, {"type": "null"}]},
        "r_a": _NONNEG,
        "r_b": _NONNEG,
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "reps": {"type": "integer", "minimum": 100},
        "cycle_reps": {"type": "integer", "minimum": 100},
        "horizon": {"type": "integer", "minimum": 1},
        "w_grid_size": {"type": "integer", "minimum": 1},
        "threads": {"type": "integer", "minimum": 1},
        "strict": {"type": "boolean"},
    },
    "additionalProperties": False,
}

_GAUSS = {"family": "gaussian", "mu0": 0.0, "mu1": 2.0, "sigma": 1.0}


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"config error at {path or '<root>'}: {message}")
        self.path = path


@dataclass(frozen=True)
class Config:
    model_a: DistributionModel
    model_b: DistributionModel
    gamma_a: float = 5.0
    gamma_b: float = 5.0
    n_a: int = 3
    n_b: int = 3
    tau: int = 3
    e_sense: float = 1.0
    e_move: float = 4.0
    e_budget: float = 3.0
    r_a: float = 500.0
    r_b: float = 500.0
    seed: int = 0
    reps: int = 2000
    cycle_reps: int = 100_000
    horizon: int = 100_000_000
    w_grid_size: int = 33
    threads: int = 1
    strict: bool = False

    @property
    def loc_a(self) -> LocationConfig:
        return LocationConfig(self.gamma_a, self.n_a, self.model_a)

    @property
    def loc_b(self) -> LocationConfig:
        return LocationConfig(self.gamma_b, self.n_b, self.model_b)

    @property
    def uav(self) -> UavConfig:
        return UavConfig(self.tau, self.e_sense, self.e_move, self.e_budget)

    @property
    def constraints(self) -> sweep.Constraints:
        return sweep.Constraints(self.r_a, self.r_b, self.e_budget)

    def to_dict(self) -> dict[str, Any]:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["model_a"] = self.model_a.to_spec()
        d["model_b"] = self.model_b.to_spec()
        d["e_budget"] = None if math.isinf(self.e_budget) else self.e_budget
        return d


def load_config(data: dict[str, Any] | None) -> Config:
    """Validate a parsed JSON config and fill defaults (Gaussian 0 vs 2, unit variance, tau=3)."""
    data = {} if data is None else data
    validator = jsonschema.Draft7Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path)
        if not path and err.validator == "additionalProperties":
            extra = sorted(set(data) - set(CONFIG_SCHEMA["properties"]))
            path = ",".join(extra)
        raise ConfigError(path, err.message)
    values = dict(data)
    for key in ("model_a", "model_b"):
        try:
            values[key] = model_from_spec(values.get(key, _GAUSS))
        except (ValueError, KeyError) as exc:
            raise ConfigError(key, str(exc)) from None
    if values.get("e_budget", 3.0) is None:
        values["e_budget"] = math.inf
    cfg = Config(**values)
    for path, build in (("gamma_a", lambda: cfg.loc_a), ("gamma_b", lambda: cfg.loc_b), ("tau", lambda: cfg.uav)):
        try:
            build()
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from None
    return cfg


def read_config(path: str | None) -> Config:
    if path is None:
        return load_config({})
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("", "top level must be a JSON object")
    return load_config(data)


def _json(obj: Any) -> str:
    def clean(x):
        if isinstance(x, float) and not math.isfinite(x):
            return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
        if isinstance(x, dict):
            return {str(k): clean(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [clean(v) for v in x]
        if hasattr(x, "item"):
            return clean(x.item())
        return x

    return json.dumps(clean(obj), indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_simulate(cfg: Config, scenario: Scenario, start: str, reps: int, trace: bool, out: str | None) -> None:
    tw = TraceWriter()
    runs = []
    for r in range(reps):
        res = simulate_run(cfg.loc_a, cfg.loc_b, cfg.uav, scenario, start,
                           seeding.generator(cfg.seed, seeding.RUN, 0, r), cfg.horizon)
        tw.add(r, res)
        d = res.to_dict()
        if res.censored:
            d["notice"] = f"horizon of {cfg.horizon} slots reached without an alarm"
        runs.append(d)
    if trace:
        _emit(tw.text(), out)
        return
    payload = runs[0] if reps == 1 else {"runs": runs}
    _emit(_json(payload), out)


def _stats(cfg: Config):
    sa = estimate_sprt_stats(cfg.model_a, cfg.gamma_a, default_w_grid(cfg.gamma_a, cfg.w_grid_size), cfg.cycle_reps,
                             cfg.seed, threads=cfg.threads, job=(seeding.SWEEP_STATS, 0, seeding.gamma_key(cfg.gamma_a)))
    sb = estimate_sprt_stats(cfg.model_b, cfg.gamma_b, default_w_grid(cfg.gamma_b, cfg.w_grid_size), cfg.cycle_reps,
                             cfg.seed, threads=cfg.threads, job=(seeding.SWEEP_STATS, 1, seeding.gamma_key(cfg.gamma_b)))
    return sa, sb


def cmd_estimate(cfg: Config, fmt: str, out: str | None) -> None:
    sa, sb = _stats(cfg)
    m = sweep.evaluate_point(cfg.loc_a, cfg.loc_b, cfg.uav, cfg.constraints, sa, sb, cfg.reps, cfg.seed,
                             cfg.horizon, cfg.threads,
                             job=(seeding.gamma_key(cfg.gamma_a), seeding.gamma_key(cfg.gamma_b), cfg.n_a, cfg.n_b),
                             strict=cfg.strict)
    if fmt == "csv":
        _emit(m.table(cfg.seed), out)
        return
    rec_a, rec_b = arl_recursion(sa, sb, cfg.n_a, cfg.n_b, cfg.tau)
    d = m.to_dict()
    d["arl_recursion"] = {"A": rec_a.to_dict(), "B": rec_b.to_dict()}
    d["sprt_stats"] = {
        loc: {"gamma": s.gamma, "psi_inf": s.psi_inf.to_dict(), "beta": s.beta.to_dict(),
              "e_inf_T": s.e_inf_T.to_dict(), "e0_T": s.e0_T.to_dict()}
        for loc, s in (("A", sa), ("B", sb))
    }
    d["config"] = cfg.to_dict()
    _emit(_json(d), out)


def cmd_bounds(cfg: Config, fmt: str, out: str | None) -> None:
    if cfg.n_a != cfg.n_b:
        raise ValueError("closed-form bounds need n_a == n_b")
    aa, ab = cfg.model_a.analytics(), cfg.model_b.analytics()
    reports = {
        "A": bounds_mod.bounds_report("A", cfg.gamma_a, cfg.gamma_b, cfg.n_a, cfg.tau, aa, ab,
                                      default_w_grid(cfg.gamma_a, cfg.w_grid_size)),
        "B": bounds_mod.bounds_report("B", cfg.gamma_b, cfg.gamma_a, cfg.n_b, cfg.tau, ab, aa,
                                      default_w_grid(cfg.gamma_b, cfg.w_grid_size)),
    }
    if fmt == "json":
        _emit(_json({k: r.to_dict() for k, r in reports.items()}), out)
        return
    rows = ["location,quantity,value"]
    for loc, r in reports.items():
        rows += [f"{loc},{k},{float(v):.17g}" for k, v in r.scalar_items()]
    rows += [f"flag,{i},{f}" for i, f in enumerate(bounds_mod.FLAGS)]
    _emit("\n".join(rows) + "\n", out)


def _run_sweep(cfg: Config, grid_spec: str):
    return sweep.run_sweep(sweep.parse_grid(grid_spec), cfg.model_a, cfg.model_b, cfg.uav, cfg.constraints,
                           reps=cfg.reps, seed=cfg.seed, cycle_reps=cfg.cycle_reps, w_grid_size=cfg.w_grid_size,
                           horizon=cfg.horizon, threads=cfg.threads, strict=cfg.strict)


def cmd_sweep(cfg: Config, grid_spec: str, out: str | None, summary_path: str | None) -> None:
    records = _run_sweep(cfg, grid_spec)
    _emit(sweep.to_csv(records), out)
    summary = _json(sweep.summary(records))
    if summary_path is None and out:
        summary_path = str(Path(out).with_suffix(".summary.json"))
    if summary_path:
        Path(summary_path).write_text(summary)
    else:
        sys.stderr.write(summary)


def parse_sweep_csv(fh: io.TextIOBase) -> list[dict[str, Any]]:
    reader = csv.DictReader(fh)
    if reader.fieldnames is None or ",".join(reader.fieldnames) != sweep.CSV_HEADER:
        raise ValueError("input is not a sweep table")
    rows = []
    for r in reader:
        row: dict[str, Any] = {"class": r["class"], "n": int(r["n"])}
        for k, v in r.items():
            if k not in ("class", "n"):
                row[k] = float(v) if v != "" else None
        rows.append(row)
    return rows


def report_data(rows: Sequence[dict[str, Any]]) -> dict[str, Any]:
    """Plot-ready series from sweep rows: feasibility map, WADD curves and energy versus n."""
    def series(x_key: str, group: tuple[str, ...], y_key: str):
        out: dict[str, dict[str, list]] = {}
        for r in sorted(rows, key=lambda r: (tuple(r[g] for g in group), r[x_key])):
            if r[y_key] is None:
                continue
            label = ",".join(f"{g}={r[g]:g}" for g in group)
            s = out.setdefault(label, {"x": [], "y": []})
            s["x"].append(r[x_key])
            s["y"].append(r[y_key])
        return out

    return {
        "feasibility": [{k: r[k] for k in ("gamma_a", "gamma_b", "n", "class", "objective")} for r in rows],
        "wadd_a_vs_gamma_a": series("gamma_a", ("n", "gamma_b"), "wadd_a"),
        "wadd_a_vs_gamma_b": series("gamma_b", ("n", "gamma_a"), "wadd_a"),
        "energy_vs_n": series("n", ("gamma_a", "gamma_b"), "energy"),
        "objective_vs_gamma_a": series("gamma_a", ("n", "gamma_b"), "objective"),
    }


def cmd_report(cfg: Config, grid_spec: str, input_path: str | None, out: str | None) -> None:
    if input_path:
        with open(input_path, newline="") as fh:
            rows = parse_sweep_csv(fh)
    else:
        rows = parse_sweep_csv(io.StringIO(sweep.to_csv(_run_sweep(cfg, grid_spec))))
    _emit(_json(report_data(rows)), out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lscdsim", description="Two-location UAV change detection simulator.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", metavar="PATH", help="JSON config; missing keys take defaults")
        sp.add_argument("--seed", type=int, metavar="U64")
        sp.add_argument("--reps", type=int, metavar="N")
        sp.add_argument("--threads", type=int, metavar="N")
        sp.add_argument("--out", metavar="PATH", help="write primary output here instead of stdout")

    s = sub.add_parser("simulate", help="simulate trajectories")
    common(s)
    s.add_argument("--scenario", default="never,never", metavar="A,B", help="change times, e.g. 0,never")
    s.add_argument("--clock", choices=("local", "global"), default="local")
    s.add_argument("--start", choices=("A", "B"), default="A")
    s.add_argument("--trace", action="store_true", help="emit the per-run CSV trace")

    e = sub.add_parser("estimate", help="Monte Carlo ARL, WADD and energy estimates")
    common(e)
    e.add_argument("--format", choices=("json", "csv"), default="json")

    b = sub.add_parser("bounds", help="closed-form bounds")
    common(b)
    b.add_argument("--format", choices=("table", "json"), default="table")

    w = sub.add_parser("sweep", help="grid search over (gamma_a, gamma_b, n)")
    common(w)
    w.add_argument("--grid", default=sweep.DEFAULT_GRID, metavar="SPEC")
    w.add_argument("--summary", metavar="PATH", help="JSON summary path")

    r = sub.add_parser("report", help="plot-ready series from a sweep")
    common(r)
    r.add_argument("--grid", default=sweep.DEFAULT_GRID, metavar="SPEC")
    r.add_argument("--input", metavar="PATH", help="existing sweep CSV; otherwise a sweep is run")
    return p


def _apply_overrides(cfg: Config, args: argparse.Namespace) -> Config:
    data = cfg.to_dict()
    for key in ("seed", "threads"):
        if getattr(args, key) is not None:
            data[key] = getattr(args, key)
    if args.reps is not None and args.command != "simulate":
        data["reps"] = args.reps
    return load_config(data)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(read_config(args.config), args)
        if args.command == "simulate":
            try:
                scenario = Scenario.parse(args.scenario, args.clock)
            except ValueError as exc:
                raise ConfigError("scenario", str(exc)) from None
            reps = 1 if args.reps is None else args.reps
            if reps < 1:
                raise ConfigError("reps", "must be >= 1")
        if args.command in ("sweep", "report") and not getattr(args, "input", None):
            try:
                sweep.parse_grid(args.grid)
            except ValueError as exc:
                raise ConfigError("grid", str(exc)) from None
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "simulate":
            cmd_simulate(cfg, scenario, args.start, reps, args.trace, args.out)
        elif args.command == "estimate":
            cmd_estimate(cfg, args.format, args.out)
        elif args.command == "bounds":
            cmd_bounds(cfg, args.format, args.out)
        elif args.command == "sweep":
            cmd_sweep(cfg, args.grid, args.out, args.summary)
        else:
            cmd_report(cfg, args.grid, args.input, args.out)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
