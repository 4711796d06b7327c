"""
Experiment runner: TOML configuration, parameter sweeps and reproducible
CSV/JSON artifacts.

Usage::

    python -m gnsdecay run experiment.toml --set params.beta=2 --workers 4

Exit status: 0 success, 1 configuration error, 2 runtime failure (blow-up
or quadrature), 3 I/O failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import decay, heat, ledger
from .solver import BlowUpError, NormSeries, SolverConfig, TrajectoryRecord, make_initial_data, simulate
from .spectral import GridSpec, PhysicalParams

log = logging.getLogger(__name__)

WORKERS_ENV = "GNSDECAY_WORKERS"
MODES = ("simulate", "semigroup_verify", "exponent_table", "bootstrap_trace")
CSV_HEADER = ("t", "l2_sq", "h_alpha_sq", "l_beta1_pow", "w_l2_sq")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "output_dir": "gnsdecay-output",
    "grid": {"n": 32, "box_length": 2 * math.pi, "dim": 3},
    "params": {"alpha": 1.0, "beta": 3.0, "nu": 1.0},
    "solver": {
        "dt": 0.01,
        "t_end": 2.0,
        "record_every": 0.1,
        "cfl_safety": 0.5,
        "integrator": "etdrk2",
        "adaptive": False,
        "advection": True,
        "damping": True,
        "convection_form": "convective",
    },
    "initial": {"kind": "taylor_green", "amplitude": 1.0},
    "ledger": {"prefactor": 4.0},
    "semigroup": {"data": "gaussian", "samples": 40},
}

DEFAULT_FIT_WINDOW = {"simulate": [1.0, 20.0], "semigroup_verify": [100.0, 10000.0]}


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def parse_override(text: str) -> tuple[list[str], Any]:
    """Split ``a.b.c=value``; the value is read as a TOML literal, else kept as a string."""
    if "=" not in text:
        raise ConfigError("--set", f"expected key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    raw = copy.deepcopy(raw)
    for text in overrides:
        path, value = parse_override(text)
        node = raw
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(".".join(path), f"{part!r} is not a section")
        node[path[-1]] = value
    return raw


@dataclass
class ExperimentConfig:
    mode: str
    seed: int
    output_dir: str
    fit_window: list[float]
    grid: dict
    params: dict
    solver: dict
    initial: dict
    ledger: dict
    semigroup: dict
    sweep: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw: dict) -> ExperimentConfig:
        if not raw:
            raise ConfigError("mode", "configuration is empty")
        if "mode" not in raw:
            raise ConfigError("mode", f"required; one of {', '.join(MODES)}")
        if raw["mode"] not in MODES:
            raise ConfigError("mode", f"unknown mode {raw['mode']!r}; one of {', '.join(MODES)}")
        unknown = set(raw) - set(DEFAULTS) - {"mode", "fit_window", "sweep"}
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration key")
        merged = _merge(DEFAULTS, raw)
        merged.setdefault("fit_window", DEFAULT_FIT_WINDOW.get(raw["mode"], [1.0, 20.0]))
        merged.setdefault("sweep", {})
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    def validate(self):
        if not isinstance(self.seed, int):
            raise ConfigError("seed", "must be an integer")
        w = self.fit_window
        if not (isinstance(w, list) and len(w) == 2 and 0 <= w[0] < w[1]):
            raise ConfigError("fit_window", f"expected [t_lo, t_hi] with t_lo < t_hi, got {w!r}")
        for key in self.sweep:
            if key not in ("alpha", "beta"):
                raise ConfigError(f"sweep.{key}", "only alpha and beta can be swept")
            values = self.sweep[key]
            if not isinstance(values, list) or not values:
                raise ConfigError(f"sweep.{key}", "must be a non-empty list")
        for alpha, beta in self.parameter_grid():
            try:
                PhysicalParams(alpha=alpha, beta=beta, nu=self.params["nu"])
            except (ValueError, TypeError) as err:
                raise ConfigError("params", str(err)) from None
            if self.mode in ("exponent_table", "bootstrap_trace") and not 0 < alpha < 1.25:
                raise ConfigError("sweep.alpha", f"alpha={alpha} outside the theorem range 0 < alpha < 5/4")
        if self.mode == "simulate":
            try:
                self.solver_config(self.params["alpha"], self.params["beta"])
            except (ValueError, TypeError) as err:
                raise ConfigError("solver", str(err)) from None
            if self.initial.get("kind") not in ("taylor_green", "low_freq_random", "gaussian_modulated"):
                raise ConfigError("initial.kind", f"unknown kind {self.initial.get('kind')!r}")
        if self.mode == "semigroup_verify":
            if self.semigroup.get("data") not in ("gaussian", "shell"):
                raise ConfigError("semigroup.data", "must be 'gaussian' or 'shell'")
            if w[0] < 1 or w[1] / w[0] < 100:
                raise ConfigError("fit_window", "semigroup fits need t_lo >= 1 and t_hi/t_lo >= 100")

    def parameter_grid(self) -> list[tuple[float, float]]:
        alphas = self.sweep.get("alpha", [self.params["alpha"]])
        betas = self.sweep.get("beta", [self.params["beta"]])
        return [(float(a), float(b)) for a in alphas for b in betas]

    def grid_spec(self) -> GridSpec:
        g = self.grid
        return GridSpec(n=int(g["n"]), box_length=float(g["box_length"]), dim=int(g["dim"]))

    def solver_config(self, alpha: float, beta: float) -> SolverConfig:
        s = self.solver
        return SolverConfig(
            grid=self.grid_spec(),
            params=PhysicalParams(alpha=alpha, beta=beta, nu=float(self.params["nu"])),
            dt=float(s["dt"]),
            t_end=float(s["t_end"]),
            record_every=None if s.get("record_every") is None else float(s["record_every"]),
            cfl_safety=float(s["cfl_safety"]),
            integrator=s["integrator"],
            adaptive=bool(s["adaptive"]),
            advection=bool(s["advection"]),
            damping=bool(s["damping"]),
            convection_form=s["convection_form"],
        )

    def resolved(self) -> dict:
        return asdict(self)


def load_config(path: str | os.PathLike, overrides: Optional[list[str]] = None) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError("<file>", f"not valid TOML: {err}") from None
    return ExperimentConfig.from_dict(apply_overrides(raw, overrides or []))


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else format(float(x), ".17g")


def export_norm_series(record: TrajectoryRecord | NormSeries, path: str | os.PathLike) -> Path:
    """Write ``t,l2_sq,h_alpha_sq,l_beta1_pow,w_l2_sq`` with 17 significant digits."""
    series = record.norm_series if isinstance(record, TrajectoryRecord) else record
    if not len(series):
        raise ValueError("cannot export an empty norm series")
    w = series.w_l2_sq if series.w_l2_sq is not None else [None] * len(series)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in zip(series.times, series.l2_sq, series.h_alpha_sq, series.l_beta_plus_1_pow, w):
        writer.writerow([_fmt(v) for v in row])
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())
    return path


def read_norm_series(path: str | os.PathLike) -> NormSeries:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        series = NormSeries()
        for row in reader:
            t, l2, h, lb, w = row
            series.append(float(t), float(l2), float(h), float(lb), float(w) if w else None, None)
    if series.w_l2_sq is not None:
        series.w_h_alpha_sq = None
    return series


def _write_json(path: Path, payload: dict):
    with open(path, "w", newline="") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n")


def _fit_dict(fit: Optional[decay.DecayFit]) -> Optional[dict]:
    return None if fit is None else asdict(fit)


def _run_simulation(cfg: ExperimentConfig, alpha: float, beta: float, run_dir: str) -> dict:
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    solver_cfg = cfg.solver_config(alpha, beta)
    u0 = make_initial_data(cfg.initial["kind"], solver_cfg.grid, seed=cfg.seed, amplitude=float(cfg.initial["amplitude"]))
    summary: dict[str, Any] = {"alpha": alpha, "beta": beta, "status": "ok", "error": None}
    try:
        record = simulate(u0, solver_cfg)
    except BlowUpError as err:
        summary.update(status="blow_up", error=f"{err} (t={err.time})")
        if err.record is not None and len(err.record.norm_series):
            export_norm_series(err.record, run_dir / "norms.csv")
        _write_json(run_dir / "summary.json", summary)
        return summary

    export_norm_series(record, run_dir / "norms.csv")
    series = record.norm_series
    theory = -decay.exponent_thm_gnse(alpha, beta) if 0 < alpha < 1.25 else None
    try:
        fit = decay.fit_power_law(series.times, series.l2_sq, tuple(cfg.fit_window), theory_exponent=theory)
    except ValueError as err:
        fit = None
        summary["fit_error"] = str(err)
    report = ledger.w_inequality_check(record, record.u0, solver_cfg.params, float(cfg.ledger["prefactor"]))
    summary.update(
        fit=_fit_dict(fit),
        ledger={
            "max_abs_u_energy_residual": float(np.max(np.abs(report.u_balance_residual), initial=0.0)),
            "min_prefactor": report.min_prefactor,
            "prefactor": report.prefactor,
            "violations": len(report.violations),
        },
        max_divergence=record.max_divergence,
        samples=len(series),
    )
    _write_json(run_dir / "summary.json", summary)
    return summary


def _workers(requested: Optional[int]) -> int:
    if requested is not None:
        return max(1, requested)
    env = os.environ.get(WORKERS_ENV)
    return max(1, int(env)) if env else 1


def run(cfg: ExperimentConfig, workers: Optional[int] = None) -> int:
    """Execute an experiment and write its artifacts; returns the exit status."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    index: dict[str, Any] = {"config": cfg.resolved(), "mode": cfg.mode}
    status = EXIT_OK

    if cfg.mode == "exponent_table":
        rows = [(a, b, float(decay.exponent_thm_gnse(a, b))) for a, b in cfg.parameter_grid()]
        with open(out / "exponents.csv", "w", newline="") as fh:
            fh.write("alpha,beta,exponent\n")
            for row in rows:
                fh.write(",".join(repr(v) for v in row) + "\n")
        index["rows"] = [{"alpha": a, "beta": b, "exponent": e} for a, b, e in rows]

    elif cfg.mode == "bootstrap_trace":
        traces = []
        for a, b in cfg.parameter_grid():
            steps = decay.bootstrap_exponents(a, b)
            traces.append({
                "alpha": a,
                "beta": b,
                "steps": [asdict(s) for s in steps],
                "fixed_point": steps[-1].u_exponent,
                "theorem": decay.exponent_thm_gnse(a, b),
            })
        index["traces"] = traces

    elif cfg.mode == "semigroup_verify":
        data = heat.RadialInitialData.gaussian() if cfg.semigroup["data"] == "gaussian" else heat.RadialInitialData.shell()
        results = []
        alphas = sorted({a for a, _ in cfg.parameter_grid()})
        try:
            for a in alphas:
                rec = heat.semigroup_rate_fit(data, a, tuple(cfg.fit_window), int(cfg.semigroup["samples"]))
                results.append({
                    "alpha": a,
                    "fitted_exponent": rec.fitted_exponent,
                    "theory_exponent": rec.theory_exponent,
                    "relative_error": abs(rec.fitted_exponent / rec.theory_exponent - 1),
                    "residual": rec.residual,
                    "flagged": rec.flagged,
                    "notes": rec.notes,
                })
        except heat.QuadratureError as err:
            index["error"] = str(err)
            status = EXIT_RUNTIME
        index["results"] = results

    else:
        jobs = cfg.parameter_grid()
        dirs = [str(out / f"run_{i:03d}") for i in range(len(jobs))]
        n_workers = min(_workers(workers), len(jobs))
        if n_workers > 1:
            with ProcessPoolExecutor(max_workers=n_workers) as pool:
                futures = [pool.submit(_run_simulation, cfg, a, b, d) for (a, b), d in zip(jobs, dirs)]
                summaries = [f.result() for f in futures]
        else:
            summaries = [_run_simulation(cfg, a, b, d) for (a, b), d in zip(jobs, dirs)]
        index["runs"] = [dict(s, directory=os.path.basename(d)) for s, d in zip(summaries, dirs)]
        if any(s["status"] != "ok" for s in summaries):
            status = EXIT_RUNTIME

    index["exit_status"] = status
    _write_json(out / "summary.json", index)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gnsdecay", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment described by a TOML file")
    p_run.add_argument("config", help="path to the TOML configuration")
    p_run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a configuration entry, e.g. --set solver.dt=0.005")
    p_run.add_argument("--workers", type=int, default=None,
                       help=f"parallel sweep workers (default: ${WORKERS_ENV} or 1)")
    p_run.add_argument("--output-dir", default=None, help="directory for artifacts")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        overrides = list(args.overrides)
        if args.output_dir is not None:
            overrides.append(f"output_dir={json.dumps(args.output_dir)}")
        cfg = load_config(args.config, overrides)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as err:
        print(f"cannot read configuration: {err}", file=sys.stderr)
        return EXIT_IO
    try:
        return run(cfg, workers=args.workers)
    except OSError as err:
        print(f"I/O failure: {err}", file=sys.stderr)
        return EXIT_IO
