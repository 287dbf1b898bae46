"""Run drivers: single runs, one-at-a-time parameter sweeps, moving-mode comparison."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .basis import BasisParams, SpectralField, analyze, collocation_points
from .controller import AdaptiveConfig, AdaptationEvent, ThresholdState, controller_step
from .indicators import DegenerateIndicator, exterior_error_indicators, frequency_indicator, m_cut
from .integrator import ConfigurationError, NumericalError, Propagator, step
from .ledger import LedgerTotals, record
from .problems import PROBLEMS, ParabolicProblem, l2_error, projection_residual

CSV_HEADER = ("t", "rel_error", "beta", "x0", "n", "freq", "ext_left", "ext_right",
              "e_scale", "e_move", "e_coarsen")

SWEEP_PARAMETERS = ("q", "nu", "delta", "mu", "gamma", "eta", "eta0")

DEFAULT_BASIS = {
    "example1": BasisParams(1.0, 0.0, 40),
    "example2": BasisParams(1.2, 0.0, 24),
}


@dataclass
class RunConfig:
    problem: str = "example1"
    initial_basis: BasisParams | None = None
    adaptive: AdaptiveConfig = field(default_factory=AdaptiveConfig)
    dt: float | None = None
    t_final: float | None = None
    gl_order: int = 5
    output_path: str | None = None
    log_every: int = 1
    # keep pre/post fields on events so the ledger bound can be verified later
    keep_event_fields: bool = False
    custom: ParabolicProblem | None = None

    def validate(self) -> "RunConfig":
        if self.problem == "custom":
            if self.custom is None:
                raise ConfigurationError("problem 'custom' needs a ParabolicProblem")
        elif self.problem not in PROBLEMS:
            raise ConfigurationError(f"unknown problem {self.problem!r}")
        if int(self.log_every) != self.log_every or self.log_every < 1:
            raise ConfigurationError("log_every must be a positive integer")
        if int(self.gl_order) != self.gl_order or self.gl_order < 1:
            raise ConfigurationError("gl_order must be a positive integer")
        if self.dt is not None and not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if self.t_final is not None and not self.t_final > 0:
            raise ConfigurationError("t_final must be positive")
        try:
            self.adaptive.validate()
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc
        return self

    def build_problem(self) -> ParabolicProblem:
        if self.problem == "custom":
            prob = self.custom
            return prob.with_time(self.t_final, self.dt)
        kw = {}
        if self.dt is not None:
            kw["dt"] = self.dt
        if self.t_final is not None:
            kw["horizon"] = self.t_final
        return PROBLEMS[self.problem](**kw)

    def basis(self) -> BasisParams:
        if self.initial_basis is not None:
            return self.initial_basis
        if self.problem in DEFAULT_BASIS:
            return DEFAULT_BASIS[self.problem]
        raise ConfigurationError("custom problems need an explicit initial basis")

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "initial_basis": self.basis().to_dict(),
            "adaptive": self.adaptive.to_dict(),
            "dt": self.dt,
            "t_final": self.t_final,
            "gl_order": self.gl_order,
            "output_path": self.output_path,
            "log_every": self.log_every,
        }


@dataclass(frozen=True)
class Row:
    t: float
    rel_error: float
    beta: float
    x0: float
    n: int
    freq: float
    ext_left: float
    ext_right: float
    e_scale: float
    e_move: float
    e_coarsen: float
    # diagnostics kept in memory only
    abs_error: float = math.nan
    lower_bound: float = math.nan

    def csv_values(self) -> list:
        return [getattr(self, k) for k in CSV_HEADER]


@dataclass
class RunRecord:
    config: RunConfig
    rows: list
    events: list
    totals: LedgerTotals
    summary: dict
    final_field: SpectralField | None = None

    @property
    def ok(self) -> bool:
        return self.summary.get("status") == "ok"

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def row_at(self, t: float) -> Row:
        """Logged row closest to time ``t``."""
        ts = self.column("t")
        return self.rows[int(np.argmin(np.abs(ts - t)))]


def _lower_bound(field: SpectralField, problem: ParabolicProblem, t: float, freq: float,
                 norm_u: float) -> float:
    # F ||U|| = ||(I - pi_{N-M}) U|| <= e + ||(I - pi_{N-M}) u||, and ||U|| ~ ||u||
    n = field.basis.n
    resid = projection_residual(field, problem.analytic, t, n - m_cut(n))
    return freq * norm_u - resid


def _observe(field: SpectralField, problem: ParabolicProblem, t: float,
             totals: LedgerTotals) -> Row:
    b = field.basis
    try:
        freq = frequency_indicator(field)
    except DegenerateIndicator:
        freq = math.nan
    try:
        e_r, e_l = exterior_error_indicators(field)
    except DegenerateIndicator:
        e_r = e_l = math.nan
    rel = abs_err = lb = math.nan
    if problem.analytic is not None:
        abs_err, norm_u = l2_error(field, problem.analytic, t)
        rel = abs_err / norm_u if norm_u > 0 else math.nan
        if not math.isnan(freq):
            lb = _lower_bound(field, problem, t, freq, norm_u)
    return Row(t, rel, b.beta, b.x0, b.n, freq, e_l, e_r,
               totals.e_scale, totals.e_move, totals.e_coarsen, abs_err, lb)


def _check_breaks(problem: ParabolicProblem) -> None:
    for tb in problem.source_breaks:
        k = tb / problem.dt
        if tb < problem.horizon and abs(k - round(k)) > 1e-9:
            raise ConfigurationError(
                f"time step {problem.dt} does not land on the source break t={tb}")


def run(config: RunConfig) -> RunRecord:
    """Solve one problem with the adaptive controller and log every ``log_every`` steps."""
    config.validate()
    problem = config.build_problem()
    n_steps = problem.n_steps
    _check_breaks(problem)
    dt = problem.dt
    cfg = config.adaptive
    basis = config.basis()

    field_ = analyze(problem.initial(collocation_points(basis)), basis)
    st = ThresholdState.initial(field_, cfg)
    totals = LedgerTotals()
    rows = [_observe(field_, problem, 0.0, totals)]
    events: list[AdaptationEvent] = []
    status, message = "ok", ""
    prop = None
    start = time.perf_counter()
    steps_done = 0
    try:
        for k in range(n_steps):
            if prop is None or prop.basis != field_.basis:
                prop = Propagator(field_.basis, dt, problem.form, config.gl_order)
            field_ = step(field_, k * dt, dt, problem.form, problem.source,
                          config.gl_order, propagator=prop)
            if not np.all(np.isfinite(field_.coeffs)):
                raise NumericalError(f"non-finite coefficients after step {k + 1}")
            t = (k + 1) * dt
            field_, evs = controller_step(field_, t, cfg, st)
            for ev in evs:
                totals = record(ev, totals)
                if not config.keep_event_fields:
                    ev.pre_field = ev.post_field = None
            events.extend(evs)
            steps_done = k + 1
            if (k + 1) % config.log_every == 0 or k + 1 == n_steps:
                rows.append(_observe(field_, problem, t, totals))
    except NumericalError as exc:
        status, message = "numerical_failure", str(exc)
    wall = time.perf_counter() - start

    last = rows[-1]
    summary = {
        "status": status,
        "message": message,
        "problem": problem.name,
        "steps": steps_done,
        "t_final": steps_done * dt,
        "final_rel_error": last.rel_error,
        "final_abs_error": last.abs_error,
        "final_beta": field_.basis.beta,
        "final_x0": field_.basis.x0,
        "final_n": field_.basis.n,
        "wall_time": wall,
        "ledger": totals.to_dict(),
        # e0 is not computable; report what remains after the adaptive terms
        "e0_residual": (last.abs_error - totals.total
                        if not math.isnan(last.abs_error) else math.nan),
    }
    rec = RunRecord(config, rows, events, totals, summary, field_)
    if config.output_path:
        write_outputs(rec, config.output_path)
    return rec


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def write_outputs(rec: RunRecord, path: str | os.PathLike) -> dict:
    """Write ``run.csv``, ``events.json`` and ``summary.json`` into directory ``path``."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    files = {"csv": out / "run.csv", "events": out / "events.json", "summary": out / "summary.json"}
    with open(files["csv"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in rec.rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r.csv_values()])
    with open(files["events"], "w") as fh:
        json.dump(_json_safe([e.to_dict() for e in rec.events]), fh)
    with open(files["summary"], "w") as fh:
        json.dump(_json_safe({"summary": rec.summary, "config": rec.config.to_dict()}), fh, indent=2)
    return files


@dataclass
class SweepResult:
    parameter: str
    values: tuple
    records: list
    errors: list

    def table(self) -> list[dict]:
        out = []
        for v, rec, err in zip(self.values, self.records, self.errors):
            if rec is None:
                out.append({"value": v, "status": "failed", "message": err})
                continue
            s = rec.summary
            out.append({"value": v, "status": s["status"], "final_error": s["final_rel_error"],
                        "final_beta": s["final_beta"], "final_x0": s["final_x0"],
                        "final_n": s["final_n"]})
        return out

    def column(self, key: str) -> list:
        return [row.get(key, math.nan) for row in self.table()]


def _sweep_cell(config: RunConfig):
    try:
        return run(config), None
    except Exception as exc:  # one failed cell must not stop the sweep
        return None, f"{type(exc).__name__}: {exc}"


def sweep_configs(template: RunConfig, parameter: str, values) -> list[RunConfig]:
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigurationError(f"cannot sweep {parameter!r}; choose from {SWEEP_PARAMETERS}")
    configs = []
    for v in values:
        cfg = dataclasses.replace(template, adaptive=dataclasses.replace(template.adaptive, **{parameter: v}))
        if template.output_path:
            cfg.output_path = str(Path(template.output_path) / f"{parameter}={v}")
        configs.append(cfg)
    return configs


def sweep(template: RunConfig, parameter: str, values, workers: int | None = None) -> SweepResult:
    """Vary one adaptive parameter, everything else fixed; runs are independent."""
    values = tuple(values)
    configs = sweep_configs(template, parameter, values)
    if workers is None:
        workers = min(len(configs), os.cpu_count() or 1)
    if workers <= 1 or len(configs) == 1:
        results = [_sweep_cell(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_cell, configs))
    return SweepResult(parameter, values, [r for r, _ in results], [e for _, e in results])


MOVE_MODES = ("both", "left", "right", "off")


def moving_mode_configs(base: RunConfig | None = None) -> dict[str, RunConfig]:
    base = base or RunConfig(problem="example2")
    out = {}
    for mode in MOVE_MODES:
        adaptive = dataclasses.replace(base.adaptive, mu=1.0005, delta=5e-4, d_max=0.2,
                                       scale=False, order=False)
        adaptive.set_move_mode(mode)
        cfg = dataclasses.replace(base, problem="example2", adaptive=adaptive,
                                  initial_basis=BasisParams(1.2, 0.0, 24))
        if base.output_path:
            cfg.output_path = str(Path(base.output_path) / f"move={mode}")
        out[mode] = cfg
    return out


def compare_moving_modes(base: RunConfig | None = None,
                         workers: int | None = None) -> dict[str, RunRecord]:
    """Example 2 with no, leftward-only, rightward-only and bidirectional moving."""
    configs = moving_mode_configs(base)
    if workers is None:
        workers = min(len(configs), os.cpu_count() or 1)
    if workers <= 1:
        return {m: run(c) for m, c in configs.items()}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        recs = list(pool.map(run, configs.values()))
    return dict(zip(configs, recs))


def comparison_table(records: dict[str, RunRecord], times=(2.0, 6.0)) -> list[dict]:
    out = []
    for mode, rec in records.items():
        row = {"mode": mode, "final_error": rec.summary["final_rel_error"],
               "final_x0": rec.summary["final_x0"]}
        for t in times:
            row[f"error@{t:g}"] = rec.row_at(t).rel_error
        out.append(row)
    return out
