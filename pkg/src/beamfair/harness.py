"""Monte Carlo experiments, fairness metrics and CSV output."""
from __future__ import annotations

import csv
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from beamfair.model import BeamConfig, Config, ConfigError, NetworkScenario, dbm_to_w, generate_scenario
from beamfair.search import (
    SaParams,
    SearchTrace,
    brute_force,
    config_at,
    reference_full_power,
    simulated_annealing,
    space_size,
    tdma_fraction,
)
from beamfair.solver import DEFAULT_MAX_ITER, DEFAULT_TOL, ConvergenceError, solve_config

log = logging.getLogger(__name__)

DEFAULT_BUDGETS_DBM = tuple(float(b) for b in range(-20, 41, 2))
REFERENCE_BEAM_CONFIG = BeamConfig((45.0, 60.0, 30.0), (80.0, 90.0, 100.0))
MODES = ("solve", "sweep", "sa", "bf", "compare")


def jain_index(values) -> float:
    """Jain's fairness index ``(sum v)^2 / (N sum v^2)``."""
    v = np.asarray(values, dtype=float)
    if v.size == 0 or np.any(v < 0):
        raise ValueError("Jain index needs a nonempty nonnegative vector")
    if not np.any(v > 0):
        raise ValueError("Jain index is undefined for an all-zero vector")
    return float(v.sum() ** 2 / (v.size * np.sum(v * v)))


@dataclass
class ExperimentSpec:
    mode: str
    config: Config
    seed: int = 0
    trials: int = 500
    budgets_dbm: tuple[float, ...] = DEFAULT_BUDGETS_DBM
    beam_config: BeamConfig | None = None
    out: str = "results/"
    scenario: NetworkScenario | None = None
    sa_params: SaParams = field(default_factory=SaParams)
    sa_seeds: tuple[int, ...] = tuple(range(20))
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        self.budgets_dbm = tuple(float(b) for b in self.budgets_dbm)
        if not self.budgets_dbm:
            raise ConfigError("at least one power budget is required")
        if any(b <= a for a, b in zip(self.budgets_dbm, self.budgets_dbm[1:])):
            raise ConfigError("power budgets must be strictly increasing")
        if self.beam_config is not None:
            self.beam_config.validate(self.config.params)

    @property
    def params(self):
        return self.config.params

    def fixed_config(self) -> BeamConfig:
        if self.beam_config is not None:
            return self.beam_config
        if self.config.beam_config is not None:
            return self.config.beam_config
        if self.params.n_aps == 3:
            REFERENCE_BEAM_CONFIG.validate(self.params)
            return REFERENCE_BEAM_CONFIG
        raise ConfigError("a fixed beam configuration is required for this mode")

    def solve_kwargs(self) -> dict:
        return {"tol": self.tol, "max_iter": self.max_iter}

    def get_scenario(self) -> NetworkScenario:
        if self.scenario is not None:
            return self.scenario
        return generate_scenario(self.params, self.config.ap_positions, seed=self.seed)


# ---------------------------------------------------------------------------
# output helpers


def output_path(prefix: str, name: str) -> Path:
    """``prefix`` ending in a separator (or naming a directory) is a directory."""
    p = Path(prefix)
    if prefix.endswith(("/", os.sep)) or p.is_dir():
        p.mkdir(parents=True, exist_ok=True)
        return p / name
    p.parent.mkdir(parents=True, exist_ok=True)
    return p.with_name(f"{p.name}_{name}")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[k]) for k in header])
    return path


def worker_count() -> int:
    raw = os.environ.get("BEAMFAIR_THREADS", "0")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"BEAMFAIR_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ConfigError("BEAMFAIR_THREADS must be nonnegative")
    return n or (os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# power sweep

TRIAL_COLUMNS = [
    "trial", "budget_dbm", "n_ues",
    "proposed_c", "proposed_min_rate_bps", "proposed_min_rate_mbps",
    "proposed_jain_fraction", "proposed_jain_rate",
    "reference_min_fraction", "reference_min_rate_bps", "reference_min_rate_mbps", "reference_jain_rate",
    "tdma_fraction", "tdma_min_rate_bps", "tdma_jain_rate",
    "iterations", "residual",
]

METRIC_COLUMNS = [
    "budget_dbm", "scheme", "trials", "failed",
    "fraction_mean", "fraction_p5", "fraction_p95",
    "min_rate_mean_bps", "min_rate_p5_bps", "min_rate_p95_bps", "min_rate_mean_mbps",
    "jain_mean", "jain_p5", "jain_p95",
]

_SCHEME_FIELDS = {
    "proposed": ("proposed_c", "proposed_min_rate_bps", "proposed_jain_rate"),
    "reference": ("reference_min_fraction", "reference_min_rate_bps", "reference_jain_rate"),
    "tdma": ("tdma_fraction", "tdma_min_rate_bps", "tdma_jain_rate"),
}


def _sweep_trial(spec: ExperimentSpec, config: BeamConfig, trial: int):
    """All budgets for one scenario realization; returns (rows, error message or None)."""
    params = spec.params
    try:
        sc = generate_scenario(params, spec.config.ap_positions, seed=spec.seed, trial=trial)
        rows = []
        for dbm in spec.budgets_dbm:
            budget = dbm_to_w(dbm)
            sol = solve_config(sc, config, params, power_budget_w=budget, **spec.solve_kwargs())
            ref = reference_full_power(sc, config, params, power_budget_w=budget)
            tdma_rates = sol.ifr / params.n_ues
            rows.append({
                "trial": trial,
                "budget_dbm": dbm,
                "n_ues": params.n_ues,
                "proposed_c": sol.c_star,
                "proposed_min_rate_bps": float(sol.rates.min()),
                "proposed_min_rate_mbps": float(sol.rates.min()) / 1e6,
                "proposed_jain_fraction": jain_index(sol.per_ue_fraction),
                "proposed_jain_rate": jain_index(sol.rates),
                "reference_min_fraction": ref.min_fraction,
                "reference_min_rate_bps": float(ref.rates.min()),
                "reference_min_rate_mbps": float(ref.rates.min()) / 1e6,
                "reference_jain_rate": jain_index(ref.rates),
                "tdma_fraction": tdma_fraction(params.n_ues),
                "tdma_min_rate_bps": float(tdma_rates.min()),
                "tdma_jain_rate": jain_index(tdma_rates),
                "iterations": sol.iterations,
                "residual": sol.residual,
            })
        return rows, None
    except (ConfigError, ConvergenceError) as exc:
        return [], f"{type(exc).__name__}: {exc}"


def aggregate(trial_rows: list[dict], budgets, failed: int = 0) -> list[dict]:
    """Per-budget, per-scheme mean and 5th/95th percentiles of the trial rows."""
    out = []
    for dbm in budgets:
        rows = [r for r in trial_rows if r["budget_dbm"] == dbm]
        if not rows:
            continue
        for scheme, (f_key, r_key, j_key) in _SCHEME_FIELDS.items():
            frac = np.array([r[f_key] for r in rows])
            rate = np.array([r[r_key] for r in rows])
            jain = np.array([r[j_key] for r in rows])
            out.append({
                "budget_dbm": dbm,
                "scheme": scheme,
                "trials": len(rows),
                "failed": failed,
                "fraction_mean": float(frac.mean()),
                "fraction_p5": float(np.percentile(frac, 5)),
                "fraction_p95": float(np.percentile(frac, 95)),
                "min_rate_mean_bps": float(rate.mean()),
                "min_rate_p5_bps": float(np.percentile(rate, 5)),
                "min_rate_p95_bps": float(np.percentile(rate, 95)),
                "min_rate_mean_mbps": float(rate.mean()) / 1e6,
                "jain_mean": float(jain.mean()),
                "jain_p5": float(np.percentile(jain, 5)),
                "jain_p95": float(np.percentile(jain, 95)),
            })
    return out


@dataclass
class SweepResult:
    trial_rows: list[dict]
    metrics: list[dict]
    failed_trials: list[tuple[int, str]]
    files: list[Path] = field(default_factory=list)


def run_power_sweep(spec: ExperimentSpec, write: bool = True) -> SweepResult:
    config = spec.fixed_config()
    config.validate(spec.params)
    workers = min(worker_count(), spec.trials)
    trials = range(spec.trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: _sweep_trial(spec, config, t), trials))
    else:
        results = [_sweep_trial(spec, config, t) for t in trials]
    rows, failed = [], []
    for t, (trial_rows, err) in zip(trials, results):
        if err is not None:
            log.warning("trial %d quarantined: %s", t, err)
            failed.append((t, err))
        rows.extend(trial_rows)
    metrics = aggregate(rows, spec.budgets_dbm, failed=len(failed))
    result = SweepResult(rows, metrics, failed)
    if write:
        result.files.append(write_csv(output_path(spec.out, "sweep_trials.csv"), TRIAL_COLUMNS, rows))
        result.files.append(write_csv(output_path(spec.out, "sweep.csv"), METRIC_COLUMNS, metrics))
    return result


# ---------------------------------------------------------------------------
# beam search experiments


def _config_columns(m: int) -> list[str]:
    return [f"width_{i + 1}" for i in range(m)] + [f"dir_{i + 1}" for i in range(m)]


def _config_fields(cfg: BeamConfig) -> dict:
    d = {f"width_{i + 1}": w for i, w in enumerate(cfg.widths_deg)}
    d.update({f"dir_{i + 1}": b for i, b in enumerate(cfg.directions_deg)})
    return d


def trace_rows(trace: SearchTrace) -> list[dict]:
    rows = []
    for r in trace.records:
        row = {"step": r.step}
        row.update(_config_fields(r.state))
        row.update({
            "utility": r.utility,
            "delta_u": r.delta_u,
            "accept_prob": r.accept_prob,
            "accepted": r.accepted,
            "temperature": r.temperature,
            "best_so_far": r.best_so_far,
        })
        rows.append(row)
    return rows


def trace_columns(m: int) -> list[str]:
    return ["step", *_config_columns(m), "utility", "delta_u", "accept_prob", "accepted", "temperature", "best_so_far"]


def write_trace(path: Path, trace: SearchTrace, m: int) -> Path:
    return write_csv(path, trace_columns(m), trace_rows(trace))


def write_bf_surface(path: Path, params, utilities) -> Path:
    m = params.n_aps
    rows = []
    for i, u in enumerate(utilities):
        row = {"index": i, **_config_fields(config_at(params, i)), "utility": float(u)}
        rows.append(row)
    return write_csv(path, ["index", *_config_columns(m), "utility"], rows)


SUMMARY_COLUMNS = ["seed", "sa_utility", "bf_utility", "efficiency", "evaluations", "unique_evaluations", "failures"]


@dataclass
class CompareResult:
    bf_config: BeamConfig
    bf_utility: float
    rows: list[dict]
    traces: dict[int, SearchTrace]
    bf_seconds: float
    sa_seconds: list[float]
    files: list[Path] = field(default_factory=list)

    @property
    def efficiencies(self) -> np.ndarray:
        return np.array([r["efficiency"] for r in self.rows])


def run_sa_vs_bf(spec: ExperimentSpec, write: bool = True) -> CompareResult:
    params = spec.params
    scenario = spec.get_scenario()
    t0 = time.perf_counter()
    bf_cfg, bf_sol, utilities = brute_force(scenario, params, solve_kwargs=spec.solve_kwargs())
    bf_seconds = time.perf_counter() - t0
    log.info("brute force: %d configurations in %.2f s, U=%.6f", space_size(params), bf_seconds, bf_sol.c_star)
    rows, traces, sa_seconds = [], {}, []
    for seed in spec.sa_seeds:
        sa = SaParams(spec.sa_params.tau_max, spec.sa_params.tau_min, spec.sa_params.i_max,
                      spec.sa_params.stall_limit, seed)
        t0 = time.perf_counter()
        _, sol, trace = simulated_annealing(scenario, params, sa, solve_kwargs=spec.solve_kwargs())
        sa_seconds.append(time.perf_counter() - t0)
        traces[seed] = trace
        rows.append({
            "seed": seed,
            "sa_utility": sol.c_star,
            "bf_utility": bf_sol.c_star,
            "efficiency": sol.c_star / bf_sol.c_star,
            "evaluations": trace.evaluations,
            "unique_evaluations": trace.unique_evaluations,
            "failures": trace.failures,
        })
    result = CompareResult(bf_cfg, bf_sol.c_star, rows, traces, bf_seconds, sa_seconds)
    if write:
        result.files.append(write_bf_surface(output_path(spec.out, "bf_surface.csv"), params, utilities))
        for seed, trace in traces.items():
            result.files.append(write_trace(output_path(spec.out, f"sa_trace_{seed}.csv"), trace, params.n_aps))
        result.files.append(write_csv(output_path(spec.out, "summary.csv"), SUMMARY_COLUMNS, rows))
    return result
