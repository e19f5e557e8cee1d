"""Receive-beam configuration search: simulated annealing and brute force."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from beamfair.model import BeamConfig, ConfigError, NetworkScenario, SimParams, angular_diff, los_bearing, rng_stream
from beamfair.radio import build_gains, interference_free_rates
from beamfair.solver import ConvergenceError, PowerSolution, achieved_rates, solve_config

DEFAULT_BF_CAP = 200_000


@dataclass
class SaParams:
    tau_max: float = 42.0
    tau_min: float = 1e-21
    i_max: int = 42
    stall_limit: int = 10
    seed: int = 0

    def __post_init__(self):
        if not self.tau_max > self.tau_min > 0:
            raise ConfigError("temperatures must satisfy tau_max > tau_min > 0")
        if self.i_max < 1:
            raise ConfigError("i_max must be at least 1")
        # ln(2) < 1: a single inner step per pass would heat instead of cool
        if self.i_max == 1 and self.stall_limit < 1:
            raise ConfigError("i_max = 1 needs a positive stall_limit to terminate")


@dataclass
class TraceRecord:
    step: int
    state: BeamConfig
    utility: float
    delta_u: float
    accept_prob: float
    accepted: bool
    temperature: float
    best_so_far: float


@dataclass
class SearchTrace:
    records: list[TraceRecord] = field(default_factory=list)
    unique_evaluations: int = 0
    failures: int = 0

    @property
    def evaluations(self) -> int:
        return len(self.records)

    @property
    def best_so_far(self) -> list[float]:
        return [r.best_so_far for r in self.records]


# ---------------------------------------------------------------------------
# configuration space


def space_size(params: SimParams) -> int:
    m = params.n_aps
    return len(params.ap_beamwidth_set_deg) ** m * len(params.ap_direction_set_deg) ** m


def enumerate_configs(params: SimParams) -> list[BeamConfig]:
    """All beam configurations, widths varying slowest, lexicographic."""
    m = params.n_aps
    return [
        BeamConfig(w, b)
        for w in itertools.product(params.ap_beamwidth_set_deg, repeat=m)
        for b in itertools.product(params.ap_direction_set_deg, repeat=m)
    ]


def config_at(params: SimParams, index: int) -> BeamConfig:
    """Configuration number ``index`` of :func:`enumerate_configs` without building the list."""
    m = params.n_aps
    ws, bs = params.ap_beamwidth_set_deg, params.ap_direction_set_deg
    n_dir = len(bs) ** m
    wi, bi = divmod(index, n_dir)
    widths, dirs = [], []
    for _ in range(m):
        wi, r = divmod(wi, len(ws))
        widths.append(ws[r])
        bi, r = divmod(bi, len(bs))
        dirs.append(bs[r])
    return BeamConfig(widths[::-1], dirs[::-1])


def config_index(params: SimParams, config: BeamConfig) -> int:
    ws, bs = params.ap_beamwidth_set_deg, params.ap_direction_set_deg
    wi = bi = 0
    for w, b in zip(config.widths_deg, config.directions_deg):
        wi = wi * len(ws) + ws.index(w)
        bi = bi * len(bs) + bs.index(b)
    return wi * len(bs) ** params.n_aps + bi


def initial_config(scenario: NetworkScenario, params: SimParams) -> BeamConfig:
    """Widest beam per AP, steered to the candidate closest to the area centre."""
    centre = (params.area_m[0] / 2.0, params.area_m[1] / 2.0)
    widest = max(params.ap_beamwidth_set_deg)
    dirs = []
    for ap in scenario.ap_positions:
        bearing = los_bearing(ap, centre)
        diffs = [angular_diff(bearing, b) for b in params.ap_direction_set_deg]
        dirs.append(params.ap_direction_set_deg[int(np.argmin(diffs))])
    return BeamConfig([widest] * params.n_aps, dirs)


# ---------------------------------------------------------------------------
# annealing


def acceptance_probability(delta_u: float, tau: float) -> float:
    if not tau > 0:
        raise ConfigError("temperature must be positive")
    if delta_u > 0:
        return 1.0
    return math.exp(delta_u / tau)


def accept(delta_u: float, tau: float, rng: np.random.Generator) -> tuple[bool, float]:
    """Metropolis decision; a uniform draw is consumed only when ``delta_u <= 0``."""
    prob = acceptance_probability(delta_u, tau)
    if delta_u > 0:
        return True, prob
    return prob > rng.random(), prob


class _Evaluator:
    """Memoized utility by configuration index; failures are cached as ``None``."""

    def __init__(self, scenario, params, solve_kwargs):
        self.scenario = scenario
        self.params = params
        self.solve_kwargs = solve_kwargs or {}
        self.cache: dict[int, float | None] = {}

    def __call__(self, index: int) -> float | None:
        if index not in self.cache:
            cfg = config_at(self.params, index)
            try:
                self.cache[index] = solve_config(self.scenario, cfg, self.params, **self.solve_kwargs).c_star
            except ConvergenceError:
                self.cache[index] = None
        return self.cache[index]


def simulated_annealing(scenario: NetworkScenario, params: SimParams, sa_params: SaParams | None = None,
                        solve_kwargs: dict | None = None) -> tuple[BeamConfig, PowerSolution, SearchTrace]:
    sa = sa_params or SaParams()
    size = space_size(params)
    rng = rng_stream(sa.seed, 0, "annealing")
    evaluate = _Evaluator(scenario, params, solve_kwargs)
    trace = SearchTrace()

    start = initial_config(scenario, params)
    cur = config_index(params, start)
    u_cur = evaluate(cur)
    if u_cur is None:
        raise ConvergenceError("initial configuration failed to converge", None)
    best, u_best = cur, u_cur
    trace.records.append(TraceRecord(0, start, u_cur, 0.0, 1.0, True, sa.tau_max, u_best))

    tau = sa.tau_max
    stall = 0
    step = 0
    while size > 1 and tau > sa.tau_min:
        improved = False
        for _ in range(sa.i_max):
            step += 1
            cand = int(rng.integers(size - 1))
            if cand >= cur:
                cand += 1
            u = evaluate(cand)
            if u is None:
                trace.failures += 1
                trace.records.append(
                    TraceRecord(step, config_at(params, cand), math.nan, math.nan, 0.0, False, tau, u_best)
                )
                continue
            delta = u - u_cur
            accepted, prob = accept(delta, tau, rng)
            if accepted:
                cur, u_cur = cand, u
                if u > u_best:
                    best, u_best = cand, u
                    improved = True
            trace.records.append(TraceRecord(step, config_at(params, cand), u, delta, prob, accepted, tau, u_best))
        tau = tau / math.log(sa.i_max + 1)
        stall = 0 if improved else stall + 1
        if sa.stall_limit and stall >= sa.stall_limit:
            break

    trace.unique_evaluations = len(evaluate.cache)
    best_cfg = config_at(params, best)
    return best_cfg, solve_config(scenario, best_cfg, params, **(solve_kwargs or {})), trace


# ---------------------------------------------------------------------------
# exhaustive search and baselines


def brute_force(scenario: NetworkScenario, params: SimParams, max_evaluations: int = DEFAULT_BF_CAP,
                solve_kwargs: dict | None = None) -> tuple[BeamConfig, PowerSolution, np.ndarray]:
    """Evaluate every configuration; returns the first maximizer and all utilities (NaN on failure)."""
    size = space_size(params)
    if size > max_evaluations:
        raise ConfigError(f"search space of {size} configurations exceeds the cap of {max_evaluations}")
    evaluate = _Evaluator(scenario, params, solve_kwargs)
    utilities = np.array([np.nan if (u := evaluate(i)) is None else u for i in range(size)])
    if np.all(np.isnan(utilities)):
        raise ConvergenceError("no configuration converged", None)
    best = int(np.nanargmax(utilities))
    best_cfg = config_at(params, best)
    return best_cfg, solve_config(scenario, best_cfg, params, **(solve_kwargs or {})), utilities


@dataclass
class ReferenceResult:
    rates: np.ndarray
    fractions: np.ndarray
    ifr: np.ndarray

    @property
    def min_fraction(self) -> float:
        return float(self.fractions.min())


def reference_full_power(scenario: NetworkScenario, beam_config: BeamConfig, params: SimParams,
                         power_budget_w: float | None = None) -> ReferenceResult:
    """Every UE at full budget, each served by its best AP, interference treated as noise."""
    budget = params.power_budget_w if power_budget_w is None else power_budget_w
    gains = build_gains(scenario, beam_config, params)
    ifr = interference_free_rates(gains, budget)
    rates, _ = achieved_rates(gains, np.full(gains.n_ues, float(budget)))
    return ReferenceResult(rates=rates, fractions=rates / ifr, ifr=ifr)


def tdma_fraction(n_ues: int) -> float:
    if n_ues < 1:
        raise ConfigError("n_ues must be at least 1")
    return 1.0 / n_ues
