"""Max-min weighted rate power control for a fixed beam configuration.

The rate-fraction constraints are rewritten as a fixed point ``p = c T(p)``
of a standard interference mapping ``T``; the normalized iteration
``x <- Pmax T(x) / ||T(x)||_inf`` converges to the optimal power vector and
``c* = Pmax / ||T(p*)||_inf``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from beamfair._backend import kernels
from beamfair.model import BeamConfig, ConfigError, NetworkScenario, SimParams, rng_stream, w_to_dbm
from beamfair.radio import ChannelGains, build_gains, interference_free_rates

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10000


class ConvergenceError(RuntimeError):
    """The normalized iteration did not reach the tolerance.

    ``solution`` holds the last iterate with its residual.
    """

    def __init__(self, message: str, solution: "PowerSolution"):
        super().__init__(message)
        self.solution = solution


@dataclass
class InterferenceMapping:
    gains: ChannelGains
    ifr: np.ndarray  # interference-free rates, bit/s

    def __post_init__(self):
        self.ifr = np.ascontiguousarray(self.ifr, dtype=np.float64)
        assert np.all(self.ifr > 0), "interference-free rates must be positive"

    @property
    def bandwidth_hz(self) -> float:
        return self.gains.bandwidth_hz

    @property
    def noise_w(self) -> float:
        return self.gains.noise_w

    @classmethod
    def from_gains(cls, gains: ChannelGains, power_budget_w: float) -> "InterferenceMapping":
        return cls(gains, interference_free_rates(gains, power_budget_w))

    def _args(self):
        g = self.gains
        return g.serving_gain, g.interf_gain, self.ifr, float(g.bandwidth_hz), float(g.noise_w)


@dataclass
class PowerSolution:
    p_star: np.ndarray
    c_star: float
    assignment: np.ndarray
    iterations: int
    residual: float
    per_ue_fraction: np.ndarray
    rates: np.ndarray
    ifr: np.ndarray
    power_budget_w: float
    converged: bool = True
    residual_history: np.ndarray = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "c_star": self.c_star,
            "p_star_w": self.p_star.tolist(),
            "p_star_dbm": [float(v) for v in w_to_dbm(np.maximum(self.p_star, 1e-300))],
            "assignment": [int(a) for a in self.assignment],
            "iterations": int(self.iterations),
            "residual": self.residual,
            "converged": bool(self.converged),
            "per_ue_fraction": self.per_ue_fraction.tolist(),
            "rates_bps": self.rates.tolist(),
            "interference_free_rates_bps": self.ifr.tolist(),
            "power_budget_w": self.power_budget_w,
            "power_budget_dbm": float(w_to_dbm(self.power_budget_w)),
        }


def apply_T(mapping: InterferenceMapping, p) -> np.ndarray:
    p = np.ascontiguousarray(p, dtype=np.float64)
    if np.any(p < 0):
        raise ValueError("powers must be nonnegative")
    t, _ = kernels.apply_T(*mapping._args(), p)
    return t


def achieved_rates(gains: ChannelGains, p) -> tuple[np.ndarray, np.ndarray]:
    """Per-UE best-AP rates and the serving AP indices."""
    p = np.ascontiguousarray(p, dtype=np.float64)
    return kernels.rates(gains.serving_gain, gains.interf_gain, float(gains.bandwidth_hz), float(gains.noise_w), p)


def recover_assignment(mapping: InterferenceMapping, p_star) -> np.ndarray:
    # argmin of Rbar p / rate over APs equals argmax of the SINR ratio
    p = np.ascontiguousarray(p_star, dtype=np.float64)
    _, arg = kernels.apply_T(*mapping._args(), p)
    return arg


def solve_fixed_point(mapping: InterferenceMapping, power_budget_w: float, tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER, p0=None) -> PowerSolution:
    if not power_budget_w > 0:
        raise ConfigError("power budget must be positive")
    if not tol > 0:
        raise ConfigError("tol must be positive")
    if max_iter < 1:
        raise ConfigError("max_iter must be at least 1")
    n = mapping.gains.n_ues
    if p0 is None:
        p0 = np.full(n, float(power_budget_w))
    p0 = np.ascontiguousarray(p0, dtype=np.float64)
    if p0.shape != (n,) or np.any(p0 < 0):
        raise ConfigError("p0 must be a nonnegative vector with one entry per UE")

    x, c, iters, residual, converged, history = kernels.fixed_point(
        *mapping._args(), float(power_budget_w), p0, float(tol), int(max_iter)
    )
    rates, _ = achieved_rates(mapping.gains, x)
    sol = PowerSolution(
        p_star=x,
        c_star=float(c),
        assignment=recover_assignment(mapping, x),
        iterations=int(iters),
        residual=float(residual),
        per_ue_fraction=rates / mapping.ifr,
        rates=rates,
        ifr=mapping.ifr.copy(),
        power_budget_w=float(power_budget_w),
        converged=bool(converged),
        residual_history=history,
    )
    if not converged:
        raise ConvergenceError(
            f"fixed point not reached in {iters} iterations (residual {residual:.3e}, "
            f"target {tol * power_budget_w:.3e})",
            sol,
        )
    return sol


def solve_config(scenario: NetworkScenario, beam_config: BeamConfig, params: SimParams,
                 power_budget_w: float | None = None, tol: float = DEFAULT_TOL,
                 max_iter: int = DEFAULT_MAX_ITER) -> PowerSolution:
    budget = params.power_budget_w if power_budget_w is None else power_budget_w
    gains = build_gains(scenario, beam_config, params)
    mapping = InterferenceMapping.from_gains(gains, budget)
    return solve_fixed_point(mapping, budget, tol=tol, max_iter=max_iter)


def utility(scenario: NetworkScenario, beam_config: BeamConfig, params: SimParams, **kwargs) -> float:
    """Optimal common rate fraction ``c*`` for one beam configuration."""
    return solve_config(scenario, beam_config, params, **kwargs).c_star


@dataclass
class SifReport:
    samples: int
    scalability_violations: int
    monotonicity_violations: int
    worst_scalability_margin: float
    worst_monotonicity_margin: float

    @property
    def passed(self) -> bool:
        return self.scalability_violations == 0 and self.monotonicity_violations == 0


def verify_sif_axioms(mapping: InterferenceMapping, sample_count: int = 1000, seed: int = 0,
                      power_scale: float = 1.0, alpha_min: float = 1.0 + 1e-6,
                      alpha_max: float = 10.0) -> SifReport:
    """Probe scalability and monotonicity of ``T`` at random points.

    Powers are drawn log-uniformly over twelve decades below ``power_scale``
    with a share of exact zeros. Scalability must hold strictly with a
    relative margin above rounding; monotonicity may not drop below
    rounding level. Margins are relative to ``T``.
    """
    if sample_count < 1:
        raise ConfigError("sample_count must be at least 1")
    rng = rng_stream(seed, 0, "sif-probe")
    n = mapping.gains.n_ues
    k = sample_count
    p = power_scale * 10.0 ** rng.uniform(-12.0, 0.0, size=(k, n))
    p[rng.random((k, n)) < 0.1] = 0.0
    # alpha - 1 log-uniform so that probes crowd the alpha_min edge too
    alpha = 1.0 + np.exp(rng.uniform(np.log(alpha_min - 1.0), np.log(alpha_max - 1.0), size=k))
    bump = power_scale * 10.0 ** rng.uniform(-12.0, 0.0, size=(k, n))
    bump[rng.random((k, n)) < 0.5] = 0.0

    rel_eps = 64 * np.finfo(float).eps
    scal_bad = mono_bad = 0
    worst_scal = worst_mono = np.inf
    for i in range(k):
        t = apply_T(mapping, p[i])
        scal = (alpha[i] * t - apply_T(mapping, alpha[i] * p[i])) / (alpha[i] * t)
        mono = (apply_T(mapping, p[i] + bump[i]) - t) / t
        worst_scal = min(worst_scal, float(scal.min()))
        worst_mono = min(worst_mono, float(mono.min()))
        scal_bad += bool(np.any(scal <= rel_eps))
        mono_bad += bool(np.any(mono < -rel_eps))
    return SifReport(sample_count, scal_bad, mono_bad, worst_scal, worst_mono)
