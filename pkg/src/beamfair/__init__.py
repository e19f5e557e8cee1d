"""Fair uplink power control and receive-beam search for mmWave hotspots."""
from beamfair._backend import BACKEND
from beamfair.model import (
    BeamConfig,
    ConfigError,
    NetworkScenario,
    SimParams,
    generate_scenario,
    load_config,
)
from beamfair.radio import ChannelGains, build_gains
from beamfair.search import SaParams, brute_force, simulated_annealing
from beamfair.solver import ConvergenceError, PowerSolution, solve_fixed_point, utility

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BeamConfig",
    "ChannelGains",
    "ConfigError",
    "ConvergenceError",
    "NetworkScenario",
    "PowerSolution",
    "SaParams",
    "SimParams",
    "brute_force",
    "build_gains",
    "generate_scenario",
    "load_config",
    "simulated_annealing",
    "solve_fixed_point",
    "utility",
]
