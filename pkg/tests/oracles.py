"""Independent reference computations that only touch the gain matrices."""
import numpy as np

from beamfair import model
from beamfair.model import BeamConfig, SimParams


def ifr_nats(serving, noise, budget):
    return np.log1p(budget * serving / noise).max(axis=1)


def grid_max_min(serving, interf, noise, budget, points=2000):
    """Max over a uniform power grid of ``min_n R_n / Rbar_n`` for two UEs."""
    assert serving.shape[0] == 2
    rbar = ifr_nats(serving, noise, budget)
    grid = np.linspace(0.0, budget, points)
    p1, p2 = grid[:, None], grid[None, :]
    r1 = np.max([np.log1p(p1 * serving[0, m] / (p2 * interf[1, m] + noise)) for m in range(serving.shape[1])], axis=0)
    r2 = np.max([np.log1p(p2 * serving[1, m] / (p1 * interf[0, m] + noise)) for m in range(serving.shape[1])], axis=0)
    return float(np.minimum(r1 / rbar[0], r2 / rbar[1]).max())


def oracle_instances(count=25, seed=2024):
    """Generated two-UE, two-AP scenarios with random beam configurations."""
    params = SimParams(n_ues=2, n_aps=2)
    for i in range(count):
        sc = model.generate_scenario(params, seed=seed, trial=i)
        rng = model.rng_stream(seed, i, "oracle-instance")
        widths = rng.choice(params.ap_beamwidth_set_deg, size=2)
        dirs = rng.choice(params.ap_direction_set_deg, size=2)
        yield params, sc, BeamConfig(tuple(float(w) for w in widths), tuple(float(d) for d in dirs))
