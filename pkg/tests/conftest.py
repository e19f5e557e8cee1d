import numpy as np
import pytest

from beamfair import model
from beamfair._backend import compiled_kernels, python_kernels

BACKENDS = [pytest.param(python_kernels, id="python")]
if compiled_kernels is not None:
    BACKENDS.append(pytest.param(compiled_kernels, id="cython"))


@pytest.fixture(scope="session")
def config():
    return model.load_config()


@pytest.fixture(scope="session")
def params(config):
    return config.params


@pytest.fixture(scope="session")
def scenario(config):
    return model.generate_scenario(config.params, config.ap_positions, seed=7)


@pytest.fixture(params=BACKENDS)
def kernels(request):
    return request.param


def make_scenario(ue_positions, ap_positions, ue_dirs, params, shadow=None):
    """Hand-built scenario with deterministic (default zero) shadowing."""
    ues = np.asarray(ue_positions, dtype=float)
    aps = np.asarray(ap_positions, dtype=float)
    shadow = np.zeros((len(ues), len(aps))) if shadow is None else np.asarray(shadow, dtype=float)
    diff = ues[:, None, :] - aps[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    pl = 10.0 ** (-model.path_loss_db(params, dist, shadow) / 10.0)
    return model.NetworkScenario(ues, aps, ue_dirs, params.ue_beamwidth_deg, shadow, pl)
