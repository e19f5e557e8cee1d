"""Compiled kernels must agree with the numpy fallback."""
import numpy as np
import pytest

from beamfair import model
from beamfair._backend import BACKEND, compiled_kernels, python_kernels
from beamfair.radio import build_gains, interference_free_rates
from beamfair.search import config_at

pytestmark = pytest.mark.skipif(compiled_kernels is None, reason="compiled extension not built")


def _cases(params, n=8):
    rng = np.random.default_rng(3)
    for i in range(n):
        sc = model.generate_scenario(params, seed=100 + i)
        g = build_gains(sc, config_at(params, int(rng.integers(3375))), params)
        ifr = interference_free_rates(g, params.power_budget_w)
        p = params.power_budget_w * rng.random(params.n_ues)
        p[rng.random(params.n_ues) < 0.2] = 0.0
        yield g, ifr, p


def test_backend_default_is_compiled():
    assert BACKEND == "cython"


def test_rates_parity(params):
    for g, _, p in _cases(params):
        args = (g.serving_gain, g.interf_gain, g.bandwidth_hz, g.noise_w, p)
        r1, a1 = python_kernels.rates(*args)
        r2, a2 = compiled_kernels.rates(*args)
        np.testing.assert_allclose(r2, r1, rtol=1e-12)
        np.testing.assert_array_equal(a1, a2)


def test_apply_T_parity(params):
    for g, ifr, p in _cases(params):
        args = (g.serving_gain, g.interf_gain, ifr, g.bandwidth_hz, g.noise_w, p)
        t1, a1 = python_kernels.apply_T(*args)
        t2, a2 = compiled_kernels.apply_T(*args)
        np.testing.assert_allclose(t2, t1, rtol=1e-12)
        np.testing.assert_array_equal(a1, a2)


def test_fixed_point_parity(params):
    budget = params.power_budget_w
    for g, ifr, _ in _cases(params):
        args = (g.serving_gain, g.interf_gain, ifr, g.bandwidth_hz, g.noise_w, budget,
                np.full(params.n_ues, budget), 1e-10, 10000)
        x1, c1, k1, _, ok1, h1 = python_kernels.fixed_point(*args)
        x2, c2, k2, _, ok2, h2 = compiled_kernels.fixed_point(*args)
        assert ok1 and ok2
        assert c2 == pytest.approx(c1, rel=1e-9)
        np.testing.assert_allclose(x2, x1, rtol=1e-8, atol=1e-12 * budget)
        assert abs(k1 - k2) <= 2
        assert len(h1) == k1 and len(h2) == k2
