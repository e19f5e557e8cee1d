import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beamfair import model, radio
from beamfair.model import BeamConfig, SimParams
from beamfair.radio import build_gains, combined_interference_gain

from conftest import make_scenario

EPS = 0.1


@pytest.mark.parametrize(
    "tx_dir,rx_dir,expected",
    [
        (0.0, 180.0, 3.7 * 10.9),  # both mainlobes
        (0.0, 0.0, EPS * 3.7),  # transmit mainlobe only
        (180.0, 180.0, EPS * 10.9),  # receive mainlobe only
        (180.0, 0.0, EPS * EPS),
    ],
)
def test_four_gain_cases(tx_dir, rx_dir, expected):
    # UE at origin, AP due east: UE->AP bearing 0, AP->UE bearing 180
    g = combined_interference_gain(90.0, tx_dir, 30.0, rx_dir, 0.0, 180.0, EPS)
    assert g == pytest.approx(expected, rel=1e-12)


def test_spot_products():
    assert model.mainlobe_gain(90.0, EPS) * model.mainlobe_gain(30.0, EPS) == pytest.approx(40.33, rel=1e-12)
    assert combined_interference_gain(90.0, 0.0, 30.0, 90.0, 180.0, 0.0, EPS) == pytest.approx(0.01, rel=1e-12)


def test_rate_spot_value():
    assert radio.rate_from_sinr(1e9, 1.0) == pytest.approx(1e9, rel=1e-15)
    assert radio.rate_from_sinr(1e9, 3.0) == pytest.approx(2e9, rel=1e-15)


def _two_ue():
    p = SimParams(n_ues=2, n_aps=2)
    sc = make_scenario([[10.0, 5.0], [20.0, 5.0]], [[10.0, 0.0], [20.0, 0.0]], [270.0, 270.0], p)
    return p, sc


def test_build_gains_matches_scalar_cases():
    p, sc = _two_ue()
    bc = BeamConfig((30.0, 60.0), (90.0, 110.0))
    g = build_gains(sc, bc, p)
    for n in range(2):
        for m in range(2):
            factor = combined_interference_gain(
                p.ue_beamwidth_deg, sc.ue_tx_directions_deg[n], bc.widths_deg[m], bc.directions_deg[m],
                sc.bearing_ue_to_ap[n, m], sc.bearing_ap_to_ue[n, m], p.sidelobe_gain,
            )
            assert g.interf_gain[n, m] == pytest.approx(factor * sc.pl_linear[n, m], rel=1e-14)
            serving = model.mainlobe_gain(90.0, EPS) * model.mainlobe_gain(bc.widths_deg[m], EPS)
            assert g.serving_gain[n, m] == pytest.approx(serving * sc.pl_linear[n, m], rel=1e-14)


def test_interference_never_exceeds_serving(scenario, params):
    from beamfair.search import config_at, space_size

    rng = np.random.default_rng(0)
    for idx in rng.integers(space_size(params), size=30):
        g = build_gains(scenario, config_at(params, int(idx)), params)
        assert np.all(g.interf_gain <= g.serving_gain * (1 + 1e-14))
        assert np.all(g.interf_gain > 0)


def test_omni_everywhere_equals_serving(params):
    p = params.replace(ue_beamwidth_deg=360.0)
    sc = model.generate_scenario(p, seed=4)
    g = build_gains(sc, BeamConfig((360.0,) * 3, (90.0,) * 3), p)
    np.testing.assert_array_equal(g.interf_gain, g.serving_gain)


def test_beam_config_length_mismatch(scenario, params):
    with pytest.raises(model.ConfigError):
        build_gains(scenario, BeamConfig((30.0, 45.0), (90.0, 90.0)), params)


class TestRates:
    def test_vectorized_matches_scalar(self, scenario, params, config):
        from beamfair.solver import achieved_rates

        g = build_gains(scenario, config.beam_config, params)
        p = np.random.default_rng(1).uniform(0, params.power_budget_w, params.n_ues)
        rates, arg = achieved_rates(g, p)
        for n in range(params.n_ues):
            r, a = radio.achievable_rate(p, g, n)
            assert rates[n] == pytest.approx(r, rel=1e-12)
            assert arg[n] == a

    def test_interference_free_rates(self, scenario, params, config):
        g = build_gains(scenario, config.beam_config, params)
        ifr = radio.interference_free_rates(g, 1.0)
        for n in range(params.n_ues):
            assert ifr[n] == pytest.approx(radio.interference_free_rate(g, n, 1.0), rel=1e-15)
            # alone at full power equals the rate with everybody else silent
            p = np.zeros(params.n_ues)
            p[n] = 1.0
            assert ifr[n] == pytest.approx(radio.achievable_rate(p, g, n)[0], rel=1e-12)

    def test_zero_power_zero_rate(self, scenario, params, config):
        g = build_gains(scenario, config.beam_config, params)
        assert radio.achievable_rate(np.zeros(params.n_ues), g, 0)[0] == 0.0

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 19), st.floats(1e-6, 1.0), st.floats(1.0, 100.0))
    def test_monotone_in_own_and_others_power(self, n, base, factor):
        params = SimParams()
        sc = model.generate_scenario(params, seed=7)
        g = build_gains(sc, model.load_config().beam_config, params)
        p = np.full(params.n_ues, base)
        r0, _ = radio.achievable_rate(p, g, n)
        own = p.copy()
        own[n] *= factor
        assert radio.achievable_rate(own, g, n)[0] >= r0
        others = p * factor
        others[n] = base
        assert radio.achievable_rate(others, g, n)[0] <= r0

    def test_ifr_rejects_bad_budget(self, scenario, params, config):
        g = build_gains(scenario, config.beam_config, params)
        with pytest.raises(model.ConfigError):
            radio.interference_free_rates(g, 0.0)
