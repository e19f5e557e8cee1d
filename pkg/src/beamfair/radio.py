"""Channel gains, interference, SINR and rates for one beam configuration.

All powers are watts. Gain matrices are indexed ``[ue, ap]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from beamfair.model import (
    BeamConfig,
    ConfigError,
    NetworkScenario,
    SimParams,
    angular_diff,
    in_mainlobe,
    mainlobe_gain,
    noise_power_w,
)

LN2 = float(np.log(2.0))


def rate_from_sinr(bandwidth_hz, sinr):
    """Shannon rate ``W log2(1 + s)``; the only place log2 is formed."""
    return bandwidth_hz * np.log1p(sinr) / LN2


@dataclass
class ChannelGains:
    serving_gain: np.ndarray  # h[n, m] with mainlobe gains on both ends
    interf_gain: np.ndarray  # gain of UE n's signal leaking into AP m
    noise_w: float
    bandwidth_hz: float

    def __post_init__(self):
        self.serving_gain = np.ascontiguousarray(self.serving_gain, dtype=np.float64)
        self.interf_gain = np.ascontiguousarray(self.interf_gain, dtype=np.float64)
        if self.serving_gain.shape != self.interf_gain.shape:
            raise ConfigError("serving and interference gain matrices differ in shape")

    @property
    def n_ues(self) -> int:
        return self.serving_gain.shape[0]

    @property
    def n_aps(self) -> int:
        return self.serving_gain.shape[1]

    def to_dict(self) -> dict:
        return {
            "serving_gain": self.serving_gain.tolist(),
            "interf_gain": self.interf_gain.tolist(),
            "noise_w": self.noise_w,
            "bandwidth_hz": self.bandwidth_hz,
        }


def combined_interference_gain(tx_width, tx_dir, rx_width, rx_dir, bearing_ue_to_ap, bearing_ap_to_ue, sidelobe):
    """Product of transmit and receive gains on an interference link.

    Exactly one of four products: both mainlobes, transmit mainlobe only,
    receive mainlobe only, or both sidelobes.
    """
    g_tx = mainlobe_gain(tx_width, sidelobe)
    g_rx = mainlobe_gain(rx_width, sidelobe)
    tx_main = in_mainlobe(tx_width, angular_diff(bearing_ue_to_ap, tx_dir))
    rx_main = in_mainlobe(rx_width, angular_diff(bearing_ap_to_ue, rx_dir))
    if tx_main and rx_main:
        return g_tx * g_rx
    if tx_main:
        return sidelobe * g_tx
    if rx_main:
        return sidelobe * g_rx
    return sidelobe * sidelobe


def build_gains(scenario: NetworkScenario, beam_config: BeamConfig, params: SimParams) -> ChannelGains:
    m = scenario.n_aps
    if len(beam_config.widths_deg) != m:
        raise ConfigError(f"beam config has {len(beam_config.widths_deg)} entries for {m} APs")
    eps = params.sidelobe_gain
    g_tx = mainlobe_gain(scenario.ue_tx_beamwidth_deg, eps)
    g_rx = np.array([mainlobe_gain(w, eps) for w in beam_config.widths_deg])
    widths = np.asarray(beam_config.widths_deg)
    dirs = np.asarray(beam_config.directions_deg)

    tx_off = angular_diff(scenario.bearing_ue_to_ap, scenario.ue_tx_directions_deg[:, None])
    rx_off = angular_diff(scenario.bearing_ap_to_ue, dirs[None, :])
    tx_main = in_mainlobe(scenario.ue_tx_beamwidth_deg, tx_off)
    tx_main = np.broadcast_to(tx_main, tx_off.shape)
    rx_main = np.stack([in_mainlobe(widths[j], rx_off[:, j]) for j in range(m)], axis=1)

    both = g_tx * g_rx
    factor = np.where(
        tx_main & rx_main,
        both[None, :],
        np.where(tx_main, eps * g_tx, np.where(rx_main, (eps * g_rx)[None, :], eps * eps)),
    )
    pl = scenario.pl_linear
    return ChannelGains(
        serving_gain=both[None, :] * pl,
        interf_gain=factor * pl,
        noise_w=noise_power_w(params),
        bandwidth_hz=params.bandwidth_hz,
    )


def interference_power(p, gains: ChannelGains, n: int, m: int) -> float:
    p = np.asarray(p, dtype=float)
    total = 0.0
    for k in range(gains.n_ues):
        if k != n:
            total += p[k] * gains.interf_gain[k, m]
    return total


def sinr(p, gains: ChannelGains, n: int, m: int) -> float:
    p = np.asarray(p, dtype=float)
    return p[n] * gains.serving_gain[n, m] / (interference_power(p, gains, n, m) + gains.noise_w)


def achievable_rate(p, gains: ChannelGains, n: int) -> tuple[float, int]:
    """Best-AP rate of UE ``n`` and the AP achieving it (lowest index on ties)."""
    best, arg = -1.0, 0
    for m in range(gains.n_aps):
        r = float(rate_from_sinr(gains.bandwidth_hz, sinr(p, gains, n, m)))
        if r > best:
            best, arg = r, m
    return best, arg


def interference_free_rate(gains: ChannelGains, n: int, power_budget_w: float) -> float:
    if not power_budget_w > 0:
        raise ConfigError("power budget must be positive")
    snr = power_budget_w * gains.serving_gain[n] / gains.noise_w
    return float(np.max(rate_from_sinr(gains.bandwidth_hz, snr)))


def interference_free_rates(gains: ChannelGains, power_budget_w: float) -> np.ndarray:
    if not power_budget_w > 0:
        raise ConfigError("power budget must be positive")
    snr = power_budget_w * gains.serving_gain / gains.noise_w
    return np.max(rate_from_sinr(gains.bandwidth_hz, snr), axis=1)
