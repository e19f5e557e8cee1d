"""Geometry, sector antennas, UMi path loss and scenario generation.

Angles are degrees at every public boundary; bearings are measured
counterclockwise from the +x axis.
"""
from __future__ import annotations

import json
import math
import zlib
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

RNG_ALGORITHM = "PCG64-v1"
REFERENCE_DISTANCE_M = 1.0


class ConfigError(ValueError):
    """Invalid parameters, geometry or configuration document."""


class PlacementError(ConfigError):
    """UE placement failed within the attempt budget."""


# ---------------------------------------------------------------------------
# unit conversions


def dbm_to_w(dbm):
    out = 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)
    return float(out) if out.ndim == 0 else out


def w_to_dbm(watts):
    out = 10.0 * np.log10(np.asarray(watts, dtype=float)) + 30.0
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# parameters


@dataclass
class SimParams:
    n_ues: int = 20
    n_aps: int = 3
    carrier_ghz: float = 28.0
    bandwidth_hz: float = 1e9
    noise_density_dbm_hz: float = -145.0
    sidelobe_gain: float = 0.1
    ue_beamwidth_deg: float = 90.0
    ue_direction_range_deg: tuple[float, float] = (250.0, 290.0)
    ap_beamwidth_set_deg: tuple[float, ...] = (30.0, 45.0, 60.0)
    ap_direction_set_deg: tuple[float, ...] = (70.0, 80.0, 90.0, 100.0, 110.0)
    area_m: tuple[float, float] = (30.0, 20.0)
    ue_min_separation_m: float = 4.0
    shadow_sigma_db: float = 4.2
    intersite_shadow_corr: float = 0.5
    power_budget_dbm: float = 30.0
    pl_exponent_coeff: float = 18.5
    pl_intercept_db: float = 32.4

    def __post_init__(self):
        self.ue_direction_range_deg = tuple(float(v) for v in self.ue_direction_range_deg)
        self.ap_beamwidth_set_deg = tuple(float(v) for v in self.ap_beamwidth_set_deg)
        self.ap_direction_set_deg = tuple(float(v) for v in self.ap_direction_set_deg)
        self.area_m = tuple(float(v) for v in self.area_m)
        self.validate()

    def validate(self) -> None:
        if int(self.n_ues) != self.n_ues or self.n_ues < 1:
            raise ConfigError(f"n_ues must be a positive integer, got {self.n_ues}")
        if int(self.n_aps) != self.n_aps or self.n_aps < 1:
            raise ConfigError(f"n_aps must be a positive integer, got {self.n_aps}")
        if not 0.0 < self.sidelobe_gain < 1.0:
            raise ConfigError(f"sidelobe_gain must lie in (0, 1), got {self.sidelobe_gain}")
        if not self.bandwidth_hz > 0:
            raise ConfigError("bandwidth_hz must be positive")
        if not self.carrier_ghz > 0:
            raise ConfigError("carrier_ghz must be positive")
        if not 0.0 <= self.intersite_shadow_corr <= 1.0:
            raise ConfigError("intersite_shadow_corr must lie in [0, 1]")
        if self.shadow_sigma_db < 0:
            raise ConfigError("shadow_sigma_db must be nonnegative")
        if not 0.0 < self.ue_beamwidth_deg <= 360.0:
            raise ConfigError("ue_beamwidth_deg must lie in (0, 360]")
        if len(self.ue_direction_range_deg) != 2 or self.ue_direction_range_deg[0] > self.ue_direction_range_deg[1]:
            raise ConfigError("ue_direction_range_deg must be [min, max]")
        for name in ("ap_beamwidth_set_deg", "ap_direction_set_deg"):
            values = getattr(self, name)
            if not values:
                raise ConfigError(f"{name} must be nonempty")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ConfigError(f"{name} must be strictly increasing without duplicates")
        if any(not 0.0 < w < 360.0 for w in self.ap_beamwidth_set_deg):
            raise ConfigError("AP beam widths must lie in (0, 360)")
        if len(self.area_m) != 2 or min(self.area_m) <= 0:
            raise ConfigError("area_m must be (width, height) with positive sides")
        if self.ue_min_separation_m < 0:
            raise ConfigError("ue_min_separation_m must be nonnegative")

    @property
    def power_budget_w(self) -> float:
        return float(dbm_to_w(self.power_budget_dbm))

    @property
    def noise_w(self) -> float:
        return noise_power_w(self)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SimParams":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown SimParams keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def replace(self, **changes) -> "SimParams":
        d = asdict(self)
        d.update(changes)
        return SimParams(**d)


def noise_power_w(params: SimParams) -> float:
    """Thermal noise over the whole band, in watts."""
    return float(dbm_to_w(params.noise_density_dbm_hz + 10.0 * math.log10(params.bandwidth_hz)))


@dataclass(frozen=True)
class BeamConfig:
    widths_deg: tuple[float, ...]
    directions_deg: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "widths_deg", tuple(float(w) for w in self.widths_deg))
        object.__setattr__(self, "directions_deg", tuple(float(b) for b in self.directions_deg))
        if len(self.widths_deg) != len(self.directions_deg):
            raise ConfigError(
                f"beam widths ({len(self.widths_deg)}) and directions ({len(self.directions_deg)}) differ in length"
            )

    def validate(self, params: SimParams) -> None:
        if len(self.widths_deg) != params.n_aps:
            raise ConfigError(f"beam config has {len(self.widths_deg)} entries, expected n_aps={params.n_aps}")
        bad_w = [w for w in self.widths_deg if w not in params.ap_beamwidth_set_deg]
        bad_b = [b for b in self.directions_deg if b not in params.ap_direction_set_deg]
        if bad_w:
            raise ConfigError(f"beam widths {bad_w} not in candidate set {params.ap_beamwidth_set_deg}")
        if bad_b:
            raise ConfigError(f"beam directions {bad_b} not in candidate set {params.ap_direction_set_deg}")

    def to_dict(self) -> dict:
        return {"widths_deg": list(self.widths_deg), "directions_deg": list(self.directions_deg)}


# ---------------------------------------------------------------------------
# antenna and geometry


def _check_antenna(beamwidth_deg: float, sidelobe: float) -> None:
    if not 0.0 < beamwidth_deg <= 360.0:
        raise ConfigError(f"beam width must lie in (0, 360] degrees, got {beamwidth_deg}")
    if not 0.0 < sidelobe < 1.0:
        raise ConfigError(f"sidelobe gain must lie in (0, 1), got {sidelobe}")


def mainlobe_gain(beamwidth_deg: float, sidelobe: float) -> float:
    """Mainlobe gain of the two-level sector pattern.

    The pattern radiates unit average power: the mainlobe gain times the
    beam width plus the sidelobe gain times the remaining circle is 2*pi.
    """
    _check_antenna(beamwidth_deg, sidelobe)
    theta = math.radians(beamwidth_deg)
    return (2.0 * math.pi - (2.0 * math.pi - theta) * sidelobe) / theta


def in_mainlobe(beamwidth_deg: float, offset_deg):
    """Boresight-inclusive, edge-exclusive mainlobe test; omni covers everything."""
    if beamwidth_deg >= 360.0:
        return np.ones_like(offset_deg, dtype=bool) if np.ndim(offset_deg) else True
    return offset_deg < beamwidth_deg / 2.0


def sector_gain(beamwidth_deg: float, sidelobe: float, offset_deg: float) -> float:
    _check_antenna(beamwidth_deg, sidelobe)
    if not 0.0 <= offset_deg <= 180.0:
        raise ConfigError(f"offset must be normalized into [0, 180], got {offset_deg}")
    if in_mainlobe(beamwidth_deg, offset_deg):
        return mainlobe_gain(beamwidth_deg, sidelobe)
    return sidelobe


def los_bearing(src: Sequence[float], dst: Sequence[float]) -> float:
    """Bearing of ``dst`` seen from ``src`` in [0, 360)."""
    dx = float(dst[0]) - float(src[0])
    dy = float(dst[1]) - float(src[1])
    if dx == 0.0 and dy == 0.0:
        raise ConfigError(f"coincident points {tuple(src)} has no bearing")
    b = math.degrees(math.atan2(dy, dx)) % 360.0
    return 0.0 if b >= 360.0 else b


def angular_diff(a, b):
    """Absolute angular difference wrapped into [0, 180]."""
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 360.0
    d = np.minimum(d, 360.0 - d)
    return float(d) if d.ndim == 0 else d


def path_loss_db(params: SimParams, distance_m, shadow_db=0.0):
    """UMi open-square LoS path loss in dB (reference distance 1 m)."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(d < REFERENCE_DISTANCE_M):
        raise ConfigError(f"distance below the 1 m reference distance: {np.min(d)}")
    pl = (
        params.pl_intercept_db
        + params.pl_exponent_coeff * np.log10(d)
        + 20.0 * math.log10(params.carrier_ghz)
        + np.asarray(shadow_db, dtype=float)
    )
    return float(pl) if pl.ndim == 0 else pl


# ---------------------------------------------------------------------------
# random streams


def rng_stream(seed: int, trial: int, purpose: str) -> np.random.Generator:
    """Independent PCG64 sub-stream keyed by (seed, trial, purpose)."""
    if seed < 0 or trial < 0:
        raise ConfigError("seed and trial must be nonnegative")
    tag = zlib.crc32(purpose.encode("utf-8"))
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(trial), tag))
    return np.random.Generator(np.random.PCG64(ss))


# ---------------------------------------------------------------------------
# scenarios


def default_ap_positions(params: SimParams) -> np.ndarray:
    """APs evenly spaced along the lower long edge, looking into the area (+y)."""
    w = params.area_m[0]
    xs = [(i + 0.5) * w / params.n_aps for i in range(params.n_aps)]
    return np.array([[x, 0.0] for x in xs], dtype=float)


@dataclass
class NetworkScenario:
    ue_positions: np.ndarray
    ap_positions: np.ndarray
    ue_tx_directions_deg: np.ndarray
    ue_tx_beamwidth_deg: float
    shadow_db: np.ndarray
    pl_linear: np.ndarray
    seed: int = 0
    trial: int = 0
    # bearings[n, m]: UE n -> AP m, and AP m -> UE n
    bearing_ue_to_ap: np.ndarray = field(init=False, repr=False)
    bearing_ap_to_ue: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.ue_positions = np.asarray(self.ue_positions, dtype=float).reshape(-1, 2)
        self.ap_positions = np.asarray(self.ap_positions, dtype=float).reshape(-1, 2)
        self.ue_tx_directions_deg = np.asarray(self.ue_tx_directions_deg, dtype=float)
        self.shadow_db = np.asarray(self.shadow_db, dtype=float)
        self.pl_linear = np.asarray(self.pl_linear, dtype=float)
        n, m = self.n_ues, self.n_aps
        if self.ue_tx_directions_deg.shape != (n,):
            raise ConfigError("ue_tx_directions_deg must have one entry per UE")
        if self.shadow_db.shape != (n, m) or self.pl_linear.shape != (n, m):
            raise ConfigError(f"shadow_db and pl_linear must be {n}x{m}")
        if not np.all(self.pl_linear > 0):
            raise ConfigError("pl_linear entries must be strictly positive")
        self.bearing_ue_to_ap = np.empty((n, m))
        self.bearing_ap_to_ue = np.empty((n, m))
        for i in range(n):
            for j in range(m):
                self.bearing_ue_to_ap[i, j] = los_bearing(self.ue_positions[i], self.ap_positions[j])
                self.bearing_ap_to_ue[i, j] = los_bearing(self.ap_positions[j], self.ue_positions[i])

    @property
    def n_ues(self) -> int:
        return self.ue_positions.shape[0]

    @property
    def n_aps(self) -> int:
        return self.ap_positions.shape[0]

    def distances(self) -> np.ndarray:
        diff = self.ue_positions[:, None, :] - self.ap_positions[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])

    def to_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "trial": int(self.trial),
            "ue_positions": self.ue_positions.tolist(),
            "ap_positions": self.ap_positions.tolist(),
            "ue_tx_directions_deg": self.ue_tx_directions_deg.tolist(),
            "ue_tx_beamwidth_deg": float(self.ue_tx_beamwidth_deg),
            "shadow_db": self.shadow_db.tolist(),
            "pl_linear": self.pl_linear.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkScenario":
        try:
            return cls(
                ue_positions=d["ue_positions"],
                ap_positions=d["ap_positions"],
                ue_tx_directions_deg=d["ue_tx_directions_deg"],
                ue_tx_beamwidth_deg=d["ue_tx_beamwidth_deg"],
                shadow_db=d["shadow_db"],
                pl_linear=d["pl_linear"],
                seed=d.get("seed", 0),
                trial=d.get("trial", 0),
            )
        except KeyError as exc:
            raise ConfigError(f"scenario document missing key {exc}") from exc


def _place_ues(params: SimParams, ap_positions: np.ndarray, rng: np.random.Generator,
               max_attempts: int, max_restarts: int) -> np.ndarray:
    w, h = params.area_m
    sep2 = params.ue_min_separation_m ** 2
    d02 = REFERENCE_DISTANCE_M ** 2
    for _ in range(max_restarts):
        placed: list[np.ndarray] = []
        for _n in range(params.n_ues):
            for _a in range(max_attempts):
                cand = rng.uniform((0.0, 0.0), (w, h))
                if placed and np.min(np.sum((np.asarray(placed) - cand) ** 2, axis=1)) < sep2:
                    continue
                if np.min(np.sum((ap_positions - cand) ** 2, axis=1)) < d02:
                    continue
                placed.append(cand)
                break
            else:
                break
        if len(placed) == params.n_ues:
            return np.asarray(placed)
    raise PlacementError(
        f"could not place {params.n_ues} UEs with {params.ue_min_separation_m} m separation "
        f"in a {w}x{h} m area"
    )


def correlated_shadowing(params: SimParams, n_ues: int, n_aps: int, rng: np.random.Generator) -> np.ndarray:
    """Per-UE equicorrelated Gaussian shadowing across APs, in dB."""
    rho = params.intersite_shadow_corr
    sigma = params.shadow_sigma_db
    z = rng.standard_normal((n_ues, n_aps))
    if rho >= 1.0:
        return sigma * np.repeat(z[:, :1], n_aps, axis=1)
    cov = (1.0 - rho) * np.eye(n_aps) + rho * np.ones((n_aps, n_aps))
    chol = np.linalg.cholesky(cov)
    return sigma * z @ chol.T


def generate_scenario(params: SimParams, ap_positions=None, seed: int = 0, trial: int = 0,
                      max_attempts: int = 2000, max_restarts: int = 20) -> NetworkScenario:
    """Draw UE positions, beams and shadowing; fully determined by (seed, trial)."""
    aps = default_ap_positions(params) if ap_positions is None else np.asarray(ap_positions, dtype=float)
    if aps.shape != (params.n_aps, 2):
        raise ConfigError(f"expected {params.n_aps} AP positions, got array of shape {aps.shape}")
    ues = _place_ues(params, aps, rng_stream(seed, trial, "positions"), max_attempts, max_restarts)
    lo, hi = params.ue_direction_range_deg
    dirs = rng_stream(seed, trial, "directions").uniform(lo, hi, size=params.n_ues)
    shadow = correlated_shadowing(params, params.n_ues, params.n_aps, rng_stream(seed, trial, "shadowing"))
    diff = ues[:, None, :] - aps[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    pl = 10.0 ** (-path_loss_db(params, dist, shadow) / 10.0)
    return NetworkScenario(
        ue_positions=ues,
        ap_positions=aps,
        ue_tx_directions_deg=dirs,
        ue_tx_beamwidth_deg=params.ue_beamwidth_deg,
        shadow_db=shadow,
        pl_linear=pl,
        seed=seed,
        trial=trial,
    )


# ---------------------------------------------------------------------------
# configuration documents


@dataclass
class Config:
    params: SimParams
    ap_positions: np.ndarray
    beam_config: BeamConfig | None = None
    rng: str = RNG_ALGORITHM

    def to_dict(self) -> dict:
        d = self.params.to_dict()
        d["ap_positions"] = np.asarray(self.ap_positions).tolist()
        d["rng"] = self.rng
        if self.beam_config is not None:
            d["beam_config"] = self.beam_config.to_dict()
        return d


def parse_config(doc: dict) -> Config:
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    doc = dict(doc)
    rng = doc.pop("rng", RNG_ALGORITHM)
    if rng != RNG_ALGORITHM:
        raise ConfigError(f"unsupported rng {rng!r}; this build implements {RNG_ALGORITHM!r}")
    aps = doc.pop("ap_positions", None)
    beam = doc.pop("beam_config", None)
    params = SimParams.from_dict(doc)
    aps = default_ap_positions(params) if aps is None else np.asarray(aps, dtype=float)
    if aps.shape != (params.n_aps, 2):
        raise ConfigError(f"ap_positions must be {params.n_aps} pairs [x, y]")
    bc = None
    if beam is not None:
        try:
            bc = BeamConfig(beam["widths_deg"], beam["directions_deg"])
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed beam_config: {exc}") from exc
        bc.validate(params)
    return Config(params=params, ap_positions=aps, beam_config=bc, rng=rng)


def default_config_text() -> str:
    return resources.files("beamfair").joinpath("data/default_scenario.json").read_text()


def load_config(path: str | Path | None = None) -> Config:
    """Read a configuration JSON; ``None`` loads the shipped default.

    Missing files raise ``OSError``; malformed content raises ``ConfigError``.
    """
    text = default_config_text() if path is None else Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return parse_config(doc)
