"""Scenario configuration, world layout and task generation.

Configuration files are flat ``key = value`` text, one key per line, ``#``
starts a comment.  dB-valued keys (``beta0_db``, ``noise_dbm``) are
converted to linear SI units on load; everything else is already SI.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    """Raised for unparseable or invalid configuration."""


def derive_rng(seed: int, *keys) -> np.random.Generator:
    """Independent, reproducible random stream for ``seed`` and a key path.

    String keys are mapped through CRC32 so the stream identity does not
    depend on Python's salted ``hash``.
    """
    spawn = tuple(zlib.crc32(k.encode()) if isinstance(k, str) else int(k) for k in keys)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=spawn)))


@dataclass(frozen=True)
class Location:
    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        if self.z < 0:
            raise ConfigError(f"location below ground: z={self.z}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class TaskSpec:
    data_bits: float
    cycles_per_bit: float
    deadline: float

    @property
    def cycles(self) -> float:
        return self.data_bits * self.cycles_per_bit


@dataclass(frozen=True)
class NodeProfile:
    """An MTU, resource device or the UAV as seen by its digital twin.

    ``f_est`` is the DT-estimated CPU frequency and ``f_dev`` the signed
    DT deviation; the physical frequency is ``f_est - f_dev``.
    """

    id: int
    location: Location
    f_est: float
    f_dev: float
    f_max: float
    kappa: float
    p_max: float
    energy_budget: float

    def __post_init__(self):
        if self.f_est - self.f_dev <= 0:
            raise ConfigError(f"node {self.id}: actual frequency f_est - f_dev must be positive")
        if not 0 <= self.f_est <= self.f_max:
            raise ConfigError(f"node {self.id}: f_est outside [0, f_max]")
        if self.kappa <= 0:
            raise ConfigError(f"node {self.id}: kappa must be positive")
        if self.energy_budget <= 0:
            raise ConfigError(f"node {self.id}: energy_budget must be positive")


@dataclass(frozen=True)
class ScenarioConfig:
    # population and horizon
    M: int = 6
    K: int = 10
    Q: int = 15
    N: int = 100
    tau: float = 9.0
    slot_share: float = 0.0  # 0 -> tau / M
    # geometry
    H: float = 500.0
    region_x: float = 400.0
    region_y: float = 400.0
    fhp_rows: int = 3
    fhp_cols: int = 5
    bs_x: float = -1200.0
    bs_y: float = 200.0
    device_coords: str = ""  # "x:y,x:y,..." or empty for seeded placement
    uav_start_fhp: int = -1  # -1 -> FHP nearest the region centre
    # radio
    B: float = 100e6
    noise_dbm: float = -60.0
    beta0_db: float = -30.0
    p_max_mtu: float = 1.0
    p_max_uav: float = 5.0
    # UAV flight
    P_f: float = 0.11
    P_h: float = 0.08
    V: float = 20.0
    # computing
    f_max_mtu: float = 6e9
    f_max_device: float = 8e9
    f_max_uav: float = 10e9
    f_est_frac: float = 1.0
    kappa_mtu: float = 1e-26
    kappa_device: float = 1e-26
    kappa_uav: float = 1e-26
    deviation_delta: float = 0.1
    deviation_mode: str = "symmetric"  # symmetric | positive | none
    # energy budgets over one episode
    budget_mtu: float = 1e5
    budget_device: float = 1e5
    budget_uav: float = 1e5
    # tasks
    data_bits_min: float = 50e6
    data_bits_max: float = 150e6
    cycles_per_bit: float = 30.0
    deadline_min: float = 0.0  # 0 -> half the slot share
    deadline_max: float = 0.0  # 0 -> the slot share
    # mobility (Gauss-Markov)
    mu1: float = 0.99
    mu2: float = 0.95
    v_mean: float = 5.0
    lambda_mean: float = 0.0
    lambda_std: float = 1.0
    gamma_mean: float = 0.0
    gamma_std: float = 0.3
    literal_eq7: bool = False
    # reward
    penalty: float = 5000.0
    reward_scale: float = 1000.0
    single_fhp_per_slot: bool = False
    seed: int = 42

    # derived quantities, not part of the file schema
    sigma2: float = field(init=False, repr=False, compare=False)
    beta0: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sigma2", 10 ** (self.noise_dbm / 10) * 1e-3)
        object.__setattr__(self, "beta0", 10 ** (self.beta0_db / 10))
        self.validate()

    @property
    def t_m(self) -> float:
        """Per-MTU TDMA share of a slot (equal split unless configured)."""
        return self.slot_share if self.slot_share > 0 else self.tau / self.M

    @property
    def T_max(self) -> float:
        return self.deadline_max if self.deadline_max > 0 else self.t_m

    @property
    def T_min(self) -> float:
        return self.deadline_min if self.deadline_min > 0 else 0.5 * self.T_max

    def validate(self):
        for name in ("M", "K", "Q", "N"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        positive = ("tau", "H", "region_x", "region_y", "B", "p_max_mtu", "p_max_uav",
                    "P_f", "P_h", "V", "f_max_mtu", "f_max_device", "f_max_uav",
                    "kappa_mtu", "kappa_device", "kappa_uav", "budget_mtu",
                    "budget_device", "budget_uav", "data_bits_min", "cycles_per_bit",
                    "penalty", "reward_scale", "v_mean")
        for name in positive:
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ConfigError(f"{name} must be positive and finite, got {value}")
        for name in ("slot_share", "deadline_min", "deadline_max"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0 (0 selects the default)")
        if self.M * self.t_m > self.tau * (1 + 1e-12):
            raise ConfigError("slot_share: M * t_m exceeds the slot length tau")
        if self.T_max > self.t_m * (1 + 1e-12):
            raise ConfigError("deadline_max exceeds the per-MTU slot share t_m")
        if self.T_min > self.T_max:
            raise ConfigError("deadline_min exceeds deadline_max")
        if self.data_bits_max < self.data_bits_min:
            raise ConfigError("data_bits_max below data_bits_min")
        if self.fhp_rows * self.fhp_cols != self.Q:
            raise ConfigError(f"Q={self.Q} does not match fhp_rows*fhp_cols")
        if not 0 < self.f_est_frac <= 1:
            raise ConfigError("f_est_frac must lie in (0, 1]")
        if self.deviation_mode not in ("symmetric", "positive", "none"):
            raise ConfigError(f"deviation_mode: unknown mode {self.deviation_mode!r}")
        if not 0 <= self.deviation_delta < 1:
            raise ConfigError("deviation_delta: must lie in [0, 1) (f_dev = f_est leaves no actual frequency)")
        for name in ("mu1", "mu2"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.lambda_std < 0 or self.gamma_std < 0:
            raise ConfigError("mobility standard deviations must be >= 0")
        if not -1 <= self.uav_start_fhp < self.Q:
            raise ConfigError("uav_start_fhp out of range")
        parse_device_coords(self.device_coords, self.K)

    def replace(self, **changes) -> "ScenarioConfig":
        base = {f.name: getattr(self, f.name) for f in fields(self) if f.init}
        base.update(changes)
        return ScenarioConfig(**base)


def _schema():
    return {f.name: f for f in fields(ScenarioConfig) if f.init}


def _coerce(name, text, ftype):
    text = text.strip()
    try:
        if ftype in ("int", int):
            return int(float(text)) if "e" in text.lower() else int(text)
        if ftype in ("float", float):
            return float(text)
        if ftype in ("bool", bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        return text
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {text!r} as {ftype}") from None


def parse_config_text(text: str, **overrides) -> ScenarioConfig:
    schema = _schema()
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in schema:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, value, schema[key].type)
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ScenarioConfig(**values)
    except TypeError as exc:  # pragma: no cover - schema guards this
        raise ConfigError(str(exc)) from None


def load_config(path, seed: int | None = None) -> ScenarioConfig:
    """Parse and validate a configuration file; ``seed`` overrides the file."""
    return parse_config_text(Path(path).read_text(encoding="utf-8"), seed=seed)


def dump_config(cfg: ScenarioConfig) -> str:
    lines = ["# dtuav scenario configuration"]
    for name, f in _schema().items():
        value = getattr(cfg, name)
        if isinstance(value, float):
            value = repr(value)
        lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"


def parse_device_coords(text: str, K: int):
    if not text.strip():
        return None
    coords = []
    for item in text.split(","):
        try:
            x, y = (float(v) for v in item.split(":"))
        except ValueError:
            raise ConfigError(f"device_coords: bad entry {item!r}") from None
        coords.append((x, y))
    if len(coords) != K:
        raise ConfigError(f"device_coords: expected {K} devices, got {len(coords)}")
    if len(set(coords)) != len(coords):
        raise ConfigError("device_coords: duplicate device coordinates")
    return coords


@dataclass(frozen=True)
class World:
    devices: tuple
    fhps: tuple
    bs: Location
    region: tuple  # (x_max, y_max); the region starts at the origin
    uav_start: int


def fhp_grid(cfg: ScenarioConfig) -> list:
    if cfg.Q == 1:
        return [Location(cfg.region_x / 2, cfg.region_y / 2, cfg.H)]
    dx, dy = cfg.region_x / cfg.fhp_cols, cfg.region_y / cfg.fhp_rows
    if min(dx, dy) < 1.0:
        raise ConfigError("region too small for the FHP grid")
    return [Location((c + 0.5) * dx, (r + 0.5) * dy, cfg.H)
            for r in range(cfg.fhp_rows) for c in range(cfg.fhp_cols)]


def build_world(cfg: ScenarioConfig) -> World:
    fhps = fhp_grid(cfg)
    coords = parse_device_coords(cfg.device_coords, cfg.K)
    if coords is None:
        rng = derive_rng(cfg.seed, "world")
        coords = []
        while len(coords) < cfg.K:
            x, y = rng.uniform(0, cfg.region_x), rng.uniform(0, cfg.region_y)
            if all(math.hypot(x - a, y - b) >= 1.0 for a, b in coords):
                coords.append((float(x), float(y)))
    devices = tuple(Location(x, y, 0.0) for x, y in coords)
    bs = Location(cfg.bs_x, cfg.bs_y, 0.0)
    if 0 <= cfg.bs_x <= cfg.region_x and 0 <= cfg.bs_y <= cfg.region_y:
        raise ConfigError("BS must lie outside the MTU region")
    start = cfg.uav_start_fhp
    if start < 0:
        cx, cy = cfg.region_x / 2, cfg.region_y / 2
        start = min(range(len(fhps)), key=lambda q: (fhps[q].x - cx) ** 2 + (fhps[q].y - cy) ** 2)
    return World(devices=devices, fhps=tuple(fhps), bs=bs,
                 region=(cfg.region_x, cfg.region_y), uav_start=start)


def generate_tasks(cfg: ScenarioConfig, rng: np.random.Generator) -> list:
    """Task table ``tasks[n][m]`` for one episode.

    Sizes are uniform over the configured range, cycles-per-bit fixed and
    deadlines uniform on ``(T_min, T_max]``.
    """
    D = rng.uniform(cfg.data_bits_min, cfg.data_bits_max, size=(cfg.N, cfg.M))
    # 1 - U maps [0, 1) onto (0, 1], keeping the upper deadline reachable
    T = cfg.T_min + (cfg.T_max - cfg.T_min) * (1.0 - rng.random((cfg.N, cfg.M)))
    return [[TaskSpec(float(D[n, m]), cfg.cycles_per_bit, float(T[n, m])) for m in range(cfg.M)]
            for n in range(cfg.N)]


def sample_deviations(cfg: ScenarioConfig, f_est: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Signed DT deviations for a vector of estimated frequencies."""
    if cfg.deviation_mode == "none" or cfg.deviation_delta == 0:
        return np.zeros_like(f_est)
    if cfg.deviation_mode == "positive":
        return cfg.deviation_delta * f_est
    return rng.uniform(-cfg.deviation_delta, cfg.deviation_delta, size=f_est.shape) * f_est


def node_profiles(cfg: ScenarioConfig, world: World, deviations=None):
    """Profiles for (MTUs, devices, UAV); ``deviations`` is an optional
    triple of arrays matching those groups."""
    if deviations is None:
        deviations = (np.zeros(cfg.M), np.zeros(cfg.K), np.zeros(1))
    dm, dd, du = deviations
    mtus = tuple(NodeProfile(m, Location(0, 0), cfg.f_est_frac * cfg.f_max_mtu, float(dm[m]),
                             cfg.f_max_mtu, cfg.kappa_mtu, cfg.p_max_mtu, cfg.budget_mtu)
                 for m in range(cfg.M))
    devices = tuple(NodeProfile(k, world.devices[k], cfg.f_est_frac * cfg.f_max_device, float(dd[k]),
                                cfg.f_max_device, cfg.kappa_device, cfg.p_max_mtu, cfg.budget_device)
                    for k in range(cfg.K))
    uav = NodeProfile(0, world.fhps[world.uav_start], cfg.f_est_frac * cfg.f_max_uav, float(du[0]),
                      cfg.f_max_uav, cfg.kappa_uav, cfg.p_max_uav, cfg.budget_uav)
    return mtus, devices, uav


def asdict(cfg: ScenarioConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg) if f.init}


__all__ = [
    "ConfigError", "Location", "TaskSpec", "NodeProfile", "ScenarioConfig", "World",
    "load_config", "parse_config_text", "dump_config", "build_world", "generate_tasks",
    "sample_deviations", "node_profiles", "derive_rng", "fhp_grid", "asdict",
]
