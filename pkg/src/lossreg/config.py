"""Run configuration: TOML files, ``key=value`` overrides and validation."""

from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .inflation import ScalingError, ScalingParams

EXPERIMENT_NAMES = ("solve-nls", "solve-limit", "modenergy-sweep", "wavepacket-check", "oscillator-check",
                    "inflation")


class ConfigError(ValueError):
    pass


def _pow2(lo: int, hi: int) -> list[float]:
    return [2.0**-j for j in range(lo, hi + 1)]


@dataclass
class RunConfig:
    experiment: str
    # physics
    n: int = 1
    sigma: int = 3
    s: float = 0.1
    eps: float = 0.0625
    eps_list: list = field(default_factory=lambda: _pow2(4, 9))
    h_list: list = field(default_factory=lambda: _pow2(1, 6))
    k_list: list = field(default_factory=lambda: [0.5, 1.0])
    delta: float = 0.0
    potential: str = "none"
    linear: bool = False
    amplitude: float = 1.0
    log_damping: bool = False
    T: float = 0.2
    T_max: float | None = None
    s_commutator: float = 0.5
    # tau policy
    tau: float | str = "auto"
    tau_fraction: float = 0.25
    tau_horizon: float = 0.33  # limit horizon at unit amplitude; scaled by amplitude^-sigma
    tau_samples: int = 67
    tau_sensitivity: bool = True
    floor_stage: bool = True
    floor_amplitude: float = 1.0
    floor_N: int = 4096
    floor_k_list: list = field(default_factory=lambda: [0.5, 1.0])
    # numerics
    N: int = 4096
    L: float = 16.0
    limit_N: int = 2048
    dt_factor: float = 0.1
    samples: int = 21
    energy_order_check: bool = False
    seed: int = 20240607
    n_random: int = 1_000_000
    write_fields: bool = True

    def as_dict(self) -> dict:
        return asdict(self)


# per-experiment defaults layered under user settings
PRESETS = {
    "solve-nls": {"N": 1024, "T": 0.5, "energy_order_check": True},
    "solve-limit": {"T": 0.3, "limit_N": 2048},
    "modenergy-sweep": {},
    "wavepacket-check": {"N": 2048},
    "oscillator-check": {"N": 2048, "L": 20.0, "T": 0.5, "eps_list": _pow2(4, 8)},
    "inflation": {"N": 1024, "amplitude": 2.0, "k_list": [0.0, 0.5, 0.75, 1.0]},
}

ALIASES = {"σ": "sigma", "ε": "eps", "δ": "delta", "delta_m": "delta", "dim": "n", "points": "N",
           "box_length": "L"}


def _coerce(name: str, value, ftype):
    typ = ftype if isinstance(ftype, str) else getattr(ftype, "__name__", str(ftype))
    try:
        if name in ("tau",):
            return value if value == "auto" else float(value)
        if name == "T_max":
            return None if value in (None, "none") else float(value)
        if typ == "int":
            if isinstance(value, bool) or float(value) != int(value):
                raise ValueError
            return int(value)
        if typ == "float":
            if isinstance(value, bool):
                raise ValueError
            return float(value)
        if typ == "bool":
            if isinstance(value, bool):
                return value
            if str(value).lower() in ("true", "1", "yes"):
                return True
            if str(value).lower() in ("false", "0", "no"):
                return False
            raise ValueError
        if typ == "list":
            if isinstance(value, (int, float)):
                value = [value]
            return [float(v) for v in value]
        if typ == "str":
            return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot interpret {value!r} as {typ}") from None
    return value


def parse_override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def load_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    text = path.read_text()
    try:
        if path.suffix == ".json":
            data = json.loads(text)
            # a run manifest carries its resolved config under "config"
            return dict(data.get("config", data))
        return tomllib.loads(text)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def resolve(settings: dict, experiment: str | None = None) -> RunConfig:
    """Layer ``settings`` over the experiment preset and validate."""
    settings = {ALIASES.get(k, k): v for k, v in settings.items()}
    exp = experiment or settings.get("experiment")
    if exp not in EXPERIMENT_NAMES:
        raise ConfigError(f"unknown experiment {exp!r}; choose one of {', '.join(EXPERIMENT_NAMES)}")
    settings = dict(settings, experiment=exp)
    known = {f.name: f for f in fields(RunConfig)}
    unknown = sorted(set(settings) - set(known))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    merged = dict(PRESETS[exp])
    merged.update(settings)
    values = {k: _coerce(k, v, known[k].type) for k, v in merged.items() if k != "experiment"}
    cfg = RunConfig(experiment=exp, **values)
    validate(cfg, explicit=set(settings))
    return cfg


def validate(cfg: RunConfig, explicit=frozenset()) -> None:
    if cfg.n < 1 or cfg.n > 2:
        raise ConfigError(f"n = {cfg.n} violates 1 <= n <= 2")
    if cfg.sigma < 1:
        raise ConfigError(f"sigma = {cfg.sigma} violates sigma >= 1")
    if cfg.N < 2 or cfg.N & (cfg.N - 1):
        raise ConfigError(f"N = {cfg.N} is not a power of two")
    if not cfg.L > 0:
        raise ConfigError(f"L = {cfg.L} violates L > 0")
    for name in ("eps", "T", "dt_factor", "amplitude"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} = {getattr(cfg, name)} violates {name} > 0")
    if any(e <= 0 for e in cfg.eps_list):
        raise ConfigError("every eps in eps_list must be > 0")
    if any(not 0 <= k <= 1 for k in cfg.k_list):
        raise ConfigError("k_list entries must lie in [0, 1]")
    if cfg.delta < 0:
        raise ConfigError(f"delta = {cfg.delta} violates delta >= 0")
    if not 0 < cfg.tau_fraction <= 1:
        raise ConfigError("tau_fraction must lie in (0, 1]")
    if cfg.tau != "auto" and not cfg.tau > 0:
        raise ConfigError(f"tau = {cfg.tau} violates tau > 0")
    if cfg.experiment == "inflation" or "s" in explicit:
        try:
            ScalingParams(cfg.n, cfg.sigma, cfg.s)
            for h in cfg.h_list:
                ScalingParams(cfg.n, cfg.sigma, cfg.s, h, cfg.log_damping)
        except ScalingError as exc:
            raise ConfigError(str(exc)) from None
