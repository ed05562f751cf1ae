"""Run configuration: flat key-value files with dotted sections, plus presets.

Grammar: one ``key = value`` pair per line, ``#`` starts a comment, blank
lines ignored.  Keys use dotted sections (``grid.dt``).  List values are
comma separated.  All times are in units of 2 pi / omega_c and all energies
in units of omega_c; omega_c itself is pinned to 1 (it defines the units).

Unknown keys are rejected, and every constraint violation names the key path.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

__all__ = ["SimulationConfig", "ConfigError", "parse_config", "load_config", "preset", "PRESETS"]

INITIAL_STATES = ("down_z", "up_z", "mixed")
VALID_METHODS = ("nca", "nca_markov", "born", "born_markov")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    delta: float = 0.1
    epsilon: float = 0.0


@dataclass(frozen=True)
class BathConfig:
    alpha: tuple = (0.1,)
    omega_c: float = 1.0
    temperature: float = 0.0


@dataclass(frozen=True)
class GridConfig:
    dt: float = 0.1          # units of 2 pi / omega_c
    t_max: float = 300.0     # units of 2 pi / omega_c
    born_dt: float | None = None  # optional finer step for the born method


@dataclass(frozen=True)
class SpectrumConfig:
    eta: float = 0.002
    t_window: float = 4000.0
    omega_min: float = 0.001
    omega_max: float = 0.3
    omega_points: int = 600


@dataclass(frozen=True)
class TransmissionConfig:
    epsilon_min: float = -0.5
    epsilon_max: float = 0.5
    epsilon_points: int = 21
    omega_min: float = 0.005
    omega_max: float = 0.3
    omega_points: int = 120
    eta: float = 0.0025
    t_window: float = 500.0
    n_coupling: float = 1.0


@dataclass(frozen=True)
class OutputConfig:
    directory: str = ""
    formats: tuple = ("csv",)

    def resolved_directory(self) -> str:
        return self.directory or os.environ.get("NCAMAPS_OUT", "out")


@dataclass(frozen=True)
class SimulationConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    bath: BathConfig = field(default_factory=BathConfig)
    methods: tuple = ("nca",)
    grid: GridConfig = field(default_factory=GridConfig)
    initial_state: str = "down_z"
    outputs: OutputConfig = field(default_factory=OutputConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    transmission: TransmissionConfig = field(default_factory=TransmissionConfig)
    workers: int = 0  # 0 = auto

    def dt_for(self, method: str) -> float:
        if method == "born" and self.grid.born_dt is not None:
            return self.grid.born_dt
        return self.grid.dt


def _parse_float(key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _parse_int(key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def _parse_float_list(key, raw):
    return tuple(_parse_float(key, part.strip()) for part in raw.split(",") if part.strip())


_SCHEMA = {
    "model.delta": ("model", "delta", _parse_float),
    "model.epsilon": ("model", "epsilon", _parse_float),
    "bath.alpha": ("bath", "alpha", _parse_float_list),
    "bath.omega_c": ("bath", "omega_c", _parse_float),
    "bath.temperature": ("bath", "temperature", _parse_float),
    "grid.dt": ("grid", "dt", _parse_float),
    "grid.t_max": ("grid", "t_max", _parse_float),
    "grid.born_dt": ("grid", "born_dt", _parse_float),
    "spectrum.eta": ("spectrum", "eta", _parse_float),
    "spectrum.t_window": ("spectrum", "t_window", _parse_float),
    "spectrum.omega_min": ("spectrum", "omega_min", _parse_float),
    "spectrum.omega_max": ("spectrum", "omega_max", _parse_float),
    "spectrum.omega_points": ("spectrum", "omega_points", _parse_int),
    "transmission.epsilon_min": ("transmission", "epsilon_min", _parse_float),
    "transmission.epsilon_max": ("transmission", "epsilon_max", _parse_float),
    "transmission.epsilon_points": ("transmission", "epsilon_points", _parse_int),
    "transmission.omega_min": ("transmission", "omega_min", _parse_float),
    "transmission.omega_max": ("transmission", "omega_max", _parse_float),
    "transmission.omega_points": ("transmission", "omega_points", _parse_int),
    "transmission.eta": ("transmission", "eta", _parse_float),
    "transmission.t_window": ("transmission", "t_window", _parse_float),
    "transmission.n_coupling": ("transmission", "n_coupling", _parse_float),
    "outputs.directory": ("outputs", "directory", lambda k, v: v),
}


def _validate(cfg: SimulationConfig) -> SimulationConfig:
    if cfg.grid.dt <= 0:
        raise ConfigError("grid.dt: must be > 0")
    if cfg.grid.t_max <= cfg.grid.dt:
        raise ConfigError("grid.t_max: must exceed grid.dt")
    if cfg.grid.born_dt is not None and cfg.grid.born_dt <= 0:
        raise ConfigError("grid.born_dt: must be > 0")
    if not cfg.bath.alpha:
        raise ConfigError("bath.alpha: list must be nonempty")
    if any(a < 0 for a in cfg.bath.alpha):
        raise ConfigError("bath.alpha: values must be >= 0")
    if cfg.bath.omega_c != 1.0:
        raise ConfigError(
            "bath.omega_c: fixed to 1 (omega_c defines the units of every other quantity)"
        )
    if cfg.bath.temperature < 0:
        raise ConfigError("bath.temperature: must be >= 0")
    for m in cfg.methods:
        if m not in VALID_METHODS:
            raise ConfigError(f"method: unknown method {m!r}; expected one of {VALID_METHODS}")
    if not cfg.methods:
        raise ConfigError("method: list must be nonempty")
    if cfg.initial_state not in INITIAL_STATES:
        raise ConfigError(
            f"initial_state: unknown state {cfg.initial_state!r}; expected one of {INITIAL_STATES}"
        )
    if cfg.spectrum.eta <= 0:
        raise ConfigError("spectrum.eta: must be > 0")
    if cfg.workers < 0:
        raise ConfigError("workers: must be >= 0")
    return cfg


def parse_config(text: str) -> SimulationConfig:
    """Parse configuration text into a validated :class:`SimulationConfig`."""
    sections = {
        "model": {},
        "bath": {},
        "grid": {},
        "spectrum": {},
        "transmission": {},
        "outputs": {},
    }
    top = {}
    for lineno, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key == "method":
            top["methods"] = tuple(p.strip() for p in raw.split(",") if p.strip())
        elif key == "initial_state":
            top["initial_state"] = raw
        elif key == "workers":
            top["workers"] = _parse_int(key, raw)
        elif key == "alpha":  # convenience alias for bath.alpha
            sections["bath"]["alpha"] = _parse_float_list(key, raw)
        elif key in _SCHEMA:
            section, attr, conv = _SCHEMA[key]
            sections[section][attr] = conv(key, raw)
        else:
            raise ConfigError(f"unknown key {key!r}")
    cfg = SimulationConfig(
        model=ModelConfig(**sections["model"]),
        bath=BathConfig(**sections["bath"]),
        grid=GridConfig(**sections["grid"]),
        spectrum=SpectrumConfig(**sections["spectrum"]),
        transmission=TransmissionConfig(**sections["transmission"]),
        outputs=OutputConfig(**sections["outputs"]),
        **top,
    )
    return _validate(cfg)


PRESETS = {
    "fig2": (
        "relaxation dynamics: all four methods over an alpha sweep, "
        "finer step for the born method"
    ),
    "spectra": "steady-state spin spectra for the self-consistent methods and born",
    "transmission": "probe-transmission maps over (epsilon, omega) at weak and strong coupling",
}


def preset(name: str) -> SimulationConfig:
    if name == "fig2":
        return _validate(
            SimulationConfig(
                bath=BathConfig(alpha=(0.01, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0)),
                methods=("nca", "nca_markov", "born", "born_markov"),
                grid=GridConfig(dt=0.1, t_max=300.0, born_dt=0.01),
            )
        )
    if name == "spectra":
        return _validate(
            SimulationConfig(
                bath=BathConfig(alpha=(0.1, 0.5, 0.9)),
                methods=("nca", "nca_markov", "born"),
                grid=GridConfig(dt=0.1, t_max=300.0),
                spectrum=SpectrumConfig(),
            )
        )
    if name == "transmission":
        return _validate(
            SimulationConfig(
                bath=BathConfig(alpha=(0.1, 0.6)),
                methods=("nca", "born"),
                grid=GridConfig(dt=0.1, t_max=300.0),
            )
        )
    raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")


def load_config(path_or_preset: str) -> SimulationConfig:
    """Load a config file, or a named preset when the argument matches one."""
    if path_or_preset in PRESETS:
        return preset(path_or_preset)
    if not os.path.exists(path_or_preset):
        raise ConfigError(f"config file not found: {path_or_preset}")
    with open(path_or_preset) as fh:
        return parse_config(fh.read())


def with_overrides(cfg: SimulationConfig, method=None, alpha=None, out_dir=None, workers=None):
    if method:
        cfg = replace(cfg, methods=tuple(method))
    if alpha:
        cfg = replace(cfg, bath=replace(cfg.bath, alpha=tuple(alpha)))
    if out_dir:
        cfg = replace(cfg, outputs=replace(cfg.outputs, directory=out_dir))
    if workers is not None:
        cfg = replace(cfg, workers=workers)
    return _validate(cfg)
