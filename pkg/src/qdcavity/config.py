"""Experiment configuration: YAML load/dump with validation."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np
import yaml

from .exciton import ExcitonParams
from .polariton import CavityParams, CouplingParams
from .spectrum import Emphasis, TemperatureTuning

NOISE_MODELS = ("none", "gaussian", "shot")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class Grid:
    start: float
    stop: float
    num: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num)


@dataclass(frozen=True)
class NoiseSettings:
    model: str = "none"
    scale: float = 0.01


@dataclass(frozen=True)
class ExperimentConfig:
    exciton: ExcitonParams
    cavity: CavityParams
    coupling: CouplingParams
    temperature_tuning: TemperatureTuning
    reference_wavelength_nm: float = 931.0
    grids: dict = field(default_factory=dict)  # name -> Grid; energy grid is offset from Ec
    sweep_temperature: Optional[float] = 34.0
    sweep_field: float = 0.0
    emphasis: Emphasis = Emphasis.CAVITY_WEIGHTED
    resolution: float = 28.6086240613041
    noise: NoiseSettings = NoiseSettings()
    seed: int = 0

    def grid(self, name: str) -> np.ndarray:
        return self.grids[name].values()

    def energy_grid(self) -> np.ndarray:
        return self.cavity.Ec + self.grid("energy")

    def dot_energy(self, temperature: Optional[float]) -> float:
        """Zero-field dot energy at ``temperature`` (``exciton.E0`` if None)."""
        if temperature is None:
            return self.exciton.E0
        return self.temperature_tuning.energy(temperature)


def _section(data, name):
    value = data.get(name)
    if not isinstance(value, dict):
        raise ConfigError(f"missing or malformed section '{name}'")
    return value


def _build(cls, data, name, required=()):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown field(s) {name}.{sorted(unknown)[0]}")
    for key in required:
        if key not in data:
            raise ConfigError(f"missing field {name}.{key}")
    for key, value in data.items():
        if value is None:
            continue
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"field {name}.{key} must be a number, got {value!r}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from exc


def _grid(data, name):
    if not isinstance(data, dict) or set(data) != {"start", "stop", "num"}:
        raise ConfigError(f"grids.{name} needs exactly start, stop, num")
    num = data["num"]
    if not isinstance(num, int) or isinstance(num, bool) or num < 1:
        raise ConfigError(f"grids.{name}.num must be a positive integer, got {num!r}")
    start, stop = float(data["start"]), float(data["stop"])
    if num > 1 and not stop > start:
        raise ConfigError(f"grids.{name} must be increasing (stop > start)")
    return Grid(start, stop, num)


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    exciton = _build(ExcitonParams, _section(data, "exciton"), "exciton", ("E0",))
    cavity = _build(CavityParams, _section(data, "cavity"), "cavity", ("Ec", "Q"))
    coupling = _build(CouplingParams, _section(data, "coupling"), "coupling", ("g0",))
    tt = _build(TemperatureTuning, _section(data, "temperature_tuning"), "temperature_tuning",
                ("T_ref", "E_ref", "slope"))
    if not tt.slope > 0:
        raise ConfigError("temperature_tuning.slope must be > 0 (red shift with temperature)")
    grids = {name: _grid(g, name) for name, g in _section(data, "grids").items()}
    for name in ("B", "T", "energy"):
        if name not in grids:
            raise ConfigError(f"missing field grids.{name}")
    if grids["B"].start < 0:
        raise ConfigError("grids.B must be non-negative")
    lam = data.get("reference_wavelength_nm", 931.0)
    if not isinstance(lam, (int, float)) or not lam > 0:
        raise ConfigError("reference_wavelength_nm must be positive")
    sweep = data.get("sweep", {}) or {}
    spectrum = data.get("spectrum", {}) or {}
    try:
        emphasis = Emphasis(spectrum.get("emphasis", "cavity_weighted"))
    except ValueError:
        raise ConfigError(f"spectrum.emphasis must be one of {[e.value for e in Emphasis]}")
    resolution = spectrum.get("resolution", 28.6086240613041)
    if not isinstance(resolution, (int, float)) or resolution < 0:
        raise ConfigError("spectrum.resolution must be >= 0")
    noise = data.get("noise", {}) or {}
    model = noise.get("model", "none")
    if model not in NOISE_MODELS:
        raise ConfigError(f"noise.model must be one of {NOISE_MODELS}, got {model!r}")
    scale = noise.get("scale", 0.01)
    if not isinstance(scale, (int, float)) or scale < 0:
        raise ConfigError("noise.scale must be >= 0")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    field_b = sweep.get("field", 0.0)
    if not isinstance(field_b, (int, float)) or field_b < 0:
        raise ConfigError("sweep.field must be >= 0")
    temp = sweep.get("temperature", 34.0)
    if temp is not None and not isinstance(temp, (int, float)):
        raise ConfigError("sweep.temperature must be a number or null")
    return ExperimentConfig(
        exciton=exciton,
        cavity=cavity,
        coupling=coupling,
        temperature_tuning=tt,
        reference_wavelength_nm=float(lam),
        grids=grids,
        sweep_temperature=None if temp is None else float(temp),
        sweep_field=float(field_b),
        emphasis=emphasis,
        resolution=float(resolution),
        noise=NoiseSettings(model, float(scale)),
        seed=seed,
    )


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "reference_wavelength_nm": cfg.reference_wavelength_nm,
        "exciton": dataclasses.asdict(cfg.exciton),
        "cavity": dataclasses.asdict(cfg.cavity),
        "coupling": dataclasses.asdict(cfg.coupling),
        "temperature_tuning": dataclasses.asdict(cfg.temperature_tuning),
        "grids": {k: dataclasses.asdict(g) for k, g in cfg.grids.items()},
        "sweep": {"temperature": cfg.sweep_temperature, "field": cfg.sweep_field},
        "spectrum": {"emphasis": cfg.emphasis.value, "resolution": cfg.resolution},
        "noise": dataclasses.asdict(cfg.noise),
        "seed": cfg.seed,
    }


def reference_config_text() -> str:
    return resources.files("qdcavity").joinpath("data/reference.yaml").read_text(encoding="utf-8")


def load_config(path: Union[str, Path, None] = None) -> ExperimentConfig:
    """Load a YAML config; ``None`` loads the packaged reference set."""
    if path is None:
        text = reference_config_text()
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from exc
    return config_from_dict(data)


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)
