"""Experiment configuration: INI-style ``key = value`` sections.

Every field has a default, so a config file only needs the keys it changes.
``emit`` writes every field, and ``parse(emit(cfg)) == cfg``.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ParameterError
from .lattice import LatticeParams

MODES = ("baseline", "reservoir", "ensemble", "curve", "connectivity", "sweep")


@dataclass(frozen=True)
class DataConfig:
    images: str = "data/mnist5k-images-idx3-ubyte.gz"
    labels: str = "data/mnist5k-labels-idx1-ubyte.gz"
    resolution: int = 4
    crop: int = 3
    n_train: int = 4000
    n_test: int = 1000
    split_seeds: tuple[int, ...] = (0, 1, 2, 3, 4)


@dataclass(frozen=True)
class EncoderConfig:
    density: float = 0.5
    p_peak: float = 25.0
    p0_fraction: float = 0.1
    mask_seed: int = 0
    masks: int = 1


@dataclass(frozen=True)
class CameraConfig:
    resolution: int = 8
    sigma: float = 0.5


@dataclass(frozen=True)
class ReadoutConfig:
    l2: float = 1e-4
    lr: float = 0.5
    max_iters: int = 5000
    grad_tol: float = 1e-6
    solver: str = "lbfgs"


@dataclass(frozen=True)
class ExperimentSection:
    mode: str = "reservoir"
    # baseline mode: also fit the encoded node intensities (the "S" point)
    encoded_baseline: bool = True
    curve_powers: tuple[float, ...] = ()
    connectivity_powers: tuple[float, ...] = (1.0, 2.5, 4.0, 5.5, 7.0, 8.5, 10.0, 11.5, 13.0, 14.5, 16.0)
    sweep_axis: str = "lattice.g"
    sweep_values: tuple[float, ...] = ()


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataConfig = field(default_factory=DataConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    lattice: LatticeParams = field(default_factory=LatticeParams)
    camera: CameraConfig = field(default_factory=CameraConfig)
    readout: ReadoutConfig = field(default_factory=ReadoutConfig)
    experiment: ExperimentSection = field(default_factory=ExperimentSection)

    def __post_init__(self):
        if self.experiment.mode not in MODES:
            raise ParameterError(f"unknown mode {self.experiment.mode!r}; choose from {MODES}")
        if self.data.resolution not in (7, 4):
            raise ParameterError("data.resolution must be 7 or 4")
        if self.encoder.masks < 1:
            raise ParameterError("encoder.masks must be >= 1")
        if self.readout.solver not in ("lbfgs", "gd"):
            raise ParameterError("readout.solver must be 'lbfgs' or 'gd'")
        if not 0 <= self.encoder.p0_fraction < 1:
            raise ParameterError("encoder.p0_fraction must lie in [0, 1)")

    @property
    def in_dim(self) -> int:
        return self.data.resolution ** 2

    @property
    def p0(self) -> float:
        return self.encoder.p0_fraction * self.encoder.p_peak

    def replace(self, dotted: str, value) -> "ExperimentConfig":
        """Copy with one ``section.key`` changed, e.g. ``cfg.replace("lattice.g", 0.0)``."""
        section, _, key = dotted.partition(".")
        sub = getattr(self, section, None)
        names = {f.name: f for f in fields(sub)} if dataclasses.is_dataclass(sub) else {}
        if key not in names:
            raise ParameterError(f"unknown parameter {dotted!r}")
        return dataclasses.replace(self, **{section: dataclasses.replace(sub, **{key: _coerce(names[key], value)})})


SECTIONS = {f.name: f for f in fields(ExperimentConfig)}


def _coerce(f, value):
    kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    if kind.startswith("tuple"):
        if isinstance(value, str):
            items = [v.strip() for v in value.split(",") if v.strip()]
        else:
            items = list(value)
        conv = int if "int" in kind else float
        return tuple(conv(v) for v in items)
    if kind == "bool":
        if isinstance(value, str):
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ParameterError(f"{f.name}: not a boolean: {value!r}")
            return value.lower() in ("true", "1", "yes")
        return bool(value)
    if kind == "int":
        as_float = float(value)
        if as_float != int(as_float):
            raise ParameterError(f"{f.name}: expected an integer, got {value!r}")
        return int(as_float)
    if kind == "float":
        return float(value)
    return str(value)


def parse(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParameterError(f"malformed config: {exc}") from None
    sections = {}
    for name in cp.sections():
        if name not in SECTIONS:
            raise ParameterError(f"unknown config section [{name}]")
        cls = SECTIONS[name].default_factory().__class__
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in cp.items(name):
            if key not in known:
                raise ParameterError(f"unknown key {key!r} in [{name}]")
            try:
                kwargs[key] = _coerce(known[key], raw)
            except ValueError as exc:
                raise ParameterError(f"[{name}] {key}: {exc}") from None
        sections[name] = cls(**kwargs)
    return ExperimentConfig(**sections)


def load(path) -> tuple[ExperimentConfig, str]:
    """Parse a config file; also return its exact text for the report echo."""
    text = Path(path).read_text()
    return parse(text), text


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit(cfg: ExperimentConfig) -> str:
    out = []
    for name in SECTIONS:
        out.append(f"[{name}]")
        sub = getattr(cfg, name)
        for f in fields(sub):
            out.append(f"{f.name} = {_fmt(getattr(sub, f.name))}")
        out.append("")
    return "\n".join(out)
