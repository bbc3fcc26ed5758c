"""Typed view of config.yaml"""

import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import List, Optional, Union

import yaml


DEFAULT_CONFIG_PATH = Path(__file__).parent.parent / "config.yaml"
CONFIG_ENV = "QSPEC_CONFIG"
THREADS_ENV = "QSPEC_THREADS"


@dataclass
class EstimationConfig:
    levels: List[float] = field(default_factory=lambda: [0.25, 0.5, 0.75])
    type: str = "clipped"
    rank: bool = True


@dataclass
class SmoothingConfig:
    weight: str = "kernel"
    kernel: str = "epanechnikov"
    bw: float = 0.07
    method: str = "direct"


@dataclass
class BootstrapConfig:
    B: int = 0
    l: int = 32
    seed: int = 2581


@dataclass
class InferenceConfig:
    alpha: float = 0.1
    method: str = "normal"


@dataclass
class SimulationConfig:
    model: str = "qar1"
    N: int = 512
    R: int = 100
    seed: int = 2581
    type: str = "copula"


@dataclass
class StudySettings:
    model: str = "qar1"
    N: int = 128
    R: int = 500
    bw: float = 0.3
    kernel: str = "epanechnikov"
    levels: List[float] = field(default_factory=lambda: [0.25, 0.5, 0.75])
    frequency_denominator: int = 32
    frequency_count: int = 16


@dataclass
class SolverConfig:
    tolerance: float = 1e-10
    max_iter: int = 200


@dataclass
class DFTConfig:
    direct_limit: int = 2 ** 22


@dataclass
class RuntimeConfig:
    threads: int = 1


@dataclass
class LoggingConfig:
    level: str = "WARNING"


@dataclass
class QSpecConfig:
    """All configuration sections"""
    estimation: EstimationConfig = field(default_factory=EstimationConfig)
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    study: StudySettings = field(default_factory=StudySettings)
    solver: SolverConfig = field(default_factory=SolverConfig)
    dft: DFTConfig = field(default_factory=DFTConfig)
    runtime: RuntimeConfig = field(default_factory=RuntimeConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)


def _section(cls, data: Optional[dict]):
    """Build one section, ignoring unknown keys and keeping defaults for missing ones"""
    data = data or {}
    known = {f.name for f in fields(cls)}
    return cls(**{k: v for k, v in data.items() if k in known})


def load_config(path: Optional[Union[str, Path]] = None) -> QSpecConfig:
    """
    Load configuration from path, $QSPEC_CONFIG, or the repository config.yaml.

    A missing default file yields built-in defaults; an explicit path must exist.
    """
    explicit = path is not None or CONFIG_ENV in os.environ
    path = Path(path or os.environ.get(CONFIG_ENV, DEFAULT_CONFIG_PATH))

    raw = {}
    if path.exists():
        with open(path, "r") as f:
            raw = yaml.safe_load(f) or {}
    elif explicit:
        raise FileNotFoundError(f"Config file not found: {path}")

    config = QSpecConfig(**{
        f.name: _section(f.default_factory, raw.get(f.name))
        for f in fields(QSpecConfig)
    })

    threads = os.environ.get(THREADS_ENV)
    if threads:
        config.runtime.threads = max(1, int(threads))
    return config
