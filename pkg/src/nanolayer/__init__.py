"""1D coupled Maxwell-quantum simulator for a nano-layer of interacting
two-level emitters, with interchangeable Bloch / NH1 / NH2 backends."""

from .quantum import BACKENDS, BlochState, EmitterParams, QuantumObservables, WaveCoeffs
from .scenario import PRESETS, ScenarioConfig, execute, load_config, preset

__version__ = "0.1.0"

__all__ = [
    "BACKENDS", "PRESETS", "__version__",
    "EmitterParams", "BlochState", "WaveCoeffs", "QuantumObservables",
    "ScenarioConfig", "execute", "load_config", "preset",
]
