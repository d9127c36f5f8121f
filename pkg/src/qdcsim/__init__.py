"""Event-by-event simulation of the single-photon quantum delayed-choice experiment."""

__version__ = "0.1.0"

from qdcsim.experiment import (  # noqa: E402
    ExperimentConfig,
    Mode,
    SweepResult,
    build_topology,
    compare_to_theory,
    run_point,
    run_sweep,
)
from qdcsim.network import NetworkTopology, init_state, run_many, run_one, validate_topology  # noqa: E402
from qdcsim.theory import OracleParams, quantum_intensities, wheeler_intensities  # noqa: E402

__all__ = [
    "ExperimentConfig",
    "Mode",
    "NetworkTopology",
    "OracleParams",
    "SweepResult",
    "build_topology",
    "compare_to_theory",
    "init_state",
    "quantum_intensities",
    "run_many",
    "run_one",
    "run_point",
    "run_sweep",
    "validate_topology",
    "wheeler_intensities",
]
