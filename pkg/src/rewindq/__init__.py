"""Rewinding idle qubits: circuits, channel recursions, simulators and planning."""

__version__ = "0.1.0"

from rewindq.circuits import (  # noqa: E402
    Circuit,
    Gate,
    build_convolutional,
    build_rewound_convolutional,
    idle_qubits,
    restrict_to_idle,
    rewind,
    rewinding_circuit,
)
from rewindq.experiments import ExperimentConfig, fidelity_profile  # noqa: E402
from rewindq.haar import haar_unitary  # noqa: E402
from rewindq.transfer import spectrum, transfer_operator  # noqa: E402

__all__ = [
    "Circuit",
    "ExperimentConfig",
    "Gate",
    "build_convolutional",
    "build_rewound_convolutional",
    "fidelity_profile",
    "haar_unitary",
    "idle_qubits",
    "restrict_to_idle",
    "rewind",
    "rewinding_circuit",
    "spectrum",
    "transfer_operator",
]
