"""Frenkel exciton spectra on a simulated gate-based quantum computer.

The package covers the full workflow: building and diagonalizing the
one-excitation Hamiltonian, preparing its eigenstates with a shallow
entangling ansatz, estimating energies from measured histograms on exact,
sampled, or noisy backends, solving all states by variational deflation,
and mitigating simulated hardware noise with post-selection and a learned
feed-forward model.
"""

from importlib import resources as _resources
from pathlib import Path as _Path

from .ansatz import amplitude_map, build_ansatz, invert_amplitudes, overlap
from .exciton import (
    ExcitonConfig,
    ExcitonHamiltonian,
    build_hamiltonian,
    diagonalize,
    jacobi_eigh,
    load_exciton_config,
    oscillator_strengths,
)
from .fnn import DistributionMitigator
from .gates import Circuit, Gate
from .measurement import MeasurementJob, compile_jobs, estimate_energy, estimate_term
from .mitigation import (
    TrainedMitigator,
    dl_vqd_pipeline,
    generate_dataset,
    hd_reduce,
    mitigate,
    post_dl_pipeline,
    post_select,
    train_mitigator,
)
from .noise import NoiseModel, load_noise_model
from .simulator import QuantumState, ShotHistogram, apply_gate, run_noisy, run_pure, sample
from .vqd import VqdResult, VqdSettings, cost, solve

__version__ = "0.1.0"

# Line of physical qubits with moderate errors on the bundled device map.
DEFAULT_LAYOUT = [0, 1, 4, 7, 10]


def bundled_path(name: str) -> _Path:
    """Path of a bundled data file (``anthracene5`` or ``ibmq_guadalupe``)."""
    ref = _resources.files(__name__) / "data" / f"{name}.yaml"
    return _Path(str(ref))


def load_bundled_exciton_config(name: str = "anthracene5") -> ExcitonConfig:
    return load_exciton_config(bundled_path(name))


def load_bundled_noise_model(name: str = "ibmq_guadalupe") -> NoiseModel:
    return load_noise_model(bundled_path(name))
