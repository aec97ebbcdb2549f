import numpy as np
import pytest

import excitonvqd as ev
from excitonvqd.mitigation import generate_dataset, train_mitigator


@pytest.fixture(scope="session")
def anthracene():
    return ev.load_bundled_exciton_config()


@pytest.fixture(scope="session")
def hamiltonian(anthracene):
    return ev.build_hamiltonian(anthracene)


@pytest.fixture(scope="session")
def eigensystem(hamiltonian):
    return ev.diagonalize(hamiltonian)


@pytest.fixture(scope="session")
def device_noise():
    return ev.load_bundled_noise_model()


@pytest.fixture(scope="session")
def layout():
    return ev.DEFAULT_LAYOUT


@pytest.fixture(scope="session")
def coupling_pairs(hamiltonian):
    return [(p, q) for p, q, _ in hamiltonian.couplings]


@pytest.fixture(scope="session")
def dataset_1024(device_noise, coupling_pairs, layout):
    """1000 noisy training samples at 1024 shots (shared across tests)."""
    return generate_dataset(
        1000, 1024, device_noise, coupling_pairs, seed=42, n=5, layout=layout
    )


@pytest.fixture(scope="session")
def trained_model(dataset_1024, coupling_pairs):
    """Mitigator trained to its converged holdout error."""
    report = train_mitigator(
        dataset_1024, coupling_pairs, epochs=1000, learning_rate=1e-3, seed=0
    )
    return report


TABLE1_EIGENVALUES = np.array([-32.562, -24.449, 2.577, 21.872, 32.562])
DAVYDOV_CM1 = 218.75
