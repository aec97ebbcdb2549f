import numpy as np
import pytest

from excitonvqd.ansatz import invert_amplitudes
from excitonvqd.exciton import ExcitonConfig, build_hamiltonian, jacobi_eigh
from excitonvqd.vqd import (
    OptimizerSettings,
    VqdError,
    VqdSettings,
    cost,
    default_penalty_weight,
    solve,
)
from tests.conftest import TABLE1_EIGENVALUES


def dimer(v=4.0):
    return build_hamiltonian(ExcitonConfig(2, [0.0, 0.0], [(0, 1, v)]))


def fast_exact_settings(**overrides):
    kwargs = dict(
        backend="exact",
        restarts=2,
        optimizer=OptimizerSettings(max_evals=800, tol=1e-8),
        seed=0,
    )
    kwargs.update(overrides)
    return VqdSettings(**kwargs)


def test_cost_without_priors_is_energy(hamiltonian):
    params = np.array([0.3, -0.2, 0.5, 0.1])
    from excitonvqd.ansatz import amplitude_map

    c = amplitude_map(params)
    value = cost(params, hamiltonian, [], [], backend="exact")
    assert abs(value - c @ hamiltonian.matrix @ c) < 1e-12


def test_cost_at_prior_adds_full_weight(hamiltonian):
    params = np.array([0.3, -0.2, 0.5, 0.1])
    w = default_penalty_weight(hamiltonian)
    base = cost(params, hamiltonian, [], [], backend="exact")
    penalized = cost(params, hamiltonian, [params], [w], backend="exact")
    assert abs(penalized - base - w) < 1e-9


def test_cost_orthogonal_priors_add_nothing(hamiltonian):
    e1 = invert_amplitudes(np.array([1.0, 0, 0, 0, 0]))
    e2 = invert_amplitudes(np.array([0.0, 1, 0, 0, 0]))
    w = default_penalty_weight(hamiltonian)
    assert abs(
        cost(e1, hamiltonian, [e2], [w], backend="exact")
        - cost(e1, hamiltonian, [], [], backend="exact")
    ) < 1e-12


def test_dimer_two_states():
    res = solve(dimer(4.0), fast_exact_settings())
    assert np.abs(res.energies - [-4.0, 4.0]).max() < 1e-4


def test_paper_hamiltonian_all_states_exact(hamiltonian):
    res = solve(hamiltonian, fast_exact_settings(restarts=3))
    assert np.abs(res.energies - TABLE1_EIGENVALUES).max() < 0.01
    # against the diagonalizer itself the agreement is far tighter
    exact = jacobi_eigh(hamiltonian.matrix)[0]
    assert np.abs(res.energies - exact).max() < 1e-4
    for state in res.states:
        for v in state.overlaps_with_priors:
            assert v < 1e-3


def test_deflation_on_random_hamiltonians():
    rng = np.random.default_rng(9)
    trials = 0
    for _ in range(20):
        a = rng.standard_normal((5, 5)) * 4
        a = (a + a.T) / 2
        w = np.linalg.eigvalsh(a)
        if np.diff(w).min() < 1.0:
            continue  # keep well-separated spectra
        trials += 1
        couplings = [(i, j, a[i, j]) for i in range(5) for j in range(i + 1, 5)]
        h = build_hamiltonian(ExcitonConfig(5, np.diag(a), couplings))
        res = solve(h, fast_exact_settings(seed=trials))
        scale = np.abs(w).max()
        assert np.abs(res.energies - w).max() < 1e-3 * scale
    assert trials >= 10


def test_monotone_best_so_far(hamiltonian):
    res = solve(hamiltonian, fast_exact_settings(states=2))
    for state in res.states:
        costs = [c for _, c, _ in state.trace]
        running = np.minimum.accumulate(costs)
        assert all(np.diff(running) <= 1e-12)


def test_seed_determinism(hamiltonian):
    settings = VqdSettings(
        backend="sampled",
        states=2,
        shots_per_job=512,
        restarts=1,
        optimizer=OptimizerSettings(max_evals=60),
        seed=5,
    )
    r1 = solve(hamiltonian, settings)
    r2 = solve(hamiltonian, settings)
    assert np.array_equal(r1.energies, r2.energies)
    t1 = [s.trace for s in r1.states]
    t2 = [s.trace for s in r2.states]
    assert t1 == t2


def test_penalty_weight_validation(hamiltonian):
    with pytest.raises(VqdError, match="penalty weight"):
        solve(hamiltonian, fast_exact_settings(penalty_weight=1.0))


def test_noisy_backend_requires_model(hamiltonian):
    with pytest.raises(VqdError):
        solve(hamiltonian, VqdSettings(backend="noisy"))


def test_trace_rows_shape(hamiltonian):
    res = solve(hamiltonian, fast_exact_settings(states=1))
    rows = res.trace_rows()
    assert rows, "trace should not be empty"
    state_idx, eval_idx, cost_value, energy, penalty = rows[0]
    assert state_idx == 0 and eval_idx == 0
    assert abs((cost_value - energy) - penalty) < 1e-12
