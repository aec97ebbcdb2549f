import numpy as np
import pytest

from excitonvqd.ansatz import build_ansatz, invert_amplitudes
from excitonvqd.exciton import ExcitonConfig, build_hamiltonian
from excitonvqd.measurement import (
    MeasurementError,
    MeasurementJob,
    compile_jobs,
    dense_pair_operator,
    estimate_energy,
    estimate_term,
    term_from_onehot_probs,
)
from excitonvqd.simulator import ShotHistogram, run_pure, sample


def dimer(v=2.5):
    return build_hamiltonian(ExcitonConfig(2, [0.0, 0.0], [(0, 1, v)]))


def test_paper_config_compiles_eight_jobs(hamiltonian):
    jobs = compile_jobs(hamiltonian)
    assert len(jobs) == 8
    coeffs = sorted(j.coefficient for j in jobs)
    assert coeffs.count(-27.217) == 2
    assert coeffs.count(3.969) == 4
    assert coeffs.count(5.345) == 2


def test_single_and_zero_coupling_jobs():
    assert len(compile_jobs(dimer())) == 1
    empty = build_hamiltonian(ExcitonConfig(3, np.zeros(3), []))
    assert compile_jobs(empty) == []


def test_post_rotation_gate_sequence():
    job = MeasurementJob((1, 3), 1.0)
    kinds = [(g.kind, g.target, g.control, g.angle) for g in job.post_rotation()]
    assert kinds == [
        ("rz", 1, None, -np.pi / 4),
        ("rz", 3, None, np.pi / 4),
        ("sqrt_iswap", 1, 3, None),
    ]


def test_bell_like_state_term_matches_dense_oracle():
    # expectation of V (XX+YY)/2 on (|01>+|10>)/sqrt(2) is V by direct
    # matrix evaluation; the rotated-histogram estimator must agree
    v = 2.5
    h = dimer(v)
    psi = np.zeros(4, dtype=complex)
    psi[1] = psi[2] = 1 / np.sqrt(2)
    dense = dense_pair_operator(2, 0, 1)
    assert abs((psi.conj() @ dense @ psi).real * v - v) < 1e-12
    prep = build_ansatz(2, invert_amplitudes(np.array([1, 1]) / np.sqrt(2)))
    est = estimate_energy(prep, h, shots=4096, backend="sampled", seed=0)
    assert abs(est.value - v) < 1e-9  # rotated distribution is deterministic


def test_zero_state_gives_zero_term():
    dense = dense_pair_operator(2, 0, 1)
    psi = np.array([1, 0, 0, 0], dtype=complex)
    assert abs(psi.conj() @ dense @ psi) < 1e-12
    job = MeasurementJob((0, 1), 3.0)
    hist = ShotHistogram(2, {"00": 1000})
    assert estimate_term(hist, job) == 0.0


def test_sampled_term_within_shot_noise():
    rng = np.random.default_rng(0)
    h = dimer(1.0)
    job = compile_jobs(h)[0]
    for _ in range(10):
        c = rng.standard_normal(2)
        c /= np.linalg.norm(c)
        prep = build_ansatz(2, invert_amplitudes(c))
        state = run_pure(job.attach(prep))
        expected = 2 * c[0] * c[1]
        shots = 8192
        hist = sample(state, shots, seed=int(rng.integers(2**31)))
        sigma = 2 * np.sqrt(0.25 / shots) * 2  # generous bound on the difference
        assert abs(estimate_term(hist, job) - expected) < 4 * sigma + 0.02


def test_estimate_term_rejects_empty_histogram():
    with pytest.raises(MeasurementError):
        estimate_term(ShotHistogram(2, {}), MeasurementJob((0, 1), 1.0))


def test_exact_energy_equals_quadratic_form(hamiltonian):
    from excitonvqd.ansatz import amplitude_map

    rng = np.random.default_rng(1)
    for _ in range(100):
        params = rng.uniform(-np.pi, np.pi, 4)
        c = amplitude_map(params)
        est = estimate_energy(build_ansatz(5, params), hamiltonian, backend="exact")
        assert abs(est.value - c @ hamiltonian.matrix @ c) < 1e-9


def test_ground_state_energy(eigensystem, hamiltonian):
    prep = build_ansatz(5, invert_amplitudes(eigensystem.eigenvectors[:, 0]))
    est = estimate_energy(prep, hamiltonian, backend="exact")
    assert abs(est.value - (-32.562)) < 1e-6


def test_uniform_superposition_energy(hamiltonian):
    c = np.ones(5) / np.sqrt(5)
    expected = sum(2 * v / 5 for _, _, v in hamiltonian.couplings)
    est = estimate_energy(
        build_ansatz(5, invert_amplitudes(c)), hamiltonian, backend="exact"
    )
    assert abs(est.value - expected) < 1e-9


def test_zero_hamiltonian_energy_vanishes():
    h = build_hamiltonian(ExcitonConfig(3, np.zeros(3), []))
    est = estimate_energy(build_ansatz(3, np.array([0.4, 0.9])), h, backend="exact")
    assert est.value == 0.0


def test_sampled_energy_converges_4_sigma(hamiltonian):
    rng = np.random.default_rng(2)
    from excitonvqd.ansatz import amplitude_map

    shots = 8192
    failures = 0
    for trial in range(50):
        params = rng.uniform(-np.pi, np.pi, 4)
        c = amplitude_map(params)
        exact = c @ hamiltonian.matrix @ c
        est = estimate_energy(
            build_ansatz(5, params), hamiltonian, shots=shots, backend="sampled", seed=trial
        )
        # binomial bound: per job var <= coeff^2 / shots (difference of two
        # frequencies with total variance at most 1/shots)
        sigma = np.sqrt(
            sum(v**2 / shots for _, _, v in hamiltonian.couplings)
        )
        if abs(est.value - exact) >= 4 * sigma:
            failures += 1
    assert failures == 0


def test_z_string_dropping_is_exact_on_one_excitation_subspace(hamiltonian):
    rng = np.random.default_rng(3)
    for _ in range(30):
        params = rng.uniform(-np.pi, np.pi, 4)
        psi = run_pure(build_ansatz(5, params)).data
        for p, q, _v in hamiltonian.couplings:
            bare = dense_pair_operator(5, p, q, with_z_string=False)
            strung = dense_pair_operator(5, p, q, with_z_string=True)
            delta = psi.conj() @ (bare - strung) @ psi
            assert abs(delta) < 1e-10


def test_onsite_diagonal_contribution():
    cfg = ExcitonConfig(2, [5.0, -3.0], [(0, 1, 1.0)])
    h = build_hamiltonian(cfg)
    c = np.array([0.6, 0.8])
    prep = build_ansatz(2, invert_amplitudes(c))
    exact = c @ h.matrix @ c
    est = estimate_energy(prep, h, backend="exact")
    assert abs(est.value - exact) < 1e-9
    sampled = estimate_energy(prep, h, shots=200000, backend="sampled", seed=5)
    assert abs(sampled.value - exact) < 0.05


def test_backend_validation():
    h = dimer()
    with pytest.raises(MeasurementError):
        estimate_energy(build_ansatz(2, np.zeros(1)), h, backend="fancy")
    with pytest.raises(MeasurementError):
        estimate_energy(build_ansatz(2, np.zeros(1)), h, backend="noisy")


def test_width_mismatch_rejected(hamiltonian):
    with pytest.raises(MeasurementError):
        estimate_energy(build_ansatz(3, np.zeros(2)), hamiltonian)
