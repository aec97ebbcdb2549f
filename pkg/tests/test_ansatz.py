import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from excitonvqd.ansatz import (
    AnsatzError,
    amplitude_map,
    build_ansatz,
    invert_amplitudes,
    onehot_amplitudes,
    onehot_indices,
    overlap,
)
from excitonvqd.simulator import run_pure


def test_zero_angles_prepare_first_basis_state():
    state = run_pure(build_ansatz(5, np.zeros(4)))
    assert abs(state.data[1] - 1.0) < 1e-12  # |00001>


def test_first_angle_pi_kills_first_amplitude():
    state = run_pure(build_ansatz(5, np.array([np.pi, 0.3, -0.2, 0.9])))
    assert abs(state.data[1]) < 1e-12


def test_two_qubit_closed_form():
    theta = 0.77
    c = amplitude_map(np.array([theta]))
    assert np.allclose(c, [np.cos(theta / 2), np.sin(theta / 2)])


def test_circuit_matches_closed_form_and_gate_budget():
    rng = np.random.default_rng(0)
    for n in range(2, 11):
        circ = build_ansatz(n, rng.uniform(-np.pi, np.pi, n - 1))
        assert circ.cnot_count() == 2 * n - 3
    for n in (2, 3, 5, 8):
        for _ in range(50):
            params = rng.uniform(-np.pi, np.pi, n - 1)
            psi = run_pure(build_ansatz(n, params)).data
            assert np.abs(onehot_amplitudes(psi, n).real - amplitude_map(params)).max() < 1e-12


def test_support_is_one_hot_only():
    rng = np.random.default_rng(1)
    for _ in range(50):
        params = rng.uniform(-np.pi, np.pi, 4)
        psi = run_pure(build_ansatz(5, params)).data
        mask = np.ones(32, dtype=bool)
        mask[onehot_indices(5)] = False
        assert np.abs(psi[mask]).max() < 1e-12


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-np.pi, np.pi, allow_nan=False), min_size=1, max_size=9).map(
        np.array
    )
)
def test_normalization_is_analytic(params):
    c = amplitude_map(params)
    assert abs(c @ c - 1.0) < 1e-14


def test_invert_canonical_cases():
    assert np.allclose(invert_amplitudes(np.array([1.0, 0, 0, 0, 0])), 0.0)
    params = invert_amplitudes(np.array([0.0, 0, 0, 0, 1.0]))
    assert abs(params[0] - np.pi) < 1e-12
    assert np.abs(amplitude_map(params) - [0, 0, 0, 0, 1.0]).max() < 1e-12


def test_invert_round_trip_on_unit_sphere():
    rng = np.random.default_rng(2)
    worst = 0.0
    for n in range(2, 9):
        for _ in range(150):
            c = rng.standard_normal(n)
            c /= np.linalg.norm(c)
            worst = max(worst, np.abs(amplitude_map(invert_amplitudes(c)) - c).max())
    assert worst < 1e-10


def test_invert_handles_degenerate_tail():
    c = np.zeros(5)
    c[0] = 1.0
    params = invert_amplitudes(c)
    assert np.all(np.isfinite(params))
    assert np.abs(amplitude_map(params) - c).max() < 1e-12


def test_overlap_identities():
    rng = np.random.default_rng(3)
    a = rng.uniform(-np.pi, np.pi, 4)
    assert abs(overlap(a, a) - 1.0) < 1e-12
    e1 = invert_amplitudes(np.array([1.0, 0, 0, 0, 0]))
    e2 = invert_amplitudes(np.array([0.0, 1, 0, 0, 0]))
    assert overlap(e1, e2) < 1e-24


def test_overlap_matches_statevector_inner_product():
    rng = np.random.default_rng(4)
    for _ in range(100):
        a = rng.uniform(-np.pi, np.pi, 4)
        b = rng.uniform(-np.pi, np.pi, 4)
        sa = run_pure(build_ansatz(5, a)).data
        sb = run_pure(build_ansatz(5, b)).data
        assert abs(overlap(a, b) - abs(np.vdot(sa, sb)) ** 2) < 1e-12


def test_invalid_inputs():
    with pytest.raises(AnsatzError):
        build_ansatz(1, np.array([]))
    with pytest.raises(AnsatzError):
        build_ansatz(5, np.zeros(3))
    with pytest.raises(AnsatzError):
        overlap(np.zeros(3), np.zeros(4))
    with pytest.raises(AnsatzError):
        invert_amplitudes(np.array([1.0, 1.0]))
