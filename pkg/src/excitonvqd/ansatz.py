"""One-excitation ansatz: a W-state-like circuit whose amplitudes have an
exact closed form in the rotation angles.

For an n-qubit register the circuit takes n-1 angles ``P``. A single
``ry(P[0])`` splits weight between "stop" and "continue"; each of the n-2
controlled-rotation blocks (``ry(-P[k])``, ``cnot``, ``ry(P[k])`` on the next
qubit, one CNOT each) peels a ``sin P[k]`` factor off the running weight and
passes ``cos P[k]`` on. A cleanup layer of CNOTs and one X converts the
resulting staircase into one-hot bitstrings, giving

    c[0]   = cos(P[0]/2)
    c[k]   = sin(P[0]/2) * prod_{j<k} cos P[j] * sin P[k]
    c[n-1] = sin(P[0]/2) * prod_j cos P[j]

over the basis |0...01>, |0...10>, ..., |10...0>. Total CNOT count is 2n-3.
Because the map is exactly invertible, overlaps between two parameter sets
are evaluated classically; no extra circuits are needed.
"""

from __future__ import annotations

import numpy as np

from .gates import Circuit


class AnsatzError(ValueError):
    """Raised for invalid widths or parameter vectors."""


def _check_params(n: int, params) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if n < 2:
        raise AnsatzError("ansatz needs at least two qubits")
    if params.shape != (n - 1,):
        raise AnsatzError(f"expected {n - 1} angles for {n} qubits, got {params.shape}")
    return params


def build_ansatz(n: int, params) -> Circuit:
    """Circuit preparing the one-hot superposition for the given angles."""
    params = _check_params(n, params)
    circ = Circuit(n)
    circ.ry(0, params[0])
    for k in range(1, n - 1):
        # controlled rotation: sin(P) stays on the current branch when the
        # control is |1>, cos(P) moves on; single CNOT per block
        circ.ry(k, params[k])
        circ.cnot(k - 1, k)
        circ.ry(k, -params[k])
    for k in range(n - 1, 0, -1):
        circ.cnot(k - 1, k)
    circ.x(0)
    return circ


def amplitude_map(params) -> np.ndarray:
    """Closed-form one-hot amplitudes; index m belongs to bitstring 2**m."""
    params = np.asarray(params, dtype=float)
    n = params.shape[0] + 1
    c = np.empty(n)
    c[0] = np.cos(params[0] / 2.0)
    remainder = np.sin(params[0] / 2.0)
    for k in range(1, n - 1):
        c[k] = remainder * np.sin(params[k])
        remainder = remainder * np.cos(params[k])
    c[n - 1] = remainder
    return c


def overlap(a, b) -> float:
    """|<psi_a|psi_b>|^2 computed classically from the amplitude map."""
    ca = amplitude_map(a)
    cb = amplitude_map(b)
    if ca.shape != cb.shape:
        raise AnsatzError("parameter vectors address different widths")
    return float(np.dot(ca, cb) ** 2)


def invert_amplitudes(c) -> np.ndarray:
    """Angles reproducing a real unit amplitude vector exactly.

    The running remainder is kept nonnegative, the final block absorbs the
    sign of the last two amplitudes; a numerically exhausted tail (remaining
    weight below ~1e-14) yields zero angles for the remaining blocks.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    if n < 2:
        raise AnsatzError("need at least two amplitudes")
    if abs(float(c @ c) - 1.0) > 1e-9:
        raise AnsatzError("amplitudes must be normalized")
    params = np.zeros(n - 1)
    if n == 2:
        params[0] = 2.0 * np.arctan2(c[1], c[0])
        return params
    params[0] = 2.0 * np.arctan2(np.sqrt(max(0.0, 1.0 - c[0] ** 2)), c[0])
    remainder = np.sin(params[0] / 2.0)
    for k in range(1, n - 2):
        rest = remainder**2 - c[k] ** 2
        if remainder < 1e-14:
            params[k] = 0.0
            continue
        params[k] = np.arctan2(c[k], np.sqrt(max(0.0, rest)))
        remainder = remainder * np.cos(params[k])
    if n >= 3:
        if remainder < 1e-14 and abs(c[n - 2]) < 1e-14 and abs(c[n - 1]) < 1e-14:
            params[n - 2] = 0.0
        else:
            params[n - 2] = np.arctan2(c[n - 2], c[n - 1])
    return params


def onehot_indices(n: int) -> np.ndarray:
    """Basis indices of the one-hot bitstrings, ordered by amplitude slot."""
    return np.array([1 << m for m in range(n)])


def onehot_amplitudes(statevector: np.ndarray, n: int) -> np.ndarray:
    """Extract the one-hot amplitude slots from a full statevector."""
    return statevector[onehot_indices(n)]
