"""Statevector and density-matrix simulation with parameterized noise.

Pure states evolve exactly. Density matrices evolve under each gate's
unitary followed by its noise channels: depolarizing at the per-qubit or
per-pair rate, then thermal relaxation for the gate duration on every
participating qubit. Readout error is applied at sampling time as
independent per-qubit assignment flips.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gates import Circuit, Gate, GateError, index_to_bitstring
from .noise import NoiseModel, relaxation_parameters


class SimulationError(ValueError):
    """Raised for states, layouts or sampling requests that are malformed."""


@dataclass
class QuantumState:
    """Pure statevector (length ``2**width``) or density matrix."""

    mode: str  # "pure" | "density"
    width: int
    data: np.ndarray

    @classmethod
    def zero(cls, width: int, mode: str = "pure") -> "QuantumState":
        return cls.from_basis_index(0, width, mode)

    @classmethod
    def from_basis_index(cls, index: int, width: int, mode: str = "pure") -> "QuantumState":
        dim = 2**width
        if not 0 <= index < dim:
            raise SimulationError(f"basis index {index} out of range for width {width}")
        if mode == "pure":
            data = np.zeros(dim, dtype=complex)
            data[index] = 1.0
        elif mode == "density":
            data = np.zeros((dim, dim), dtype=complex)
            data[index, index] = 1.0
        else:
            raise SimulationError(f"unknown mode {mode!r}")
        return cls(mode, width, data)

    @classmethod
    def from_bitstring(cls, bits: str, mode: str = "pure") -> "QuantumState":
        return cls.from_basis_index(int(bits, 2), len(bits), mode)

    def probabilities(self) -> np.ndarray:
        """Computational-basis probabilities (clipped at zero, renormalized)."""
        if self.mode == "pure":
            p = np.abs(self.data) ** 2
        else:
            p = np.real(np.diagonal(self.data)).copy()
        p = np.clip(p, 0.0, None)
        return p / p.sum()

    def to_density(self) -> "QuantumState":
        if self.mode == "density":
            return QuantumState("density", self.width, self.data.copy())
        return QuantumState("density", self.width, np.outer(self.data, self.data.conj()))

    def validate(self, atol: float = 1e-10) -> None:
        """Check normalization / hermiticity / positivity invariants."""
        if self.mode == "pure":
            norm = np.vdot(self.data, self.data).real
            if abs(norm - 1.0) > atol:
                raise SimulationError(f"statevector norm {norm} deviates from 1")
        else:
            if not np.allclose(self.data, self.data.conj().T, atol=atol):
                raise SimulationError("density matrix is not Hermitian")
            tr = np.trace(self.data).real
            if abs(tr - 1.0) > atol:
                raise SimulationError(f"density matrix trace {tr} deviates from 1")
            eigs = np.linalg.eigvalsh(self.data)
            if eigs.min() < -1e-9:
                raise SimulationError(f"density matrix has eigenvalue {eigs.min()}")


@dataclass
class ShotHistogram:
    """Counts of measured bitstrings; keys are width-length strings."""

    width: int
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def shots(self) -> int:
        return sum(self.counts.values())

    def frequency_vector(self) -> np.ndarray:
        """Relative frequencies over all ``2**width`` basis states."""
        out = np.zeros(2**self.width)
        total = self.shots
        for bits, c in self.counts.items():
            out[int(bits, 2)] = c / total
        return out

    def bit_frequency(self, qubit: int) -> float:
        """Fraction of shots with the given qubit read as 1."""
        total = self.shots
        hits = sum(c for bits, c in self.counts.items() if bits[-1 - qubit] == "1")
        return hits / total


def _apply_unitary_pure(vec: np.ndarray, u: np.ndarray, qubits: tuple[int, ...], width: int) -> np.ndarray:
    """Apply u on the given qubits; first listed qubit is u's least significant."""
    k = len(qubits)
    tensor = vec.reshape((2,) * width)
    # axis of qubit q is width-1-q; u index order is (last listed, ..., first listed)
    axes = [width - 1 - q for q in reversed(qubits)]
    tensor = np.moveaxis(tensor, axes, range(k))
    shape = tensor.shape
    tensor = u @ tensor.reshape(2**k, -1)
    tensor = np.moveaxis(tensor.reshape(shape), range(k), axes)
    return np.ascontiguousarray(tensor).reshape(-1)


def _apply_left_density(rho: np.ndarray, u: np.ndarray, qubits, width: int) -> np.ndarray:
    """u . rho, acting on the row indices."""
    k = len(qubits)
    tensor = rho.reshape((2,) * (2 * width))
    axes = [width - 1 - q for q in reversed(qubits)]
    tensor = np.moveaxis(tensor, axes, range(k))
    shape = tensor.shape
    tensor = u @ tensor.reshape(2**k, -1)
    tensor = np.moveaxis(tensor.reshape(shape), range(k), axes)
    return tensor.reshape(2**width, 2**width)


def _conjugate_density(rho: np.ndarray, u: np.ndarray, qubits, width: int) -> np.ndarray:
    """u . rho . u^dagger for Hermitian rho."""
    out = _apply_left_density(rho, u, qubits, width)
    # u (u rho)^dagger = u rho^dagger u^dagger, and rho^dagger = rho
    return _apply_left_density(out.conj().T, u, qubits, width)


def apply_unitary(state: QuantumState, u: np.ndarray, qubits: tuple[int, ...]) -> QuantumState:
    """Apply an explicit unitary on the listed qubits (first = least significant)."""
    for q in qubits:
        if not 0 <= q < state.width:
            raise SimulationError(f"qubit {q} out of range")
    if state.mode == "pure":
        return QuantumState("pure", state.width, _apply_unitary_pure(state.data, u, qubits, state.width))
    return QuantumState("density", state.width, _conjugate_density(state.data, u, qubits, state.width))


def apply_kraus(state: QuantumState, kraus: list[np.ndarray], qubits: tuple[int, ...]) -> QuantumState:
    """Apply a Kraus channel to a density-matrix state."""
    if state.mode != "density":
        raise SimulationError("Kraus channels require a density matrix")
    out = np.zeros_like(state.data)
    for k in kraus:
        term = _apply_left_density(state.data, k, qubits, state.width)
        out += _apply_left_density(term.conj().T, k, qubits, state.width)
    return QuantumState("density", state.width, out)


def _depolarize_density(rho: np.ndarray, p: float, qubits, width: int) -> np.ndarray:
    """Closed form of the uniform-Pauli depolarizing channel.

    rho -> (1-q) rho + q (I/2^k (x) tr_S rho) with q = p 4^k/(4^k-1);
    equivalent to the Kraus set of ``depolarizing_kraus`` without the
    per-Pauli conjugations.
    """
    k = len(qubits)
    q = p * 4**k / (4**k - 1)
    dim = 2**width
    t = rho.reshape((2,) * (2 * width))
    row_axes = [width - 1 - qq for qq in reversed(qubits)]
    col_axes = [2 * width - 1 - qq for qq in reversed(qubits)]
    t = np.moveaxis(t, row_axes + col_axes, range(2 * k))
    block = t.reshape(2**k, 2**k, -1)
    reduced = np.trace(block, axis1=0, axis2=1) / 2**k
    embedded = np.zeros_like(block)
    for i in range(2**k):
        embedded[i, i, :] = reduced
    embedded = np.moveaxis(embedded.reshape(t.shape), range(2 * k), row_axes + col_axes)
    return (1.0 - q) * rho + q * embedded.reshape(dim, dim)


def _relax_density(rho: np.ndarray, gamma: float, lam: float, qubit: int, width: int) -> np.ndarray:
    """Thermal relaxation as direct block updates on one qubit.

    Populations damp toward the ground state with gamma; coherences shrink
    by sqrt((1-gamma)(1-lam)). Matches amplitude damping followed by phase
    damping.
    """
    t = rho.reshape((2,) * (2 * width)).copy()
    row = width - 1 - qubit
    col = 2 * width - 1 - qubit
    t = np.moveaxis(t, (row, col), (0, 1))
    coherence = np.sqrt((1.0 - gamma) * (1.0 - lam))
    t[0, 0] += gamma * t[1, 1]
    t[1, 1] *= 1.0 - gamma
    t[0, 1] *= coherence
    t[1, 0] *= coherence
    t = np.moveaxis(t, (0, 1), (row, col))
    return t.reshape(rho.shape)


def apply_gate(state: QuantumState, gate: Gate) -> QuantumState:
    """Apply one ideal gate to a pure or density state."""
    for q in gate.qubits:
        if not 0 <= q < state.width:
            raise GateError(f"gate qubit {q} out of range for width {state.width}")
    return apply_unitary(state, gate.matrix(), gate.qubits)


def run_pure(circuit: Circuit, initial: str | None = None) -> QuantumState:
    """Exact statevector of the circuit applied to |initial> (default |0...0>)."""
    if initial is None:
        state = QuantumState.zero(circuit.width)
    else:
        if len(initial) != circuit.width:
            raise SimulationError("initial bitstring length must match circuit width")
        state = QuantumState.from_bitstring(initial)
    for gate in circuit.gates:
        state = apply_gate(state, gate)
    return state


def _resolve_layout(layout, width: int) -> list[int]:
    if layout is None:
        return list(range(width))
    layout = list(layout)
    if len(layout) != width:
        raise SimulationError("layout length must equal circuit width")
    if len(set(layout)) != len(layout):
        raise SimulationError("layout must be injective")
    return layout


def run_noisy(circuit: Circuit, noise: NoiseModel, layout=None) -> QuantumState:
    """Density-matrix evolution with per-gate depolarizing + thermal relaxation.

    ``layout`` maps logical qubit i to a physical qubit of the noise model;
    identity by default.
    """
    phys = _resolve_layout(layout, circuit.width)
    for p in phys:
        noise.qubit(p)  # raises early if the layout leaves the model
    state = QuantumState.zero(circuit.width, mode="density")
    rho = state.data
    width = circuit.width
    for gate in circuit.gates:
        rho = _conjugate_density(rho, gate.matrix(), gate.qubits, width)
        qubits = gate.qubits
        if len(qubits) == 1:
            p_err = noise.qubit(phys[qubits[0]]).gate_error_1q
            duration = noise.durations_ns.single_qubit
        else:
            p_err = noise.pair_error(phys[qubits[0]], phys[qubits[1]])
            duration = noise.durations_ns.two_qubit
        if p_err > 0:
            rho = _depolarize_density(rho, p_err, qubits, width)
        for q in qubits:
            rec = noise.qubit(phys[q])
            gamma, lam = relaxation_parameters(duration, rec.t1_us, rec.t2_us)
            if gamma > 0 or lam > 0:
                rho = _relax_density(rho, gamma, lam, q, width)
    return QuantumState("density", width, rho)


def sample(
    state: QuantumState,
    shots: int,
    noise: NoiseModel | None = None,
    layout=None,
    seed=None,
) -> ShotHistogram:
    """Draw shots from the state's computational-basis distribution.

    With a noise model, each measured bit is flipped independently with its
    physical qubit's assignment-error probabilities. The same seed yields an
    identical histogram.
    """
    if shots < 1:
        raise SimulationError("shots must be at least 1")
    rng = np.random.default_rng(seed)
    probs = state.probabilities()
    counts = rng.multinomial(shots, probs)
    if noise is not None:
        phys = _resolve_layout(layout, state.width)
        indices = np.arange(len(counts))
        for q in range(state.width):
            rec = noise.qubit(phys[q])
            bit_set = (indices >> q) & 1 == 1
            p_flip = np.where(bit_set, rec.prob_meas0_prep1, rec.prob_meas1_prep0)
            flipped = rng.binomial(counts, p_flip)
            counts = counts - flipped
            np.add.at(counts, indices ^ (1 << q), flipped)
    out: dict[str, int] = {}
    for idx in np.nonzero(counts)[0]:
        out[index_to_bitstring(int(idx), state.width)] = int(counts[idx])
    return ShotHistogram(state.width, out)
