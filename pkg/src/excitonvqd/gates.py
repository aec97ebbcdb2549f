"""Gate and circuit primitives for small qubit registers.

Conventions used throughout the package:

* Qubit ``i`` corresponds to bit ``i`` of the computational-basis index
  (little endian), so basis state ``|...q1 q0>`` has index ``sum(q_i * 2**i)``.
* Bitstrings are rendered most-significant qubit first, e.g. ``"00001"`` is
  the state with qubit 0 excited on a five-qubit register.
* ``ry(theta)`` is the real rotation ``[[cos t/2, -sin t/2], [sin t/2, cos t/2]]``
  so that circuits built from it keep real amplitudes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SINGLE_QUBIT_KINDS = ("ry", "rz", "x")
TWO_QUBIT_KINDS = ("cnot", "sqrt_iswap")
GATE_KINDS = SINGLE_QUBIT_KINDS + TWO_QUBIT_KINDS

_SQRT_ISWAP = np.array(
    [
        [1, 0, 0, 0],
        [0, 1 / np.sqrt(2), 1j / np.sqrt(2), 0],
        [0, 1j / np.sqrt(2), 1 / np.sqrt(2), 0],
        [0, 0, 0, 1],
    ],
    dtype=complex,
)

_X = np.array([[0, 1], [1, 0]], dtype=complex)

# control is the most-significant axis of the 4x4 matrix, target the least
_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


class GateError(ValueError):
    """Raised for malformed gates or gates incompatible with a register."""


@dataclass(frozen=True)
class Gate:
    """One gate: ``kind`` in {ry, rz, x, cnot, sqrt_iswap}.

    ``control`` holds the control qubit for ``cnot`` and the second qubit for
    the (symmetric) ``sqrt_iswap``; ``angle`` is set for rotations only.
    """

    kind: str
    target: int
    control: int | None = None
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise GateError(f"unknown gate kind {self.kind!r}")
        if self.kind in ("ry", "rz"):
            if self.angle is None:
                raise GateError(f"{self.kind} requires an angle")
        elif self.angle is not None:
            raise GateError(f"{self.kind} takes no angle")
        if self.kind in TWO_QUBIT_KINDS:
            if self.control is None:
                raise GateError(f"{self.kind} requires two qubits")
            if self.control == self.target:
                raise GateError("control and target must differ")
        elif self.control is not None:
            raise GateError(f"{self.kind} takes no control qubit")

    @property
    def qubits(self) -> tuple[int, ...]:
        """Participating qubits; for two-qubit gates ``(target, control)``."""
        if self.control is None:
            return (self.target,)
        return (self.target, self.control)

    def matrix(self) -> np.ndarray:
        """Unitary of the gate.

        Two-qubit matrices are indexed with ``target`` as the least
        significant qubit and ``control`` (or the second sqrt_iswap qubit)
        as the most significant one.
        """
        if self.kind == "ry":
            c, s = np.cos(self.angle / 2), np.sin(self.angle / 2)
            return np.array([[c, -s], [s, c]], dtype=complex)
        if self.kind == "rz":
            return np.array(
                [[np.exp(-1j * self.angle / 2), 0], [0, np.exp(1j * self.angle / 2)]]
            )
        if self.kind == "x":
            return _X.copy()
        if self.kind == "cnot":
            return _CNOT.copy()
        return _SQRT_ISWAP.copy()

    def inverse(self) -> "Gate":
        if self.kind in ("ry", "rz"):
            return Gate(self.kind, self.target, angle=-self.angle)
        if self.kind in ("x", "cnot"):
            return self
        raise GateError("sqrt_iswap inverse is not in the gate set")


@dataclass
class Circuit:
    """Ordered gate sequence over ``width`` qubits."""

    width: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        if self.width < 1:
            raise GateError("circuit width must be positive")
        for g in self.gates:
            self._check(g)

    def _check(self, gate: Gate) -> None:
        for q in gate.qubits:
            if not 0 <= q < self.width:
                raise GateError(
                    f"gate {gate.kind} on qubit {q} outside register of width {self.width}"
                )

    def append(self, gate: Gate) -> "Circuit":
        self._check(gate)
        self.gates.append(gate)
        return self

    def ry(self, target: int, angle: float) -> "Circuit":
        return self.append(Gate("ry", target, angle=angle))

    def rz(self, target: int, angle: float) -> "Circuit":
        return self.append(Gate("rz", target, angle=angle))

    def x(self, target: int) -> "Circuit":
        return self.append(Gate("x", target))

    def cnot(self, control: int, target: int) -> "Circuit":
        return self.append(Gate("cnot", target, control=control))

    def sqrt_iswap(self, a: int, b: int) -> "Circuit":
        return self.append(Gate("sqrt_iswap", a, control=b))

    def extended(self, gates) -> "Circuit":
        """New circuit with ``gates`` appended."""
        out = Circuit(self.width, list(self.gates))
        for g in gates:
            out.append(g)
        return out

    def cnot_count(self) -> int:
        return sum(1 for g in self.gates if g.kind == "cnot")

    def two_qubit_count(self) -> int:
        return sum(1 for g in self.gates if g.kind in TWO_QUBIT_KINDS)


def bitstring_to_index(bits: str) -> int:
    """Bitstring (most-significant qubit first) to basis index."""
    return int(bits, 2)


def index_to_bitstring(index: int, width: int) -> str:
    return format(index, f"0{width}b")
