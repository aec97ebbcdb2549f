"""Device noise model: per-qubit T1/T2 and assignment errors, per-pair
two-qubit depolarizing rates, and gate durations.

The document format mirrors calibration tables of superconducting backends:

.. code-block:: yaml

    qubits:
      - {index: 0, t1_us: 120.7, t2_us: 179.57,
         prob_meas0_prep1: 0.0194, prob_meas1_prep0: 0.0066,
         gate_error_1q: 2.222e-4}
    pairs:
      - {a: 0, b: 1, cx_error: 9.953e-3}
    durations_ns: {single_qubit: 35.0, two_qubit: 300.0, measure: 700.0}

Pair errors are symmetric; a direction listed once covers both. Durations
are optional and default to representative transmon magnitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

DEFAULT_SINGLE_QUBIT_NS = 35.0
DEFAULT_TWO_QUBIT_NS = 300.0
DEFAULT_MEASURE_NS = 700.0

_PAULIS = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


class NoiseModelError(ValueError):
    """Raised for malformed or physically inconsistent noise documents."""


@dataclass(frozen=True)
class QubitNoise:
    t1_us: float
    t2_us: float
    prob_meas0_prep1: float
    prob_meas1_prep0: float
    gate_error_1q: float


@dataclass(frozen=True)
class GateDurations:
    single_qubit: float = DEFAULT_SINGLE_QUBIT_NS
    two_qubit: float = DEFAULT_TWO_QUBIT_NS
    measure: float = DEFAULT_MEASURE_NS


@dataclass
class NoiseModel:
    qubits: dict[int, QubitNoise]
    pair_errors: dict[frozenset, float] = field(default_factory=dict)
    durations_ns: GateDurations = field(default_factory=GateDurations)
    unlisted_pair_error: float | None = None

    def qubit(self, index: int) -> QubitNoise:
        try:
            return self.qubits[index]
        except KeyError:
            raise NoiseModelError(f"qubit {index} not in noise model") from None

    def pair_error(self, a: int, b: int) -> float:
        key = frozenset((a, b))
        if key in self.pair_errors:
            return self.pair_errors[key]
        if self.unlisted_pair_error is not None:
            return self.unlisted_pair_error
        raise NoiseModelError(f"pair ({a}, {b}) not in noise model")

    def with_pair_fallback(self) -> "NoiseModel":
        """Copy that serves the mean listed two-qubit error for unlisted pairs.

        Measurement post-rotations act on arbitrary qubit pairs while
        calibration tables only list coupled neighbours; the mean listed
        error stands in for an interaction routed through the device.
        """
        if not self.pair_errors:
            fallback = 0.0
        else:
            fallback = float(np.mean(list(self.pair_errors.values())))
        return replace(self, unlisted_pair_error=fallback)

    @classmethod
    def zero(cls, n_qubits: int) -> "NoiseModel":
        """Noiseless model over qubits 0..n-1 (useful for tests)."""
        rec = QubitNoise(math.inf, math.inf, 0.0, 0.0, 0.0)
        model = cls({q: rec for q in range(n_qubits)})
        return replace(model, unlisted_pair_error=0.0)


def _require(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise NoiseModelError(f"{path}: {message}")


def _get(record: dict, path: str, key: str):
    if key not in record:
        raise NoiseModelError(f"{path}.{key}: missing field")
    return record[key]


def load_noise_model(source) -> NoiseModel:
    """Parse a noise document from a path, YAML text, or dict."""
    if isinstance(source, dict):
        doc = source
    else:
        path = Path(source)
        try:
            is_file = path.exists()
        except OSError:
            is_file = False
        doc = yaml.safe_load(path.read_text() if is_file else str(source))
    if not isinstance(doc, dict) or "qubits" not in doc:
        raise NoiseModelError("document must contain a 'qubits' section")

    qubits: dict[int, QubitNoise] = {}
    for i, rec in enumerate(doc["qubits"]):
        path = f"qubits[{i}]"
        index = int(_get(rec, path, "index"))
        _require(index not in qubits, path, f"duplicate qubit index {index}")
        t1 = float(_get(rec, path, "t1_us"))
        t2 = float(_get(rec, path, "t2_us"))
        _require(t1 > 0, f"{path}.t1_us", "must be positive")
        _require(t2 > 0, f"{path}.t2_us", "must be positive")
        _require(t2 <= 2 * t1, f"{path}.t2_us", f"t2 = {t2} exceeds 2*t1 = {2 * t1}")
        probs = {}
        for key in ("prob_meas0_prep1", "prob_meas1_prep0", "gate_error_1q"):
            value = float(_get(rec, path, key))
            _require(0.0 <= value <= 1.0, f"{path}.{key}", "must lie in [0, 1]")
            probs[key] = value
        qubits[index] = QubitNoise(t1, t2, **probs)

    pair_errors: dict[frozenset, float] = {}
    for i, rec in enumerate(doc.get("pairs", [])):
        path = f"pairs[{i}]"
        a = int(_get(rec, path, "a"))
        b = int(_get(rec, path, "b"))
        _require(a != b, path, "pair endpoints must differ")
        _require(a in qubits and b in qubits, path, "pair references unknown qubit")
        err = float(_get(rec, path, "cx_error"))
        _require(0.0 <= err <= 1.0, f"{path}.cx_error", "must lie in [0, 1]")
        key = frozenset((a, b))
        if key in pair_errors:
            _require(
                math.isclose(pair_errors[key], err, rel_tol=1e-9),
                path,
                "conflicting errors for the two directions of one pair",
            )
        pair_errors[key] = err

    durations = doc.get("durations_ns", {}) or {}
    dur = GateDurations(
        single_qubit=float(durations.get("single_qubit", DEFAULT_SINGLE_QUBIT_NS)),
        two_qubit=float(durations.get("two_qubit", DEFAULT_TWO_QUBIT_NS)),
        measure=float(durations.get("measure", DEFAULT_MEASURE_NS)),
    )
    for name in ("single_qubit", "two_qubit", "measure"):
        _require(getattr(dur, name) >= 0, f"durations_ns.{name}", "must be nonnegative")
    return NoiseModel(qubits, pair_errors, dur)


def depolarizing_kraus(p: float, n_qubits: int) -> list[np.ndarray]:
    """Kraus set for the n-qubit depolarizing channel.

    With probability p a uniformly random non-identity Pauli is applied:
    rho -> (1-p) rho + p/(4^n - 1) sum_{P != I} P rho P.
    """
    if not 0.0 <= p <= 1.0:
        raise NoiseModelError(f"depolarizing rate {p} outside [0, 1]")
    if n_qubits == 1:
        paulis = _PAULIS
    elif n_qubits == 2:
        paulis = [np.kron(a, b) for a in _PAULIS for b in _PAULIS]
    else:
        raise NoiseModelError("depolarizing channel supports 1 or 2 qubits")
    n_err = len(paulis) - 1
    out = [np.sqrt(1.0 - p) * paulis[0]]
    out.extend(np.sqrt(p / n_err) * pauli for pauli in paulis[1:])
    return out


def amplitude_damping_kraus(gamma: float) -> list[np.ndarray]:
    return [
        np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex),
        np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex),
    ]


def phase_damping_kraus(lam: float) -> list[np.ndarray]:
    return [
        np.array([[1, 0], [0, np.sqrt(1 - lam)]], dtype=complex),
        np.array([[0, 0], [0, np.sqrt(lam)]], dtype=complex),
    ]


def relaxation_parameters(duration_ns: float, t1_us: float, t2_us: float) -> tuple[float, float]:
    """(gamma, lambda) for thermal relaxation over the given duration.

    gamma = 1 - exp(-t/T1) drives amplitude damping; lambda is the pure
    dephasing remainder so that coherences decay by exp(-t/T2) overall.
    """
    t_us = duration_ns * 1e-3
    if t_us <= 0:
        return 0.0, 0.0
    gamma = 1.0 - math.exp(-t_us / t1_us) if math.isfinite(t1_us) else 0.0
    inv_tphi = 1.0 / t2_us - 0.5 / t1_us if math.isfinite(t2_us) else 0.0
    lam = 1.0 - math.exp(-2.0 * t_us * inv_tphi) if inv_tphi > 0 else 0.0
    return gamma, lam
