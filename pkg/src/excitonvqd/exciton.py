"""Frenkel exciton model: Hamiltonian assembly, exact diagonalization and
optical observables.

The model lives in the one-excitation basis: an n-molecule aggregate gives an
n x n real symmetric matrix with molecular transition energies on the
diagonal and electronic couplings off it. Oscillator strengths follow
``f_i = (2/3) E_i |sum_m C^i_m mu_m|^2`` with ``E_i`` the physical excitation
energy, so configurations with zeroed transition energies should carry a
positive ``energy_offset_mev`` if observables are wanted with physical signs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

MEV_TO_CM1 = 8.06554


class ExcitonConfigError(ValueError):
    """Raised for malformed exciton configurations."""


class SpectrumError(ValueError):
    """Raised when requested observables are undefined for a spectrum."""


@dataclass
class ExcitonConfig:
    n: int
    onsite_mev: np.ndarray
    couplings: list[tuple[int, int, float]]
    dipoles: np.ndarray | None = None
    energy_offset_mev: float = 0.0
    allowed_threshold: float = 1e-6

    def __post_init__(self):
        self.onsite_mev = np.asarray(self.onsite_mev, dtype=float)
        if self.n < 1:
            raise ExcitonConfigError("molecule count must be positive")
        if self.onsite_mev.shape != (self.n,):
            raise ExcitonConfigError(f"expected {self.n} onsite energies")
        seen = set()
        for m, nn, _ in self.couplings:
            if m == nn:
                raise ExcitonConfigError(f"self-coupling on molecule {m}")
            if not (0 <= m < self.n and 0 <= nn < self.n):
                raise ExcitonConfigError(f"coupling ({m}, {nn}) out of range")
            key = frozenset((m, nn))
            if key in seen:
                raise ExcitonConfigError(f"duplicate coupling for pair ({m}, {nn})")
            seen.add(key)
        if self.dipoles is not None:
            self.dipoles = np.asarray(self.dipoles, dtype=float)
            if self.dipoles.shape != (self.n, 3):
                raise ExcitonConfigError("dipoles must be one 3-vector per molecule")


def load_exciton_config(source) -> ExcitonConfig:
    """Parse an exciton configuration from a path, YAML text, or dict."""
    if isinstance(source, dict):
        doc = source
    else:
        path = Path(source)
        try:
            is_file = path.exists()
        except OSError:
            is_file = False
        doc = yaml.safe_load(path.read_text() if is_file else str(source))
    if not isinstance(doc, dict) or "n" not in doc:
        raise ExcitonConfigError("document must define the molecule count 'n'")
    n = int(doc["n"])
    onsite = doc.get("onsite_mev", [0.0] * n)
    couplings = [
        (int(rec["m"]), int(rec["n"]), float(rec["v_mev"]))
        for rec in doc.get("couplings", [])
    ]
    dipoles = doc.get("dipoles")
    return ExcitonConfig(
        n=n,
        onsite_mev=onsite,
        couplings=couplings,
        dipoles=None if dipoles is None else np.asarray(dipoles, dtype=float),
        energy_offset_mev=float(doc.get("energy_offset_mev", 0.0)),
        allowed_threshold=float(doc.get("allowed_threshold", 1e-6)),
    )


@dataclass
class ExcitonHamiltonian:
    matrix: np.ndarray
    couplings: list[tuple[int, int, float]]
    onsite_mev: np.ndarray = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def build_hamiltonian(config: ExcitonConfig) -> ExcitonHamiltonian:
    """Assemble the one-exciton matrix: onsite on the diagonal, couplings off."""
    h = np.diag(config.onsite_mev.astype(float))
    for m, n, v in config.couplings:
        h[m, n] = h[n, m] = v
    return ExcitonHamiltonian(h, list(config.couplings), config.onsite_mev.copy())


@dataclass
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # orthonormal columns, ascending eigenvalues


def jacobi_eigh(matrix: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Full eigendecomposition of a real symmetric matrix by cyclic Jacobi.

    Sweeps zero each off-diagonal element in turn until the off-diagonal
    Frobenius norm falls below ``tol * ||A||``. Returns (eigenvalues
    ascending, eigenvector columns).
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, atol=1e-10):
        raise ValueError("matrix must be symmetric")
    n = a.shape[0]
    v = np.eye(n)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return np.zeros(n), v

    def off_norm(m):
        off = m.copy()
        np.fill_diagonal(off, 0.0)
        return np.linalg.norm(off)

    for _ in range(max_sweeps):
        if off_norm(a) <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) <= 1e-30 * norm:
                    continue
                # rotation angle zeroing a[p, q] under a -> J a J^T
                theta = (a[p, p] - a[q, q]) / (2.0 * a[p, q])
                if theta == 0.0:
                    t = 1.0
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1.0))
                c = 1.0 / np.sqrt(t**2 + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                a[[p, q], :] = rot @ a[[p, q], :]
                a[:, [p, q]] = a[:, [p, q]] @ rot.T
                v[:, [p, q]] = v[:, [p, q]] @ rot.T
    else:
        raise RuntimeError("Jacobi iteration failed to converge")

    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def diagonalize(h: ExcitonHamiltonian) -> EigenResult:
    w, v = jacobi_eigh(h.matrix)
    return EigenResult(w, v)


@dataclass
class StateLine:
    index: int
    energy_mev: float
    oscillator_strength: float | None
    allowed: bool | None


@dataclass
class SpectrumReport:
    states: list[StateLine]
    davydov_mev: float | None = None
    davydov_cm1: float | None = None
    energy_offset_mev: float = 0.0

    @property
    def allowed_indices(self) -> list[int]:
        return [s.index for s in self.states if s.allowed]


def oscillator_strengths(
    eig: EigenResult,
    config: ExcitonConfig,
    energy_offset: float | None = None,
) -> SpectrumReport:
    """Oscillator strengths and the splitting between the two allowed states.

    ``energy_offset`` defaults to the configuration's value. When the offset
    leaves excitation energies negative the strengths inherit that sign and
    the allowed/forbidden classification follows it; pass a physical offset
    for sign-correct observables.
    """
    if config.dipoles is None:
        raise SpectrumError("configuration carries no transition dipoles")
    offset = config.energy_offset_mev if energy_offset is None else energy_offset
    states = []
    for i, energy in enumerate(eig.eigenvalues):
        d = eig.eigenvectors[:, i] @ config.dipoles
        f = float((2.0 / 3.0) * (energy + offset) * (d @ d))
        states.append(StateLine(i, float(energy), f, bool(f > config.allowed_threshold)))
    allowed = [s for s in states if s.allowed]
    report = SpectrumReport(states, energy_offset_mev=offset)
    if len(allowed) < 2:
        raise SpectrumError(
            f"Davydov splitting undefined: {len(allowed)} allowed state(s)"
        )
    gap = allowed[1].energy_mev - allowed[0].energy_mev
    report.davydov_mev = gap
    report.davydov_cm1 = gap * MEV_TO_CM1
    return report


def davydov_from_energies(energies, allowed_indices) -> tuple[float, float]:
    """Splitting between the first two allowed states of an energy list."""
    if len(allowed_indices) < 2:
        raise SpectrumError("need two allowed states")
    i, j = sorted(allowed_indices)[:2]
    gap = float(energies[j] - energies[i])
    return gap, gap * MEV_TO_CM1
