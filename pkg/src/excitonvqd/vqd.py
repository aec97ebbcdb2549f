"""Variational deflation: solve the exciton eigenstates in ascending order.

State k minimizes ``E(theta) + sum_i w_i |<psi(theta)|psi_i>|^2`` over the
ansatz angles, with the overlap penalties evaluated classically from the
amplitude map (no extra circuits). The penalty weight defaults to twice the
summed absolute couplings, comfortably above the spectral range.

Under shot noise the optimizer cannot resolve energy differences below the
sampling scale, so sampled and noisy backends follow the COBYLA stage with
a surrogate polish: the measured energies around the incumbent are fitted by
a local quadratic (the penalty, being exact, is handled analytically) and a
trust-region Newton step is taken on the combined model. Restarts beyond the
first initialize from random directions in the classical orthogonal
complement of the already-found states.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ansatz import amplitude_map, build_ansatz, invert_amplitudes, overlap
from .exciton import ExcitonHamiltonian
from .measurement import estimate_energy
from .noise import NoiseModel
from .optimize import minimize_dfo


class VqdError(ValueError):
    pass


@dataclass
class OptimizerSettings:
    method: str = "cobyla"
    max_evals: int = 500
    initial_step: float = 0.4
    tol: float | None = None  # backend-dependent default


@dataclass
class PolishSettings:
    """Surrogate-polish schedule: (sampling radius, sample count) rounds."""

    rounds: tuple = ((0.3, 150), (0.25, 300), (0.2, 300), (0.12, 300))
    guard_average: int = 6
    guard_slack_mev: float = 0.25
    curvature_floor: float = 2.0
    final_descent_evals: int = 50
    final_descent_step: float = 0.06


@dataclass
class VqdSettings:
    backend: str = "exact"
    states: int | None = None
    shots_per_job: int = 8192
    penalty_weight: float | None = None
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    polish: PolishSettings | None = None  # default: on for sampled/noisy
    restarts: int = 4
    final_evals: int | None = None  # fresh estimates averaged for the report
    seed: int = 0
    layout: list[int] | None = None

    def resolved_tol(self) -> float:
        if self.optimizer.tol is not None:
            return self.optimizer.tol
        return 1e-8 if self.backend == "exact" else 0.05

    def resolved_max_evals(self) -> int:
        return self.optimizer.max_evals if self.backend != "exact" else max(
            self.optimizer.max_evals, 1500
        )

    def resolved_final_evals(self) -> int:
        if self.final_evals is not None:
            return self.final_evals
        return 1 if self.backend == "exact" else 8

    def resolved_polish(self) -> PolishSettings | None:
        if self.backend == "exact":
            return None
        return self.polish if self.polish is not None else PolishSettings()


@dataclass
class StateResult:
    index: int
    params: np.ndarray
    energy_mev: float
    converged: bool
    overlaps_with_priors: list[float]
    trace: list[tuple[int, float, float]]  # (eval index, cost, raw energy)
    evaluations: int


@dataclass
class VqdResult:
    states: list[StateResult]
    penalty_weight: float
    backend: str
    seed: int

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.energy_mev for s in self.states])

    @property
    def converged(self) -> bool:
        return all(s.converged for s in self.states)

    def trace_rows(self):
        """Rows of (state, eval, cost, energy, penalty) for persistence."""
        rows = []
        for s in self.states:
            for i, cost_value, energy in s.trace:
                rows.append((s.index, i, cost_value, energy, cost_value - energy))
        return rows


def spectral_range_bound(h: ExcitonHamiltonian) -> float:
    """Gershgorin estimate of the spectral range (upper minus lower bound)."""
    diag = np.diag(h.matrix)
    radii = np.sum(np.abs(h.matrix), axis=1) - np.abs(diag)
    return float(np.max(diag + radii) - np.min(diag - radii))


def default_penalty_weight(h: ExcitonHamiltonian) -> float:
    """Twice the summed absolute couplings, floored above the spectral range.

    Deflation shifts the found states up by the weight, so the weight must
    exceed the spectral range with margin; for sparse couplings (for example
    a single-pair dimer) twice the coupling sum exactly equals the range and
    would leave the deflated landscape flat.
    """
    return max(
        2.0 * sum(abs(v) for _, _, v in h.couplings),
        1.1 * spectral_range_bound(h),
    )


def cost(
    params,
    h: ExcitonHamiltonian,
    priors,
    weights,
    backend: str = "exact",
    shots: int = 8192,
    noise: NoiseModel | None = None,
    layout=None,
    seed=None,
    mitigator=None,
) -> float:
    """Energy estimate plus classical overlap penalties against the priors."""
    energy = _energy(params, h, backend, shots, noise, layout, seed, mitigator)
    return energy + penalty_value(params, priors, weights)


def penalty_value(params, priors, weights) -> float:
    return float(sum(w * overlap(params, p) for w, p in zip(weights, priors)))


def _energy(params, h, backend, shots, noise, layout, seed, mitigator) -> float:
    circuit = build_ansatz(h.n, params)
    if mitigator is not None and backend == "noisy":
        from .mitigation import mitigated_energy

        return mitigated_energy(
            circuit, h, mitigator, shots=shots, noise=noise, layout=layout, seed=seed
        ).value
    return estimate_energy(
        circuit, h, shots=shots, backend=backend, noise=noise, layout=layout, seed=seed
    ).value


def _complement_start(priors, n: int, rng: np.random.Generator) -> np.ndarray:
    """Angles of a random unit vector orthogonal to all prior states."""
    v = rng.standard_normal(n)
    for p in priors:
        c = amplitude_map(p)
        v -= c * (c @ v)
    norm = np.linalg.norm(v)
    if norm < 1e-9:
        v = rng.standard_normal(n)
        norm = np.linalg.norm(v)
    return invert_amplitudes(v / norm)


def _fit_energy_quadratic(points: np.ndarray, values: np.ndarray, center: np.ndarray):
    d = points - center
    k = d.shape[1]
    cols = [np.ones(len(d))] + [d[:, i] for i in range(k)]
    for i in range(k):
        for j in range(i, k):
            cols.append(d[:, i] * d[:, j])
    a = np.column_stack(cols)
    coef = np.linalg.solve(a.T @ a + 1e-8 * np.eye(a.shape[1]), a.T @ values)
    g = coef[1 : 1 + k]
    q = np.zeros((k, k))
    idx = 1 + k
    for i in range(k):
        for j in range(i, k):
            if i == j:
                q[i, i] = 2.0 * coef[idx]
            else:
                q[i, j] = q[j, i] = coef[idx]
            idx += 1
    return g, q


def _grad_hess(fn, x: np.ndarray, h: float = 1e-4):
    k = x.shape[0]
    g = np.zeros(k)
    hess = np.zeros((k, k))
    f0 = fn(x)
    for i in range(k):
        e = np.zeros(k)
        e[i] = h
        fp, fm = fn(x + e), fn(x - e)
        g[i] = (fp - fm) / (2 * h)
        hess[i, i] = (fp - 2 * f0 + fm) / h**2
    for i in range(k):
        for j in range(i + 1, k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i] = h
            ej[j] = h
            hess[i, j] = hess[j, i] = (
                fn(x + ei + ej) - fn(x + ei - ej) - fn(x - ei + ej) + fn(x - ei - ej)
            ) / (4 * h**2)
    return g, hess


def _polish(noisy_energy, penalty, x0, rng, settings: PolishSettings, budget_counter):
    """Quadratic-surrogate refinement around the incumbent.

    Each round fits the measured energies in a ball, adds the penalty's
    exact local model, and takes a trust-region Newton step; steps that do
    not improve an averaged re-evaluation are rejected.
    """
    x = np.asarray(x0, dtype=float)
    k = x.shape[0]

    def averaged_cost(z):
        vals = [noisy_energy(z) for _ in range(settings.guard_average)]
        return float(np.mean(vals)) + penalty(z)

    incumbent_value = averaged_cost(x)
    for radius, n_points in settings.rounds:
        points = x + rng.uniform(-radius, radius, (n_points, k))
        values = np.array([noisy_energy(p) for p in points])
        budget_counter[0] += n_points
        g, q = _fit_energy_quadratic(points, values, x)
        gp, qp = _grad_hess(penalty, x)
        lam, u = np.linalg.eigh(q + qp)
        lam = np.maximum(lam, settings.curvature_floor)
        step = -u @ ((u.T @ (g + gp)) / lam)
        norm = np.linalg.norm(step)
        if norm > radius:
            step *= radius / norm
        candidate = x + step
        candidate_value = averaged_cost(candidate)
        if candidate_value <= incumbent_value + settings.guard_slack_mev:
            x, incumbent_value = candidate, candidate_value
    return x


def solve(
    h: ExcitonHamiltonian,
    settings: VqdSettings,
    noise: NoiseModel | None = None,
    mitigator=None,
) -> VqdResult:
    """Run deflation for the requested number of states (default: all)."""
    n = h.n
    n_states = settings.states if settings.states is not None else n
    if not 1 <= n_states <= n:
        raise VqdError(f"states must lie in [1, {n}]")
    weight = (
        settings.penalty_weight
        if settings.penalty_weight is not None
        else default_penalty_weight(h)
    )
    bound = spectral_range_bound(h)
    if weight <= bound:
        raise VqdError(
            f"penalty weight {weight} must exceed the spectral bound {bound}"
        )
    if settings.backend == "noisy" and noise is None:
        raise VqdError("noisy backend requires a noise model")

    master = np.random.SeedSequence(settings.seed)
    rng = np.random.default_rng(master.spawn(1)[0])
    weights = [weight] * n_states
    priors: list[np.ndarray] = []
    results: list[StateResult] = []

    for k in range(n_states):
        counter = [0]
        trace: list[tuple[int, float, float]] = []

        def noisy_energy(params):
            child = np.random.SeedSequence(
                entropy=settings.seed, spawn_key=(k, counter[0])
            )
            counter[0] += 1
            return _energy(
                params,
                h,
                settings.backend,
                settings.shots_per_job,
                noise,
                settings.layout,
                child,
                mitigator,
            )

        def penalty(params):
            return penalty_value(params, priors, weights)

        def objective(params):
            energy = noisy_energy(params)
            value = energy + penalty(params)
            trace.append((len(trace), value, energy))
            return value

        candidates = []
        converged_flags = []
        for r in range(settings.restarts):
            if k == 0 and r == 0:
                x0 = rng.uniform(-np.pi / 4, np.pi / 4, n - 1)
            else:
                x0 = _complement_start(priors, n, rng)
            res = minimize_dfo(
                objective,
                x0,
                method=settings.optimizer.method,
                max_evals=settings.resolved_max_evals(),
                initial_step=settings.optimizer.initial_step,
                tol=settings.resolved_tol(),
                record_trace=False,
            )
            if settings.backend == "exact":
                score = objective(res.x)
            else:
                score = float(
                    np.mean([noisy_energy(res.x) for _ in range(4)])
                ) + penalty(res.x)
            candidates.append((score, res.x))
            converged_flags.append(res.converged)
        best_index = int(np.argmin([s for s, _ in candidates]))
        x_best = candidates[best_index][1]

        polish_settings = settings.resolved_polish()
        if polish_settings is not None:
            x_best = _polish(
                noisy_energy, penalty, x_best, rng, polish_settings, counter
            )
            if polish_settings.final_descent_evals > 0:
                res = minimize_dfo(
                    lambda p: float(
                        np.mean(
                            [noisy_energy(p) for _ in range(polish_settings.guard_average)]
                        )
                    )
                    + penalty(p),
                    x_best,
                    method=settings.optimizer.method,
                    max_evals=polish_settings.final_descent_evals,
                    initial_step=polish_settings.final_descent_step,
                    tol=0.01,
                )
                old = float(
                    np.mean(
                        [noisy_energy(x_best) for _ in range(polish_settings.guard_average)]
                    )
                ) + penalty(x_best)
                if res.fun < old:
                    x_best = res.x

        final_estimates = [
            noisy_energy(x_best) for _ in range(settings.resolved_final_evals())
        ]
        energy = float(np.mean(final_estimates))
        overlaps = [overlap(x_best, p) for p in priors]
        results.append(
            StateResult(
                index=k,
                params=np.asarray(x_best, dtype=float),
                energy_mev=energy,
                converged=converged_flags[best_index],
                overlaps_with_priors=overlaps,
                trace=trace,
                evaluations=counter[0],
            )
        )
        priors.append(np.asarray(x_best, dtype=float))

    return VqdResult(results, weight, settings.backend, settings.seed)
