"""Error mitigation for one-excitation circuits.

Three layers, in increasing sophistication:

* post-selection: keep only one-hot bitstrings and renormalize;
* Hamming-distance reduction: compress a histogram onto the bitstrings
  within Hamming distance one of the one-hot set (the all-zeros string,
  the n one-hot strings and the n(n-1)/2 two-hot strings);
* a learned map: a feed-forward network reads the reduced distribution
  together with a one-hot encoding of the measured pair and predicts the
  ideal one-hot probabilities.

Training data comes from the ansatz concatenated with two CNOT gates at the
measured pair (unitarily the identity, noise-wise a stand-in for the
transformed measurement gate); labels are squared closed-form amplitudes,
never sampled. The trained model is applied either only to the converged
states (post-processing) or inside every optimizer evaluation.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .ansatz import amplitude_map, build_ansatz
from .exciton import ExcitonHamiltonian, davydov_from_energies
from .fnn import DistributionMitigator, rmse
from .gates import Circuit, index_to_bitstring
from .measurement import (
    EnergyEstimate,
    MeasurementError,
    compile_jobs,
    diagonal_from_bit_freqs,
    estimate_term,
    term_from_onehot_probs,
)
from .noise import NoiseModel
from .simulator import ShotHistogram, run_noisy, sample
from .vqd import VqdResult, VqdSettings, solve


class MitigationError(ValueError):
    pass


def onehot_basis(n: int) -> list[int]:
    return [1 << m for m in range(n)]


def kept_basis(n: int) -> list[int]:
    """Indices within Hamming distance 1 of the one-hot set, ascending."""
    return [s for s in range(2**n) if bin(s).count("1") <= 2]


def post_select(histogram: ShotHistogram) -> np.ndarray:
    """Renormalized one-hot probabilities; rejects all-nonphysical data."""
    if not histogram.counts:
        raise MitigationError("empty histogram")
    n = histogram.width
    counts = np.zeros(n)
    for m in range(n):
        counts[m] = histogram.counts.get(index_to_bitstring(1 << m, n), 0)
    total = counts.sum()
    if total == 0:
        raise MitigationError("all shots fall outside the one-excitation basis")
    return counts / total


@dataclass
class ReducedDistribution:
    width: int
    probabilities: np.ndarray  # over kept_basis(width), canonical order
    discarded_mass: float

    @property
    def kept_bitstrings(self) -> list[str]:
        return [index_to_bitstring(s, self.width) for s in kept_basis(self.width)]

    def onehot_block(self) -> np.ndarray:
        kept = kept_basis(self.width)
        lookup = {s: i for i, s in enumerate(kept)}
        return np.array(
            [self.probabilities[lookup[1 << m]] for m in range(self.width)]
        )


def hd_reduce(histogram: ShotHistogram) -> ReducedDistribution:
    """Bin a histogram onto the kept set; the rest becomes discarded mass."""
    n = histogram.width
    kept = kept_basis(n)
    lookup = {s: i for i, s in enumerate(kept)}
    probs = np.zeros(len(kept))
    discarded = 0.0
    total = histogram.shots
    for bits, c in histogram.counts.items():
        idx = int(bits, 2)
        if idx in lookup:
            probs[lookup[idx]] += c / total
        else:
            discarded += c / total
    return ReducedDistribution(n, probs, discarded)


@dataclass
class TrainingSample:
    params: np.ndarray
    pair_index: int
    reduced: ReducedDistribution
    label: np.ndarray  # ideal one-hot probabilities, analytic


def encode_features(reduced: ReducedDistribution, pair_index: int, n_pairs: int) -> np.ndarray:
    position = np.zeros(n_pairs)
    position[pair_index] = 1.0
    return np.concatenate([reduced.probabilities, position])


def feature_dimension(n: int, n_pairs: int) -> int:
    return len(kept_basis(n)) + n_pairs


def generate_dataset(
    count: int,
    shots: int,
    noise: NoiseModel,
    pair_positions: list[tuple[int, int]],
    seed: int = 0,
    n: int = 5,
    layout=None,
) -> list[TrainingSample]:
    """Noisy training samples for the mitigator.

    Every sample draws ansatz angles uniformly from [-pi, pi] and one
    measured pair, appends two CNOT gates at that pair, simulates with the
    noise model, samples, and reduces. Labels are the squared amplitudes of
    the closed-form map. Per-sample streams are spawned from the seed, so
    generation order is reproducible and parallelizable.
    """
    if count < 1:
        raise MitigationError("dataset size must be positive")
    master = np.random.SeedSequence(seed)
    param_rng = np.random.default_rng(master.spawn(1)[0])
    children = master.spawn(count)
    noise = noise.with_pair_fallback()
    samples = []
    for child in children:
        params = param_rng.uniform(-np.pi, np.pi, n - 1)
        pair_index = int(param_rng.integers(len(pair_positions)))
        p, q = pair_positions[pair_index]
        circuit = build_ansatz(n, params)
        circuit.cnot(p, q)
        circuit.cnot(p, q)
        state = run_noisy(circuit, noise, layout)
        hist = sample(state, shots, noise=noise, layout=layout, seed=child)
        samples.append(
            TrainingSample(
                params=params,
                pair_index=pair_index,
                reduced=hd_reduce(hist),
                label=amplitude_map(params) ** 2,
            )
        )
    return samples


@dataclass
class TrainedMitigator:
    """Network plus the input-encoding metadata needed to apply it."""

    network: DistributionMitigator
    pair_positions: list[tuple[int, int]]
    width: int
    test_rmse: float | None = None
    dataset_hash: str | None = None
    seed: int | None = None

    def mitigate(self, histogram: ShotHistogram, pair_index: int) -> np.ndarray:
        return mitigate(self, histogram, pair_index)

    def features(self, histogram: ShotHistogram, pair_index: int) -> np.ndarray:
        return encode_features(hd_reduce(histogram), pair_index, len(self.pair_positions))


@dataclass
class TrainingReport:
    model: TrainedMitigator
    train_loss: list[float]
    validation_loss: list[float]
    test_rmse: float


def dataset_matrices(dataset: list[TrainingSample], n_pairs: int):
    x = np.array([encode_features(s.reduced, s.pair_index, n_pairs) for s in dataset])
    y = np.array([s.label for s in dataset])
    return x, y


def dataset_hash(dataset: list[TrainingSample]) -> str:
    digest = hashlib.sha256()
    for s in dataset:
        digest.update(np.asarray(s.params).tobytes())
        digest.update(int(s.pair_index).to_bytes(4, "little"))
        digest.update(np.asarray(s.reduced.probabilities).tobytes())
    return digest.hexdigest()


def train_mitigator(
    dataset: list[TrainingSample],
    pair_positions: list[tuple[int, int]],
    epochs: int = 200,
    batch_size: int = 32,
    learning_rate: float = 1e-4,
    holdout_fraction: float = 0.1,
    validation_fraction: float = 0.2,
    seed: int = 0,
) -> TrainingReport:
    """Hold out a test split, train on the rest, report holdout RMSE."""
    if len(dataset) < 10:
        raise MitigationError("need at least 10 samples")
    x, y = dataset_matrices(dataset, len(pair_positions))
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(dataset))
    n_test = int(round(holdout_fraction * len(dataset)))
    test_idx, fit_idx = order[:n_test], order[n_test:]
    network = DistributionMitigator(
        epochs=epochs,
        batch_size=batch_size,
        learning_rate=learning_rate,
        validation_fraction=validation_fraction,
        seed=seed,
    )
    network.fit(x[fit_idx], y[fit_idx])
    if n_test:
        test_pred = network.predict_distribution(x[test_idx])
        test_rmse = rmse(test_pred, y[test_idx])
    else:
        test_rmse = float("nan")
    model = TrainedMitigator(
        network=network,
        pair_positions=list(pair_positions),
        width=dataset[0].reduced.width,
        test_rmse=test_rmse,
        dataset_hash=dataset_hash(dataset),
        seed=seed,
    )
    return TrainingReport(
        model, network.loss_curve_, network.validation_curve_, test_rmse
    )


def mitigate(model: TrainedMitigator, histogram: ShotHistogram, pair_index: int) -> np.ndarray:
    """Predicted ideal one-hot probabilities for one measured histogram."""
    features = encode_features(
        hd_reduce(histogram), pair_index, len(model.pair_positions)
    )
    expected = model.network.n_features_in_
    if features.shape[0] != expected:
        raise MitigationError(
            f"feature dimension {features.shape[0]} does not match model ({expected})"
        )
    return model.network.predict_distribution(features)


def mitigated_energy(
    preparation: Circuit,
    h: ExcitonHamiltonian,
    model: TrainedMitigator,
    shots: int,
    noise: NoiseModel,
    layout=None,
    seed=None,
) -> EnergyEstimate:
    """Noisy energy estimate with every pair histogram passed through the model."""
    jobs = compile_jobs(h)
    pair_lookup = {tuple(p): i for i, p in enumerate(model.pair_positions)}
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = seq.spawn(len(jobs) + 1)
    terms = []
    shots_used = 0
    for job, child in zip(jobs, children):
        if tuple(job.pair) not in pair_lookup:
            raise MitigationError(f"model was not trained for pair {job.pair}")
        state = run_noisy(job.attach(preparation), noise, layout)
        hist = sample(state, shots, noise=noise, layout=layout, seed=child)
        shots_used += shots
        probs = mitigate(model, hist, pair_lookup[tuple(job.pair)])
        terms.append((f"pair{job.pair}", term_from_onehot_probs(probs, job)))
    onsite = h.onsite_mev if h.onsite_mev is not None else np.zeros(h.n)
    if np.any(onsite != 0.0):
        state = run_noisy(preparation, noise, layout)
        hist = sample(state, shots, noise=noise, layout=layout, seed=children[-1])
        shots_used += shots
        probs = post_select(hist)
        terms.append(("diagonal", float(onsite @ probs)))
    return EnergyEstimate(sum(t for _, t in terms), shots_used, terms)


@dataclass
class StateComparison:
    index: int
    exact_mev: float
    raw_mev: float
    post_selected_mev: float
    mitigated_mev: float

    def errors(self) -> dict[str, float]:
        return {
            "raw": abs(self.raw_mev - self.exact_mev),
            "post_selected": abs(self.post_selected_mev - self.exact_mev),
            "mitigated": abs(self.mitigated_mev - self.exact_mev),
        }


@dataclass
class MitigationReport:
    states: list[StateComparison]
    davydov: dict[str, tuple[float, float]] = field(default_factory=dict)

    def mean_errors(self) -> dict[str, float]:
        keys = ("raw", "post_selected", "mitigated")
        return {
            k: float(np.mean([s.errors()[k] for s in self.states])) for k in keys
        }


def evaluate_state(
    preparation: Circuit,
    h: ExcitonHamiltonian,
    model: TrainedMitigator,
    shots: int,
    noise: NoiseModel,
    layout=None,
    seed=None,
    repeats: int = 1,
):
    """(raw, post-selected, mitigated) energies of one preparation circuit.

    All three estimates reuse the same measured histograms, mirroring a
    post-processing workflow. ``repeats`` averages fresh measurement rounds.
    """
    jobs = compile_jobs(h)
    pair_lookup = {tuple(p): i for i, p in enumerate(model.pair_positions)}
    onsite = h.onsite_mev if h.onsite_mev is not None else np.zeros(h.n)
    has_diagonal = bool(np.any(onsite != 0.0))
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = seq.spawn(repeats)
    states = {}
    for job in jobs:
        states[job.pair] = run_noisy(job.attach(preparation), noise, layout)
    if has_diagonal:
        bare_state = run_noisy(preparation, noise, layout)
    raw_vals, ps_vals, dl_vals = [], [], []
    for child in children:
        job_seeds = child.spawn(len(jobs) + (1 if has_diagonal else 0))
        raw = ps = dl = 0.0
        for job, jseed in zip(jobs, job_seeds):
            hist = sample(states[job.pair], shots, noise=noise, layout=layout, seed=jseed)
            raw += estimate_term(hist, job)
            ps += term_from_onehot_probs(post_select(hist), job)
            dl += term_from_onehot_probs(
                mitigate(model, hist, pair_lookup[tuple(job.pair)]), job
            )
        if has_diagonal:
            hist = sample(bare_state, shots, noise=noise, layout=layout, seed=job_seeds[-1])
            raw += diagonal_from_bit_freqs(hist, onsite)
            shared = float(onsite @ post_select(hist))
            ps += shared
            dl += shared
        raw_vals.append(raw)
        ps_vals.append(ps)
        dl_vals.append(dl)
    return float(np.mean(raw_vals)), float(np.mean(ps_vals)), float(np.mean(dl_vals))


def post_dl_pipeline(
    vqd_result: VqdResult,
    model: TrainedMitigator,
    h: ExcitonHamiltonian,
    shots: int,
    noise: NoiseModel,
    seed: int = 0,
    layout=None,
    exact_energies=None,
    allowed_indices=None,
    repeats: int = 8,
) -> MitigationReport:
    """Re-measure each converged state and compare raw / PS / mitigated."""
    from .exciton import diagonalize

    noise = noise.with_pair_fallback()
    if exact_energies is None:
        exact_energies = diagonalize(h).eigenvalues
    master = np.random.SeedSequence(seed)
    comparisons = []
    for state in vqd_result.states:
        prep = build_ansatz(h.n, state.params)
        raw, ps, dl = evaluate_state(
            prep, h, model, shots, noise, layout, master.spawn(1)[0], repeats
        )
        comparisons.append(
            StateComparison(state.index, float(exact_energies[state.index]), raw, ps, dl)
        )
    report = MitigationReport(comparisons)
    if allowed_indices is not None and len(allowed_indices) >= 2:
        for method, attr in (
            ("exact", "exact_mev"),
            ("raw", "raw_mev"),
            ("post_selected", "post_selected_mev"),
            ("mitigated", "mitigated_mev"),
        ):
            energies = [getattr(c, attr) for c in comparisons]
            try:
                report.davydov[method] = davydov_from_energies(energies, allowed_indices)
            except Exception:  # fewer states solved than allowed indices
                pass
    return report


def dl_vqd_pipeline(
    h: ExcitonHamiltonian,
    model: TrainedMitigator,
    settings: VqdSettings,
    noise: NoiseModel,
) -> VqdResult:
    """VQD with every measured histogram mitigated before energy estimation."""
    if settings.backend != "noisy":
        raise MitigationError("in-loop mitigation requires the noisy backend")
    return solve(h, settings, noise=noise.with_pair_fallback(), mitigator=model)


def learning_curve(
    dataset: list[TrainingSample],
    pair_positions,
    sizes,
    seed: int = 0,
    epochs: int = 200,
    batch_size: int = 32,
    learning_rate: float = 1e-4,
    activations=("relu",),
) -> list[dict]:
    """Holdout RMSE versus training-set size (optionally per activation).

    The holdout is carved from the full dataset once, so rows are
    comparable across sizes.
    """
    rows = []
    x, y = dataset_matrices(dataset, len(pair_positions))
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(dataset))
    n_test = max(1, int(round(0.1 * len(dataset))))
    test_idx, pool = order[:n_test], order[n_test:]
    for size in sizes:
        if size > len(pool):
            raise MitigationError(f"size {size} exceeds available pool {len(pool)}")
        subset = pool[:size]
        for activation in activations:
            network = DistributionMitigator(
                epochs=epochs,
                batch_size=batch_size,
                learning_rate=learning_rate,
                hidden_activation=activation,
                seed=seed,
            )
            network.fit(x[subset], y[subset])
            score = rmse(network.predict_distribution(x[test_idx]), y[test_idx])
            rows.append({"size": int(size), "activation": activation, "rmse": score})
    return rows


def serialize_dataset(dataset: list[TrainingSample]) -> str:
    """Delimited rows: angles | pair index | reduced probabilities | label."""
    lines = []
    for s in dataset:
        fields = (
            list(np.asarray(s.params)),
            [s.pair_index],
            list(s.reduced.probabilities),
            [s.reduced.discarded_mass],
            list(s.label),
        )
        lines.append(",".join(repr(float(v)) for group in fields for v in group))
    return "\n".join(lines) + "\n"
