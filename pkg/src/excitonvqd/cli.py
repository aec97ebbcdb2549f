"""Command-line entry point.

Subcommands:

* ``exact``            classical spectrum and oscillator strengths
* ``vqd``              variational deflation on the chosen backend
* ``train-mitigator``  dataset generation + network training
* ``pipeline``         exact -> noisy VQD -> PS -> learned mitigation report

Every run is driven by one YAML experiment configuration plus a seed, and
writes its artifacts (config copies, traces, dataset, model, report) into
the output directory. Report payloads are byte-stable for a fixed config
and seed; volatile details (timestamps, versions) live in a separate
provenance block.

Exit codes: 0 success, 2 configuration error, 3 non-convergence, 4 stage
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__, bundled_path
from .exciton import (
    ExcitonConfigError,
    SpectrumError,
    build_hamiltonian,
    diagonalize,
    load_exciton_config,
    oscillator_strengths,
)
from .mitigation import (
    MitigationError,
    dl_vqd_pipeline,
    generate_dataset,
    learning_curve,
    post_dl_pipeline,
    serialize_dataset,
    train_mitigator,
    TrainedMitigator,
)
from .fnn import load_network, save_network
from .noise import NoiseModelError, load_noise_model
from .vqd import OptimizerSettings, PolishSettings, VqdSettings, solve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
EXIT_STAGE_FAILURE = 4


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    exciton_path: Path
    noise_path: Path | None
    backend: str
    seed: int
    layout: list[int] | None
    states: int | None
    vqd: dict = field(default_factory=dict)
    mitigation: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: Path) -> "ExperimentConfig":
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        doc = yaml.safe_load(path.read_text())
        if not isinstance(doc, dict):
            raise ConfigError("experiment config must be a mapping")
        if "seed" not in doc:
            raise ConfigError("config must set an explicit seed")
        exciton = doc.get("exciton", "bundled:anthracene5")
        noise = doc.get("noise_model")
        return cls(
            exciton_path=_resolve_input(exciton, path.parent),
            noise_path=_resolve_input(noise, path.parent) if noise else None,
            backend=doc.get("backend", "exact"),
            seed=int(doc["seed"]),
            layout=doc.get("layout"),
            states=doc.get("states"),
            vqd=doc.get("vqd", {}) or {},
            mitigation=doc.get("mitigation", {}) or {},
            raw=doc,
        )

    def vqd_settings(self, backend=None, states=None, seed=None) -> VqdSettings:
        v = self.vqd
        optimizer = OptimizerSettings(
            method=v.get("method", "cobyla"),
            max_evals=int(v.get("max_evals", 500)),
            initial_step=float(v.get("initial_step", 0.4)),
            tol=v.get("tolerance"),
        )
        polish = None
        if "polish_rounds" in v:
            polish = PolishSettings(
                rounds=tuple((float(r), int(c)) for r, c in v["polish_rounds"])
            )
        return VqdSettings(
            backend=backend or self.backend,
            states=states if states is not None else self.states,
            shots_per_job=int(v.get("shots_per_job", 8192)),
            penalty_weight=v.get("penalty_weight"),
            optimizer=optimizer,
            polish=polish,
            restarts=int(v.get("restarts", 4)),
            seed=self.seed if seed is None else seed,
            layout=self.layout,
        )


def _resolve_input(spec: str, base: Path) -> Path:
    if isinstance(spec, str) and spec.startswith("bundled:"):
        return bundled_path(spec.split(":", 1)[1])
    p = Path(spec)
    return p if p.is_absolute() else base / p


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _provenance(config_path: Path, seed: int) -> dict:
    import scipy

    return {
        "config_sha256": _sha256(config_path),
        "seed": seed,
        "versions": {
            "excitonvqd": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }


def _write_report(out: Path, name: str, payload: dict, provenance: dict) -> Path:
    path = out / name
    doc = {"payload": payload, "provenance": provenance}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def _prepare_out(args, config_path: Path) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(config_path.read_text())
    return out


def _spectrum_payload(report) -> dict:
    return {
        "states": [
            {
                "index": s.index,
                "energy_mev": s.energy_mev,
                "oscillator_strength": s.oscillator_strength,
                "allowed": s.allowed,
            }
            for s in report.states
        ],
        "davydov_mev": report.davydov_mev,
        "davydov_cm1": report.davydov_cm1,
        "energy_offset_mev": report.energy_offset_mev,
    }


def cmd_exact(args) -> int:
    config = ExperimentConfig.load(Path(args.config))
    out = _prepare_out(args, Path(args.config))
    exciton = load_exciton_config(config.exciton_path)
    h = build_hamiltonian(exciton)
    eig = diagonalize(h)
    payload: dict = {"eigenvalues_mev": eig.eigenvalues.tolist()}
    if exciton.dipoles is not None:
        report = oscillator_strengths(eig, exciton)
        payload["spectrum"] = _spectrum_payload(report)
    else:
        payload["spectrum"] = None
        payload["note"] = "no transition dipoles; oscillator strengths unavailable"
    _write_report(out, "exact_report.json", payload, _provenance(Path(args.config), config.seed))
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def _write_traces(out: Path, result) -> None:
    trace_dir = out / "traces"
    trace_dir.mkdir(exist_ok=True)
    for state in result.states:
        lines = ["state_index,eval_index,cost_mev,energy_mev,overlap_penalty_mev"]
        for i, cost_value, energy in state.trace:
            lines.append(
                f"{state.index},{i},{cost_value!r},{energy!r},{cost_value - energy!r}"
            )
        (trace_dir / f"state_{state.index}.csv").write_text("\n".join(lines) + "\n")


def _vqd_payload(result, exact_eigenvalues) -> dict:
    states = []
    for s in result.states:
        exact_value = float(exact_eigenvalues[s.index])
        states.append(
            {
                "index": s.index,
                "energy_mev": s.energy_mev,
                "exact_mev": exact_value,
                "abs_error_mev": abs(s.energy_mev - exact_value),
                "converged": s.converged,
                "params": [float(x) for x in s.params],
                "max_overlap_with_priors": max(s.overlaps_with_priors, default=0.0),
                "evaluations": s.evaluations,
            }
        )
    return {
        "backend": result.backend,
        "penalty_weight_mev": result.penalty_weight,
        "states": states,
    }


def cmd_vqd(args) -> int:
    config = ExperimentConfig.load(Path(args.config))
    out = _prepare_out(args, Path(args.config))
    backend = args.backend or config.backend
    seed = config.seed if args.seed is None else args.seed
    exciton = load_exciton_config(config.exciton_path)
    h = build_hamiltonian(exciton)
    eig = diagonalize(h)
    noise = None
    if backend == "noisy":
        if config.noise_path is None:
            raise ConfigError("noisy backend requires a noise_model entry")
        noise = load_noise_model(config.noise_path).with_pair_fallback()
        (out / "noise_model.yaml").write_text(config.noise_path.read_text())
    settings = config.vqd_settings(backend=backend, states=args.states, seed=seed)
    result = solve(h, settings, noise=noise)
    _write_traces(out, result)
    payload = _vqd_payload(result, eig.eigenvalues)
    _write_report(out, "vqd_report.json", payload, _provenance(Path(args.config), seed))
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _mitigation_options(config: ExperimentConfig) -> dict:
    m = config.mitigation
    return {
        "dataset_size": int(m.get("dataset_size", 1000)),
        "dataset_shots": int(m.get("dataset_shots", 1024)),
        "epochs": int(m.get("epochs", 200)),
        "batch_size": int(m.get("batch_size", 32)),
        "learning_rate": float(m.get("learning_rate", 1e-4)),
        "holdout_fraction": float(m.get("holdout_fraction", 0.1)),
        "validation_fraction": float(m.get("validation_fraction", 0.2)),
        "shots": int(m.get("shots", 8192)),
        "repeats": int(m.get("repeats", 8)),
        "run_dl_vqd": bool(m.get("run_dl_vqd", False)),
    }


def _train_model(config, noise, h, out: Path, seed: int):
    opts = _mitigation_options(config)
    pairs = [(p, q) for p, q, _ in h.couplings]
    dataset = generate_dataset(
        opts["dataset_size"],
        opts["dataset_shots"],
        noise,
        pairs,
        seed=seed,
        n=h.n,
        layout=config.layout,
    )
    (out / "dataset.csv").write_text(serialize_dataset(dataset))
    report = train_mitigator(
        dataset,
        pairs,
        epochs=opts["epochs"],
        batch_size=opts["batch_size"],
        learning_rate=opts["learning_rate"],
        holdout_fraction=opts["holdout_fraction"],
        validation_fraction=opts["validation_fraction"],
        seed=seed,
    )
    save_network(
        report.model.network,
        out / "mitigator.json",
        metadata={
            "pair_positions": [list(p) for p in pairs],
            "width": h.n,
            "test_rmse": report.test_rmse,
            "dataset_sha256": report.model.dataset_hash,
            "seed": seed,
        },
    )
    return report, dataset, pairs


def cmd_train(args) -> int:
    config = ExperimentConfig.load(Path(args.config))
    out = _prepare_out(args, Path(args.config))
    seed = config.seed if args.seed is None else args.seed
    if config.noise_path is None:
        raise ConfigError("training requires a noise_model entry")
    exciton = load_exciton_config(config.exciton_path)
    h = build_hamiltonian(exciton)
    noise = load_noise_model(config.noise_path)
    report, dataset, pairs = _train_model(config, noise, h, out, seed)
    payload = {
        "dataset_size": len(dataset),
        "test_rmse": report.test_rmse,
        "final_train_loss": report.train_loss[-1] if report.train_loss else None,
        "final_validation_loss": report.validation_loss[-1]
        if report.validation_loss
        else None,
    }
    if args.sweep:
        opts = _mitigation_options(config)
        sizes_raw = config.mitigation.get("sweep_sizes", [100, 200, 400, 700, 900])
        rows = learning_curve(
            dataset,
            pairs,
            [int(s) for s in sizes_raw],
            seed=seed,
            epochs=opts["epochs"],
            batch_size=opts["batch_size"],
            learning_rate=opts["learning_rate"],
            activations=tuple(config.mitigation.get("sweep_activations", ["relu"])),
        )
        lines = ["size,activation,rmse"] + [
            f"{r['size']},{r['activation']},{r['rmse']!r}" for r in rows
        ]
        (out / "learning_curve.csv").write_text("\n".join(lines) + "\n")
        payload["learning_curve"] = rows
    _write_report(out, "train_report.json", payload, _provenance(Path(args.config), seed))
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_pipeline(args) -> int:
    config = ExperimentConfig.load(Path(args.config))
    out = _prepare_out(args, Path(args.config))
    seed = config.seed if args.seed is None else args.seed
    if config.noise_path is None:
        raise ConfigError("the pipeline requires a noise_model entry")
    exciton = load_exciton_config(config.exciton_path)
    h = build_hamiltonian(exciton)
    eig = diagonalize(h)
    noise = load_noise_model(config.noise_path).with_pair_fallback()
    (out / "noise_model.yaml").write_text(config.noise_path.read_text())
    opts = _mitigation_options(config)

    payload: dict = {"stages": {}}
    payload["exact"] = {"eigenvalues_mev": eig.eigenvalues.tolist()}
    allowed = None
    if exciton.dipoles is not None:
        spectrum = oscillator_strengths(eig, exciton)
        payload["exact"]["spectrum"] = _spectrum_payload(spectrum)
        allowed = spectrum.allowed_indices
    payload["stages"]["exact"] = "ok"

    # stage: mitigator (train or reuse)
    if args.model:
        network, meta = load_network(Path(args.model))
        model = TrainedMitigator(
            network=network,
            pair_positions=[tuple(p) for p in meta["pair_positions"]],
            width=int(meta["width"]),
            test_rmse=meta.get("test_rmse"),
            dataset_hash=meta.get("dataset_sha256"),
            seed=meta.get("seed"),
        )
        payload["mitigator"] = {"source": str(args.model), "test_rmse": model.test_rmse}
    elif config.mitigation.get("train", True):
        report, _, _ = _train_model(config, noise, h, out, seed)
        model = report.model
        payload["mitigator"] = {"source": "trained", "test_rmse": report.test_rmse}
    else:
        raise ConfigError("pipeline needs a trained model: enable training or pass --model")
    payload["stages"]["mitigator"] = "ok"

    # stage: noisy deflation
    settings = config.vqd_settings(backend="noisy", states=args.states, seed=seed)
    vqd_result = solve(h, settings, noise=noise)
    _write_traces(out, vqd_result)
    payload["vqd_noisy"] = _vqd_payload(vqd_result, eig.eigenvalues)
    payload["stages"]["vqd_noisy"] = "ok" if vqd_result.converged else "not-converged"

    # stage: post-processing comparison
    comparison = post_dl_pipeline(
        vqd_result,
        model,
        h,
        shots=opts["shots"],
        noise=noise,
        seed=seed + 1,
        layout=config.layout,
        exact_energies=eig.eigenvalues,
        allowed_indices=allowed,
        repeats=opts["repeats"],
    )
    payload["comparison"] = {
        "states": [
            {
                "index": c.index,
                "exact_mev": c.exact_mev,
                "raw_mev": c.raw_mev,
                "post_selected_mev": c.post_selected_mev,
                "mitigated_mev": c.mitigated_mev,
                "abs_errors_mev": c.errors(),
            }
            for c in comparison.states
        ],
        "mean_abs_errors_mev": comparison.mean_errors(),
        "davydov_cm1": {k: v[1] for k, v in comparison.davydov.items()},
    }
    payload["stages"]["post_dl"] = "ok"

    if opts["run_dl_vqd"] or args.with_dl_vqd:
        dl_settings = config.vqd_settings(backend="noisy", states=args.states, seed=seed + 2)
        dl_result = dl_vqd_pipeline(h, model, dl_settings, noise)
        payload["dl_vqd"] = _vqd_payload(dl_result, eig.eigenvalues)
        payload["stages"]["dl_vqd"] = "ok" if dl_result.converged else "not-converged"
        post_dl_mean = payload["comparison"]["mean_abs_errors_mev"]["mitigated"]
        dl_vqd_mean = float(
            np.mean([s["abs_error_mev"] for s in payload["dl_vqd"]["states"]])
        )
        payload["dl_vqd"]["mean_abs_error_mev"] = dl_vqd_mean
        if post_dl_mean > dl_vqd_mean:
            print(
                "note: in-loop mitigation beat post-processing on this run "
                f"({dl_vqd_mean:.3f} vs {post_dl_mean:.3f} meV)",
                file=sys.stderr,
            )

    _write_report(out, "pipeline_report.json", payload, _provenance(Path(args.config), seed))
    print(json.dumps(payload["comparison"], indent=2, sort_keys=True))
    not_converged = payload["stages"]["vqd_noisy"] != "ok" or (
        "dl_vqd" in payload["stages"] and payload["stages"].get("dl_vqd") != "ok"
    )
    return EXIT_NOT_CONVERGED if not_converged else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="excitonvqd",
        description="Frenkel exciton spectra on a simulated quantum computer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="experiment YAML")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override config seed")

    p = sub.add_parser("exact", help="classical spectrum / oscillator strengths")
    common(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("vqd", help="variational deflation")
    common(p)
    p.add_argument("--backend", choices=("exact", "sampled", "noisy"), default=None)
    p.add_argument("--states", type=int, default=None)
    p.set_defaults(func=cmd_vqd)

    p = sub.add_parser("train-mitigator", help="generate data and train the model")
    common(p)
    p.add_argument("--sweep", action="store_true", help="dataset-size learning curve")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("pipeline", help="end-to-end comparison report")
    common(p)
    p.add_argument("--states", type=int, default=None)
    p.add_argument("--model", default=None, help="reuse a saved mitigator")
    p.add_argument("--with-dl-vqd", action="store_true")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ExcitonConfigError, NoiseModelError, SpectrumError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MitigationError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE_FAILURE
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
