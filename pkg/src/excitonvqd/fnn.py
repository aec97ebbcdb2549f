"""Feed-forward regression network mapping noisy reduced distributions to
ideal one-hot probabilities.

Three ReLU hidden layers and an identity output head, trained with Adam on
mean absolute error. Implemented directly in numpy so that training is
bit-reproducible for a fixed seed; the sklearn estimator interface
(fit/predict/get_params) keeps it composable with standard tooling.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin


class TrainingError(RuntimeError):
    pass


class DistributionMitigator(BaseEstimator, RegressorMixin):
    """MLP regressor with probability post-processing.

    ``predict`` returns the raw network output; ``predict_distribution``
    clamps negatives to zero and renormalizes each row to sum to one
    (an all-zero row maps to the uniform distribution).
    """

    def __init__(
        self,
        hidden_layers=(32, 32, 32),
        epochs: int = 200,
        batch_size: int = 32,
        learning_rate: float = 1e-4,
        validation_fraction: float = 0.2,
        hidden_activation: str = "relu",
        seed: int = 0,
    ):
        self.hidden_layers = hidden_layers
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.validation_fraction = validation_fraction
        self.hidden_activation = hidden_activation
        self.seed = seed

    def _init_network(self, n_in: int, n_out: int, rng: np.random.Generator):
        sizes = [n_in, *self.hidden_layers, n_out]
        self.weights_ = []
        self.biases_ = []
        for a, b in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / np.sqrt(a)
            self.weights_.append(rng.uniform(-bound, bound, (a, b)))
            self.biases_.append(np.zeros(b))
        self.layer_sizes_ = sizes

    def _activate(self, x: np.ndarray) -> np.ndarray:
        if self.hidden_activation == "relu":
            return np.maximum(x, 0.0)
        if self.hidden_activation == "sigmoid":
            return 1.0 / (1.0 + np.exp(-x))
        raise TrainingError(f"unknown activation {self.hidden_activation!r}")

    def _activation_derivative(self, activated: np.ndarray) -> np.ndarray:
        if self.hidden_activation == "relu":
            return (activated > 0).astype(float)
        return activated * (1.0 - activated)

    def _forward(self, x: np.ndarray, keep_activations: bool = False):
        activations = [x]
        for i, (w, b) in enumerate(zip(self.weights_, self.biases_)):
            x = x @ w + b
            if i < len(self.weights_) - 1:
                x = self._activate(x)
            activations.append(x)
        return (x, activations) if keep_activations else x

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or y.ndim != 2 or X.shape[0] != y.shape[0]:
            raise TrainingError("X and y must be 2-d with matching row counts")
        rng = np.random.default_rng(self.seed)
        self._init_network(X.shape[1], y.shape[1], rng)
        self.n_features_in_ = X.shape[1]

        n_val = int(round(self.validation_fraction * X.shape[0]))
        order = rng.permutation(X.shape[0])
        val_idx, train_idx = order[:n_val], order[n_val:]
        X_train, y_train = X[train_idx], y[train_idx]
        X_val, y_val = X[val_idx], y[val_idx]
        if X_train.shape[0] == 0:
            raise TrainingError("no training rows after the validation split")

        moments = [
            (np.zeros_like(w), np.zeros_like(w)) for w in self.weights_
        ] + [(np.zeros_like(b), np.zeros_like(b)) for b in self.biases_]
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        step = 0
        self.loss_curve_ = []
        self.validation_curve_ = []

        for _ in range(self.epochs):
            perm = rng.permutation(X_train.shape[0])
            epoch_losses = []
            for start in range(0, X_train.shape[0], self.batch_size):
                batch = perm[start : start + self.batch_size]
                xb, yb = X_train[batch], y_train[batch]
                pred, activations = self._forward(xb, keep_activations=True)
                residual = pred - yb
                loss = float(np.mean(np.abs(residual)))
                if not np.isfinite(loss):
                    raise TrainingError(
                        f"loss became non-finite at optimizer step {step}"
                    )
                epoch_losses.append(loss)
                grad = np.sign(residual) / residual.size
                grads_w = []
                grads_b = []
                for i in range(len(self.weights_) - 1, -1, -1):
                    grads_w.append(activations[i].T @ grad)
                    grads_b.append(grad.sum(axis=0))
                    if i > 0:
                        grad = grad @ self.weights_[i].T
                        grad = grad * self._activation_derivative(activations[i])
                grads_w.reverse()
                grads_b.reverse()
                step += 1
                for i, gw in enumerate(grads_w):
                    self.weights_[i] = _adam_update(
                        self.weights_[i], gw, moments[i], step, self.learning_rate, beta1, beta2, eps
                    )
                for i, gb in enumerate(grads_b):
                    self.biases_[i] = _adam_update(
                        self.biases_[i],
                        gb,
                        moments[len(self.weights_) + i],
                        step,
                        self.learning_rate,
                        beta1,
                        beta2,
                        eps,
                    )
            self.loss_curve_.append(float(np.mean(epoch_losses)))
            if X_val.shape[0]:
                val_pred = self._forward(X_val)
                self.validation_curve_.append(float(np.mean(np.abs(val_pred - y_val))))
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        out = self._forward(np.atleast_2d(X))
        return out[0] if single else out

    def predict_distribution(self, X):
        raw = np.atleast_2d(self.predict(X))
        clipped = np.clip(raw, 0.0, None)
        sums = clipped.sum(axis=1, keepdims=True)
        uniform = np.full_like(clipped, 1.0 / clipped.shape[1])
        out = np.where(sums > 0.0, clipped / np.where(sums > 0, sums, 1.0), uniform)
        return out[0] if np.asarray(X).ndim == 1 else out


def _adam_update(param, grad, moment, step, lr, beta1, beta2, eps):
    m, v = moment
    m *= beta1
    m += (1 - beta1) * grad
    v *= beta2
    v += (1 - beta2) * grad**2
    m_hat = m / (1 - beta1**step)
    v_hat = v / (1 - beta2**step)
    return param - lr * m_hat / (np.sqrt(v_hat) + eps)


def rmse(pred: np.ndarray, target: np.ndarray) -> float:
    return float(np.sqrt(np.mean((np.asarray(pred) - np.asarray(target)) ** 2)))


def save_network(model: DistributionMitigator, path, metadata: dict | None = None) -> None:
    """Persist layer sizes, weights and training metadata as JSON."""
    doc = {
        "layer_sizes": list(model.layer_sizes_),
        "hidden_activation": model.hidden_activation,
        "output_activation": "identity",
        "weights": [w.tolist() for w in model.weights_],
        "biases": [b.tolist() for b in model.biases_],
        "hyperparameters": {
            "epochs": model.epochs,
            "batch_size": model.batch_size,
            "learning_rate": model.learning_rate,
            "validation_fraction": model.validation_fraction,
            "seed": model.seed,
        },
        "loss_curve": getattr(model, "loss_curve_", []),
        "validation_curve": getattr(model, "validation_curve_", []),
        "metadata": metadata or {},
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True))


def load_network(path) -> tuple[DistributionMitigator, dict]:
    doc = json.loads(Path(path).read_text())
    sizes = doc["layer_sizes"]
    hyper = doc["hyperparameters"]
    model = DistributionMitigator(
        hidden_layers=tuple(sizes[1:-1]),
        epochs=hyper["epochs"],
        batch_size=hyper["batch_size"],
        learning_rate=hyper["learning_rate"],
        validation_fraction=hyper["validation_fraction"],
        hidden_activation=doc.get("hidden_activation", "relu"),
        seed=hyper["seed"],
    )
    model.layer_sizes_ = sizes
    model.weights_ = [np.array(w) for w in doc["weights"]]
    model.biases_ = [np.array(b) for b in doc["biases"]]
    model.n_features_in_ = sizes[0]
    model.loss_curve_ = doc.get("loss_curve", [])
    model.validation_curve_ = doc.get("validation_curve", [])
    return model, doc.get("metadata", {})
