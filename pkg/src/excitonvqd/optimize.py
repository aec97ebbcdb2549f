"""Derivative-free minimization for the variational loops.

The default method is COBYLA (linear-approximation trust region): it starts
with trust radius ``initial_step``, shrinks toward ``tol`` and stops when the
radius falls below ``tol`` or the evaluation budget runs out. A Nelder-Mead
simplex can be substituted for objectives where linear models stall.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as _sciopt

METHODS = ("cobyla", "nelder-mead")


class OptimizerError(ValueError):
    pass


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    nfev: int
    converged: bool  # False when the budget ran out before the radius shrank
    message: str
    trace: list[tuple[int, float]] = field(default_factory=list)


def minimize_dfo(
    fn,
    x0,
    method: str = "cobyla",
    max_evals: int = 500,
    initial_step: float = 0.5,
    tol: float = 1e-6,
    record_trace: bool = True,
) -> MinimizeResult:
    if method not in METHODS:
        raise OptimizerError(f"unknown method {method!r}; choose from {METHODS}")
    if max_evals < 1:
        raise OptimizerError("max_evals must be positive")
    x0 = np.asarray(x0, dtype=float)
    trace: list[tuple[int, float]] = []

    def wrapped(x):
        value = float(fn(np.asarray(x, dtype=float)))
        if record_trace:
            trace.append((len(trace), value))
        return value

    if method == "cobyla":
        res = _sciopt.minimize(
            wrapped,
            x0,
            method="COBYLA",
            options={"rhobeg": initial_step, "maxiter": max_evals, "tol": tol},
        )
    else:
        res = _sciopt.minimize(
            wrapped,
            x0,
            method="Nelder-Mead",
            options={
                "maxfev": max_evals,
                "xatol": tol,
                "fatol": 1e-12,
                "initial_simplex": _simplex(x0, initial_step),
            },
        )
    return MinimizeResult(
        x=np.asarray(res.x, dtype=float),
        fun=float(res.fun),
        nfev=int(res.nfev),
        converged=bool(res.success),
        message=str(res.message),
        trace=trace,
    )


def _simplex(x0: np.ndarray, step: float) -> np.ndarray:
    k = x0.shape[0]
    simplex = np.tile(x0, (k + 1, 1))
    for i in range(k):
        simplex[i + 1, i] += step
    return simplex
