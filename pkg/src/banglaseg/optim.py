"""Derivative-free minimization used by the page dewarper."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Optimum", "minimize"]

_REFLECT = 1.0
_EXPAND = 2.0
_CONTRACT = 0.5
_SHRINK = 0.5


@dataclass
class Optimum:
    params: np.ndarray
    value: float
    iterations: int
    converged: bool


def minimize(objective, x0, tol: float = 1e-8, max_iter: int = 1000) -> Optimum:
    """Nelder-Mead simplex search.

    The initial simplex is x0 plus a per-coordinate step of
    max(0.05 * |x0_i|, 0.00025). Iteration stops when the spread of the
    simplex values falls below `tol` or after `max_iter` iterations.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    n = len(x0)
    if n == 0:
        raise ValueError("x0 must be non-empty")

    def f(x):
        v = float(objective(x))
        return v if math.isfinite(v) else math.inf

    f0 = float(objective(x0))
    if not math.isfinite(f0):
        raise ValueError("objective is not finite at x0")

    sim = np.tile(x0, (n + 1, 1))
    for k in range(n):
        sim[k + 1, k] += max(0.05 * abs(x0[k]), 0.00025)
    vals = np.array([f0] + [f(sim[k + 1]) for k in range(n)])

    iterations = 0
    converged = False
    while iterations < max_iter:
        order = np.argsort(vals, kind="stable")
        sim, vals = sim[order], vals[order]
        spread = vals[-1] - vals[0]
        if math.isfinite(spread) and spread < tol:
            converged = True
            break
        iterations += 1

        centroid = sim[:-1].mean(axis=0)
        xr = centroid + _REFLECT * (centroid - sim[-1])
        fr = f(xr)
        if fr < vals[0]:
            xe = centroid + _EXPAND * (centroid - sim[-1])
            fe = f(xe)
            if fe < fr:
                sim[-1], vals[-1] = xe, fe
            else:
                sim[-1], vals[-1] = xr, fr
        elif fr < vals[-2]:
            sim[-1], vals[-1] = xr, fr
        else:
            if fr < vals[-1]:
                xc = centroid + _CONTRACT * (xr - centroid)
            else:
                xc = centroid - _CONTRACT * (centroid - sim[-1])
            fc = f(xc)
            if fc < min(fr, vals[-1]):
                sim[-1], vals[-1] = xc, fc
            else:
                for k in range(1, n + 1):
                    sim[k] = sim[0] + _SHRINK * (sim[k] - sim[0])
                    vals[k] = f(sim[k])

    best = int(np.argmin(vals))
    return Optimum(params=sim[best].copy(), value=float(vals[best]), iterations=iterations, converged=converged)
