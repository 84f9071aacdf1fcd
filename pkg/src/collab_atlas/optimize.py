"""Derivative-free simplex minimization."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class ObjectiveNaNError(ValueError):
    def __init__(self, point):
        super().__init__(f"objective returned NaN at {list(point)}")
        self.point = np.asarray(point)


@dataclass
class NelderMeadResult:
    x: np.ndarray
    fun: float
    nit: int
    nfev: int
    converged: bool

    def __iter__(self):
        yield self.x
        yield self.fun


def nelder_mead_minimize(
    objective: Callable[[np.ndarray], float],
    x0: Sequence[float],
    ftol: float = 1e-10,
    xtol: float = 1e-8,
    max_iter: int = 20000,
    step: float | Sequence[float] | None = None,
    reflect: float = 1.0,
    expand: float = 2.0,
    contract: float = 0.5,
    shrink: float = 0.5,
) -> NelderMeadResult:
    """Minimize ``objective`` with the Nelder-Mead simplex method.

    Stops once the spread of function values over the simplex falls below
    ``ftol`` (and the vertex spread below ``xtol``), or after ``max_iter``
    iterations with ``converged=False``. ``step`` sets the initial simplex edge
    per coordinate; by default 5% of each nonzero coordinate, else 2.5e-4.
    """
    x0 = np.asarray(x0, dtype=float)
    k = x0.size
    nfev = 0

    def f(x):
        nonlocal nfev
        nfev += 1
        val = float(objective(x))
        if math.isnan(val):
            raise ObjectiveNaNError(x)
        return val

    if step is None:
        steps = np.where(x0 != 0, 0.05 * x0, 2.5e-4)
    else:
        steps = np.broadcast_to(np.asarray(step, dtype=float), (k,))
    sim = np.tile(x0, (k + 1, 1))
    for i in range(k):
        sim[i + 1, i] += steps[i]
    fsim = np.array([f(v) for v in sim])
    if not math.isfinite(fsim[0]):
        raise ValueError(f"objective is not finite at x0={list(x0)}")

    nit = 0
    converged = False
    while nit < max_iter:
        order = np.argsort(fsim, kind="stable")
        sim, fsim = sim[order], fsim[order]
        if (fsim[-1] - fsim[0] <= ftol
                and np.max(np.abs(sim[1:] - sim[0])) <= xtol):
            converged = True
            break
        nit += 1
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + reflect * (centroid - sim[-1])
        fr = f(xr)
        if fr < fsim[0]:
            xe = centroid + expand * (xr - centroid)
            fe = f(xe)
            if fe < fr:
                sim[-1], fsim[-1] = xe, fe
            else:
                sim[-1], fsim[-1] = xr, fr
            continue
        if fr < fsim[-2]:
            sim[-1], fsim[-1] = xr, fr
            continue
        if fr < fsim[-1]:
            xc = centroid + contract * (xr - centroid)
            fc = f(xc)
            if fc <= fr:
                sim[-1], fsim[-1] = xc, fc
                continue
        else:
            xc = centroid + contract * (sim[-1] - centroid)
            fc = f(xc)
            if fc < fsim[-1]:
                sim[-1], fsim[-1] = xc, fc
                continue
        sim[1:] = sim[0] + shrink * (sim[1:] - sim[0])
        fsim[1:] = [f(v) for v in sim[1:]]

    best = int(np.argmin(fsim))
    return NelderMeadResult(sim[best].copy(), float(fsim[best]), nit, nfev, converged)
