"""Least-squares Zipf-Mandelbrot fit of the rank-frequency curve."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .optimize import nelder_mead_minimize
from .vocab import Vocabulary


class ZipfFitError(RuntimeError):
    def __init__(self, message: str, best_point):
        super().__init__(f"{message}; best point (log C, alpha, beta) = {list(best_point)}")
        self.best_point = np.asarray(best_point)


@dataclass(frozen=True)
class ZipfFit:
    C: float
    alpha: float
    beta: float
    sse: float

    def predict(self, ranks) -> np.ndarray:
        ranks = np.asarray(ranks, dtype=float)
        return self.C * (ranks + self.beta) ** (-self.alpha)


def zipf_objective(freqs: Sequence[float]):
    """Sum of squared log residuals as a function of ``(log C, alpha, beta)``."""
    logf = np.log(np.asarray(freqs, dtype=float))
    ranks = np.arange(1, logf.size + 1, dtype=float)

    def objective(theta):
        log_c, alpha, beta = theta
        if beta <= -1.0:
            return math.inf
        resid = logf - (log_c - alpha * np.log(ranks + beta))
        return float(resid @ resid)

    return objective


def fit_zipf_mandelbrot(vocab: Vocabulary | Sequence[float], ftol: float = 1e-12,
                        max_iter: int = 20000, max_restarts: int = 50) -> ZipfFit:
    """Fit ``f_i = C (i + beta)^-alpha`` to frequencies sorted by rank.

    The simplex is restarted around the incumbent optimum until a restart no
    longer improves the objective, which guards against premature collapse.
    """
    freqs = np.asarray(vocab.counts if isinstance(vocab, Vocabulary) else vocab, dtype=float)
    if np.unique(freqs).size < 3:
        raise ValueError("need at least 3 distinct frequencies to fit")
    if np.any(freqs <= 0):
        raise ValueError("frequencies must be positive")
    objective = zipf_objective(freqs)
    x = np.array([math.log(freqs[0]), 1.0, 1.0])
    best = None
    for _ in range(max_restarts):
        res = nelder_mead_minimize(objective, x, ftol=ftol, max_iter=max_iter,
                                   step=np.maximum(0.1 * np.abs(x), 0.1))
        if not res.converged:
            raise ZipfFitError("Nelder-Mead did not converge", res.x)
        improved = best is None or res.fun < best.fun - ftol
        if best is None or res.fun < best.fun:
            best = res
        if not improved:
            break
        x = best.x
    else:
        raise ZipfFitError("restarts kept improving the fit", best.x)
    log_c, alpha, beta = best.x
    return ZipfFit(float(math.exp(log_c)), float(alpha), float(beta), float(best.fun))


def write_zipf_report(fit: ZipfFit, freqs: Sequence[float], json_path: str | Path,
                      csv_path: str | Path) -> None:
    Path(json_path).write_text(json.dumps(asdict(fit), indent=2) + "\n", encoding="utf-8")
    ranks = np.arange(1, len(freqs) + 1)
    fitted = fit.predict(ranks)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "observed", "fitted"])
        for r, o, p in zip(ranks, freqs, fitted):
            w.writerow([int(r), o, repr(float(p))])
