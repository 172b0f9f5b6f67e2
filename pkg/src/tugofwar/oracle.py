"""Closed-form values of the game on the unit interval.

The game is played on ``(0, 1)`` with Dirichlet endpoint 0 and running
payoff ``eps * g1 / 2`` on the last cell ``(1 - eps, 1]``.  With ``N =
1/eps`` cells the per-cell values ``a_0 .. a_N`` are

* ``strip_only`` (no payoff elsewhere): ``a_k = eps * g1 * k``;
* ``full_payoff`` (``eps^3`` everywhere else as well):
  ``a_k = -eps^3 k^2 + theta * eps * k`` with ``theta = g1 + 2 eps + eps^2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _csv

STRIP_ONLY = "strip_only"
FULL_PAYOFF = "full_payoff"


@dataclass(frozen=True)
class Oracle1DParams:
    eps: float
    g1: float = 1.0
    variant: str = STRIP_ONLY

    def __post_init__(self):
        n = 1.0 / self.eps
        if abs(n - round(n)) > 1e-12 * n:
            raise ValueError(f"eps: 1/eps = {n} is not an integer")
        if not self.g1 > 0:
            raise ValueError("g1 must be positive")
        if self.variant not in (STRIP_ONLY, FULL_PAYOFF):
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def n_cells(self) -> int:
        return int(round(1.0 / self.eps))

    @property
    def theta(self) -> float:
        return self.g1 + 2 * self.eps + self.eps ** 2

    @property
    def interior_payoff(self) -> float:
        return self.eps ** 3 if self.variant == FULL_PAYOFF else 0.0


def oracle_values(p: Oracle1DParams) -> np.ndarray:
    k = np.arange(p.n_cells + 1, dtype=float)
    if p.variant == STRIP_ONLY:
        return p.eps * p.g1 * k
    return -(p.eps ** 3) * k ** 2 + p.theta * p.eps * k


def recurrence_residuals(p: Oracle1DParams, values) -> np.ndarray:
    """Per-cell residuals of the chain equations (``a_0 = 0`` included)."""
    a = np.asarray(values, dtype=float)
    n = p.n_cells
    if a.shape != (n + 1,):
        raise ValueError(f"expected {n + 1} values, got shape {a.shape}")
    f = p.interior_payoff
    res = np.empty(n + 1)
    res[0] = a[0]
    res[1:n] = a[1:n] - 0.5 * (a[: n - 1] + a[2:]) - f
    res[n] = a[n] - 0.5 * (a[n - 1] + a[n]) - 0.5 * p.eps * p.g1 - f
    return res


def check_recurrences(p: Oracle1DParams, values) -> float:
    return float(np.max(np.abs(recurrence_residuals(p, values))))


def limit_gap(p: Oracle1DParams) -> float:
    """Sup over cells of ``|a_k - g1 * k * eps|``."""
    k = np.arange(p.n_cells + 1)
    return float(np.max(np.abs(oracle_values(p) - p.eps * p.g1 * k)))


def oracle_table(p: Oracle1DParams):
    a = oracle_values(p)
    k = np.arange(p.n_cells + 1)
    limit = p.eps * p.g1 * k
    return [(int(i), a[i], limit[i], abs(a[i] - limit[i])) for i in k]


def oracle_csv(p: Oracle1DParams, path=None) -> str:
    cols = ["k", "a_k", "limit", "gap"]
    rows = oracle_table(p)
    meta = {"eps": p.eps, "g1": p.g1, "variant": p.variant}
    if path is None:
        return _csv.render(cols, rows, meta)
    return _csv.write(path, cols, rows, meta)
