"""Unbiased lower-bound estimator for the Lipschitz constant.

The estimator compares group means of y across a median split of each side
(d = 1), or sums y-differences over componentwise-dominating point pairs
(d > 1). Under a monotone C-Lipschitz regression function its expectation is
at most C, so it suggests a defensible lower endpoint for the adaptive
procedure's constant range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import Dataset, FunctionSpace
from .errors import InputError


@dataclass(frozen=True)
class CBoundReport:
    mu_t: float
    mu_c: float
    n_t: int
    n_c: int
    split_points: tuple | None = None
    pair_counts: tuple | None = None
    note: str = ""

    @property
    def suggested_c_lo(self) -> float:
        return max(self.mu_t, self.mu_c, 0.0)

    def to_json(self) -> dict:
        out = {"mu_t": self.mu_t, "mu_c": self.mu_c,
               "n_t": self.n_t, "n_c": self.n_c,
               "suggested_c_lo": self.suggested_c_lo}
        if self.split_points is not None:
            out["split_points"] = list(self.split_points)
        if self.pair_counts is not None:
            out["pair_counts"] = list(self.pair_counts)
        if self.note:
            out["note"] = self.note
        return out


def _mu_1d(x, y):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < 2:
        raise InputError("each side needs >= 2 observations")
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    half = n // 2
    lo = slice(0, half)
    # odd side sizes drop the single median point so the halves stay equal
    hi = slice(n - half, n)
    dx = float(np.mean(x[hi]) - np.mean(x[lo]))
    if dx <= 0:
        raise InputError("all running-variable values equal on one side")
    mu = float((np.mean(y[hi]) - np.mean(y[lo])) / dx)
    split = float(x[half]) if n % 2 else float(0.5 * (x[half - 1] + x[half]))
    return mu, split


def c_lower_bound_1d(data: Dataset) -> CBoundReport:
    """Median-split slope estimate per side; d = 1 only."""
    if data.d != 1:
        raise InputError("c_lower_bound_1d requires d = 1")
    data.require_both_sides()
    mu_t, split_t = _mu_1d(data.x[data.treated], data.y[data.treated])
    mu_c, split_c = _mu_1d(data.x[~data.treated], data.y[~data.treated])
    return CBoundReport(mu_t=mu_t, mu_c=mu_c,
                        n_t=int(data.treated.sum()),
                        n_c=int((~data.treated).sum()),
                        split_points=(split_t, split_c))


def _mu_nd(x, y, norm):
    n = x.shape[0]
    if n < 2:
        raise InputError("each side needs >= 2 observations")
    order = np.argsort(x.sum(axis=1), kind="stable")
    x, y = x[order], y[order]
    half = n // 2
    num = 0.0
    den = 0.0
    pairs = 0
    for i in range(half):
        lo = x[i]
        hi = x[n - half + i]
        if np.all(hi >= lo) and np.any(hi > lo):
            num += y[n - half + i] - y[i]
            den += norm.value(hi - lo)
            pairs += 1
    if pairs < 2 or den <= 0:
        raise InputError("fewer than 2 componentwise-dominating pairs on a side")
    return num / den, pairs


def c_lower_bound_nd(data: Dataset, space: FunctionSpace) -> CBoundReport:
    """Dominating-pair slope estimate per side for d > 1.

    Points are sorted by coordinate sum; the i-th lowest is paired with the
    i-th highest whenever the latter dominates componentwise, and skipped
    otherwise. One admissible pairing among many; the pair counts are
    reported so a thin match is visible.
    """
    if not space.V.is_full(data.d):
        raise InputError("the lower bound for d > 1 requires V = {1..d}")
    data.require_both_sides()
    mu_t, k_t = _mu_nd(data.x[data.treated], data.y[data.treated], space.norm)
    mu_c, k_c = _mu_nd(data.x[~data.treated], data.y[~data.treated], space.norm)
    return CBoundReport(mu_t=float(mu_t), mu_c=float(mu_c),
                        n_t=int(data.treated.sum()),
                        n_c=int((~data.treated).sum()),
                        pair_counts=(k_t, k_c),
                        note="greedy sum-ordered pairing; one admissible choice")


def c_lower_bound(data: Dataset, space: FunctionSpace) -> CBoundReport:
    if data.d == 1:
        return c_lower_bound_1d(data)
    return c_lower_bound_nd(data, space)
