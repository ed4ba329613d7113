"""Affine-estimator building blocks: kernel, NW weights, centering, sd.

All estimators in this package are variance-weighted Nadaraya-Watson
estimators under the two-bandwidth kernel

    K(z; h) = [1 - (||(z)_{V+}||/h_plus + ||(z)_{V-}||/h_minus)]_+,

optionally recentered by the term a_q that balances worst-case biases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import Dataset, FunctionSpace
from .errors import DiagnosticError, EmptyEffectiveSampleError, InputError
from .geometry import MonotoneSet, NormSpec, part_norms, scale_const
from .modulus import ModulusSolution, SideProblem


@dataclass(frozen=True)
class BandwidthPair:
    """Bandwidths dividing the V+ and V- signed parts separately."""

    h_plus: float
    h_minus: float

    def __post_init__(self):
        if not (self.h_plus > 0 and self.h_minus > 0):
            raise InputError("bandwidths must be positive")


def kernel(z, h: BandwidthPair, v: MonotoneSet, norm: NormSpec):
    """Kernel weight(s) in [0, 1] for a vector or batch of rows."""
    z = np.asarray(z, dtype=float)
    mask = v.mask(z.shape[-1])
    p, m = part_norms(z, mask, norm)
    return np.maximum(1.0 - (_ratio(p, h.h_plus) + _ratio(m, h.h_minus)), 0.0)


def _ratio(v, h):
    # v / h with the convention 0 / inf = 0
    v = np.asarray(v, dtype=float)
    if np.isinf(h):
        return np.zeros_like(v)
    return v / h


def nw_point(y, kern, sigma2, side="?", bandwidth=None):
    """Variance-weighted Nadaraya-Watson value and normalized weights."""
    y = np.asarray(y, dtype=float)
    k = np.asarray(kern, dtype=float)
    s2 = np.asarray(sigma2, dtype=float)
    raw = k / s2
    tot = raw.sum()
    if not tot > 0:
        raise EmptyEffectiveSampleError(side, bandwidth)
    w = raw / tot
    return float(w @ y), w


def centering_a(kern, p, m, c1, c2, sigma2):
    """Half the kernel-weighted mean of c1*||(x)_{V+}|| - c2*||(x)_{V-}||."""
    k = np.asarray(kern, dtype=float)
    s2 = np.asarray(sigma2, dtype=float)
    idx = k > 0
    if not idx.any():
        raise EmptyEffectiveSampleError("?", None)
    # in-support points have finite cost terms, so restricting to the support
    # avoids inf * 0 when a constant is infinite
    diff = scale_const(c1, np.asarray(p)[idx]) - scale_const(c2, np.asarray(m)[idx])
    raw = k[idx] / s2[idx]
    return float(0.5 * (raw @ diff) / raw.sum())


def sd_s(delta, omega_t_star, kern_t, sigma2_t):
    """The sd functional s = (delta/omega_t*) / sum_t K/sigma^2."""
    raw = np.asarray(kern_t, dtype=float) / np.asarray(sigma2_t, dtype=float)
    tot = raw.sum()
    if not tot > 0:
        raise EmptyEffectiveSampleError("treated", None)
    return float((delta / omega_t_star) / tot)


def direct_sd(weights_t, weights_c, sigma2_t, sigma2_c):
    """Standard deviation of the difference of the two weighted sums."""
    wt = np.asarray(weights_t, dtype=float)
    wc = np.asarray(weights_c, dtype=float)
    return float(np.sqrt((wt * wt) @ np.asarray(sigma2_t)
                         + (wc * wc) @ np.asarray(sigma2_c)))


class SideData:
    """One side's observations with precomputed signed-part norms.

    ``sigma2`` drives all weights, bandwidths, and bias machinery.
    ``sigma2_report`` feeds only the reported standard deviation; it defaults
    to ``sigma2`` (the known-variance pipeline).
    """

    def __init__(self, x, y, sigma2, mask, norm: NormSpec, sigma2_report=None):
        self.x = np.atleast_2d(np.asarray(x, dtype=float))
        self.y = np.asarray(y, dtype=float)
        self.sigma2 = np.asarray(sigma2, dtype=float)
        self.p, self.m = part_norms(self.x, mask, norm)
        self.p = np.atleast_1d(self.p)
        self.m = np.atleast_1d(self.m)
        self.inv_var = 1.0 / self.sigma2
        self.sigma2_report = (self.sigma2 if sigma2_report is None
                              else np.asarray(sigma2_report, dtype=float))

    @property
    def n(self) -> int:
        return self.y.size

    def costs(self, c_plus, c_minus):
        return scale_const(c_plus, self.p) + scale_const(c_minus, self.m)

    def problem(self, c_plus, c_minus) -> SideProblem:
        return SideProblem(self.costs(c_plus, c_minus), self.inv_var)

    def kernel_at(self, omega, c_plus, c_minus):
        """Kernel values [1 - cost/omega]_+; equals kernel() at h = omega/c."""
        cost = self.costs(c_plus, c_minus)
        k = np.zeros_like(cost)
        fin = np.isfinite(cost)
        k[fin] = np.maximum(1.0 - cost[fin] / omega, 0.0)
        return k


def split_sides(data: Dataset, space: FunctionSpace,
                sigma2=None, sigma2_report=None) -> tuple[SideData, SideData]:
    """Build treated and control SideData from a preprocessed dataset.

    ``sigma2``/``sigma2_report`` are full-length overrides; when absent the
    dataset's own sigma column is required.
    """
    data.require_both_sides()
    if sigma2 is None:
        if data.sigma is None:
            raise InputError("no sigma column and no variance estimate supplied")
        sigma2 = data.sigma**2
    sigma2 = np.asarray(sigma2, dtype=float)
    rep = None if sigma2_report is None else np.asarray(sigma2_report, dtype=float)
    mask = space.mask(data.d)
    t = data.treated
    sides = []
    for sel in (t, ~t):
        sides.append(SideData(
            data.x[sel], data.y[sel], sigma2[sel], mask, space.norm,
            None if rep is None else rep[sel],
        ))
    return sides[0], sides[1]


def check_sd_identity(sd_value, weights_t, weights_c, t: SideData, c: SideData,
                      tol=1e-8):
    """Cross-check the sd functional against the direct weight variance."""
    direct = direct_sd(weights_t, weights_c, t.sigma2, c.sigma2)
    if abs(direct - sd_value) > tol * max(1.0, abs(sd_value)):
        raise DiagnosticError(
            f"sd identity violated: functional {sd_value:.12g} vs direct {direct:.12g}"
        )
    return direct
