"""Inverse-modulus solvers and the optimal split between the two sides.

The one-sided inverse modulus at budget delta is the unique b >= min cost with

    sum_i [b - c_i]_+^2 / sigma_i^2 = delta^2,

where c_i is the cost of moving observation i. Sorting the costs makes the
left-hand side piecewise quadratic and monotone in b, so the equation is
solved exactly on the active segment. The two-sided modulus splits the budget
delta^2 = delta_t^2 + delta_c^2 across sides to maximize the sum of the
one-sided values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import DiagnosticError, EmptySideError, InputError

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class SideProblem:
    """One side's costs and inverse variances, preprocessed for fast solves.

    Observations with infinite cost can never be moved and are filtered out
    up front; [b - inf]_+ = 0 for every finite b.
    """

    def __init__(self, costs, inv_var):
        costs = np.asarray(costs, dtype=float)
        inv_var = np.asarray(inv_var, dtype=float)
        if costs.ndim != 1 or costs.shape != inv_var.shape:
            raise InputError("costs and inv_var must be 1-d arrays of equal length")
        if costs.size == 0:
            raise EmptySideError("side has no observations")
        if np.any(np.isnan(costs)) or np.any(costs < 0):
            raise InputError("costs must be nonnegative")
        if not np.all(np.isfinite(inv_var)) or np.any(inv_var <= 0):
            raise InputError("inverse variances must be finite and positive")
        keep = np.isfinite(costs)
        if not keep.any():
            raise EmptySideError("all observations on this side have infinite cost")
        c = costs[keep]
        w = inv_var[keep]
        order = np.argsort(c, kind="stable")
        self.costs = c[order]
        self.inv_var = w[order]
        # prefix sums for the per-segment quadratic A b^2 - 2 B b + D = delta^2
        self._A = np.cumsum(self.inv_var)
        self._B = np.cumsum(self.inv_var * self.costs)
        self._D = np.cumsum(self.inv_var * self.costs**2)
        # value of the sum at b = c_(j): includes points 1..j with zero term at j
        self._F = self._A * self.costs**2 - 2.0 * self._B * self.costs + self._D

    @property
    def n(self) -> int:
        return self.costs.size

    @property
    def min_cost(self) -> float:
        return float(self.costs[0])

    def omega(self, delta):
        """Inverse modulus at budget delta (scalar or array)."""
        delta = np.asarray(delta, dtype=float)
        if np.any(delta < 0):
            raise InputError("delta must be nonnegative")
        d2 = np.atleast_1d(delta) ** 2
        j = np.searchsorted(self._F, d2, side="right")
        j = np.clip(j, 1, self.n) - 1
        A = self._A[j]
        B = self._B[j]
        rem = self._D[j] - d2
        disc = np.maximum(B * B - A * rem, 0.0)
        b = (B + np.sqrt(disc)) / A
        b = np.maximum(b, self.min_cost)
        return float(b[0]) if delta.ndim == 0 else b

    def sum_sq(self, b):
        """sum_i [b - c_i]_+^2 / sigma_i^2 at a given b."""
        b = float(b)
        j = int(np.searchsorted(self.costs, b, side="right"))
        if j == 0:
            return 0.0
        k = j - 1
        return float(self._A[k] * b * b - 2.0 * self._B[k] * b + self._D[k])

    def sum_pos(self, b):
        """sum_i [b - c_i]_+ / sigma_i^2 at a given b."""
        b = float(b)
        j = int(np.searchsorted(self.costs, b, side="right"))
        if j == 0:
            return 0.0
        k = j - 1
        return float(self._A[k] * b - self._B[k])


def omega_side(side: SideProblem, delta):
    """Inverse modulus for one side; thin wrapper over SideProblem.omega."""
    return side.omega(delta)


def omega_side_bisect(side: SideProblem, delta, tol=1e-12):
    """Bisection solver for the same equation; slow reference implementation."""
    delta = float(delta)
    if delta == 0.0:
        return side.min_cost
    target = delta * delta
    lo = side.min_cost
    hi = lo + delta / np.sqrt(side.inv_var.min()) + 1.0
    while side.sum_sq(hi) < target:
        hi = lo + 2.0 * (hi - lo)
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if side.sum_sq(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class ModulusSolution:
    """Optimal budget split and the resulting side moduli at a given delta."""

    delta: float
    delta_t: float
    delta_c: float
    omega_t: float
    omega_c: float
    omega_prime: float | None = None

    @property
    def omega(self) -> float:
        return self.omega_t + self.omega_c


def optimal_split(t: SideProblem, c: SideProblem, delta, *, theta_tol=1e-10,
                  prescan=64, with_derivative=True) -> ModulusSolution:
    """Maximize omega_t(delta sin th) + omega_c(delta cos th) over th in [0, pi/2].

    A coarse prescan brackets the maximum of the concave objective, then
    golden-section refines the angle to ``theta_tol``.
    """
    delta = float(delta)
    if delta < 0:
        raise InputError("delta must be nonnegative")
    if delta == 0.0:
        return ModulusSolution(0.0, 0.0, 0.0, t.min_cost, c.min_cost, None)

    theta = np.linspace(0.0, np.pi / 2.0, prescan)
    vals = t.omega(delta * np.sin(theta)) + c.omega(delta * np.cos(theta))
    k = int(np.argmax(vals))
    lo = theta[max(k - 1, 0)]
    hi = theta[min(k + 1, prescan - 1)]

    def obj(th):
        return t.omega(delta * np.sin(th)) + c.omega(delta * np.cos(th))

    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = obj(x1), obj(x2)
    while hi - lo > theta_tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN * (hi - lo)
            f2 = obj(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN * (hi - lo)
            f1 = obj(x1)
    th = 0.5 * (lo + hi)

    # interior stationarity is sum_pos_t(omega_t) = sum_pos_c(omega_c), a
    # monotone condition in the angle; a root polish recovers the machine
    # precision the flat-topped golden search cannot
    def gap(angle):
        return (t.sum_pos(t.omega(delta * np.sin(angle)))
                - c.sum_pos(c.omega(delta * np.cos(angle))))

    span = max(10.0 * (hi - lo), 1e-6)
    blo = max(th - span, 0.0)
    bhi = min(th + span, np.pi / 2.0)
    glo, ghi = gap(blo), gap(bhi)
    if glo < 0.0 < ghi:
        th = float(optimize.brentq(gap, blo, bhi, xtol=1e-15))

    dt = delta * np.sin(th)
    dc = delta * np.cos(th)
    sol = ModulusSolution(delta, float(dt), float(dc),
                          float(t.omega(dt)), float(c.omega(dc)))
    if with_derivative:
        sol.omega_prime = omega_prime(sol, t, c)
    return sol


def omega_prime(sol: ModulusSolution, t: SideProblem, c: SideProblem,
                rtol=1e-4) -> float:
    """Derivative of the two-sided modulus at sol.delta.

    Computed from the treated-side expression delta / sum_t [omega_t - c_i]_+ w_i;
    the control-side expression must agree at an interior split, and a
    disagreement beyond ``rtol`` signals a failed split optimization.
    """
    if sol.delta <= 0:
        raise InputError("omega_prime requires delta > 0")
    st = t.sum_pos(sol.omega_t)
    sc = c.sum_pos(sol.omega_c)
    if st <= 0.0 and sc <= 0.0:
        raise DiagnosticError("degenerate modulus solution: both sides empty at omega*")
    if st <= 0.0:
        return sol.delta / sc
    if sc <= 0.0:
        return sol.delta / st
    vt = sol.delta / st
    vc = sol.delta / sc
    # boundary splits put the whole budget on one side; the starved side's
    # expression is then meaningless and the cross-check does not apply
    interior = min(sol.delta_t, sol.delta_c) > 1e-7 * sol.delta
    if interior and abs(vt - vc) > rtol * max(abs(vt), abs(vc)):
        raise DiagnosticError(
            f"omega_prime cross-check failed: treated {vt:.10g} vs control {vc:.10g}"
        )
    return vt if interior else (vt if sol.delta_t >= sol.delta_c else vc)
