"""Norms on R^d and the signed-part projections used by cost and kernel formulas."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

NORM_KINDS = ("wl1", "wl2", "wlinf")


@dataclass(frozen=True)
class NormSpec:
    """Weighted norm on R^d, nondecreasing in each coordinate's absolute value.

    Parameters
    ----------
    kind : str
        One of ``"wl1"``, ``"wl2"``, ``"wlinf"``. The weighted l1 norm is the
        default choice; with weights (1/C_1, ..., 1/C_d) it encodes
        per-coordinate slope bounds.
    weights : tuple of float
        Strictly positive coordinate weights, length d. Coordinates are
        scaled by the weights before the l1/l2/linf aggregation.
    """

    kind: str = "wl1"
    weights: tuple = (1.0,)

    def __post_init__(self):
        if self.kind not in NORM_KINDS:
            raise InputError(f"unknown norm kind {self.kind!r}; expected one of {NORM_KINDS}")
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise InputError("norm weights must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise InputError("norm weights must be finite and strictly positive")
        object.__setattr__(self, "weights", tuple(float(v) for v in w))

    @property
    def dim(self) -> int:
        return len(self.weights)

    def value(self, z):
        """Evaluate the norm at ``z``, shaped (d,) or (n, d).

        Returns a scalar for a single vector, an (n,) array for a batch.
        """
        z = np.asarray(z, dtype=float)
        single = z.ndim == 1
        zz = np.atleast_2d(z)
        if zz.shape[1] != self.dim:
            raise InputError(f"vector has dimension {zz.shape[1]}, norm expects {self.dim}")
        a = np.abs(zz) * np.asarray(self.weights)
        if self.kind == "wl1":
            out = a.sum(axis=1)
        elif self.kind == "wl2":
            out = np.sqrt((a * a).sum(axis=1))
        else:
            out = a.max(axis=1)
        return float(out[0]) if single else out

    def to_json(self) -> dict:
        return {"kind": self.kind, "weights": list(self.weights)}

    @classmethod
    def from_json(cls, obj: dict) -> "NormSpec":
        return cls(kind=obj["kind"], weights=tuple(obj["weights"]))


@dataclass(frozen=True)
class MonotoneSet:
    """Set of 1-based coordinate indices along which f is assumed nondecreasing."""

    indices: frozenset = frozenset()

    def __post_init__(self):
        idx = frozenset(int(i) for i in self.indices)
        if any(i < 1 for i in idx):
            raise InputError("monotone indices are 1-based and must be >= 1")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def full(cls, d: int) -> "MonotoneSet":
        return cls(frozenset(range(1, d + 1)))

    @classmethod
    def none(cls) -> "MonotoneSet":
        return cls(frozenset())

    def mask(self, d: int) -> np.ndarray:
        """Boolean mask of length d; True on monotone coordinates."""
        if self.indices and max(self.indices) > d:
            raise InputError(f"monotone index {max(self.indices)} exceeds dimension {d}")
        m = np.zeros(d, dtype=bool)
        for i in self.indices:
            m[i - 1] = True
        return m

    def is_full(self, d: int) -> bool:
        return self.indices == frozenset(range(1, d + 1))

    def to_json(self) -> list:
        return sorted(self.indices)

    @classmethod
    def from_json(cls, obj) -> "MonotoneSet":
        return cls(frozenset(obj))


def pos_part(z, mask):
    """Clamp monotone coordinates at zero from below, pass the rest through.

    ``mask`` is a boolean array of length d; for coordinates outside the
    monotone set both signed parts equal the coordinate itself.
    """
    z = np.asarray(z, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if z.shape[-1] != mask.size:
        raise InputError("dimension mismatch between vector and monotone mask")
    return np.where(mask, np.maximum(z, 0.0), z)


def neg_part(z, mask):
    """Companion of :func:`pos_part`: -pos_part(-z, mask)."""
    return -pos_part(-np.asarray(z, dtype=float), mask)


def scale_const(c, v):
    """Multiply a nonnegative constant (possibly +inf) by nonnegative values.

    The convention inf * 0 = 0 applies: a zero signed-part norm costs nothing
    even under an infinite Lipschitz constant.
    """
    v = np.asarray(v, dtype=float)
    if not np.isinf(c):
        return c * v
    return np.where(v > 0, np.inf, 0.0)


def part_norms(x, mask, norm: NormSpec):
    """Norms of the two signed parts of each row of x; returns (pos, neg)."""
    x = np.asarray(x, dtype=float)
    return norm.value(pos_part(x, mask)), norm.value(neg_part(x, mask))


def cost(x, c1, c2, v: MonotoneSet, norm: NormSpec):
    """Cost c1*||(x)_{V+}|| + c2*||(x)_{V-}|| for a vector or batch of rows."""
    if c1 < 0 or c2 < 0:
        raise InputError("cost constants must be nonnegative")
    x = np.asarray(x, dtype=float)
    mask = v.mask(x.shape[-1])
    p, m = part_norms(x, mask, norm)
    return scale_const(c1, p) + scale_const(c2, m)
