"""Data model, treatment-rule interpretation, and preprocessing.

Preprocessing relabels the running variables so the evaluation cutoff sits at
the origin and negates coordinates flagged as decreasing, so that downstream
code only ever sees nondecreasing monotonicity at cutoff zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .errors import EmptySideError, InputError
from .geometry import MonotoneSet, NormSpec

log = logging.getLogger(__name__)

RULE_KINDS = ("column", "MRO", "MRA", "WAV")
DIRECTIONS = ("below-treated", "above-treated")


@dataclass(frozen=True)
class Dataset:
    """Observations (x_i, y_i) with treatment flags and optional noise sds."""

    x: np.ndarray
    y: np.ndarray
    treated: np.ndarray
    sigma: np.ndarray | None = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        if x.shape[0] == 1 and np.asarray(self.y).size != 1:
            x = x.T
        y = np.asarray(self.y, dtype=float)
        treated = np.asarray(self.treated, dtype=bool)
        n = x.shape[0]
        if y.shape != (n,) or treated.shape != (n,):
            raise InputError("x, y, treated must have matching lengths")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise InputError("x and y must be finite")
        sigma = self.sigma
        if sigma is not None:
            sigma = np.asarray(sigma, dtype=float)
            if sigma.shape != (n,):
                raise InputError("sigma must have length n")
            if not np.all(np.isfinite(sigma)) or np.any(sigma <= 0):
                raise InputError("sigma must be finite and strictly positive")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "treated", treated)
        object.__setattr__(self, "sigma", sigma)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def require_both_sides(self):
        if not self.treated.any() or self.treated.all():
            raise EmptySideError("need at least one treated and one control observation")

    def reflected(self) -> "Dataset":
        """Image under x -> -x, y -> -y; treatment flags and sigma unchanged."""
        return Dataset(-self.x, -self.y, self.treated, self.sigma)


@dataclass(frozen=True)
class TreatmentRule:
    """How treatment status is derived from the running variables.

    ``column`` trusts the supplied treated flags. MRO treats when any
    coordinate clears its cutoff, MRA when all do, WAV when a weighted
    average does.
    """

    kind: str = "column"
    direction: str = "below-treated"
    wav_weights: tuple | None = None

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise InputError(f"unknown treatment rule {self.kind!r}")
        if self.direction not in DIRECTIONS:
            raise InputError(f"unknown direction {self.direction!r}")
        if self.kind == "WAV":
            if self.wav_weights is None:
                raise InputError("WAV rule requires wav_weights")
            w = np.asarray(self.wav_weights, dtype=float)
            if np.any(w <= 0) or not np.all(np.isfinite(w)):
                raise InputError("wav_weights must be positive and finite")
            object.__setattr__(self, "wav_weights", tuple(float(v) for v in w))

    def apply(self, x_centered: np.ndarray) -> np.ndarray:
        """Materialize treated flags on cutoff-centered coordinates.

        Ties (coordinates exactly at the cutoff) go to the non-strict side,
        i.e. control; they are counted and logged.
        """
        if self.kind == "column":
            raise InputError("column rule carries no geometry; treated flags required")
        sign = -1.0 if self.direction == "below-treated" else 1.0
        z = sign * x_centered
        if self.kind == "MRO":
            treated = (z > 0).any(axis=1)
            at_cut = (z == 0).any(axis=1) & ~treated
        elif self.kind == "MRA":
            treated = (z > 0).all(axis=1)
            at_cut = (z >= 0).all(axis=1) & ~treated
        else:
            w = np.asarray(self.wav_weights, dtype=float)
            if w.size != x_centered.shape[1]:
                raise InputError("wav_weights length must equal d")
            s = z @ w
            treated = s > 0
            at_cut = s == 0
        n_ties = int(np.count_nonzero(at_cut))
        if n_ties:
            log.info("treatment rule: %d observation(s) exactly at the cutoff "
                     "assigned to control (non-strict side)", n_ties)
        return treated


@dataclass(frozen=True)
class FunctionSpace:
    """The function class F(C): Lipschitz constant, monotone set, norm."""

    C: float
    V: MonotoneSet = field(default_factory=MonotoneSet)
    decreasing: frozenset = frozenset()
    norm: NormSpec = field(default_factory=NormSpec)

    def __post_init__(self):
        if not self.C > 0:
            raise InputError("Lipschitz constant C must be positive")
        dec = frozenset(int(i) for i in self.decreasing)
        if not dec <= self.V.indices:
            raise InputError("decreasing indices must be a subset of the monotone set")
        object.__setattr__(self, "decreasing", dec)

    def with_c(self, c: float) -> "FunctionSpace":
        return replace(self, C=c)

    def without_monotonicity(self) -> "FunctionSpace":
        return replace(self, V=MonotoneSet.none(), decreasing=frozenset())

    def mask(self, d: int) -> np.ndarray:
        return self.V.mask(d)

    def to_json(self) -> dict:
        return {
            "C": "inf" if np.isinf(self.C) else self.C,
            "monotone": self.V.to_json(),
            "decreasing": sorted(self.decreasing),
            "norm": self.norm.to_json(),
        }


def preprocess(raw: Dataset, rule: TreatmentRule, space: FunctionSpace,
               cutoff_point=None) -> tuple[Dataset, FunctionSpace]:
    """Normalize a dataset: center at the cutoff, materialize treatment flags,
    and reflect decreasing coordinates so all monotonicity is increasing.

    Returns the normalized dataset together with the matching function space
    (its ``decreasing`` set cleared).
    """
    d = raw.d
    if cutoff_point is None:
        cutoff = np.zeros(d)
    else:
        cutoff = np.asarray(cutoff_point, dtype=float)
        if cutoff.shape != (d,):
            raise InputError(f"cutoff_point must have length {d}")
    x = raw.x - cutoff

    if rule.kind == "column":
        treated = raw.treated
    else:
        treated = rule.apply(x)
        if raw.treated is not None and raw.treated.any() and not np.array_equal(treated, raw.treated):
            bad = int(np.count_nonzero(treated != raw.treated))
            raise InputError(f"treated column conflicts with the rule on {bad} row(s)")

    if space.decreasing:
        flip = np.ones(d)
        for i in space.decreasing:
            flip[i - 1] = -1.0
        x = x * flip

    out = Dataset(x, raw.y, treated, raw.sigma)
    out.require_both_sides()
    return out, replace(space, decreasing=frozenset())


def read_csv(path) -> Dataset:
    """Load a dataset from CSV with columns y, x1..xd, optional treated, sigma."""
    try:
        df = pd.read_csv(path)
    except Exception as exc:
        raise InputError(f"cannot read CSV {path}: {exc}") from exc
    cols = {c.strip(): c for c in df.columns}
    if "y" not in cols:
        raise InputError("CSV must have a 'y' column")
    xcols = []
    k = 1
    while f"x{k}" in cols:
        xcols.append(cols[f"x{k}"])
        k += 1
    if not xcols:
        raise InputError("CSV must have running-variable columns x1..xd")
    try:
        x = df[xcols].to_numpy(dtype=float)
        y = df[cols["y"]].to_numpy(dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"non-numeric value in CSV: {exc}") from exc
    if np.isnan(x).any() or np.isnan(y).any():
        row = int(np.argwhere(np.isnan(x).any(axis=1) | np.isnan(y))[0][0])
        raise InputError(f"missing value in CSV at data row {row}")
    if "treated" in cols:
        tr = df[cols["treated"]].to_numpy()
        bad = ~np.isin(tr, [0, 1, True, False])
        if bad.any():
            raise InputError(f"treated column must be 0/1; bad row {int(np.argwhere(bad)[0][0])}")
        treated = tr.astype(bool)
    else:
        treated = np.zeros(len(y), dtype=bool)
    sigma = None
    if "sigma" in cols:
        sigma = df[cols["sigma"]].to_numpy(dtype=float)
    return Dataset(x, y, treated, sigma)
