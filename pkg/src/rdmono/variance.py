"""Two-stage conditional-variance estimation for the unknown-sigma pipeline.

Stage one fits a local-constant kernel regression per side (triangular
kernel, Silverman rule-of-thumb bandwidth) and averages the squared
residuals into a per-side constant; the constant drives weights,
bandwidths, and the budget optimization. Stage two assigns each point a
nearest-neighbor variance that feeds only the reported standard deviation
and critical values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import Dataset
from .errors import InputError

VARIANCE_FLOOR_REL = 1e-12


def silverman_bandwidth(x) -> float:
    """Rule-of-thumb bandwidth 1.06 * min(sd, IQR/1.349) * n^(-1/5)."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise InputError("silverman_bandwidth needs a 1-d sample of size >= 2")
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    iqr = float(q75 - q25)
    spread = min(sd, iqr / 1.349) if iqr > 0 else sd
    if spread <= 0:
        raise InputError("cannot pick a bandwidth for a constant sample")
    return 1.06 * spread * x.size ** (-0.2)


def _triangular_fit(x, y, h):
    """Local-constant fit at the sample points, product triangular kernel."""
    # (n, n, d) distance tensor is fine at the sample sizes we target
    u = np.abs(x[:, None, :] - x[None, :, :]) / h
    k = np.prod(np.maximum(1.0 - u, 0.0), axis=2)
    w = k / k.sum(axis=1, keepdims=True)
    return w @ y


@dataclass(frozen=True)
class VarianceEstimate:
    """Per-side stage-1 constants and the per-point stage-2 values."""

    stage1_treated: float
    stage1_control: float
    stage2_sigma2: np.ndarray
    j_nn: int

    def machinery_sigma2(self, treated) -> np.ndarray:
        treated = np.asarray(treated, dtype=bool)
        return np.where(treated, self.stage1_treated, self.stage1_control)


def stage1_variance(data: Dataset) -> tuple[float, float]:
    """Per-side constant variance from local-constant regression residuals."""
    data.require_both_sides()
    out = []
    var_y = max(float(np.var(data.y)), 1.0)
    for sel in (data.treated, ~data.treated):
        x, y = data.x[sel], data.y[sel]
        if y.size < 2:
            raise InputError("stage-1 variance needs >= 2 observations per side")
        h = np.array([silverman_bandwidth(x[:, j]) for j in range(x.shape[1])])
        fitted = _triangular_fit(x, y, h)
        s2 = float(np.mean((y - fitted) ** 2))
        out.append(max(s2, VARIANCE_FLOOR_REL * var_y))
    return out[0], out[1]


def nn_variance(data: Dataset, j_nn: int = 3) -> np.ndarray:
    """Nearest-neighbor variance (J/(J+1))(y_i - mean of J neighbors)^2.

    Neighbors are same-treatment-status points by Euclidean distance;
    distance ties are broken by ascending observation index.
    """
    if j_nn < 1:
        raise InputError("j_nn must be >= 1")
    out = np.empty(data.n)
    var_y = max(float(np.var(data.y)), 1.0)
    for sel in (data.treated, ~data.treated):
        idx = np.flatnonzero(sel)
        x, y = data.x[idx], data.y[idx]
        if y.size < j_nn + 1:
            raise InputError(f"need >= {j_nn + 1} observations per side for "
                             f"{j_nn}-NN variance")
        d2 = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
        np.fill_diagonal(d2, np.inf)
        order = np.argsort(d2, axis=1, kind="stable")[:, :j_nn]
        ybar = y[order].mean(axis=1)
        s2 = (j_nn / (j_nn + 1.0)) * (y - ybar) ** 2
        out[idx] = np.maximum(s2, VARIANCE_FLOOR_REL * var_y)
    return out


def estimate_variance(data: Dataset, j_nn: int = 3) -> VarianceEstimate:
    """Run both stages; see module docstring for how the outputs are used."""
    s1t, s1c = stage1_variance(data)
    return VarianceEstimate(s1t, s1c, nn_variance(data, j_nn), j_nn)
