"""Monte Carlo harness: simulation DGPs, designs, coverage/length studies.

Treatment is assigned on the first coordinate (treated iff x1 < 0), the
support is [-1, 1]^d, and every family jumps by theta at the cutoff. The
eight standard designs cross uniform-vs-beta running variables,
constant-vs-bell-shaped noise variance, and a small-vs-large true Lipschitz
constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .adaptive import adaptive_ci
from .design import Dataset, FunctionSpace
from .errors import InputError, RdmonoError
from .geometry import MonotoneSet, NormSpec
from .minimax import minimax_ci
from .estimator import split_sides
from .variance import estimate_variance

FAMILIES = ("f1", "f2", "f3", "f4", "linear2d", "constant")

# design id -> (x distribution, variance shape, true C)
DESIGN_TABLE = {
    1: ("uniform", "sigma1", 1.0),
    2: ("beta22", "sigma1", 1.0),
    3: ("uniform", "sigma2", 1.0),
    4: ("beta22", "sigma2", 1.0),
    5: ("uniform", "sigma1", 3.0),
    6: ("beta22", "sigma1", 3.0),
    7: ("uniform", "sigma2", 3.0),
    8: ("beta22", "sigma2", 3.0),
}


@dataclass(frozen=True)
class DGPSpec:
    family: str = "f1"
    C: float = 1.0
    theta: float = 0.0
    knots: tuple = (1.0 / 3.0, 2.0 / 3.0)
    x_dist: str = "uniform"
    var_fn: str = "sigma1"
    noise_scale: float = 0.5
    n: int = 500

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown DGP family {self.family!r}")
        if self.x_dist not in ("uniform", "beta22"):
            raise InputError(f"unknown x distribution {self.x_dist!r}")
        if self.var_fn not in ("sigma1", "sigma2"):
            raise InputError(f"unknown variance shape {self.var_fn!r}")
        if self.C <= 0 or self.noise_scale < 0 or self.n < 1:
            raise InputError("C > 0, noise_scale >= 0, n >= 1 required")
        b1, b2 = self.knots
        if not b1 >= b2 / 2.0:
            raise InputError("f2 knots must satisfy b1 >= b2/2 to keep f increasing")

    @property
    def d(self) -> int:
        return 2 if self.family == "linear2d" else 1

    @classmethod
    def from_design(cls, design: int, family: str, theta: float = 0.0,
                    n: int = 500) -> "DGPSpec":
        x_dist, var_fn, c_true = DESIGN_TABLE[design]
        return cls(family=family, C=c_true, theta=theta,
                   x_dist=x_dist, var_fn=var_fn, n=n)


def _control_branch(spec: DGPSpec, x):
    """The control-side regression function on [0, 1] (x may be any sign)."""
    c = spec.C
    if spec.family == "f1":
        return c * x
    if spec.family == "f2":
        b1, b2 = spec.knots
        return 1.5 * c * (x**2 - 2.0 * np.maximum(x - b1, 0.0) ** 2
                          + 2.0 * np.maximum(x - b2, 0.0) ** 2)
    if spec.family == "f3":
        return 0.25 * c * (x**3 + x)
    if spec.family == "f4":
        return c * (np.cbrt(3.0 * x + 1.0) - 1.0)
    return np.zeros_like(x)


def eval_dgp(spec: DGPSpec, x):
    """Regression function values at x, shaped (n,) for d=1 or (n, d)."""
    x = np.asarray(x, dtype=float)
    if spec.d == 2:
        xx = np.atleast_2d(x)
        if np.any(np.abs(xx) > 1 + 1e-12):
            raise InputError("x outside the [-1, 1]^d support")
        base = spec.C * xx.sum(axis=1)
        return base + spec.theta * (xx[:, 0] < 0)
    x1 = np.atleast_1d(x)
    if np.any(np.abs(x1) > 1 + 1e-12):
        raise InputError("x outside the [-1, 1] support")
    treated = x1 < 0
    out = np.empty_like(x1)
    g = lambda v: _control_branch(spec, v)
    out[~treated] = g(x1[~treated])
    if spec.family in ("f2", "f4"):
        out[treated] = -g(-x1[treated]) + spec.theta
    else:
        out[treated] = g(x1[treated]) + spec.theta
    return out if np.ndim(x) else float(out[0])


def noise_sd(spec: DGPSpec, x):
    """Per-point noise standard deviation, noise_scale * shape(x1)."""
    x = np.asarray(x, dtype=float)
    x1 = x[:, 0] if x.ndim > 1 else np.atleast_1d(x)
    if spec.var_fn == "sigma1":
        shape = np.ones_like(x1)
    else:
        shape = stats.norm.pdf(x1) / stats.norm.pdf(0.0)
    return spec.noise_scale * np.sqrt(shape)


def draw_dataset(spec: DGPSpec, rng: np.random.Generator) -> Dataset:
    """One replication: running variables, treatment, outcomes, true sigma."""
    if spec.x_dist == "uniform":
        x = rng.uniform(-1.0, 1.0, size=(spec.n, spec.d))
    else:
        x = 2.0 * rng.beta(2.0, 2.0, size=(spec.n, spec.d)) - 1.0
    treated = x[:, 0] < 0
    f = eval_dgp(spec, x if spec.d > 1 else x[:, 0])
    sd = noise_sd(spec, x if spec.d > 1 else x[:, 0])
    y = f + rng.standard_normal(spec.n) * sd
    return Dataset(x, y, treated, sd if spec.noise_scale > 0 else None)


def default_space(spec: DGPSpec, C) -> FunctionSpace:
    return FunctionSpace(C=C, V=MonotoneSet.full(spec.d),
                         norm=NormSpec("wl1", (1.0,) * spec.d))


@dataclass(frozen=True)
class SimResult:
    coverage: float
    mean_length: float
    reps: int
    se: float
    seed: int
    length_se: float = 0.0
    method: str = ""

    def to_json(self) -> dict:
        return {"coverage": self.coverage, "mean_length": self.mean_length,
                "reps": self.reps, "se": self.se, "length_se": self.length_se,
                "seed": self.seed, "method": self.method}


def _prepared_sides(data: Dataset, space: FunctionSpace, variance: str,
                    nn_j: int = 3):
    """Sides plus the (sigma2, sigma2_report) pair for the requested mode."""
    if variance == "known":
        return split_sides(data, space), None, None
    ve = estimate_variance(data, nn_j)
    s2 = ve.machinery_sigma2(data.treated)
    rep = ve.stage2_sigma2
    return split_sides(data, space, s2, rep), s2, rep


def _run_minimax(data, spec, cfg):
    space = default_space(spec, cfg.get("c_spec", 3.0))
    alpha = cfg.get("alpha", 0.05)
    sides, _, _ = _prepared_sides(data, space, cfg.get("variance", "estimate"),
                                  cfg.get("nn_j", 3))
    ci = minimax_ci(sides, space, alpha)
    covered = abs(ci.estimate - spec.theta) <= ci.half_length
    return covered, 2.0 * ci.half_length


def _run_one_sided(data, spec, cfg, c_list, seed_rep):
    space = default_space(spec, cfg.get("c_big", np.inf))
    alpha = cfg.get("alpha", 0.05)
    variance = cfg.get("variance", "estimate")
    if variance == "known":
        s2 = rep = None
    else:
        ve = estimate_variance(data, cfg.get("nn_j", 3))
        s2 = ve.machinery_sigma2(data.treated)
        rep = ve.stage2_sigma2
    ci = adaptive_ci(data, space, c_list, alpha,
                     mc_draws=cfg.get("mc_draws", 4000), seed=seed_rep,
                     direction="lower", sigma2=s2, sigma2_report=rep)
    covered = ci.endpoint <= spec.theta
    return covered, spec.theta - ci.endpoint


def run_mc(spec: DGPSpec, method, method_config=None, reps: int = 1000,
           seed: int = 0) -> SimResult:
    """Coverage and length (or excess length) over seeded replications.

    ``method`` is one of "minimax", "adaptive", "oracle",
    "minimax_one_sided", or a callable mapping (Dataset, rng) to a
    (lower, upper) interval for the plug-in comparator hook.
    """
    cfg = dict(method_config or {})
    if isinstance(method, str) and method not in (
            "minimax", "adaptive", "oracle", "minimax_one_sided"):
        raise InputError(f"unknown method {method!r}")
    cover = np.empty(reps, dtype=bool)
    length = np.empty(reps)
    for r in range(reps):
        rng = np.random.default_rng([seed, r])
        data = draw_dataset(spec, rng)
        seed_rep = int(np.random.SeedSequence([seed, r, 1]).generate_state(1)[0])
        try:
            if callable(method):
                lo, hi = method(data, rng)
                cover[r] = lo <= spec.theta <= hi
                length[r] = hi - lo
            elif method == "minimax":
                cover[r], length[r] = _run_minimax(data, spec, cfg)
            elif method == "adaptive":
                c_list = cfg.get("c_list")
                if c_list is None:
                    c_list = list(np.linspace(cfg.get("c_lo", 0.2),
                                              cfg.get("c_hi", 1.0),
                                              cfg.get("J", 4)))
                cover[r], length[r] = _run_one_sided(data, spec, cfg, c_list,
                                                     seed_rep)
            elif method == "oracle":
                # the oracle knows the true constant: class and candidate
                # both collapse to spec.C
                one = {**cfg, "c_big": cfg.get("c_big", spec.C)}
                cover[r], length[r] = _run_one_sided(data, spec, one,
                                                     [spec.C], seed_rep)
            elif method == "minimax_one_sided":
                one = {**cfg, "c_big": cfg.get("c_big", cfg["c_u"])}
                cover[r], length[r] = _run_one_sided(data, spec, one,
                                                     [cfg["c_u"]], seed_rep)
            else:
                raise InputError(f"unknown method {method!r}")
        except RdmonoError as exc:
            raise RdmonoError(f"replication {r} failed: {exc}") from exc
    p = float(np.mean(cover))
    return SimResult(
        coverage=p,
        mean_length=float(np.mean(length)),
        reps=reps,
        se=float(np.sqrt(max(p * (1.0 - p), 0.0) / reps)),
        length_se=float(np.std(length, ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0,
        seed=seed,
        method=method if isinstance(method, str) else "callable",
    )
