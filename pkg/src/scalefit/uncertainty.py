"""Bootstrap confidence intervals for curve fits.

Rows are resampled with replacement; each resample index gets its own
random stream derived from the base seed, so serial and parallel
execution (and reruns) produce bit-identical results.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .scaling import (
    FitConfig,
    JointFit,
    fit_joint,
    fit_power_law,
    fit_shifted_power_law,
    predict,
)

__all__ = ["BootstrapConfig", "BootstrapResult", "bootstrap_fit"]

FIT_KINDS = ("power", "shifted", "joint")


@dataclass(frozen=True)
class BootstrapConfig:
    resamples: int = 1000
    ci_level: float = 0.95
    seed: int = 0
    curve_grid: tuple = ()

    def __post_init__(self):
        if self.resamples < 2:
            raise ValueError("resamples must be >= 2")
        if not 0.0 < self.ci_level < 1.0:
            raise ValueError("ci_level must be in (0, 1)")


@dataclass
class BootstrapResult:
    point_estimate: object
    param_ci: dict
    curve_ci: list  # (x, lo_L, hi_L) or ((n, d), lo_L, hi_L) tuples
    n_failed_resamples: int
    resamples: int = 0
    seed: int = 0


def _fit_once(points, fit_kind, fit_cfg, x_kind):
    if fit_kind == "power":
        return fit_power_law(points, fit_cfg, x_kind)
    if fit_kind == "shifted":
        return fit_shifted_power_law(points, fit_cfg, x_kind)
    if fit_kind == "joint":
        return fit_joint(points, fit_cfg)
    raise ValueError(f"unknown fit_kind {fit_kind!r}; known: {FIT_KINDS}")


def _curve_values(fit, grid):
    out = []
    for g in grid:
        if isinstance(fit, JointFit):
            n, d = g
            L, _ = predict(fit, n=n, d=d)
        else:
            L, _ = predict(fit, x=g)
        out.append(L)
    return np.array(out)


def _warm_cfg(fit_cfg: FitConfig, fit) -> FitConfig:
    """Single-initialization config seeded at the point estimate."""
    e = float(np.log(max(fit.E, 1e-300)))
    a = float(np.log(max(fit.A, 1e-300)))
    kwargs = dict(grid_e=(e,), grid_a=(a,), grid_alpha=(fit.alpha,))
    if hasattr(fit, "lam"):
        kwargs["grid_lambda"] = (fit.lam,)
    if isinstance(fit, JointFit):
        kwargs["grid_b"] = (float(np.log(max(fit.B, 1e-300))),)
        kwargs["grid_beta"] = (fit.beta,)
    return replace(fit_cfg, **kwargs)


def bootstrap_fit(
    points,
    fit_kind: str,
    fit_cfg: FitConfig = FitConfig(),
    bs_cfg: BootstrapConfig = BootstrapConfig(),
    x_kind: str = "flops",
    warm_start: bool = False,
    cluster_ids=None,
) -> BootstrapResult:
    """Percentile bootstrap of a curve fit's parameters and predictions.

    With `cluster_ids`, whole clusters of rows are resampled instead of
    individual rows. `warm_start` refits each resample from the point
    estimate only instead of the full initialization grid.
    """
    points = np.asarray(points, dtype=float)
    point_fit = _fit_once(points, fit_kind, fit_cfg, x_kind)
    resample_cfg = _warm_cfg(fit_cfg, point_fit) if warm_start else fit_cfg

    n_rows = len(points)
    if cluster_ids is not None:
        cluster_ids = np.asarray(cluster_ids)
        if len(cluster_ids) != n_rows:
            raise ValueError("cluster_ids length must match points")
        clusters = [np.flatnonzero(cluster_ids == c) for c in np.unique(cluster_ids)]

    children = np.random.SeedSequence(bs_cfg.seed).spawn(bs_cfg.resamples)
    param_names = list(point_fit.params())
    grid = list(bs_cfg.curve_grid)

    param_draws, curve_draws = [], []
    n_failed = 0
    for child in children:
        rng = np.random.default_rng(child)
        if cluster_ids is None:
            idx = rng.integers(0, n_rows, size=n_rows)
        else:
            picks = rng.integers(0, len(clusters), size=len(clusters))
            idx = np.concatenate([clusters[p] for p in picks])
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                fit = _fit_once(points[idx], fit_kind, resample_cfg, x_kind)
        except (ValueError, RuntimeError, FloatingPointError):
            n_failed += 1
            continue
        p = fit.params()
        param_draws.append([p[k] for k in param_names])
        if grid:
            curve_draws.append(_curve_values(fit, grid))

    if n_failed > 0.2 * bs_cfg.resamples:
        raise RuntimeError(
            f"{n_failed}/{bs_cfg.resamples} bootstrap refits failed (> 20%)"
        )

    lo_q = 100.0 * (1.0 - bs_cfg.ci_level) / 2.0
    hi_q = 100.0 - lo_q
    draws = np.asarray(param_draws)
    param_ci = {
        name: (
            float(np.percentile(draws[:, j], lo_q)),
            float(np.percentile(draws[:, j], hi_q)),
        )
        for j, name in enumerate(param_names)
    }
    curve_ci = []
    if grid:
        cd = np.asarray(curve_draws)
        lo = np.percentile(cd, lo_q, axis=0)
        hi = np.percentile(cd, hi_q, axis=0)
        curve_ci = [(grid[j], float(lo[j]), float(hi[j])) for j in range(len(grid))]

    return BootstrapResult(
        point_estimate=point_fit,
        param_ci=param_ci,
        curve_ci=curve_ci,
        n_failed_resamples=n_failed,
        resamples=bs_cfg.resamples,
        seed=bs_cfg.seed,
    )
