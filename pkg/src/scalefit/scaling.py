"""Parametric misalignment curve fitting.

Three forms are supported, all fit by minimizing a Huber loss on the
log-residual of a log-sum-exp combination of the saturation and power-law
terms, started from a grid of initializations and solved by BFGS:

  power:   L = E + A X^-alpha
  shifted: L = E + A (X + 10^lambda)^-alpha
  joint:   L = E + A N^-alpha + B D^-beta

E, A, B are optimized in log space (e = log E, ...), so they are
nonnegative by construction.
"""
from __future__ import annotations

import functools
import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .numerics import HuberParams, OptimizerConfig, huber, huber_deriv, minimize_batch

__all__ = [
    "Rescale",
    "FitConfig",
    "PowerLawFit",
    "ShiftedPowerLawFit",
    "JointFit",
    "fit_power_law",
    "fit_shifted_power_law",
    "fit_joint",
    "predict",
    "region_gain",
]

L_FLOOR = 1e-6
DEGENERATE_EPS = 1e-4

X_KINDS = ("flops", "params", "samples")


@dataclass(frozen=True)
class Rescale:
    """Variable rescaling applied before fitting to avoid large constants."""

    c_scale: float = 1e13
    n_scale: float = 1e5
    d_scale: float = 1e4

    def __post_init__(self):
        if min(self.c_scale, self.n_scale, self.d_scale) <= 0:
            raise ValueError("rescale factors must be positive")

    def factor(self, x_kind: str) -> float:
        if x_kind == "flops":
            return self.c_scale
        if x_kind == "params":
            return self.n_scale
        if x_kind == "samples":
            return self.d_scale
        raise ValueError(f"unknown x_kind {x_kind!r}")


IDENTITY_RESCALE = Rescale(1.0, 1.0, 1.0)


@dataclass(frozen=True)
class FitConfig:
    huber: HuberParams = HuberParams(1e-3)
    grid_e: tuple = (-1.0, -0.5, 0.0, 0.5, 1.0)
    grid_a: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0)
    grid_alpha: tuple = (0.0, 0.5, 1.0, 1.5, 2.0)
    grid_lambda: tuple = (0.0, 0.5, 1.0, 1.5, 2.0)
    # b and beta initializations mirror a and alpha unless overridden.
    grid_b: tuple | None = None
    grid_beta: tuple | None = None
    rescale: Rescale = field(default_factory=Rescale)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)

    def __post_init__(self):
        for name in ("grid_e", "grid_a", "grid_alpha", "grid_lambda"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must be nonempty")


@dataclass
class PowerLawFit:
    E: float
    A: float
    alpha: float
    objective: float
    init_used: tuple
    degenerate: bool
    x_kind: str = "flops"
    x_scale: float = 1.0
    converged: bool = True
    n_points: int = 0

    form = "power"

    def params(self) -> dict:
        return {"E": self.E, "A": self.A, "alpha": self.alpha}


@dataclass
class ShiftedPowerLawFit:
    E: float
    A: float
    alpha: float
    lam: float
    objective: float
    init_used: tuple
    degenerate: bool
    x_kind: str = "flops"
    x_scale: float = 1.0
    converged: bool = True
    n_points: int = 0

    form = "shifted"

    def params(self) -> dict:
        return {"E": self.E, "A": self.A, "alpha": self.alpha, "lambda": self.lam}


@dataclass
class JointFit:
    E: float
    A: float
    alpha: float
    B: float
    beta: float
    objective: float
    init_used: tuple
    degenerate: bool
    n_scale: float = 1.0
    d_scale: float = 1.0
    converged: bool = True
    n_points: int = 0

    form = "joint"

    def params(self) -> dict:
        return {
            "E": self.E,
            "A": self.A,
            "alpha": self.alpha,
            "B": self.B,
            "beta": self.beta,
        }


def _quiet(fg):
    """Silence overflow/invalid warnings from diverging grid starts.

    Non-finite objective rows are masked out by the batched minimizer,
    so the intermediate NaN/inf arithmetic is expected and harmless.
    """

    @functools.wraps(fg)
    def wrapped(P, need_grad=True):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return fg(P, need_grad=need_grad)

    return wrapped


def _clean_L(L: np.ndarray) -> np.ndarray:
    if np.any(L <= 0) or np.any(L <= L_FLOOR):
        n_low = int(np.sum(L <= L_FLOOR))
        warnings.warn(
            f"{n_low} misalignment value(s) <= {L_FLOOR} clamped to {L_FLOOR}",
            stacklevel=3,
        )
        L = np.maximum(L, L_FLOOR)
    return L


def _power_objective(logX: np.ndarray, logL: np.ndarray, delta: float):
    hp = HuberParams(delta)

    @_quiet
    def fg(P, need_grad=True):
        e, a, al = P[:, 0:1], P[:, 1:2], P[:, 2:3]
        t = a - al * logX
        s = np.logaddexp(t, e)
        r = s - logL
        fv = np.sum(huber(r, hp), axis=1)
        if not need_grad:
            return fv
        dh = huber_deriv(r, hp)
        w = np.exp(t - s)
        we = np.exp(e - s)
        ge = np.sum(dh * we, axis=1)
        ga = np.sum(dh * w, axis=1)
        gal = -np.sum(dh * w * logX, axis=1)
        return fv, np.stack([ge, ga, gal], axis=1)

    return fg


def _shifted_objective(X: np.ndarray, logL: np.ndarray, delta: float, freeze_lambda: bool):
    hp = HuberParams(delta)
    ln10 = np.log(10.0)

    @_quiet
    def fg(P, need_grad=True):
        e, a, al, lam = P[:, 0:1], P[:, 1:2], P[:, 2:3], P[:, 3:4]
        shift = np.power(10.0, lam)
        Xs = X + shift
        logXs = np.log(Xs)
        t = a - al * logXs
        s = np.logaddexp(t, e)
        r = s - logL
        fv = np.sum(huber(r, hp), axis=1)
        if not need_grad:
            return fv
        dh = huber_deriv(r, hp)
        w = np.exp(t - s)
        we = np.exp(e - s)
        ge = np.sum(dh * we, axis=1)
        ga = np.sum(dh * w, axis=1)
        gal = -np.sum(dh * w * logXs, axis=1)
        if freeze_lambda:
            glam = np.zeros_like(ge)
        else:
            glam = -np.sum(dh * w * al * (shift * ln10) / Xs, axis=1)
        return fv, np.stack([ge, ga, gal, glam], axis=1)

    return fg


def _joint_objective(logN: np.ndarray, logD: np.ndarray, logL: np.ndarray, delta: float):
    hp = HuberParams(delta)

    @_quiet
    def fg(P, need_grad=True):
        e, a, al, b, be = (P[:, i : i + 1] for i in range(5))
        tn = a - al * logN
        td = b - be * logD
        s = np.logaddexp(np.logaddexp(tn, td), e)
        r = s - logL
        fv = np.sum(huber(r, hp), axis=1)
        if not need_grad:
            return fv
        dh = huber_deriv(r, hp)
        wn = np.exp(tn - s)
        wd = np.exp(td - s)
        we = np.exp(e - s)
        g = np.stack(
            [
                np.sum(dh * we, axis=1),
                np.sum(dh * wn, axis=1),
                -np.sum(dh * wn * logN, axis=1),
                np.sum(dh * wd, axis=1),
                -np.sum(dh * wd * logD, axis=1),
            ],
            axis=1,
        )
        return fv, g

    return fg


def _select_best(Xs, fs, conv, inits, alpha_col: int):
    """Lowest objective; ties by smaller alpha, then grid order."""
    finite = np.isfinite(fs)
    if not np.any(finite):
        raise RuntimeError("all grid minimizations diverged to non-finite objectives")
    fs = np.where(finite, fs, np.inf)
    order = np.lexsort((np.arange(len(fs)), Xs[:, alpha_col], fs))
    k = int(order[0])
    return Xs[k], float(fs[k]), bool(conv[k]), inits[k]


def fit_power_law(points, cfg: FitConfig = FitConfig(), x_kind: str = "flops") -> PowerLawFit:
    """Fit L = E + A X^-alpha over the initialization grid; keep the best."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must have shape (n, 2) of (X, L)")
    X, L = pts[:, 0], pts[:, 1]
    if x_kind not in X_KINDS:
        raise ValueError(f"unknown x_kind {x_kind!r}")
    if np.any(X <= 0):
        raise ValueError("X values must be positive")
    if len(X) < 3 or np.unique(X).size < 3:
        raise ValueError("need at least 3 points with 3 distinct X values")
    scale = cfg.rescale.factor(x_kind)
    Xs = X / scale
    L = _clean_L(L)

    fg = _power_objective(np.log(Xs)[None, :], np.log(L)[None, :], cfg.huber.delta)
    inits = list(itertools.product(cfg.grid_e, cfg.grid_a, cfg.grid_alpha))
    P0 = np.array(inits, dtype=float)
    P, fvals, _, conv, _ = minimize_batch(fg, P0, cfg.optimizer)
    best, obj, converged, init = _select_best(P, fvals, conv, inits, alpha_col=2)

    E, A, alpha = float(np.exp(best[0])), float(np.exp(best[1])), float(best[2])
    return PowerLawFit(
        E=E,
        A=A,
        alpha=alpha,
        objective=obj,
        init_used=init,
        degenerate=(A < DEGENERATE_EPS or alpha < DEGENERATE_EPS),
        x_kind=x_kind,
        x_scale=scale,
        converged=converged,
        n_points=len(X),
    )


def fit_shifted_power_law(
    points,
    cfg: FitConfig = FitConfig(),
    x_kind: str = "flops",
    freeze_lambda: bool = False,
) -> ShiftedPowerLawFit:
    """Fit L = E + A (X + 10^lambda)^-alpha.

    lambda is seeded from the grid and optimized jointly by default;
    freeze_lambda keeps each grid value fixed during descent.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must have shape (n, 2) of (X, L)")
    X, L = pts[:, 0], pts[:, 1]
    if x_kind not in X_KINDS:
        raise ValueError(f"unknown x_kind {x_kind!r}")
    if np.any(X <= 0):
        raise ValueError("X values must be positive")
    if len(X) < 3 or np.unique(X).size < 3:
        raise ValueError("need at least 3 points with 3 distinct X values")
    scale = cfg.rescale.factor(x_kind)
    Xs = X / scale
    L = _clean_L(L)

    fg = _shifted_objective(Xs[None, :], np.log(L)[None, :], cfg.huber.delta, freeze_lambda)
    inits = list(itertools.product(cfg.grid_e, cfg.grid_a, cfg.grid_alpha, cfg.grid_lambda))
    P0 = np.array(inits, dtype=float)
    P, fvals, _, conv, _ = minimize_batch(fg, P0, cfg.optimizer)
    best, obj, converged, init = _select_best(P, fvals, conv, inits, alpha_col=2)

    E, A, alpha = float(np.exp(best[0])), float(np.exp(best[1])), float(best[2])
    return ShiftedPowerLawFit(
        E=E,
        A=A,
        alpha=alpha,
        lam=float(best[3]),
        objective=obj,
        init_used=init,
        degenerate=(A < DEGENERATE_EPS or alpha < DEGENERATE_EPS),
        x_kind=x_kind,
        x_scale=scale,
        converged=converged,
        n_points=len(X),
    )


def fit_joint(points, cfg: FitConfig = FitConfig()) -> JointFit:
    """Fit L = E + A N^-alpha + B D^-beta; b/beta grids mirror a/alpha."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("points must have shape (n, 3) of (N, D, L)")
    N, D, L = pts[:, 0], pts[:, 1], pts[:, 2]
    if np.any(N <= 0) or np.any(D <= 0):
        raise ValueError("N and D values must be positive")
    if len(N) < 5:
        raise ValueError("need at least 5 points")
    if np.unique(N).size < 2 or np.unique(D).size < 2:
        raise ValueError("insufficient span: need >= 2 distinct N and >= 2 distinct D")
    Ns = N / cfg.rescale.n_scale
    Ds = D / cfg.rescale.d_scale
    L = _clean_L(L)

    fg = _joint_objective(
        np.log(Ns)[None, :], np.log(Ds)[None, :], np.log(L)[None, :], cfg.huber.delta
    )
    grid_b = cfg.grid_b if cfg.grid_b is not None else cfg.grid_a
    grid_beta = cfg.grid_beta if cfg.grid_beta is not None else cfg.grid_alpha
    inits = list(
        itertools.product(cfg.grid_e, cfg.grid_a, cfg.grid_alpha, grid_b, grid_beta)
    )
    P0 = np.array(inits, dtype=float)
    P, fvals, _, conv, _ = minimize_batch(fg, P0, cfg.optimizer)
    best, obj, converged, init = _select_best(P, fvals, conv, inits, alpha_col=2)

    E, A, alpha = float(np.exp(best[0])), float(np.exp(best[1])), float(best[2])
    B, beta = float(np.exp(best[3])), float(best[4])
    return JointFit(
        E=E,
        A=A,
        alpha=alpha,
        B=B,
        beta=beta,
        objective=obj,
        init_used=init,
        degenerate=(
            A < DEGENERATE_EPS
            or alpha < DEGENERATE_EPS
            or B < DEGENERATE_EPS
            or beta < DEGENERATE_EPS
        ),
        n_scale=cfg.rescale.n_scale,
        d_scale=cfg.rescale.d_scale,
        converged=converged,
        n_points=len(N),
    )


def predict(fit, x=None, n=None, d=None):
    """Evaluate a fitted curve; returns (L, S) with S = 1 - L.

    Power/shifted fits take raw `x` (rescaled internally with the scale the
    fit was made with); joint fits take raw `n` and `d`.
    """
    if isinstance(fit, JointFit):
        if n is None or d is None:
            raise ValueError("joint predict requires n and d")
        n = np.asarray(n, dtype=float)
        d = np.asarray(d, dtype=float)
        if np.any(n <= 0) or np.any(d <= 0):
            raise ValueError("inputs must be positive")
        with np.errstate(over="ignore"):
            # X**p may overflow to inf for extreme fitted exponents; the
            # resulting term A/inf = 0 is the correct limit.
            L = (
                fit.E
                + fit.A / (n / fit.n_scale) ** fit.alpha
                + fit.B / (d / fit.d_scale) ** fit.beta
            )
    else:
        if x is None:
            raise ValueError("predict requires x")
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise ValueError("inputs must be positive")
        xs = x / fit.x_scale
        if isinstance(fit, ShiftedPowerLawFit):
            L = fit.E + fit.A * (xs + 10.0**fit.lam) ** (-fit.alpha)
        elif isinstance(fit, PowerLawFit):
            L = fit.E + fit.A * xs ** (-fit.alpha)
        else:
            raise TypeError(f"unknown fit type {type(fit)!r}")
    S = 1.0 - L
    if np.ndim(L):
        return L, S
    return float(L), float(S)


def region_gain(fit: PowerLawFit) -> float:
    """Scale sensitivity of a fitted region curve, A * 10^alpha."""
    if fit.degenerate:
        return 0.0
    return float(fit.A * 10.0**fit.alpha)
