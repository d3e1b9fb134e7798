"""Robust-loss primitives, log-domain helpers, and a quasi-Newton minimizer.

Everything here is pure and deterministic: identical inputs produce
bit-identical outputs, which the fitting and bootstrap layers rely on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "HuberParams",
    "OptimizerConfig",
    "MinimizeResult",
    "huber",
    "huber_deriv",
    "lse",
    "loglog_linreg",
    "minimize",
    "minimize_batch",
    "check_gradient",
]


@dataclass(frozen=True)
class HuberParams:
    """Transition point of the Huber loss (quadratic below, linear above)."""

    delta: float = 1e-3

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 500
    grad_tol: float = 1e-8
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    gradient_mode: str = "analytic"  # or "finite_difference"
    fd_step: float = 1e-6

    def __post_init__(self):
        if not 0 < self.armijo_c < 1:
            raise ValueError("armijo_c must be in (0, 1)")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack must be in (0, 1)")
        if self.gradient_mode not in ("analytic", "finite_difference"):
            raise ValueError(f"unknown gradient_mode {self.gradient_mode!r}")


@dataclass
class MinimizeResult:
    x_star: np.ndarray
    f_star: float
    iterations: int
    converged: bool
    grad_norm: float


def huber(r, params: HuberParams = HuberParams()):
    """Huber loss: 0.5 r^2 for |r| <= delta, delta (|r| - 0.5 delta) beyond."""
    r = np.asarray(r, dtype=float)
    d = params.delta
    a = np.abs(r)
    out = np.where(a <= d, 0.5 * r * r, d * (a - 0.5 * d))
    return out if out.ndim else float(out)


def huber_deriv(r, params: HuberParams = HuberParams()):
    """Derivative of the Huber loss; equals clip(r, -delta, delta)."""
    r = np.asarray(r, dtype=float)
    out = np.clip(r, -params.delta, params.delta)
    return out if out.ndim else float(out)


def lse(terms) -> float:
    """Log-sum-exp with max-shift, log sum_i exp(t_i)."""
    t = np.asarray(terms, dtype=float)
    if t.size == 0:
        raise ValueError("lse requires at least one term")
    m = np.max(t)
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.sum(np.exp(t - m))))


def loglog_linreg(x, y) -> tuple[float, float, float]:
    """OLS of log y on log x; returns (intercept, slope, r2).

    For a power law y = m x^n this recovers intercept = log m, slope = n.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d arrays of equal length")
    if x.size < 2:
        raise ValueError("need at least 2 points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("loglog_linreg requires strictly positive values")
    lx, ly = np.log(x), np.log(y)
    if np.unique(lx).size < 2:
        raise ValueError("degenerate x: need at least 2 distinct values")
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (intercept + slope * lx)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res < 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(intercept), float(slope), r2


# A batch objective maps params (K, d) -> values (K,) when need_grad is
# False, or (values (K,), gradients (K, d)) when True.
BatchObjective = Callable


def minimize_batch(fg: BatchObjective, x0: np.ndarray, cfg: OptimizerConfig = OptimizerConfig()):
    """Run K independent BFGS descents simultaneously.

    `x0` has shape (K, d). Each row is minimized with an inverse-Hessian
    BFGS update and Armijo backtracking. Accepted steps are monotone
    non-increasing in the objective. Returns (X, f, iterations, converged,
    grad_norm) with leading dimension K.
    """
    X = np.array(x0, dtype=float)
    if X.ndim != 2:
        raise ValueError("x0 must have shape (K, d)")
    K, d = X.shape
    f, g = fg(X)
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValueError("objective is not finite at an initial point")

    eye = np.eye(d)
    H = np.repeat(eye[None, :, :], K, axis=0)
    iters = np.zeros(K, dtype=int)
    gnorm = np.max(np.abs(g), axis=1) if d else np.zeros(K)
    converged = gnorm <= cfg.grad_tol
    active = ~converged

    for _ in range(cfg.max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Xi, fi, gi, Hi = X[idx], f[idx], g[idx], H[idx]

        p = -np.einsum("kij,kj->ki", Hi, gi)
        slope = np.sum(p * gi, axis=1)
        bad = slope >= 0  # not a descent direction; reset to steepest descent
        if np.any(bad):
            p[bad] = -gi[bad]
            slope[bad] = -np.sum(gi[bad] ** 2, axis=1)
            Hi[bad] = eye
            H[idx] = Hi

        # Armijo backtracking line search, per row.
        t = np.ones(idx.size)
        Xnew = Xi.copy()
        fnew = fi.copy()
        accepted = np.zeros(idx.size, dtype=bool)
        searching = np.ones(idx.size, dtype=bool)
        for _bt in range(60):
            sj = np.flatnonzero(searching)
            if sj.size == 0:
                break
            cand = Xi[sj] + t[sj, None] * p[sj]
            fc = np.asarray(fg(cand, need_grad=False), dtype=float)
            ok = np.isfinite(fc) & (fc <= fi[sj] + cfg.armijo_c * t[sj] * slope[sj])
            hit = sj[ok]
            Xnew[hit] = cand[ok]
            fnew[hit] = fc[ok]
            accepted[hit] = True
            searching[hit] = False
            t[sj[~ok]] *= cfg.backtrack

        aj = np.flatnonzero(accepted)
        if aj.size:
            _, gnew = fg(Xnew[aj])
            gnew = np.asarray(gnew, dtype=float)
            s = Xnew[aj] - Xi[aj]
            y = gnew - gi[aj]
            sy = np.sum(s * y, axis=1)
            upd = sy > 1e-12
            if np.any(upd):
                rho = 1.0 / sy[upd]
                Hu = Hi[aj][upd]
                su, yu = s[upd], y[upd]
                Hy = np.einsum("kij,kj->ki", Hu, yu)
                yHy = np.sum(yu * Hy, axis=1)
                outer_sHy = np.einsum("ki,kj->kij", su, Hy)
                Hu = (
                    Hu
                    - rho[:, None, None] * (outer_sHy + outer_sHy.transpose(0, 2, 1))
                    + (rho * rho * yHy + rho)[:, None, None]
                    * np.einsum("ki,kj->kij", su, su)
                )
                tmp = Hi[aj]
                tmp[upd] = Hu
                Hi[aj] = tmp
                H[idx] = Hi

            rows = idx[aj]
            X[rows] = Xnew[aj]
            f[rows] = fnew[aj]
            g[rows] = gnew
            gn = np.max(np.abs(gnew), axis=1)
            gnorm[rows] = gn
            iters[rows] += 1
            done = gn <= cfg.grad_tol
            converged[rows[done]] = True
            active[rows[done]] = False

        # Rows where the line search stalled make no further progress.
        stalled = idx[~accepted]
        active[stalled] = False
        iters[stalled] += 1

    return X, f, iters, converged, gnorm


def _fd_gradient(f_only, x: np.ndarray, step: float) -> np.ndarray:
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (f_only(x + e) - f_only(x - e)) / (2 * step)
    return g


def minimize(f, x0, cfg: OptimizerConfig = OptimizerConfig()) -> MinimizeResult:
    """BFGS with Armijo backtracking for a single starting point.

    In analytic mode `f(x)` must return `(value, gradient)`; in
    finite_difference mode `f(x)` returns the value and the gradient is
    estimated by central differences with `cfg.fd_step`.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))

    if cfg.gradient_mode == "analytic":
        def fg(X, need_grad=True):
            if not need_grad:
                return np.array([f(x)[0] for x in X])
            pairs = [f(x) for x in X]
            vals = np.array([p[0] for p in pairs])
            grads = np.array([np.atleast_1d(np.asarray(p[1], dtype=float)) for p in pairs])
            return vals, grads
    else:
        def fg(X, need_grad=True):
            vals = np.array([f(x) for x in X])
            if not need_grad:
                return vals
            grads = np.array([_fd_gradient(f, x, cfg.fd_step) for x in X])
            return vals, grads

    Xs, fs, iters, conv, gn = minimize_batch(fg, x0[None, :], cfg)
    return MinimizeResult(
        x_star=Xs[0],
        f_star=float(fs[0]),
        iterations=int(iters[0]),
        converged=bool(conv[0]),
        grad_norm=float(gn[0]),
    )


def check_gradient(f, x, fd_step: float = 1e-6) -> float:
    """Relative discrepancy between analytic and central-difference gradients.

    `f(x)` must return `(value, gradient)`. Compared by vector norm,
    ||g - g_fd|| / max(||g||, ||g_fd||): components that are negligibly
    small relative to the gradient as a whole are dominated by finite-
    difference cancellation noise and should not fail the check.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _, g = f(x)
    g = np.atleast_1d(np.asarray(g, dtype=float))
    g_fd = _fd_gradient(lambda z: f(z)[0], x, fd_step)
    denom = max(float(np.linalg.norm(g)), float(np.linalg.norm(g_fd)), 1e-12)
    return float(np.linalg.norm(g - g_fd) / denom)
