"""Benchmark scoring: linear readout of neural data, confusion-pattern
correlation for behavior, and ceiling normalization."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .numerics import OptimizerConfig, minimize

__all__ = [
    "BenchmarkData",
    "BehaviorData",
    "ScoreReport",
    "pearson",
    "neural_score",
    "behavior_score",
    "ceiling_normalize",
]

NEURAL_REGIONS = ("V1", "V2", "V4", "IT")


@dataclass
class BenchmarkData:
    """Paired stimulus x feature activations and stimulus x neuroid recordings."""

    stimulus_ids: list
    activations: np.ndarray
    recordings: np.ndarray
    ceiling: float
    region: str

    def __post_init__(self):
        self.activations = np.asarray(self.activations, dtype=float)
        self.recordings = np.asarray(self.recordings, dtype=float)
        if self.activations.shape[0] != self.recordings.shape[0]:
            raise ValueError(
                "activations and recordings must share the stimulus axis: "
                f"{self.activations.shape[0]} vs {self.recordings.shape[0]}"
            )
        if len(self.stimulus_ids) != self.activations.shape[0]:
            raise ValueError("stimulus_ids length must match the stimulus axis")
        if np.isnan(self.activations).any() or np.isnan(self.recordings).any():
            raise ValueError("NaN entries are not allowed")
        if not 0.0 < self.ceiling <= 1.0:
            raise ValueError("ceiling must lie in (0, 1]")
        if self.region not in NEURAL_REGIONS:
            raise ValueError(f"unknown region {self.region!r}")


@dataclass
class BehaviorData:
    train_features: np.ndarray
    train_labels: np.ndarray
    test_features: np.ndarray
    test_labels: np.ndarray
    primate_pattern: np.ndarray
    ceiling: float

    def __post_init__(self):
        self.train_features = np.asarray(self.train_features, dtype=float)
        self.test_features = np.asarray(self.test_features, dtype=float)
        self.train_labels = np.asarray(self.train_labels)
        self.test_labels = np.asarray(self.test_labels)
        self.primate_pattern = np.asarray(self.primate_pattern, dtype=float)
        if not 0.0 < self.ceiling <= 1.0:
            raise ValueError("ceiling must lie in (0, 1]")
        classes = np.unique(self.train_labels)
        missing = np.setdiff1d(np.unique(self.test_labels), classes)
        if missing.size:
            raise ValueError(f"test labels absent from training set: {missing}")
        expected = self.test_features.shape[0] * (classes.size - 1)
        if self.primate_pattern.size != expected:
            raise ValueError(
                f"pattern length {self.primate_pattern.size} != "
                f"test_images x (classes - 1) = {expected}"
            )


@dataclass
class ScoreReport:
    raw: float
    ceiled: float
    ceiling: float
    per_neuroid: np.ndarray
    n_repeats: int
    seed: int
    aggregate: str = "median"


def pearson(x, y) -> float:
    """Pearson correlation, exact at +-1 for (anti-)identical inputs."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a = x - x.mean()
    b = y - y.mean()
    num = float(a @ b)
    den = float(a @ a) * float(b @ b)
    if den == 0.0:
        return float("nan")
    # num^2/den == 1 bit-exactly when b == +-a, because both sides are the
    # same computed product; plain num/sqrt(den) can land one ulp off 1.
    r = np.copysign(np.sqrt(min(num * num / den, 1.0)), num)
    return float(r)


def ceiling_normalize(raw: float, ceiling: float) -> float:
    """Divide a raw score by its ceiling; flags supra-ceiling results."""
    if ceiling <= 0:
        raise ValueError("ceiling must be positive")
    out = raw / ceiling
    if out > 1.0:
        warnings.warn(f"ceiled score {out:.4f} exceeds 1", stacklevel=2)
    return out


def _fit_linear_map(X: np.ndarray, Y: np.ndarray, ridge: float) -> np.ndarray:
    """Multi-output linear map with intercept; min-norm lstsq when ridge=0."""
    Xa = np.hstack([X, np.ones((X.shape[0], 1))])
    if ridge > 0:
        reg = ridge * np.eye(Xa.shape[1])
        reg[-1, -1] = 0.0  # intercept not shrunk
        return np.linalg.solve(Xa.T @ Xa + reg, Xa.T @ Y)
    W, *_ = np.linalg.lstsq(Xa, Y, rcond=None)
    return W


def neural_score(
    data: BenchmarkData,
    repeats: int = 10,
    train_fraction: float = 0.9,
    seed: int = 0,
    ridge: float = 0.0,
    aggregate: str = "median",
) -> ScoreReport:
    """Cross-validated linear readout score.

    Each repeat draws a seeded random train/test split, fits a linear map
    from activations to recordings on the train split, and computes the
    Pearson correlation per neuroid on held-out stimuli. Neuroids are
    combined by `aggregate` (median by default), repeats by the mean.
    """
    n = data.activations.shape[0]
    if n < 20:
        raise ValueError("need at least 20 stimuli")
    if not 0.5 < train_fraction <= 0.95:
        raise ValueError("train_fraction must lie in (0.5, 0.95]")
    if aggregate not in ("median", "mean"):
        raise ValueError(f"unknown aggregate {aggregate!r}")
    n_train = round(train_fraction * n)
    if n - n_train < 3:
        raise ValueError("too few held-out stimuli (< 3)")

    rng = np.random.default_rng(seed)
    q = data.recordings.shape[1]
    repeat_scores = []
    per_neuroid_sum = np.zeros(q)
    per_neuroid_cnt = np.zeros(q)
    for _ in range(repeats):
        perm = rng.permutation(n)
        tr, te = perm[:n_train], perm[n_train:]
        W = _fit_linear_map(data.activations[tr], data.recordings[tr], ridge)
        Xte = np.hstack([data.activations[te], np.ones((len(te), 1))])
        pred = Xte @ W
        actual = data.recordings[te]
        rs = np.full(q, np.nan)
        for j in range(q):
            if np.ptp(actual[:, j]) == 0.0:
                warnings.warn(
                    f"neuroid {j}: zero variance on held-out split, excluded",
                    stacklevel=2,
                )
                continue
            r = pearson(pred[:, j], actual[:, j])
            rs[j] = 0.0 if np.isnan(r) else r  # constant prediction: no predictivity
        valid = ~np.isnan(rs)
        per_neuroid_sum[valid] += rs[valid]
        per_neuroid_cnt[valid] += 1
        agg = np.median(rs[valid]) if aggregate == "median" else np.mean(rs[valid])
        repeat_scores.append(agg)

    raw = float(np.mean(repeat_scores))
    with np.errstate(invalid="ignore"):
        per_neuroid = np.where(per_neuroid_cnt > 0, per_neuroid_sum / per_neuroid_cnt, np.nan)
    return ScoreReport(
        raw=raw,
        ceiled=ceiling_normalize(raw, data.ceiling),
        ceiling=data.ceiling,
        per_neuroid=per_neuroid,
        n_repeats=repeats,
        seed=seed,
        aggregate=aggregate,
    )


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def fit_logistic(
    X: np.ndarray,
    labels: np.ndarray,
    l2: float = 1e-4,
    grad_tol: float = 1e-6,
    max_iters: int = 2000,
):
    """Multinomial logistic classifier by full-batch quasi-Newton descent.

    Returns (classes, weights) where weights has shape (features + 1,
    n_classes), last row the intercept. Deterministic (zero init).
    """
    classes, y = np.unique(labels, return_inverse=True)
    if classes.size < 2:
        raise ValueError("need at least 2 classes")
    n, f = X.shape
    k = classes.size
    Xa = np.hstack([X, np.ones((n, 1))])
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y] = 1.0

    def objective(w):
        W = w.reshape(f + 1, k)
        P = _softmax(Xa @ W)
        ce = -np.sum(onehot * np.log(np.maximum(P, 1e-300))) / n
        pen = W.copy()
        pen[-1, :] = 0.0  # intercept unpenalized
        val = ce + 0.5 * l2 * np.sum(pen * pen)
        G = Xa.T @ (P - onehot) / n + l2 * pen
        return val, G.ravel()

    cfg = OptimizerConfig(max_iters=max_iters, grad_tol=grad_tol)
    res = minimize(objective, np.zeros((f + 1) * k), cfg)
    return classes, res.x_star.reshape(f + 1, k)


def confusion_pattern(
    probs: np.ndarray, true_labels: np.ndarray, classes: np.ndarray
) -> np.ndarray:
    """Flattened image x incorrect-class probability pattern.

    Image-major order; within an image, incorrect classes in ascending
    class order (the true class is skipped).
    """
    true_labels = np.asarray(true_labels)
    out = []
    for i in range(probs.shape[0]):
        for j, c in enumerate(classes):
            if c != true_labels[i]:
                out.append(probs[i, j])
    return np.array(out)


def behavior_score(data: BehaviorData, seed: int = 0) -> ScoreReport:
    """Confusion-pattern correlation between classifier and primate reference."""
    classes, W = fit_logistic(data.train_features, data.train_labels)
    Xte = np.hstack([data.test_features, np.ones((data.test_features.shape[0], 1))])
    probs = _softmax(Xte @ W)
    pattern = confusion_pattern(probs, data.test_labels, classes)
    if pattern.size != data.primate_pattern.size:
        raise ValueError("confusion pattern length mismatch")
    raw = pearson(pattern, data.primate_pattern)
    return ScoreReport(
        raw=raw,
        ceiled=ceiling_normalize(raw, data.ceiling),
        ceiling=data.ceiling,
        per_neuroid=np.array([]),
        n_repeats=1,
        seed=seed,
        aggregate="pattern",
    )
