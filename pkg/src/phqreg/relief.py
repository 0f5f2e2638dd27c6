"""Relief feature weighting, top-k selection, and grid tuning by 3-fold CV.

Multi-neighbor Relief on min-max-normalized features with Manhattan distance:
every instance contributes the mean per-feature difference to its k nearest
misses (other class) minus its k nearest hits (same class), accumulated as
weight_f += (sum_miss |diff| - sum_hit |diff|) / (n * k). Labels are binarized
at PHQ-8 >= 10 for the hit/miss neighbor search. Constant features get
weight 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

PHQ8_DEPRESSED_CUTOFF = 10
DEFAULT_THRESHOLD = 0.02
DEFAULT_K = 20
GRID_THRESHOLDS = (0.02, 0.0, -0.02)
GRID_KS = (5, 10, 15, 20)


def binarize_labels(y) -> np.ndarray:
    """Depressed / non-depressed split at the standard PHQ-8 cutoff."""
    return (np.asarray(y, dtype=np.float64) >= PHQ8_DEPRESSED_CUTOFF).astype(int)


@dataclass(frozen=True)
class ReliefWeights:
    weights: np.ndarray
    k: int
    mins: np.ndarray
    maxs: np.ndarray


def _normalize(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mins = X.min(axis=0)
    maxs = X.max(axis=0)
    ranges = maxs - mins
    Xn = np.zeros_like(X)
    ok = ranges > 0
    Xn[:, ok] = (X[:, ok] - mins[ok]) / ranges[ok]
    return Xn, mins, maxs


def relief_weights(X, y_class, k: int = DEFAULT_K) -> ReliefWeights:
    """Relief weights for binary-class data; requires k+1 instances per class."""
    X = np.asarray(X, dtype=np.float64)
    y_class = np.asarray(y_class).astype(int)
    if X.ndim != 2 or len(X) != len(y_class):
        raise ValueError("X must be 2-d with one class label per row")
    if k < 1:
        raise ValueError("k must be >= 1")
    for cls in np.unique(y_class):
        count = int(np.sum(y_class == cls))
        if count < k + 1:
            raise ValueError(f"class {cls} has {count} instances, need at least k+1 = {k + 1}")

    Xn, mins, maxs = _normalize(X)
    n, d = Xn.shape
    dist = np.abs(Xn[:, None, :] - Xn[None, :, :]).sum(axis=2)

    weights = np.zeros(d)
    idx = np.arange(n)
    for i in range(n):
        same = y_class == y_class[i]
        hits = idx[same & (idx != i)]
        misses = idx[~same]
        # deterministic tie-break by original index
        hits = hits[np.lexsort((hits, dist[i, hits]))][:k]
        misses = misses[np.lexsort((misses, dist[i, misses]))][:k]
        diff_h = np.abs(Xn[hits] - Xn[i]).sum(axis=0)
        diff_m = np.abs(Xn[misses] - Xn[i]).sum(axis=0)
        weights += diff_m - diff_h
    weights /= n * k
    return ReliefWeights(weights, k, mins, maxs)


def select_top(weights: ReliefWeights | np.ndarray, threshold: float = DEFAULT_THRESHOLD, n_max: int = 20) -> list[int]:
    """Indices with weight > threshold, best first, at most n_max (ties by index)."""
    w = weights.weights if isinstance(weights, ReliefWeights) else np.asarray(weights)
    above = [i for i in range(len(w)) if w[i] > threshold]
    above.sort(key=lambda i: (-w[i], i))
    if not above:
        logger.warning("relief selection empty: no weight above threshold %g", threshold)
    return above[:n_max]


def stratified_folds(y_class, n_folds: int, seed: int) -> list[np.ndarray]:
    """Deterministic stratified fold assignment; returns per-fold index arrays.

    The round-robin offset carries over between classes so overall fold sizes
    differ by at most one.
    """
    y_class = np.asarray(y_class).astype(int)
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(n_folds)]
    offset = 0
    for cls in np.unique(y_class):
        members = np.where(y_class == cls)[0]
        rng.shuffle(members)
        for j, m in enumerate(members):
            folds[(offset + j) % n_folds].append(int(m))
        offset = (offset + len(members)) % n_folds
    return [np.array(sorted(f), dtype=int) for f in folds]


def tune_relief(
    X,
    y,
    make_model,
    thresholds=GRID_THRESHOLDS,
    ks=GRID_KS,
    n_folds: int = 3,
    n_max: int = 20,
    seed: int = 0,
) -> tuple[float, int, dict]:
    """Pick (threshold, k) minimizing mean fold MAE under 3-fold CV.

    ``make_model`` is a factory returning an object with fit(X, y) and
    predict(X); Relief and the selection are refitted inside every fold on
    its training part only. Grid points whose folds cannot support k
    neighbors, or that select no features, score infinity and are logged.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    y_class = binarize_labels(y)
    folds = stratified_folds(y_class, n_folds, seed)
    all_idx = np.arange(len(y))

    scores: dict[tuple[float, int], float] = {}
    for th in thresholds:
        for k in ks:
            maes = []
            for fold in folds:
                train = np.setdiff1d(all_idx, fold)
                try:
                    rw = relief_weights(X[train], y_class[train], k)
                except ValueError as exc:
                    logger.info("grid point (th=%g, k=%d) skipped: %s", th, k, exc)
                    maes = None
                    break
                sel = select_top(rw, th, n_max)
                if not sel:
                    logger.info("grid point (th=%g, k=%d): empty selection", th, k)
                    maes = None
                    break
                model = make_model()
                model.fit(X[np.ix_(train, sel)], y[train])
                pred = model.predict(X[np.ix_(fold, sel)])
                maes.append(float(np.mean(np.abs(pred - y[fold]))))
            scores[(th, k)] = float(np.mean(maes)) if maes else float("inf")

    best = min(scores, key=lambda p: (scores[p], thresholds.index(p[0]), ks.index(p[1])))
    if not np.isfinite(scores[best]):
        raise ValueError("no feasible grid point: every (threshold, k) pair failed")
    return best[0], best[1], scores
