"""Facial-landmark geometry pipeline.

Per frame: remove the 3D bias (subtract the centroid), rescale so the mean
distance of the 68 points to the origin is 1, then stack the 204 normalized
coordinates with all C(68,2) = 2278 pairwise Euclidean distances into a
2482-dim geometric vector. PCA (fitted on training frames, keeping >= 99.5%
of variance) reduces the dimension; sequences are downsampled to 1 Hz and cut
into sliding windows of W samples overlapped by O, discarding any window that
contains a failed-tracking frame (0-tolerance).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import LandmarkSequence, N_LANDMARKS

GEOMETRIC_DIM = 3 * N_LANDMARKS + (N_LANDMARKS * (N_LANDMARKS - 1)) // 2  # 2482
DEFAULT_WINDOW = 60
DEFAULT_OVERLAP = 30
DEFAULT_VARIANCE_KEEP = 0.995


class DegenerateFrameError(ValueError):
    pass


def normalize_landmarks(points: np.ndarray) -> np.ndarray:
    """Center the cloud and scale it so the mean point norm is 1."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"expected (n, 3) points, got {pts.shape}")
    centered = pts - pts.mean(axis=0)
    scale = np.linalg.norm(centered, axis=1).mean()
    if scale == 0.0:
        raise DegenerateFrameError("all landmarks identical; cannot normalize")
    return centered / scale


def geometric_vector(normalized: np.ndarray) -> np.ndarray:
    """204 normalized coordinates (all x, all y, all z) + 2278 pairwise distances."""
    pts = np.asarray(normalized, dtype=np.float64)
    coords = pts.T.reshape(-1)
    iu, ju = np.triu_indices(len(pts), k=1)
    dists = np.linalg.norm(pts[iu] - pts[ju], axis=1)
    return np.concatenate([coords, dists])


def geometric_frames(seq: LandmarkSequence) -> np.ndarray:
    """Geometric vectors for every frame of a sequence, shape (n, 2482)."""
    pts = seq.points
    centered = pts - pts.mean(axis=1, keepdims=True)
    scale = np.linalg.norm(centered, axis=2).mean(axis=1)
    if np.any(scale == 0.0):
        raise DegenerateFrameError("sequence contains a frame with all landmarks identical")
    normed = centered / scale[:, None, None]
    iu, ju = np.triu_indices(pts.shape[1], k=1)
    dists = np.linalg.norm(normed[:, iu, :] - normed[:, ju, :], axis=2)
    coords = normed.transpose(0, 2, 1).reshape(len(pts), -1)
    return np.concatenate([coords, dists], axis=1)


@dataclass(frozen=True)
class PcaProjection:
    """Mean vector + orthonormal component rows retaining >= variance_keep."""

    mean: np.ndarray
    components: np.ndarray  # (q, d)
    explained_ratio: float  # cumulative ratio at q
    eigenvalues: np.ndarray  # all eigenvalues, descending

    @property
    def q(self) -> int:
        return self.components.shape[0]

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) @ self.components.T

    def reconstruct(self, Z: np.ndarray) -> np.ndarray:
        return Z @ self.components + self.mean


def fit_pca(X: np.ndarray, variance_keep: float = DEFAULT_VARIANCE_KEEP) -> PcaProjection:
    """PCA by eigen-decomposition, keeping the smallest q with cumulative
    explained variance >= variance_keep.

    Uses the Gram trick when there are fewer rows than columns. Covariance is
    1/(n-1)-normalized.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or len(X) < 2:
        raise ValueError("need a 2-d matrix with at least 2 rows")
    if not 0.0 < variance_keep <= 1.0:
        raise ValueError("variance_keep must be in (0, 1]")
    n, d = X.shape
    mean = X.mean(axis=0)
    Xc = X - mean

    if n < d:
        gram = (Xc @ Xc.T) / (n - 1)
        evals, evecs = np.linalg.eigh(gram)
        order = np.argsort(evals)[::-1]
        evals, evecs = evals[order], evecs[:, order]
        keep = evals > max(evals.max(), 0.0) * 1e-12
        comps = (Xc.T @ evecs[:, keep]).T
        norms = np.linalg.norm(comps, axis=1)
        comps = comps / norms[:, None]
        evals = evals[keep]
    else:
        cov = (Xc.T @ Xc) / (n - 1)
        evals, evecs = np.linalg.eigh(cov)
        order = np.argsort(evals)[::-1]
        evals, comps = evals[order], evecs[:, order].T

    evals = np.clip(evals, 0.0, None)
    total = evals.sum()
    if total == 0.0:
        raise ValueError("zero-variance matrix; PCA undefined")
    ratios = np.cumsum(evals) / total
    q = int(np.searchsorted(ratios, variance_keep - 1e-12) + 1)
    q = min(q, len(evals))
    return PcaProjection(mean, comps[:q], float(ratios[q - 1]), evals)


@dataclass(frozen=True)
class WindowBatch:
    """PCA-projected sliding windows of one session, all tracking-clean."""

    windows: np.ndarray  # (n_windows, W, q)
    label: int | None
    session_id: str
    starts: tuple[int, ...] = ()  # window starts in downsampled-sample units


def downsample_indices(timestamps: np.ndarray) -> np.ndarray:
    """Index of the frame nearest each integer second covered by the sequence."""
    ts = np.asarray(timestamps, dtype=np.float64)
    if len(ts) == 0:
        return np.array([], dtype=int)
    seconds = np.arange(np.ceil(ts[0]), np.floor(ts[-1]) + 1.0)
    idx = np.searchsorted(ts, seconds)
    out = []
    for s, i in zip(seconds, idx):
        lo = max(i - 1, 0)
        hi = min(i, len(ts) - 1)
        # ties go to the earlier frame
        out.append(lo if abs(ts[lo] - s) <= abs(ts[hi] - s) else hi)
    return np.array(out, dtype=int)


def window_sequence(
    seq: LandmarkSequence,
    pca: PcaProjection,
    window: int = DEFAULT_WINDOW,
    overlap: int = DEFAULT_OVERLAP,
    label: int | None = None,
    session_id: str = "",
) -> WindowBatch:
    """1 Hz downsampling + sliding windows with the 0-tolerance success filter.

    Windows start every ``overlap`` samples; any window containing a sample
    whose source frame has success=False is discarded. An empty batch is a
    valid output.
    """
    if window < 1 or overlap < 1:
        raise ValueError("window and overlap must be positive")
    idx = downsample_indices(seq.timestamps)
    q = pca.q
    if len(idx) < window:
        return WindowBatch(np.zeros((0, window, q)), label, session_id)

    ok = seq.success[idx]
    feats = None  # projected lazily, only if some window survives
    kept, starts = [], []
    for start in range(0, len(idx) - window + 1, overlap):
        if not ok[start : start + window].all():
            continue
        if feats is None:
            feats = pca.transform(geometric_frames(seq))[idx]
        kept.append(feats[start : start + window])
        starts.append(start)
    if not kept:
        return WindowBatch(np.zeros((0, window, q)), label, session_id)
    return WindowBatch(np.array(kept), label, session_id, tuple(starts))


def aggregate_predictions(predictions) -> float:
    """Session score = arithmetic mean of its window-level predictions."""
    preds = np.asarray(predictions, dtype=np.float64)
    if preds.size == 0:
        raise ValueError("no window predictions to aggregate")
    return float(preds.mean())
