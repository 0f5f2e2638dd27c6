import numpy as np
import pytest

from phqreg.corpus import LandmarkSequence, N_LANDMARKS
from phqreg.face import (
    GEOMETRIC_DIM,
    DegenerateFrameError,
    aggregate_predictions,
    downsample_indices,
    fit_pca,
    geometric_frames,
    geometric_vector,
    normalize_landmarks,
    window_sequence,
)


def random_cloud(rng, n=N_LANDMARKS):
    return rng.normal(0, 30.0, (n, 3))


class TestNormalize:
    def test_two_point_symmetry(self):
        pts = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        out = normalize_landmarks(pts)
        np.testing.assert_allclose(out, [[-1, 0, 0], [1, 0, 0]], atol=1e-15)

    def test_scale_invariance(self):
        rng = np.random.default_rng(0)
        pts = random_cloud(rng)
        np.testing.assert_allclose(normalize_landmarks(pts), normalize_landmarks(7.0 * pts), atol=1e-12)

    def test_random_cloud_invariants(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            out = normalize_landmarks(random_cloud(rng))
            assert np.linalg.norm(out.mean(axis=0)) < 1e-12
            assert abs(np.linalg.norm(out, axis=1).mean() - 1.0) < 1e-12

    def test_degenerate_frame(self):
        with pytest.raises(DegenerateFrameError):
            normalize_landmarks(np.ones((68, 3)))


class TestGeometricVector:
    def test_length_and_pair_count(self):
        rng = np.random.default_rng(2)
        vec = geometric_vector(normalize_landmarks(random_cloud(rng)))
        assert len(vec) == GEOMETRIC_DIM == 2482
        assert GEOMETRIC_DIM - 3 * 68 == 68 * 67 // 2 == 2278

    def test_distances_match_brute_force(self):
        rng = np.random.default_rng(3)
        pts = normalize_landmarks(random_cloud(rng))
        vec = geometric_vector(pts)
        dists = vec[204:]
        assert np.all(dists >= 0.0)
        k = 0
        for i in range(68):
            for j in range(i + 1, 68):
                want = float(np.sqrt(sum((pts[i][a] - pts[j][a]) ** 2 for a in range(3))))
                assert abs(dists[k] - want) < 1e-12
                k += 1

    def test_coordinate_layout(self):
        rng = np.random.default_rng(4)
        pts = normalize_landmarks(random_cloud(rng))
        vec = geometric_vector(pts)
        np.testing.assert_array_equal(vec[:68], pts[:, 0])
        np.testing.assert_array_equal(vec[68:136], pts[:, 1])
        np.testing.assert_array_equal(vec[136:204], pts[:, 2])

    def test_rigid_translation_and_scale_invariance(self):
        rng = np.random.default_rng(5)
        raw = random_cloud(rng)
        a = geometric_vector(normalize_landmarks(raw))
        b = geometric_vector(normalize_landmarks(3.5 * raw + np.array([10.0, -4.0, 2.0])))
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_rotation_not_invariant(self):
        rng = np.random.default_rng(6)
        raw = random_cloud(rng)
        th = 0.7
        rot = np.array([[np.cos(th), -np.sin(th), 0], [np.sin(th), np.cos(th), 0], [0, 0, 1]])
        a = geometric_vector(normalize_landmarks(raw))
        b = geometric_vector(normalize_landmarks(raw @ rot.T))
        # distances survive rotation, raw coordinates must not
        assert not np.allclose(a[:204], b[:204], atol=1e-6)
        np.testing.assert_allclose(a[204:], b[204:], atol=1e-9)

    def test_batch_matches_single_frame(self):
        rng = np.random.default_rng(7)
        pts = np.stack([random_cloud(rng) for _ in range(3)])
        seq = LandmarkSequence(np.arange(3.0), np.ones(3), np.ones(3, bool), pts)
        batch = geometric_frames(seq)
        for i in range(3):
            np.testing.assert_allclose(batch[i], geometric_vector(normalize_landmarks(pts[i])), atol=1e-12)


def pca_oracle_q(X, keep):
    """Independent eigen-solve via SVD of the centered matrix."""
    Xc = X - X.mean(axis=0)
    s = np.linalg.svd(Xc, compute_uv=False)
    lam = s**2 / (len(X) - 1)
    ratios = np.cumsum(lam) / lam.sum()
    return int(np.searchsorted(ratios, keep - 1e-12) + 1)


class TestPca:
    def test_exact_rank_recovery(self):
        rng = np.random.default_rng(8)
        basis = np.linalg.qr(rng.normal(size=(40, 3)))[0]  # (40, 3) orthonormal cols
        Z = rng.normal(size=(200, 3)) * np.array([3.0, 2.0, 1.5])
        X = Z @ basis.T
        pca = fit_pca(X, 0.995)
        assert pca.q == 3
        assert pca.explained_ratio >= 0.995

    def test_isotropic_needs_all_dims(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(500, 10))
        pca = fit_pca(X, 0.995)
        assert pca.q == 10
        assert pca.q == pca_oracle_q(X, 0.995)

    def test_components_orthonormal(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(50, 12)) * np.linspace(3, 0.1, 12)
        pca = fit_pca(X, 0.9)
        gram = pca.components @ pca.components.T
        np.testing.assert_allclose(gram, np.eye(pca.q), atol=1e-9)

    def test_gram_trick_path_matches_oracle(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(20, 100))  # rows < columns
        pca = fit_pca(X, 0.995)
        assert pca.q == pca_oracle_q(X, 0.995)
        gram = pca.components @ pca.components.T
        np.testing.assert_allclose(gram, np.eye(pca.q), atol=1e-9)

    def test_roundtrip_retains_variance(self):
        rng = np.random.default_rng(12)
        X = rng.normal(size=(80, 30)) * np.linspace(5, 0.01, 30)
        pca = fit_pca(X, 0.995)
        recon = pca.reconstruct(pca.transform(X))
        total = ((X - X.mean(axis=0)) ** 2).sum()
        resid = ((X - recon) ** 2).sum()
        assert 1.0 - resid / total >= 0.995

    def test_zero_variance_rejected(self):
        with pytest.raises(ValueError):
            fit_pca(np.ones((5, 4)))

    def test_too_few_rows(self):
        with pytest.raises(ValueError):
            fit_pca(np.ones((1, 4)))


def make_sequence(n_seconds, fps=1.0, fail_at=(), rng=None):
    rng = rng or np.random.default_rng(0)
    n = int(n_seconds * fps)
    ts = np.arange(n) / fps
    pts = rng.normal(0, 20, (1, N_LANDMARKS, 3)) + rng.normal(0, 1.0, (n, N_LANDMARKS, 3))
    success = np.ones(n, bool)
    for i in fail_at:
        success[i] = False
    return LandmarkSequence(ts, np.ones(n), success, pts)


def window_oracle(n_samples, success, W, O):
    """Enumerate window starts and apply the 0-tolerance rule directly."""
    starts = []
    s = 0
    while s + W <= n_samples:
        if all(success[s : s + W]):
            starts.append(s)
        s += O
    return starts


class TestWindows:
    def fitted_pca(self):
        rng = np.random.default_rng(13)
        seq = make_sequence(30, rng=rng)
        return fit_pca(geometric_frames(seq), 0.9)

    def test_120_clean_samples_three_windows(self):
        seq = make_sequence(120)
        pca = self.fitted_pca()
        batch = window_sequence(seq, pca, 60, 30)
        assert batch.starts == (0, 30, 60)
        assert batch.windows.shape == (3, 60, pca.q)

    def test_failure_at_45_discards_overlapping_windows(self):
        seq = make_sequence(120, fail_at=[45])
        batch = window_sequence(seq, self.fitted_pca(), 60, 30)
        assert batch.starts == (60,)

    def test_59_samples_no_windows(self):
        seq = make_sequence(59)
        batch = window_sequence(seq, self.fitted_pca(), 60, 30)
        assert len(batch.windows) == 0

    def test_matches_enumeration_oracle(self):
        rng = np.random.default_rng(14)
        pca = self.fitted_pca()
        for trial in range(10):
            n = int(rng.integers(50, 200))
            fails = rng.choice(n, size=rng.integers(0, 6), replace=False)
            seq = make_sequence(n, fail_at=fails, rng=np.random.default_rng(trial))
            batch = window_sequence(seq, pca, 60, 30)
            idx = downsample_indices(seq.timestamps)
            want = window_oracle(len(idx), seq.success[idx], 60, 30)
            assert list(batch.starts) == want

    def test_downsampling_picks_nearest_frame(self):
        ts = np.array([0.0, 0.4, 1.1, 1.9, 3.05])
        idx = downsample_indices(ts)
        # seconds 0,1,2,3 -> nearest frames
        assert idx.tolist() == [0, 2, 3, 4]

    def test_no_failed_samples_inside_windows(self):
        rng = np.random.default_rng(15)
        pca = self.fitted_pca()
        seq = make_sequence(150, fail_at=rng.choice(150, 10, replace=False))
        batch = window_sequence(seq, pca, 60, 30)
        idx = downsample_indices(seq.timestamps)
        for s in batch.starts:
            assert seq.success[idx[s : s + 60]].all()


class TestAggregate:
    def test_mean(self):
        assert aggregate_predictions([4.0, 6.0]) == 5.0

    def test_single(self):
        assert aggregate_predictions([3.3]) == 3.3

    def test_matches_brute_force(self):
        rng = np.random.default_rng(16)
        preds = rng.normal(0, 5, 100)
        want = sum(float(p) for p in preds) / 100.0
        assert aggregate_predictions(preds) == pytest.approx(want, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate_predictions([])
