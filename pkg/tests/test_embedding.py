import numpy as np
import pytest

from numsim import metrics
from numsim.accel import NUMBA_ENABLED
from numsim.embedding import (
    EmbeddingSolution,
    export_points,
    load_points,
    similarity_to_dissimilarity,
    smacof,
    stress_of,
)
from numsim.errors import DegenerateInputError
from numsim.matrix import GridMeta, SimilarityGrid


def unit_square_delta():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


def random_delta(rng, n):
    pts = rng.normal(size=(n, 3))
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diff * diff).sum(axis=2))


class TestSimilarityToDissimilarity:
    def _grid(self, v):
        v = np.asarray(v, dtype=np.float64)
        return SimilarityGrid(n_min=0, n_max=len(v) - 1, values=v, meta=GridMeta())

    def test_basic(self):
        g = self._grid([[1.0, 0.25], [0.25, 1.0]])
        delta = similarity_to_dissimilarity(g)
        assert delta.tolist() == [[0.0, 0.75], [0.75, 0.0]]

    def test_diagonal_forced_zero(self):
        g = self._grid([[0.9, 0.5], [0.5, 0.9]])
        delta = similarity_to_dissimilarity(g)
        assert np.diag(delta).tolist() == [0.0, 0.0]

    def test_asymmetric_rejected(self):
        g = self._grid([[1.0, 0.2], [0.3, 1.0]])
        with pytest.raises(ValueError):
            similarity_to_dissimilarity(g)

    def test_absent_rejected(self):
        g = self._grid([[1.0, np.nan], [np.nan, 1.0]])
        with pytest.raises(ValueError):
            similarity_to_dissimilarity(g)


class TestSmacof:
    def test_two_points_unit_distance(self):
        delta = np.array([[0.0, 1.0], [1.0, 0.0]])
        sol = smacof(delta, seed=0)
        assert sol.converged
        d = np.linalg.norm(sol.points[0] - sol.points[1])
        assert d == pytest.approx(1.0, abs=1e-6)

    def test_unit_square_recovered(self):
        delta = unit_square_delta()
        sol = smacof(delta, seed=1, max_iters=500, tol=1e-12)
        assert sol.stress < 1e-6
        diff = sol.points[:, None, :] - sol.points[None, :, :]
        d = np.sqrt((diff * diff).sum(axis=2))
        assert np.allclose(d, delta, atol=1e-3)

    def test_stress_monotone_nonincreasing(self):
        rng = np.random.default_rng(2)
        for trial in range(5):
            delta = random_delta(rng, 12)
            sol = smacof(delta, seed=trial, max_iters=100)
            assert (np.diff(sol.stress_history) <= 1e-12).all()

    def test_stress_history_matches_stress_of(self):
        delta = unit_square_delta()
        sol = smacof(delta, seed=1)
        assert stress_of(delta, sol.points) == pytest.approx(sol.stress, abs=1e-9)

    def test_deterministic(self):
        delta = unit_square_delta()
        a = smacof(delta, seed=3)
        b = smacof(delta, seed=3)
        assert np.array_equal(a.points, b.points)
        assert a.n_iters == b.n_iters

    def test_points_centered(self):
        delta = unit_square_delta()
        sol = smacof(delta, seed=1)
        assert np.abs(sol.points.mean(axis=0)).max() < 1e-12

    def test_stress_rotation_invariant(self):
        delta = unit_square_delta()
        sol = smacof(delta, seed=1)
        theta = 0.7
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        assert stress_of(delta, sol.points @ rot) == pytest.approx(sol.stress, abs=1e-9)

    def test_all_zero_rejected(self):
        with pytest.raises(DegenerateInputError):
            smacof(np.zeros((4, 4)))

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            smacof(np.zeros((2, 3)))
        bad = unit_square_delta()
        bad[0, 1] += 0.5
        with pytest.raises(ValueError):
            smacof(bad)
        neg = unit_square_delta()
        neg[0, 1] = neg[1, 0] = -0.2
        with pytest.raises(ValueError):
            smacof(neg)
        diag = unit_square_delta()
        np.fill_diagonal(diag, 1.0)
        with pytest.raises(ValueError):
            smacof(diag)

    @pytest.mark.skipif(not NUMBA_ENABLED, reason="numba disabled")
    def test_numba_and_numpy_paths_agree(self):
        rng = np.random.default_rng(4)
        delta = random_delta(rng, 15)
        a = smacof(delta, seed=0, use_numba=True)
        b = smacof(delta, seed=0, use_numba=False)
        assert np.allclose(a.points, b.points, atol=1e-12)
        assert a.n_iters == b.n_iters

    def test_loglinear_grid_embeds_to_low_stress(self):
        g = metrics.to_similarity(
            metrics.distance_grid(0, 20, metrics.DistanceKind(metrics.LOGLINEAR))
        )
        delta = similarity_to_dissimilarity(g)
        sol = smacof(delta, seed=1, max_iters=500)
        norm = sol.stress / (delta[np.triu_indices(21, 1)] ** 2).sum()
        assert norm < 0.05  # near 1-D structure embeds well in 2-D


class TestPointsIO:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        sol = EmbeddingSolution(points=rng.normal(size=(6, 2)))
        path = tmp_path / "pts.csv"
        export_points(sol, [str(k) for k in range(6)], path)
        labels, pts = load_points(path)
        assert labels == [str(k) for k in range(6)]
        assert np.array_equal(pts, sol.points)

    def test_label_length_mismatch(self, tmp_path):
        sol = EmbeddingSolution(points=np.zeros((3, 2)))
        with pytest.raises(ValueError):
            export_points(sol, ["a", "b"], tmp_path / "x.csv")

    def test_bad_header(self, tmp_path):
        (tmp_path / "bad.csv").write_text("nope\n")
        with pytest.raises(ValueError):
            load_points(tmp_path / "bad.csv")
