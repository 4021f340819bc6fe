"""Metric MDS via SMACOF stress majorization, for 2-D maps of similarity grids."""

from dataclasses import dataclass, field

import numpy as np

from .accel import smacof_core
from .errors import DegenerateInputError


@dataclass
class EmbeddingSolution:
    points: np.ndarray = field(repr=False)
    stress: float = 0.0
    n_iters: int = 0
    converged: bool = False
    stress_history: np.ndarray = field(default=None, repr=False)


def similarity_to_dissimilarity(grid):
    """Convert similarities to dissimilarities as delta = 1 - s.

    Enforces a zero diagonal; asymmetric input is rejected (symmetrize
    first).
    """
    v = np.asarray(grid.values, dtype=np.float64)
    if np.isnan(v).any():
        raise ValueError("grid has absent entries; cannot embed")
    if not np.allclose(v, v.T, atol=1e-12):
        raise ValueError("grid is not symmetric; run symmetrize first")
    delta = 1.0 - v
    np.fill_diagonal(delta, 0.0)
    return delta


def stress_of(delta, points):
    """Raw stress: sum over i<j of (delta_ij - ||p_i - p_j||)^2."""
    diff = points[:, None, :] - points[None, :, :]
    d = np.sqrt((diff * diff).sum(axis=2))
    iu = np.triu_indices(len(delta), k=1)
    t = delta[iu] - d[iu]
    return float((t * t).sum())


def smacof(dissimilarities, dim=2, max_iters=300, tol=1e-6, seed=0, use_numba=None):
    """Embed a dissimilarity matrix by SMACOF majorization.

    Starts from a seeded uniform configuration in [-0.5, 0.5]^dim; stress
    is non-increasing across iterations and iteration stops when its
    relative decrease falls below ``tol``. Returned points are centered.
    """
    delta = np.asarray(dissimilarities, dtype=np.float64)
    n = delta.shape[0]
    if delta.shape != (n, n):
        raise ValueError("dissimilarities must be square")
    if not np.allclose(delta, delta.T, atol=1e-12):
        raise ValueError("dissimilarities must be symmetric")
    if (delta < 0).any():
        raise ValueError("dissimilarities must be non-negative")
    if np.abs(np.diag(delta)).max() > 0:
        raise ValueError("dissimilarities must have a zero diagonal")
    if not (delta > 0).any():
        raise DegenerateInputError("all-zero dissimilarities cannot be embedded")

    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-0.5, 0.5, size=(n, dim))
    x0 -= x0.mean(axis=0)
    points, history, n_iters, converged = smacof_core(
        delta, x0, max_iters, tol, use_numba=use_numba
    )
    points = points - points.mean(axis=0)
    return EmbeddingSolution(
        points=points,
        stress=float(history[-1]),
        n_iters=n_iters,
        converged=converged,
        stress_history=history,
    )


def export_points(solution, labels, path):
    """Write the embedding as CSV rows of (index, label, x, y, ...)."""
    pts = solution.points
    if len(labels) != len(pts):
        raise ValueError("labels and points disagree in length")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        dims = pts.shape[1]
        header = ",".join(["index", "label"] + [f"dim{k}" for k in range(dims)])
        fh.write(header + "\n")
        for i, (label, row) in enumerate(zip(labels, pts)):
            fh.write(",".join([str(i), str(label)] + [repr(float(v)) for v in row]) + "\n")


def load_points(path):
    """Read back a points CSV written by :func:`export_points`."""
    labels, rows = [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("index,label"):
            raise ValueError(f"{path}: not a points CSV")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            labels.append(cells[1])
            rows.append([float(c) for c in cells[2:]])
    return labels, np.asarray(rows)
