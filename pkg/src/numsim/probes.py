"""Affine probes from residual-stream vectors to string/number distances.

A probe is a single affine layer w . h + b trained with Adam under mean
squared error to predict a distance (Levenshtein or log-linear) between
the two integers a prompt mentioned. Residual datasets arrive in the NSRD
binary format written by the extractor.
"""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .errors import (
    DegenerateInputError,
    InsufficientDataError,
    ResidualFormatError,
    TrainingDivergedError,
)

NSRD_MAGIC = b"NSRD"
NSRD_VERSION = 1
_HEADER = struct.Struct("<4sHIQ")  # magic, version u16, dim u32, count u64


@dataclass
class ResidualDataset:
    pairs: np.ndarray = field(repr=False)  # (n, 2) int64, ordered as presented
    vectors: np.ndarray = field(repr=False)  # (n, dim) float32
    model_name: str = ""
    layer: int = 0

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __len__(self):
        return self.pairs.shape[0]


@dataclass
class ProbeModel:
    weights: np.ndarray = field(repr=False)
    bias: float
    target_kind: metrics.DistanceKind
    layer: int = 0
    provenance: dict = field(default_factory=dict)


@dataclass
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 1e-3
    batch_size: int = 256
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def save_residuals(dataset, path):
    """Write a dataset in the NSRD binary format (little-endian)."""
    pairs = np.ascontiguousarray(dataset.pairs, dtype=np.uint32)
    vectors = np.ascontiguousarray(dataset.vectors, dtype=np.float32)
    n, dim = vectors.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(NSRD_MAGIC, NSRD_VERSION, dim, n))
        for k in range(n):
            fh.write(struct.pack("<II", int(pairs[k, 0]), int(pairs[k, 1])))
            fh.write(vectors[k].tobytes())


def load_residuals(path, model_name="", layer=0):
    """Read an NSRD file, validating magic, version, sizes and pair uniqueness."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ResidualFormatError("file shorter than header")
    magic, version, dim, count = _HEADER.unpack_from(raw, 0)
    if magic != NSRD_MAGIC:
        raise ResidualFormatError(f"bad magic {magic!r}")
    if version != NSRD_VERSION:
        raise ResidualFormatError(f"unsupported version {version}")
    rec_size = 8 + 4 * dim
    expected = _HEADER.size + count * rec_size
    if len(raw) != expected:
        got_records = (len(raw) - _HEADER.size) // rec_size
        raise ResidualFormatError(
            f"truncated payload at record {got_records}: expected {expected} bytes, got {len(raw)}"
        )
    body = np.frombuffer(raw, dtype=np.uint8, offset=_HEADER.size).reshape(count, rec_size)
    pairs = body[:, :8].copy().view(np.uint32).reshape(count, 2).astype(np.int64)
    vectors = body[:, 8:].copy().view(np.float32).reshape(count, dim)
    seen = set()
    for k in range(count):
        key = (int(pairs[k, 0]), int(pairs[k, 1]))
        if key in seen:
            raise ResidualFormatError(f"duplicate pair {key} at record {k}")
        seen.add(key)
    return ResidualDataset(pairs=pairs, vectors=vectors, model_name=model_name, layer=layer)


def distance_targets(pairs, kind, base=10):
    """Ground-truth distances for (a, b) pairs under the given distance kind."""
    pairs = np.asarray(pairs)
    if kind.tag == metrics.LEVENSHTEIN:
        return np.array(
            [
                metrics.levenshtein(
                    metrics.to_base(int(a), base).digits, metrics.to_base(int(b), base).digits
                )
                for a, b in pairs
            ],
            dtype=np.float64,
        )
    if kind.tag == metrics.LOGLINEAR:
        a = pairs[:, 0].astype(np.float64)
        b = pairs[:, 1].astype(np.float64)
        return 1.0 - np.exp(
            -np.abs(np.log(a + kind.epsilon) - np.log(b + kind.epsilon))
        )
    return np.abs(pairs[:, 0] - pairs[:, 1]).astype(np.float64)


def train_probe(dataset, target_kind, config=None, base=10):
    """Fit the affine probe with Adam under MSE.

    Runs epochs * ceil(n / batch_size) steps with a fresh per-epoch
    shuffle drawn from the seed; identical seeds give identical weights.
    """
    if config is None:
        config = TrainConfig()
    if len(dataset) == 0:
        raise InsufficientDataError("empty residual dataset")
    x = dataset.vectors.astype(np.float64)
    y = distance_targets(dataset.pairs, target_kind, base=base)
    n, dim = x.shape

    rng = np.random.default_rng(config.seed)
    w = np.zeros(dim)
    b = 0.0
    m_w = np.zeros(dim)
    v_w = np.zeros(dim)
    m_b = v_b = 0.0
    beta1, beta2, eps = config.adam_beta1, config.adam_beta2, config.adam_eps
    lr = config.learning_rate
    step = 0
    for _epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb, yb = x[idx], y[idx]
            err = xb @ w + b - yb
            loss = float(np.mean(err * err))
            if not np.isfinite(loss):
                raise TrainingDivergedError(step, loss)
            g_w = 2.0 * (xb.T @ err) / len(idx)
            g_b = 2.0 * float(err.mean())
            step += 1
            m_w = beta1 * m_w + (1 - beta1) * g_w
            v_w = beta2 * v_w + (1 - beta2) * g_w * g_w
            m_b = beta1 * m_b + (1 - beta1) * g_b
            v_b = beta2 * v_b + (1 - beta2) * g_b * g_b
            mhat_w = m_w / (1 - beta1**step)
            vhat_w = v_w / (1 - beta2**step)
            mhat_b = m_b / (1 - beta1**step)
            vhat_b = v_b / (1 - beta2**step)
            w -= lr * mhat_w / (np.sqrt(vhat_w) + eps)
            b -= lr * mhat_b / (np.sqrt(vhat_b) + eps)

    provenance = {
        "epochs": config.epochs,
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "seed": config.seed,
        "n_train": n,
        "base": base,
    }
    return ProbeModel(
        weights=w, bias=float(b), target_kind=target_kind, layer=dataset.layer,
        provenance=provenance,
    )


def predict(probe, vectors):
    return np.asarray(vectors, dtype=np.float64) @ probe.weights + probe.bias


def evaluate_probe(probe, residuals, n_min=0, n_max=499, base=10):
    """Decode the probe on the full ordered grid of an evaluation range.

    Requires a residual vector for every ordered pair (a, b) in
    [n_min, n_max]^2. Returns (correlations, prediction_grid) where
    ``correlations`` maps each distance kind to the Pearson r between the
    probe's predictions and that ground truth.
    """
    n = n_max - n_min + 1
    index = {}
    for k, (a, b) in enumerate(residuals.pairs):
        index[(int(a), int(b))] = k
    missing = 0
    rows = np.empty(n * n, dtype=np.int64)
    pos = 0
    for a in range(n_min, n_max + 1):
        for b in range(n_min, n_max + 1):
            k = index.get((a, b))
            if k is None:
                missing += 1
            else:
                rows[pos] = k
            pos += 1
    if missing:
        raise InsufficientDataError(f"{missing} ordered pair(s) missing from residuals")

    preds = predict(probe, residuals.vectors[rows])
    grid = preds.reshape(n, n)
    if np.std(preds) == 0.0:
        raise DegenerateInputError("constant predictions; correlation undefined")

    correlations = {}
    for tag in (metrics.LEVENSHTEIN, metrics.LOGLINEAR):
        kind = metrics.DistanceKind(tag)
        truth = metrics.distance_grid(n_min, n_max, kind, base).values.ravel()
        correlations[tag] = float(np.corrcoef(preds, truth)[0, 1])
    return correlations, grid


def decoded_similarity(prediction_grid, meta=None):
    """Turn predicted distances into a similarity grid, s = 1 - d / max(d).

    Negative predictions are clamped to zero before the transform.
    """
    from . import matrix

    d = np.maximum(np.asarray(prediction_grid, dtype=np.float64), 0.0)
    dmax = float(d.max())
    if dmax <= 0.0 or np.ptp(d) == 0.0:
        raise DegenerateInputError("all-equal predictions cannot be normalized")
    values = 1.0 - d / dmax
    if meta is None:
        meta = matrix.GridMeta(model_name="probe")
    return matrix.SimilarityGrid(n_min=0, n_max=len(d) - 1, values=values, meta=meta)


def layer_sweep(datasets, target_kind, config=None, train_count=9500, test_count=500, base=10):
    """Train one probe per layer and report held-out correlations.

    ``datasets`` maps layer -> ResidualDataset. Each dataset is split
    (seeded) into up to ``train_count`` training and ``test_count`` test
    records. Returns rows of (layer, train_size, test_r); layer selection
    is left to the caller.
    """
    if not datasets:
        raise InsufficientDataError("no layer datasets given")
    if config is None:
        config = TrainConfig()
    rows = []
    for layer in sorted(datasets):
        ds = datasets[layer]
        n = len(ds)
        rng = np.random.default_rng(config.seed)
        order = rng.permutation(n)
        n_test = min(test_count, max(1, n // 10))
        test_idx = order[:n_test]
        train_idx = order[n_test : n_test + train_count]
        train_ds = ResidualDataset(
            pairs=ds.pairs[train_idx], vectors=ds.vectors[train_idx],
            model_name=ds.model_name, layer=layer,
        )
        probe = train_probe(train_ds, target_kind, config, base=base)
        preds = predict(probe, ds.vectors[test_idx])
        truth = distance_targets(ds.pairs[test_idx], target_kind, base=base)
        if np.std(preds) == 0.0 or np.std(truth) == 0.0:
            r = float("nan")
        else:
            r = float(np.corrcoef(preds, truth)[0, 1])
        rows.append((layer, len(train_idx), r))
    return rows


def save_probe(probe, path):
    obj = {
        "weights": [float(v) for v in probe.weights],
        "bias": probe.bias,
        "target_kind": probe.target_kind.tag,
        "epsilon": probe.target_kind.epsilon,
        "layer": probe.layer,
        "provenance": probe.provenance,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1)


def load_probe(path):
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    return ProbeModel(
        weights=np.asarray(obj["weights"], dtype=np.float64),
        bias=float(obj["bias"]),
        target_kind=metrics.DistanceKind(obj["target_kind"], obj.get("epsilon", 1e-4)),
        layer=int(obj.get("layer", 0)),
        provenance=obj.get("provenance", {}),
    )
