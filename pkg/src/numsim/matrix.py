"""Similarity grid storage: symmetrization, z-scoring, and file I/O.

Grids are square float arrays over an integer range; absent entries are
NaN. The on-disk format is a small key=value header followed by CSV rows
(UTF-8, LF, '.' decimal separator, full-precision floats, absent entries
as empty fields).
"""

import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import DegenerateInputError, GridParseError, MissingDataError

log = logging.getLogger(__name__)

_FORMAT_LINE = "# numsim similarity grid v1"


@dataclass
class GridMeta:
    model_name: str = ""
    context: str = "basic"
    temperature: float = 0.0
    base: int = 10
    qualifier: str = "similar"
    created_at: str = ""

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if not self.created_at:
            self.created_at = datetime.now(timezone.utc).isoformat()


@dataclass
class SimilarityGrid:
    n_min: int
    n_max: int
    values: np.ndarray = field(repr=False)
    meta: GridMeta = field(default_factory=GridMeta)

    @property
    def size(self):
        return self.n_max - self.n_min + 1

    def present_mask(self):
        return ~np.isnan(self.values)


def symmetrize(raw, allow_missing=False):
    """Average the two presentation orders into a symmetric grid.

    Where only one order was rated, that single rating is kept (with a
    warning). Pairs with neither order present raise
    :class:`MissingDataError` unless ``allow_missing`` is set, in which
    case they stay NaN.
    """
    v = raw.values
    out = np.where(np.isnan(v.T), v, np.where(np.isnan(v), v.T, (v + v.T) / 2.0))
    missing = np.isnan(v) & np.isnan(v.T)
    single = np.isnan(v) ^ np.isnan(v.T)
    if missing.any() and not allow_missing:
        iu = np.triu_indices(len(v))
        pairs = [
            (int(i) + raw.n_min, int(j) + raw.n_min)
            for i, j in zip(*iu)
            if missing[i, j]
        ]
        raise MissingDataError(
            f"{len(pairs)} pair(s) have neither presentation order rated", pairs=pairs
        )
    if single.any():
        log.warning(
            "%d pair(s) rated in a single order only; using that rating",
            int(single.sum()) // 2,
        )
    return SimilarityGrid(n_min=raw.n_min, n_max=raw.n_max, values=out, meta=raw.meta)


def zscore(values):
    """Standardize to mean 0 and sample (n-1) standard deviation 1."""
    x = np.asarray(values, dtype=np.float64)
    if x.size < 2:
        raise DegenerateInputError("need at least two values to z-score")
    sd = x.std(ddof=1)
    if sd == 0.0:
        raise DegenerateInputError("zero variance input cannot be z-scored")
    return (x - x.mean()) / sd


def _fmt(x):
    return "" if np.isnan(x) else repr(float(x))


def save_grid(grid, path):
    n = grid.size
    m = grid.meta
    lines = [
        _FORMAT_LINE,
        f"n_min={grid.n_min}",
        f"n_max={grid.n_max}",
        f"model_name={m.model_name}",
        f"context={m.context}",
        f"temperature={m.temperature!r}",
        f"base={m.base}",
        f"qualifier={m.qualifier}",
        f"created_at={m.created_at}",
        "---",
    ]
    for i in range(n):
        lines.append(",".join(_fmt(x) for x in grid.values[i]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_grid(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if not lines or lines[0] != _FORMAT_LINE:
        raise GridParseError("missing format line", line=1)
    header = {}
    row_start = None
    for idx, line in enumerate(lines[1:], start=2):
        if line == "---":
            row_start = idx
            break
        if "=" not in line:
            raise GridParseError(f"expected key=value, got {line!r}", line=idx)
        key, _, value = line.partition("=")
        header[key] = value
    if row_start is None:
        raise GridParseError("missing '---' separator", line=len(lines))
    try:
        n_min = int(header["n_min"])
        n_max = int(header["n_max"])
        meta = GridMeta(
            model_name=header.get("model_name", ""),
            context=header.get("context", "basic"),
            temperature=float(header.get("temperature", "0.0")),
            base=int(header.get("base", "10")),
            qualifier=header.get("qualifier", "similar"),
            created_at=header.get("created_at", "?"),
        )
    except (KeyError, ValueError) as exc:
        raise GridParseError(f"bad header: {exc}", line=row_start) from exc

    n = n_max - n_min + 1
    values = np.full((n, n), np.nan)
    for i in range(n):
        lineno = row_start + 1 + i
        if lineno > len(lines) or row_start + i >= len(lines):
            raise GridParseError("truncated: missing rows", line=len(lines))
        row = lines[row_start + i]
        cells = row.split(",")
        if len(cells) != n:
            raise GridParseError(
                f"expected {n} cells, got {len(cells)}", line=lineno
            )
        for j, cell in enumerate(cells):
            if cell == "":
                continue
            try:
                values[i, j] = float(cell)
            except ValueError as exc:
                raise GridParseError(f"bad float {cell!r}", line=lineno) from exc
    return SimilarityGrid(n_min=n_min, n_max=n_max, values=values, meta=meta)
