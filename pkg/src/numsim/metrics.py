"""Theoretical distances over integers and their digit representations.

Three distance families are supported: Levenshtein edit distance over the
digit strings of the integers in a chosen base, a log-linear numerical
distance ``1 - exp(-|log(x+eps) - log(y+eps)|)``, and a plain l1 distance
``|x - y|`` used as a control. A distance grid over an integer range can be
turned into a similarity grid with ``s = 1 - d / max(d)``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import accel, matrix
from .errors import DegenerateInputError

DIGIT_ALPHABET = "0123456789abcdefghijklmnopqrstuvwxyz"

LEVENSHTEIN = "levenshtein"
LOGLINEAR = "loglinear"
LINEAR_L1 = "linearl1"
DEFAULT_EPSILON = 1e-4


@dataclass(frozen=True)
class Numeral:
    """A non-negative integer together with its digit string in some base."""

    value: int
    base: int
    digits: str


@dataclass(frozen=True)
class DistanceKind:
    """Which distance to compute; epsilon only applies to the log-linear one."""

    tag: str
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.tag not in (LEVENSHTEIN, LOGLINEAR, LINEAR_L1):
            raise ValueError(f"unknown distance tag {self.tag!r}")
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass
class DistanceGrid:
    n_min: int
    n_max: int
    kind: DistanceKind
    base: int
    values: np.ndarray = field(repr=False)


def to_base(n, base):
    """Convert a non-negative integer to its digit string in ``base``.

    Digits are most-significant first with no leading zeros; zero is "0".
    """
    if not 2 <= base <= 36:
        raise ValueError(f"base must be in [2, 36], got {base}")
    if n < 0:
        raise ValueError(f"value must be non-negative, got {n}")
    if n == 0:
        return Numeral(0, base, "0")
    digits = []
    v = n
    while v > 0:
        v, r = divmod(v, base)
        digits.append(DIGIT_ALPHABET[r])
    return Numeral(n, base, "".join(reversed(digits)))


def decode_digits(digits, base):
    """Inverse of :func:`to_base`: digit string -> integer value."""
    if not 2 <= base <= 36:
        raise ValueError(f"base must be in [2, 36], got {base}")
    value = 0
    for ch in digits:
        d = DIGIT_ALPHABET.find(ch.lower())
        if d < 0 or d >= base:
            raise ValueError(f"invalid digit {ch!r} for base {base}")
        value = value * base + d
    return value


def levenshtein(a, b):
    """Minimum insertions + deletions + substitutions turning ``a`` into ``b``.

    Standard two-row dynamic programming, O(len(a) * len(b)).
    """
    if len(a) < len(b):
        a, b = b, a
    if len(b) == 0:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[-1]


def log_linear_distance(x, y, epsilon=DEFAULT_EPSILON):
    """Log-scale distance ``1 - exp(-|log(x+eps) - log(y+eps)|)`` in [0, 1)."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return 1.0 - math.exp(-abs(math.log(x + epsilon) - math.log(y + epsilon)))


def linear_distance(x, y):
    """Plain l1 distance ``|x - y|`` (control predictor)."""
    return abs(x - y)


def _encode_range(n_min, n_max, base):
    """Digit strings for [n_min, n_max] as a padded int32 code matrix."""
    numerals = [to_base(n, base).digits for n in range(n_min, n_max + 1)]
    maxlen = max(len(s) for s in numerals)
    codes = np.full((len(numerals), maxlen), -1, dtype=np.int32)
    lengths = np.empty(len(numerals), dtype=np.int32)
    for i, s in enumerate(numerals):
        lengths[i] = len(s)
        for j, ch in enumerate(s):
            codes[i, j] = DIGIT_ALPHABET.index(ch)
    return codes, lengths


def distance_grid(n_min, n_max, kind, base=10, use_numba=None):
    """Pairwise distance matrix over the integer range [n_min, n_max].

    Levenshtein operates on unpadded digit strings in ``base``; the
    log-linear and l1 distances ignore the base.
    """
    if n_min > n_max:
        raise ValueError(f"empty range [{n_min}, {n_max}]")
    if kind.tag == LEVENSHTEIN:
        codes, lengths = _encode_range(n_min, n_max, base)
        values = accel.levenshtein_matrix(codes, lengths, use_numba=use_numba).astype(np.float64)
    else:
        ns = np.arange(n_min, n_max + 1, dtype=np.float64)
        if kind.tag == LOGLINEAR:
            logs = np.log(ns + kind.epsilon)
            values = 1.0 - np.exp(-np.abs(logs[:, None] - logs[None, :]))
        else:
            values = np.abs(ns[:, None] - ns[None, :])
    return DistanceGrid(n_min=n_min, n_max=n_max, kind=kind, base=base, values=values)


def to_similarity(grid, meta=None):
    """Transform a distance grid into similarities ``s = 1 - d / max(d)``.

    The maximum is taken over the grid being transformed. A grid whose
    entries are all zero (only possible for a singleton) cannot be
    normalized and raises.
    """
    dmax = float(np.max(grid.values))
    if dmax <= 0.0:
        raise DegenerateInputError("all-zero distance grid cannot be normalized")
    values = 1.0 - grid.values / dmax
    if meta is None:
        meta = matrix.GridMeta(model_name=f"theory:{grid.kind.tag}", base=grid.base)
    return matrix.SimilarityGrid(n_min=grid.n_min, n_max=grid.n_max, values=values, meta=meta)
