import itertools
from functools import lru_cache

import numpy as np
import pytest

from numsim import metrics
from numsim.errors import DegenerateInputError
from numsim.metrics import (
    DistanceKind,
    LEVENSHTEIN,
    LINEAR_L1,
    LOGLINEAR,
    decode_digits,
    distance_grid,
    levenshtein,
    linear_distance,
    log_linear_distance,
    to_base,
    to_similarity,
)


@lru_cache(maxsize=None)
def lev_recursive(a, b):
    """Independent oracle: the textbook recursive definition."""
    if len(b) == 0:
        return len(a)
    if len(a) == 0:
        return len(b)
    if a[0] == b[0]:
        return lev_recursive(a[1:], b[1:])
    return 1 + min(
        lev_recursive(a[1:], b),
        lev_recursive(a, b[1:]),
        lev_recursive(a[1:], b[1:]),
    )


def div_digits(n, base):
    """Independent oracle: repeated division by the base."""
    if n == 0:
        return "0"
    out = ""
    while n:
        out = "0123456789abcdefghijklmnopqrstuvwxyz"[n % base] + out
        n //= base
    return out


class TestToBase:
    def test_zero(self):
        assert to_base(0, 4).digits == "0"

    def test_999_base4(self):
        assert to_base(999, 4).digits == "33213"
        assert to_base(999, 4).digits == div_digits(999, 4)

    def test_identity_base(self):
        assert to_base(999, 10).digits == "999"

    def test_base_out_of_range(self):
        with pytest.raises(ValueError):
            to_base(5, 1)
        with pytest.raises(ValueError):
            to_base(5, 37)

    def test_negative(self):
        with pytest.raises(ValueError):
            to_base(-1, 10)

    @pytest.mark.parametrize("base", [2, 4, 8, 10, 16])
    def test_round_trip(self, base):
        for n in range(0, 10000):
            numeral = to_base(n, base)
            assert decode_digits(numeral.digits, base) == n
            assert numeral.digits == div_digits(n, base)
            if n > 0:
                assert not numeral.digits.startswith("0")

    def test_decode_rejects_bad_digit(self):
        with pytest.raises(ValueError):
            decode_digits("44", 4)


class TestLevenshtein:
    def test_single_substitution(self):
        assert levenshtein("200", "100") == 1

    def test_identity(self):
        assert levenshtein("abc", "abc") == 0

    def test_kitten(self):
        assert levenshtein("kitten", "sitting") == 3
        assert lev_recursive("kitten", "sitting") == 3

    def test_empty(self):
        assert levenshtein("", "") == 0
        assert levenshtein("", "abc") == 3
        assert levenshtein("abc", "") == 3

    def test_matches_recursion_short_strings(self):
        # exhaustive up to length 3 over a base-4 alphabet; the full
        # length-4 sweep lives in the acceptance suite
        alphabet = "0123"
        strings = [
            "".join(t)
            for length in range(4)
            for t in itertools.product(alphabet, repeat=length)
        ]
        for a in strings:
            for b in strings:
                assert levenshtein(a, b) == lev_recursive(a, b)

    def test_symmetry_and_triangle(self):
        rng = np.random.default_rng(3)
        words = [
            "".join(rng.choice(list("0123456789"), size=rng.integers(0, 6)))
            for _ in range(30)
        ]
        for a in words:
            for b in words:
                assert levenshtein(a, b) == levenshtein(b, a)
        for a, b, c in zip(words[:10], words[10:20], words[20:30]):
            assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


class TestLogLinear:
    def test_identity(self):
        assert log_linear_distance(7, 7, 1e-4) == 0.0

    def test_one_ten(self):
        # frozen from a 50-digit mpmath evaluation of the formula
        assert log_linear_distance(1, 10, 1e-4) == pytest.approx(
            0.8999910000899991, abs=1e-12
        )

    def test_zero_999(self):
        assert log_linear_distance(0, 999, 1e-4) == pytest.approx(
            0.9999998998999099, abs=1e-12
        )

    def test_bad_epsilon(self):
        with pytest.raises(ValueError):
            log_linear_distance(1, 2, 0.0)
        with pytest.raises(ValueError):
            log_linear_distance(1, 2, -1e-4)

    def test_symmetric_and_bounded_over_range(self):
        g = distance_grid(0, 999, DistanceKind(LOGLINEAR)).values
        assert np.array_equal(g, g.T)
        assert (g >= 0).all() and (g < 1).all()
        assert np.diag(g).max() == 0.0


class TestLinearDistance:
    def test_examples(self):
        assert linear_distance(331, 231) == 100
        assert linear_distance(5, 5) == 0
        assert linear_distance(0, 999) == 999


class TestDistanceGrid:
    def test_lev_0_2(self):
        g = distance_grid(0, 2, DistanceKind(LEVENSHTEIN), 10)
        assert g.values.tolist() == [[0, 1, 1], [1, 0, 1], [1, 1, 0]]

    def test_singleton_loglinear(self):
        g = distance_grid(0, 0, DistanceKind(LOGLINEAR), 10)
        assert g.values.tolist() == [[0.0]]

    def test_base4_spot_value(self):
        g = distance_grid(0, 999, DistanceKind(LEVENSHTEIN), 4)
        assert to_base(999, 4).digits == "33213"
        assert to_base(998, 4).digits == "33212"
        assert g.values[999, 998] == 1

    def test_empty_range(self):
        with pytest.raises(ValueError):
            distance_grid(3, 2, DistanceKind(LEVENSHTEIN))

    def test_grid_invariants(self):
        for tag in (LEVENSHTEIN, LOGLINEAR, LINEAR_L1):
            g = distance_grid(0, 80, DistanceKind(tag), 10)
            assert np.array_equal(g.values, g.values.T)
            assert np.diag(g.values).max() == 0.0
            assert (g.values >= 0).all()

    def test_lev_entries_bounded_by_length(self):
        g = distance_grid(0, 999, DistanceKind(LEVENSHTEIN), 10)
        assert g.values.max() <= 3
        assert np.array_equal(g.values, g.values.astype(int))

    def test_numba_and_numpy_paths_agree(self):
        from numsim.accel import NUMBA_ENABLED

        if not NUMBA_ENABLED:
            pytest.skip("numba disabled")
        for base in (4, 10):
            a = distance_grid(0, 200, DistanceKind(LEVENSHTEIN), base, use_numba=True)
            b = distance_grid(0, 200, DistanceKind(LEVENSHTEIN), base, use_numba=False)
            assert np.array_equal(a.values, b.values)

    def test_kernel_matches_scalar_dp(self):
        g = distance_grid(37, 143, DistanceKind(LEVENSHTEIN), 8)
        for a in (37, 64, 99, 143):
            for b in (37, 80, 143):
                expected = levenshtein(to_base(a, 8).digits, to_base(b, 8).digits)
                assert g.values[a - 37, b - 37] == expected


class TestToSimilarity:
    def test_max_maps_to_zero_and_diag_to_one(self):
        g = distance_grid(0, 99, DistanceKind(LEVENSHTEIN), 10)
        s = to_similarity(g)
        assert s.values[g.values == g.values.max()].max() == 0.0
        assert np.allclose(np.diag(s.values), 1.0)

    def test_pair_200_100(self):
        g = distance_grid(0, 999, DistanceKind(LEVENSHTEIN), 10)
        s = to_similarity(g)
        assert s.values[200, 100] == pytest.approx(2 / 3)

    def test_ranking_preserved(self):
        g = distance_grid(0, 60, DistanceKind(LOGLINEAR), 10)
        s = to_similarity(g)
        d = g.values.ravel()
        v = s.values.ravel()
        order = np.argsort(d)
        assert (np.diff(v[order]) <= 1e-15).all()

    def test_degenerate_singleton(self):
        g = distance_grid(5, 5, DistanceKind(LOGLINEAR), 10)
        with pytest.raises(DegenerateInputError):
            to_similarity(g)

    def test_values_in_unit_interval(self):
        g = distance_grid(0, 99, DistanceKind(LINEAR_L1), 10)
        s = to_similarity(g)
        assert (s.values >= 0).all() and (s.values <= 1).all()
