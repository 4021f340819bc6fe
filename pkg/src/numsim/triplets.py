"""Diagnostic triplets where string and numerical closeness disagree.

A triplet is (q0 target, q1 edit-aligned, q2 numerically-aligned): q1 is
one substitution away from q0 but numerically far (the leading digit drops
by one), while q2 keeps q0's leading digit but rebuilds the rest from
digits unseen in q0 or q1, so it is numerically closer yet several edits
away. The compound-concentration scenario turns a triplet into a forced
choice, and the bias score is the fraction of edit-aligned picks.
"""

import csv
import re
from dataclasses import dataclass

from .errors import InsufficientDataError
from .metrics import levenshtein

LEV_FIRST = "lev_first"
LOG_FIRST = "log_first"
UNPARSED = "unparsed"

SCENARIO_TEMPLATE = (
    "You require a compound with a concentration of approximately {NUM1} ppm. "
    "Two test tubes are available: one containing {NUM2} ppm and the other "
    "{NUM3} ppm. Your task is to determine which test tube provides the most "
    "similar concentration to your required dosage. Which one will you "
    "choose? Respond only with the ppm value of the test tube you choose."
)

_INT_RE = re.compile(r"\d+")
_MAX_RESAMPLES = 100


@dataclass(frozen=True)
class Triplet:
    q0: int
    q1: int
    q2: int
    n_digits: int


@dataclass
class ScenarioResult:
    triplet: Triplet
    order: str
    raw_response: str
    chosen: str  # "q1", "q2" or "unparsed"

    @property
    def string_biased(self):
        if self.chosen == UNPARSED:
            return None
        return self.chosen == "q1"


def check_triplet(t):
    """Raise if a triplet violates the construction invariants."""
    s0, s1, s2 = str(t.q0), str(t.q1), str(t.q2)
    if len(s0) != t.n_digits:
        raise ValueError(f"q0 has {len(s0)} digits, expected {t.n_digits}")
    # the generator samples all of q0's digits from 2-9, but only the leading
    # digit matters for the invariants (q1 must keep its length)
    if s0[0] not in "23456789":
        raise ValueError(f"q0 leading digit must be 2-9: {t.q0}")
    if "0" in s0:
        raise ValueError(f"q0 digits must be nonzero: {t.q0}")
    if t.q1 != t.q0 - 10 ** (t.n_digits - 1):
        raise ValueError(f"q1 must decrement q0's leading digit: {t.q1}")
    if s2[0] != s0[0]:
        raise ValueError(f"q2 must share q0's leading digit: {t.q2}")
    excluded = set(s0) | set(s1)
    tail = s2[1:]
    if any(d == "0" or d in excluded for d in tail):
        raise ValueError(f"q2 tail digits must be 1-9 and unseen in q0/q1: {t.q2}")
    if levenshtein(s0, s1) != 1:
        raise ValueError("lev(q0, q1) must be 1")
    if levenshtein(s0, s2) <= 1:
        raise ValueError("lev(q0, q2) must exceed lev(q0, q1)")
    if abs(t.q0 - t.q2) >= abs(t.q0 - t.q1):
        raise ValueError("q2 must be numerically closer to q0 than q1 is")
    if len({t.q0, t.q1, t.q2}) != 3:
        raise ValueError("triplet values must be distinct")
    return t


def generate_triplet(rng, n_digits):
    """Sample one triplet; q0 digits come from {2..9} so q1 keeps its length."""
    if n_digits not in (3, 5):
        raise ValueError(f"n_digits must be 3 or 5, got {n_digits}")
    for _ in range(_MAX_RESAMPLES):
        digits0 = rng.integers(2, 10, size=n_digits)
        q0 = int("".join(str(d) for d in digits0))
        q1 = q0 - 10 ** (n_digits - 1)
        excluded = set(str(q0)) | set(str(q1))
        allowed = [d for d in "123456789" if d not in excluded]
        if not allowed:
            continue
        tail = rng.choice(len(allowed), size=n_digits - 1)
        q2 = int(str(q0)[0] + "".join(allowed[k] for k in tail))
        return check_triplet(Triplet(q0=q0, q1=q1, q2=q2, n_digits=n_digits))
    raise RuntimeError("could not sample a triplet satisfying the exclusion rule")


def generate_batch(rng, n_digits, n_samples=10000):
    """Sample ``n_samples`` triplets and keep the unique subset (sorted)."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    seen = {generate_triplet(rng, n_digits) for _ in range(n_samples)}
    return sorted(seen, key=lambda t: (t.q0, t.q1, t.q2))


def render_scenario(triplet, order=LEV_FIRST):
    """Render the concentration prompt; order picks which option comes first."""
    if order == LEV_FIRST:
        num2, num3 = triplet.q1, triplet.q2
    elif order == LOG_FIRST:
        num2, num3 = triplet.q2, triplet.q1
    else:
        raise ValueError(f"order must be {LEV_FIRST} or {LOG_FIRST}, got {order!r}")
    return (
        SCENARIO_TEMPLATE.replace("{NUM1}", str(triplet.q0))
        .replace("{NUM2}", str(num2))
        .replace("{NUM3}", str(num3))
    )


def parse_choice(raw, triplet):
    """Map a reply to q1/q2 by exact value match of its first integer."""
    m = _INT_RE.search(raw)
    if m is None:
        return UNPARSED
    value = int(m.group(0))
    if value == triplet.q1:
        return "q1"
    if value == triplet.q2:
        return "q2"
    return UNPARSED


def run_scenarios(responder, triplets, orders=(LEV_FIRST, LOG_FIRST), temperature=0.0):
    """Query a responder for every (triplet, order) and parse the choices."""
    results = []
    for t in triplets:
        for order in orders:
            prompt = render_scenario(t, order)
            raw = responder.complete(prompt, temperature=temperature)
            results.append(
                ScenarioResult(triplet=t, order=order, raw_response=raw,
                               chosen=parse_choice(raw, t))
            )
    return results


def bias_score(results):
    """Fraction of edit-aligned (q1) choices per (n_digits, order) cell.

    Unparsed responses are excluded from the denominator but counted.
    Returns {(n_digits, order): {"bias", "n_parsed", "n_unparsed"}}.
    """
    cells = {}
    for res in results:
        key = (res.triplet.n_digits, res.order)
        cell = cells.setdefault(key, {"n_q1": 0, "n_parsed": 0, "n_unparsed": 0})
        if res.chosen == UNPARSED:
            cell["n_unparsed"] += 1
        else:
            cell["n_parsed"] += 1
            if res.chosen == "q1":
                cell["n_q1"] += 1
    out = {}
    for key, cell in cells.items():
        if cell["n_parsed"] == 0:
            raise InsufficientDataError(f"no parsed results in cell {key}")
        out[key] = {
            "bias": cell["n_q1"] / cell["n_parsed"],
            "n_parsed": cell["n_parsed"],
            "n_unparsed": cell["n_unparsed"],
        }
    return out


class NumericResponder:
    """Always picks the numerically closer concentration (unbiased oracle)."""

    model_name = "mock-numeric"

    def __init__(self):
        self.request_count = 0

    def complete(self, prompt, temperature=0.0, max_tokens=None):
        self.request_count += 1
        target, opt_a, opt_b = _parse_scenario(prompt)
        pick = opt_a if abs(target - opt_a) <= abs(target - opt_b) else opt_b
        return str(pick)


class StringyResponder:
    """Always picks the option with the smaller edit distance to the target."""

    model_name = "mock-stringy"

    def __init__(self):
        self.request_count = 0

    def complete(self, prompt, temperature=0.0, max_tokens=None):
        self.request_count += 1
        target, opt_a, opt_b = _parse_scenario(prompt)
        da = levenshtein(str(target), str(opt_a))
        db = levenshtein(str(target), str(opt_b))
        return str(opt_a if da <= db else opt_b)


_SCENARIO_RE = re.compile(
    r"approximately (\d+) ppm.*?containing (\d+) ppm and the other (\d+) ppm",
    re.DOTALL,
)


def _parse_scenario(prompt):
    m = _SCENARIO_RE.search(prompt)
    if m is None:
        raise ValueError("not a concentration scenario prompt")
    return tuple(int(g) for g in m.groups())


def save_triplets(triplets, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["q0", "q1", "q2", "n_digits"])
        for t in triplets:
            writer.writerow([t.q0, t.q1, t.q2, t.n_digits])


def load_triplets(path):
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(
                Triplet(q0=int(row["q0"]), q1=int(row["q1"]), q2=int(row["q2"]),
                        n_digits=int(row["n_digits"]))
            )
    return out


def save_results(results, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["q0", "q1", "q2", "n_digits", "order", "chosen", "biased"])
        for r in results:
            writer.writerow(
                [r.triplet.q0, r.triplet.q1, r.triplet.q2, r.triplet.n_digits,
                 r.order, r.chosen, "" if r.string_biased is None else int(r.string_biased)]
            )


def load_results(path):
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            t = Triplet(q0=int(row["q0"]), q1=int(row["q1"]), q2=int(row["q2"]),
                        n_digits=int(row["n_digits"]))
            out.append(ScenarioResult(triplet=t, order=row["order"],
                                      raw_response="", chosen=row["chosen"]))
    return out
