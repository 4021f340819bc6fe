"""Prompt rendering, rating elicitation, response caching.

Prompts follow five fixed templates (plain, int()-wrapped, str()-wrapped,
base-k, and the concentration decision scenario handled in
:mod:`numsim.triplets`). Ratings can come from an OpenAI-style chat
endpoint or from a deterministic mock model that mixes the theoretical
similarities, which lets the whole pipeline be validated offline.
"""

import hashlib
import json
import logging
import os
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from datetime import datetime, timezone

import numpy as np

from . import matrix, metrics

log = logging.getLogger(__name__)

BASIC = "basic"
INT_WRAPPED = "int"
STR_WRAPPED = "str"
BASE_K = "base"
CONCENTRATION = "concentration"

_QUESTION = (
    "How similar are the two numbers on a scale of 0 (completely dissimilar) "
    "to 1 (completely similar)? Respond only with the rating."
)

_RATING_RE = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")
_WORD_SIMILAR_RE = re.compile(r"\bsimilar\b")


@dataclass(frozen=True)
class ContextKind:
    """Prompt context: which template and, for base-k, which base."""

    tag: str
    base: int | None = None
    qualifier: str = "similar"

    def __post_init__(self):
        if self.tag not in (BASIC, INT_WRAPPED, STR_WRAPPED, BASE_K, CONCENTRATION):
            raise ValueError(f"unknown context tag {self.tag!r}")
        if self.tag == BASE_K:
            if self.base is None or not 2 <= self.base <= 36:
                raise ValueError(f"base-k context needs a base in [2, 36], got {self.base}")
        if self.qualifier not in ("similar", "closer"):
            raise ValueError(f"qualifier must be 'similar' or 'closer', got {self.qualifier!r}")


@dataclass
class ElicitationRecord:
    model_name: str
    context: str
    a: int
    b: int
    order: str  # "AB" or "BA"
    temperature: float
    rendered_prompt: str
    raw_response: str
    rating: float | None
    timestamp: str = ""

    def __post_init__(self):
        if not self.timestamp:
            self.timestamp = datetime.now(timezone.utc).isoformat()
        if self.rating is not None and not 0.0 <= self.rating <= 1.0:
            raise ValueError(f"rating {self.rating} outside [0, 1]")


@dataclass
class EndpointConfig:
    base_url: str
    model_id: str
    api_key_env_var: str = "NUMSIM_API_KEY"
    max_parallel: int = 4
    retry_limit: int = 2
    timeout: float = 60.0
    max_tokens: int = 8

    def __post_init__(self):
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")


@dataclass
class MockModelConfig:
    beta_lev: float = 0.3
    gamma_log: float = 0.7
    alpha: float = 0.0
    noise_sd: float = 0.0
    seed: int = 0
    rating_step: float = 0.05  # 0 disables quantization

    def __post_init__(self):
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")


def _numeral_for(context, n):
    if context.tag == BASE_K:
        return metrics.to_base(n, context.base).digits
    return str(n)


def render_prompt(context, a, b):
    """Byte-exact prompt text for a number pair under the given context."""
    if context.tag == CONCENTRATION:
        raise ValueError("concentration prompts take a triplet; use triplets.render_scenario")
    if a < 0 or b < 0:
        raise ValueError("numbers must be non-negative")
    question = _QUESTION
    if context.qualifier != "similar":
        question = _WORD_SIMILAR_RE.sub(context.qualifier, question)
    if context.tag == BASIC:
        line_a, line_b = f"Number: {a}", f"Number: {b}"
    elif context.tag == INT_WRAPPED:
        line_a, line_b = f"Number: int({a})", f"Number: int({b})"
    elif context.tag == STR_WRAPPED:
        line_a, line_b = f"Number: str({a})", f"Number: str({b})"
    else:
        na, nb = _numeral_for(context, a), _numeral_for(context, b)
        line_a = f"Base {context.base} number: {na}"
        line_b = f"Base {context.base} number: {nb}"
    return f"{question}\n\n{line_a}\n\n{line_b}\n\nRating:"


def parse_rating(raw):
    """Extract the first decimal number from a reply; None if unusable.

    Numbers outside [0, 1] are treated as parse failures rather than
    clamped.
    """
    m = _RATING_RE.search(raw)
    if m is None:
        return None
    value = float(m.group(0))
    if not 0.0 <= value <= 1.0:
        return None
    return value


class OpenAIChatAdapter:
    """Minimal OpenAI-style chat-completions client.

    The prompt goes out as a single user message; the API key is read from
    the environment variable named in the config and never persisted.
    """

    def __init__(self, config):
        self.config = config
        self.model_name = config.model_id
        self.request_count = 0

    def complete(self, prompt, temperature=0.0, max_tokens=None):
        import requests

        cfg = self.config
        key = os.environ.get(cfg.api_key_env_var, "")
        if not key:
            raise RuntimeError(f"API key env var {cfg.api_key_env_var} is not set")
        self.request_count += 1
        resp = requests.post(
            cfg.base_url.rstrip("/") + "/chat/completions",
            headers={"Authorization": f"Bearer {key}"},
            json={
                "model": cfg.model_id,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": temperature,
                "max_tokens": max_tokens if max_tokens is not None else cfg.max_tokens,
            },
            timeout=cfg.timeout,
        )
        resp.raise_for_status()
        return resp.json()["choices"][0]["message"]["content"]


_MOCK_PATTERNS = {
    BASIC: re.compile(r"Number: (\d+)"),
    INT_WRAPPED: re.compile(r"Number: int\((\d+)\)"),
    STR_WRAPPED: re.compile(r"Number: str\((\d+)\)"),
    BASE_K: re.compile(r"Base \d+ number: ([0-9a-z]+)"),
}


class MockModel:
    """Deterministic stand-in model rating pairs from the theoretical grids.

    rating = alpha + beta_lev * s_lev + gamma_log * s_log (+ gaussian noise),
    clamped to [0, 1] and quantized to rating_step. The similarity grids are
    normalized over the configured range, so the mock's mixture is exactly
    recoverable by the decomposition when noise is off.
    """

    def __init__(self, config, n_min, n_max, context):
        self.config = config
        self.n_min = n_min
        self.n_max = n_max
        self.context = context
        self.model_name = "mock"
        self.request_count = 0
        base = context.base if context.tag == BASE_K else 10
        lev = metrics.distance_grid(n_min, n_max, metrics.DistanceKind(metrics.LEVENSHTEIN), base)
        llog = metrics.distance_grid(n_min, n_max, metrics.DistanceKind(metrics.LOGLINEAR), base)
        self._s_lev = metrics.to_similarity(lev).values
        self._s_log = metrics.to_similarity(llog).values

    def _parse_pair(self, prompt):
        pattern = _MOCK_PATTERNS[self.context.tag]
        found = pattern.findall(prompt)
        if len(found) != 2:
            raise ValueError(f"mock could not find two numerals in prompt: {prompt!r}")
        if self.context.tag == BASE_K:
            return tuple(metrics.decode_digits(d, self.context.base) for d in found)
        return int(found[0]), int(found[1])

    def complete(self, prompt, temperature=0.0, max_tokens=None):
        self.request_count += 1
        a, b = self._parse_pair(prompt)
        i, j = a - self.n_min, b - self.n_min
        cfg = self.config
        r = cfg.alpha + cfg.beta_lev * self._s_lev[i, j] + cfg.gamma_log * self._s_log[i, j]
        if cfg.noise_sd > 0:
            digest = hashlib.sha256(f"{cfg.seed}|{prompt}".encode()).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
            r += rng.normal(0.0, cfg.noise_sd)
        r = min(1.0, max(0.0, r))
        if cfg.rating_step > 0:
            r = round(r / cfg.rating_step) * cfg.rating_step
        return f"{r:.10f}"


class ElicitationCache:
    """Append-only JSONL cache of elicitation records, keyed for replay.

    Zero-temperature responses are reusable across runs; temperature > 0
    responses carry the run id in their key and are only replayed within
    the same run.
    """

    def __init__(self, path):
        self.path = path
        self._lock = threading.Lock()
        self._index = {}
        if path is not None and os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    obj = json.loads(line)
                    self._index[obj["cache_key"]] = obj

    @staticmethod
    def key(model_name, prompt, temperature, run_id=None):
        h = hashlib.sha256(prompt.encode("utf-8")).hexdigest()
        parts = [model_name, h, repr(float(temperature))]
        if temperature > 0:
            parts.append(run_id or "")
        return "|".join(parts)

    def get(self, key):
        with self._lock:
            obj = self._index.get(key)
        if obj is None:
            return None
        rec = dict(obj)
        rec.pop("cache_key", None)
        return ElicitationRecord(**rec)

    def put(self, key, record):
        obj = asdict(record)
        obj["cache_key"] = key
        line = json.dumps(obj, ensure_ascii=False)
        with self._lock:
            self._index[key] = obj
            if self.path is not None:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line + "\n")


def _ordered_pairs(n_min, n_max, orders):
    pairs = []
    for i in range(n_min, n_max + 1):
        for j in range(n_min, n_max + 1):
            if i == j:
                if orders in ("both", "AB"):
                    pairs.append((i, j, "AB"))
                elif orders == "BA":
                    pairs.append((i, j, "BA"))
            elif i < j:
                if orders in ("both", "AB"):
                    pairs.append((i, j, "AB"))
                if orders in ("both", "BA"):
                    pairs.append((j, i, "BA"))
    return pairs


def run_pairs(
    adapter,
    n_min,
    n_max,
    context,
    temperature=0.0,
    orders="both",
    cache=None,
    max_parallel=1,
    retry_limit=2,
    run_id=None,
):
    """Elicit every requested (pair, order) and assemble the raw grid.

    Returns (raw_grid, records, failed_pairs). Failed pairs (no parseable
    rating after retries) leave NaN entries in the raw grid.
    """
    if orders not in ("AB", "BA", "both"):
        raise ValueError(f"orders must be AB, BA or both, got {orders!r}")
    if cache is None:
        cache = ElicitationCache(None)
    tasks = _ordered_pairs(n_min, n_max, orders)
    model_name = getattr(adapter, "model_name", "unknown")

    def work(task):
        a, b, order = task
        prompt = render_prompt(context, a, b)
        key = ElicitationCache.key(model_name, prompt, temperature, run_id)
        cached = cache.get(key)
        if cached is not None:
            return cached
        raw, rating = "", None
        for _attempt in range(retry_limit + 1):
            try:
                raw = adapter.complete(prompt, temperature=temperature)
            except Exception as exc:
                log.warning("request failed for pair (%d, %d): %s", a, b, exc)
                continue
            rating = parse_rating(raw)
            if rating is not None:
                break
        record = ElicitationRecord(
            model_name=model_name,
            context=context.tag,
            a=a,
            b=b,
            order=order,
            temperature=temperature,
            rendered_prompt=prompt,
            raw_response=raw,
            rating=rating,
        )
        cache.put(key, record)
        return record

    if max_parallel > 1:
        with ThreadPoolExecutor(max_workers=max_parallel) as pool:
            records = list(pool.map(work, tasks))
    else:
        records = [work(t) for t in tasks]

    n = n_max - n_min + 1
    values = np.full((n, n), np.nan)
    failed = []
    for rec in records:
        if rec.rating is None:
            failed.append((rec.a, rec.b))
        else:
            values[rec.a - n_min, rec.b - n_min] = rec.rating
    meta = matrix.GridMeta(
        model_name=model_name,
        context=context.tag,
        temperature=temperature,
        base=context.base if context.base is not None else 10,
        qualifier=context.qualifier,
    )
    grid = matrix.SimilarityGrid(n_min=n_min, n_max=n_max, values=values, meta=meta)
    return grid, records, failed


def stability_compare(grid_a, grid_b):
    """Pearson correlation and mean absolute difference between two runs."""
    if (grid_a.n_min, grid_a.n_max) != (grid_b.n_min, grid_b.n_max):
        raise ValueError("grids cover different ranges")
    mask_a, mask_b = grid_a.present_mask(), grid_b.present_mask()
    if not np.array_equal(mask_a, mask_b):
        raise ValueError("grids have different absent-entry patterns")
    a = grid_a.values[mask_a]
    b = grid_b.values[mask_b]
    r = float(np.corrcoef(a, b)[0, 1])
    mad = float(np.mean(np.abs(a - b)))
    return r, mad
