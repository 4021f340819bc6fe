"""Capture last-token residuals at chosen layers for number-pair prompts.

The task prompt goes in the user turn and the assistant turn is force
started with "Rating:", so the captured position is the trailing ":"
token. Hidden states come from the model's per-layer outputs; layer k
means the residual after transformer block k (1-based), with layer 0
being the embedding output.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
import torch

from .errors import ExtractorError, PrefillTokenizationError
from .nsrd import write_nsrd
from .prompts import ASSISTANT_PREFILL


@dataclass
class ExtractionJob:
    model_id: str
    layers: list
    pairs: np.ndarray = field(repr=False)  # (n, 2) int64, deduplicated
    template: object = None  # PromptTemplate
    out_pattern: str = "residuals_layer{layer}.nsrd"
    batch_size: int = 16
    device: str = "cpu"

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ExtractorError(f"pairs must be (n, 2), got {pairs.shape}")
        seen = set()
        keep = []
        for k, (a, b) in enumerate(pairs):
            key = (int(a), int(b))
            if key not in seen:
                seen.add(key)
                keep.append(k)
        self.pairs = pairs[keep]
        if len(self.pairs) == 0:
            raise ExtractorError("no pairs to extract")
        if len(self.layers) == 0:
            raise ExtractorError("no layers requested")

    def out_path(self, layer):
        return self.out_pattern.format(layer=layer)


def load_pairs_csv(path):
    """Read an (a, b) pair list CSV with an 'a,b' header."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"a", "b"} <= set(reader.fieldnames):
            raise ExtractorError(f"{path}: expected a CSV with 'a' and 'b' columns")
        for row in reader:
            rows.append((int(row["a"]), int(row["b"])))
    return np.asarray(rows, dtype=np.int64)


def sample_pairs(n_pairs, n_min, n_max, seed=0):
    """Sample unique random ordered pairs from [n_min, n_max]."""
    rng = np.random.default_rng(seed)
    seen = set()
    out = []
    while len(out) < n_pairs:
        a = int(rng.integers(n_min, n_max + 1))
        b = int(rng.integers(n_min, n_max + 1))
        if (a, b) not in seen:
            seen.add((a, b))
            out.append((a, b))
    return np.asarray(out, dtype=np.int64)


def build_input_ids(tokenizer, user_content):
    """Token ids for the chat-wrapped prompt with the forced 'Rating:' prefill.

    The user turn is rendered through the tokenizer's chat template with
    the generation prompt appended; the prefill tokens are then attached
    verbatim. Aborts with a token dump when the prefill does not end in
    its own ':' token, since the captured position would then not be the
    colon residual.
    """
    base_ids = tokenizer.apply_chat_template(
        [{"role": "user", "content": user_content}],
        add_generation_prompt=True,
        tokenize=True,
    )
    # newer tokenizer versions return a BatchEncoding instead of a bare list
    if hasattr(base_ids, "get") and "input_ids" in base_ids:
        base_ids = base_ids["input_ids"]
    prefill_ids = tokenizer.encode(ASSISTANT_PREFILL, add_special_tokens=False)
    token_strings = [tokenizer.decode([i]) for i in prefill_ids]
    if (
        not prefill_ids
        or "".join(token_strings) != ASSISTANT_PREFILL
        or token_strings[-1] != ":"
    ):
        raise PrefillTokenizationError(ASSISTANT_PREFILL, prefill_ids, token_strings)
    return list(base_ids) + list(prefill_ids)


def _batched_hidden_states(model, batch_ids, layers, device):
    """Forward one batch (left padded) and return {layer: (b, dim) array}."""
    maxlen = max(len(ids) for ids in batch_ids)
    pad_id = 0
    input_ids = torch.full((len(batch_ids), maxlen), pad_id, dtype=torch.long)
    attention = torch.zeros((len(batch_ids), maxlen), dtype=torch.long)
    for row, ids in enumerate(batch_ids):
        input_ids[row, maxlen - len(ids):] = torch.tensor(ids, dtype=torch.long)
        attention[row, maxlen - len(ids):] = 1
    with torch.no_grad():
        out = model(
            input_ids=input_ids.to(device),
            attention_mask=attention.to(device),
            output_hidden_states=True,
        )
    return {
        layer: out.hidden_states[layer][:, -1, :].to(torch.float32).cpu().numpy()
        for layer in layers
    }


def extract(job, model, tokenizer):
    """Run the job and write one NSRD file per requested layer.

    Returns {layer: path}. Determinism relies on eval mode and a fixed
    pair list; the (a, b) record order is identical across layers.
    """
    n_layers = model.config.num_hidden_layers
    for layer in job.layers:
        if not 0 <= layer <= n_layers:
            raise ExtractorError(
                f"layer {layer} outside model depth 0..{n_layers}"
            )
    dim = model.config.hidden_size
    model.eval()

    all_ids = []
    for a, b in job.pairs:
        user, _ = job.template.chat_parts(int(a), int(b))
        all_ids.append(build_input_ids(tokenizer, user))

    buffers = {layer: np.empty((len(job.pairs), dim), dtype=np.float32)
               for layer in job.layers}
    for start in range(0, len(all_ids), job.batch_size):
        batch = all_ids[start : start + job.batch_size]
        states = _batched_hidden_states(model, batch, job.layers, job.device)
        for layer, mat in states.items():
            if mat.shape[1] != dim:
                raise ExtractorError(
                    f"layer {layer} produced dim {mat.shape[1]}, header expects {dim}"
                )
            buffers[layer][start : start + len(batch)] = mat

    paths = {}
    for layer in job.layers:
        path = job.out_path(layer)
        write_nsrd(path, job.pairs, buffers[layer])
        paths[layer] = path
    return paths
