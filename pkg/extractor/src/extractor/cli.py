"""Command-line entry point: numsim-extract.

Reads a prompt fixture (exported by the upstream CLI's ``prompt``
subcommand) plus either a pair-list CSV or sampling parameters, loads a
local transformer, and writes one NSRD file per requested layer.
"""

import argparse
import sys

from .errors import ExtractorError
from .extract import ExtractionJob, extract, load_pairs_csv, sample_pairs
from .prompts import load_template


def _parse_pair(text):
    a, _, b = text.partition(":")
    return int(a), int(b)


def build_parser():
    parser = argparse.ArgumentParser(prog="numsim-extract")
    parser.add_argument("--model", required=True, help="local model path or hub id")
    parser.add_argument("--fixture", required=True, help="prompt fixture file")
    parser.add_argument("--fixture-pair", required=True,
                        help="a:b pair the fixture was rendered for")
    parser.add_argument("--pairs", help="CSV with a,b columns")
    parser.add_argument("--n-pairs", type=int, default=10000)
    parser.add_argument("--range", default="0:999", help="sampling range n_min:n_max")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--layers", default="all", help="'all' or comma list")
    parser.add_argument("--out-pattern", default="residuals_layer{layer}.nsrd")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--device", default="cpu")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        import torch
        from transformers import AutoModelForCausalLM, AutoTokenizer

        template = load_template(args.fixture, _parse_pair(args.fixture_pair))
        if args.pairs:
            pairs = load_pairs_csv(args.pairs)
        else:
            n_min, n_max = _parse_pair(args.range)
            pairs = sample_pairs(args.n_pairs, n_min, n_max, seed=args.seed)

        tokenizer = AutoTokenizer.from_pretrained(args.model)
        model = AutoModelForCausalLM.from_pretrained(
            args.model, dtype=torch.float32
        ).to(args.device)
        if args.layers == "all":
            layers = list(range(1, model.config.num_hidden_layers + 1))
        else:
            layers = [int(x) for x in args.layers.split(",")]
        job = ExtractionJob(
            model_id=args.model,
            layers=layers,
            pairs=pairs,
            template=template,
            out_pattern=args.out_pattern,
            batch_size=args.batch_size,
            device=args.device,
        )
        paths = extract(job, model, tokenizer)
    except (ExtractorError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for layer in sorted(paths):
        print(f"layer {layer}: {paths[layer]} ({len(job.pairs)} records)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
