"""Command-line entry point orchestrating the pipeline stages.

Subcommands: elicit, decompose, mds, probe, triplets, render, stability,
prompt. Every flag can also come from a flat key=value config file
(``--config``); command-line values win. Each output file gets a sidecar
``<out>.manifest.json`` recording the resolved config hash, input hashes
and seed so runs are reproducible.
"""

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import (
    decomposition,
    elicitation,
    embedding,
    matrix,
    metrics,
    probes,
    svgplot,
    triplets as triplets_mod,
)


def _load_config(path):
    config = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise SystemExit(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            config[key.strip()] = value.strip()
    return config


def _merge_config(args):
    """Fill argparse values that were left at None from the config file."""
    config = _load_config(args.config) if getattr(args, "config", None) else {}
    for key, value in vars(args).copy().items():
        if value is None and key in config:
            setattr(args, key, config[key])
    return args


def _file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_path, args, inputs=(), seed=None):
    resolved = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("func",) and not callable(v)
    }
    blob = json.dumps(resolved, sort_keys=True, default=str)
    manifest = {
        "config": resolved,
        "config_hash": hashlib.sha256(blob.encode()).hexdigest(),
        "inputs": {p: _file_sha256(p) for p in inputs if p and os.path.exists(p)},
        "seed": seed,
    }
    with open(str(out_path) + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, default=str)


def _parse_range(text):
    lo, _, hi = str(text).partition(":")
    return int(lo), int(hi)


def _context_from_args(args):
    return elicitation.ContextKind(
        tag=args.context or "basic",
        base=int(args.base) if args.base is not None else (4 if args.context == "base" else None),
        qualifier=args.qualifier or "similar",
    )


def _mock_config(args):
    return elicitation.MockModelConfig(
        alpha=float(args.mock_alpha if args.mock_alpha is not None else 0.0),
        beta_lev=float(args.mock_beta_lev if args.mock_beta_lev is not None else 0.3),
        gamma_log=float(args.mock_gamma_log if args.mock_gamma_log is not None else 0.7),
        noise_sd=float(args.mock_noise_sd if args.mock_noise_sd is not None else 0.0),
        seed=int(args.seed if args.seed is not None else 0),
        rating_step=float(args.mock_rating_step if args.mock_rating_step is not None else 0.05),
    )


def _predictor_kind(name):
    aliases = {
        "levenshtein": metrics.LEVENSHTEIN,
        "lev": metrics.LEVENSHTEIN,
        "loglinear": metrics.LOGLINEAR,
        "log": metrics.LOGLINEAR,
        "linearl1": metrics.LINEAR_L1,
        "linear": metrics.LINEAR_L1,
        "l1": metrics.LINEAR_L1,
    }
    if name not in aliases:
        raise SystemExit(f"unknown predictor {name!r}; choose from {sorted(set(aliases))}")
    return metrics.DistanceKind(aliases[name])


def cmd_elicit(args):
    n_min, n_max = _parse_range(args.range or "0:999")
    context = _context_from_args(args)
    temperature = float(args.temperature if args.temperature is not None else 0.0)
    cache = elicitation.ElicitationCache(args.cache)
    if (args.model or "mock") == "mock":
        adapter = elicitation.MockModel(_mock_config(args), n_min, n_max, context)
    else:
        endpoint = elicitation.EndpointConfig(
            base_url=args.endpoint_url,
            model_id=args.model,
            api_key_env_var=args.api_key_env or "NUMSIM_API_KEY",
            max_parallel=int(args.max_parallel or 4),
            retry_limit=int(args.retry_limit if args.retry_limit is not None else 2),
        )
        adapter = elicitation.OpenAIChatAdapter(endpoint)
    raw, records, failed = elicitation.run_pairs(
        adapter,
        n_min,
        n_max,
        context,
        temperature=temperature,
        orders=args.orders or "both",
        cache=cache,
        max_parallel=int(args.max_parallel or 1),
        retry_limit=int(args.retry_limit if args.retry_limit is not None else 2),
        run_id=args.run_id,
    )
    grid = matrix.symmetrize(raw, allow_missing=bool(failed))
    matrix.save_grid(grid, args.out)
    _write_manifest(args.out, args, inputs=[args.cache] if args.cache else [], seed=args.seed)
    print(f"elicited {len(records)} records over [{n_min}, {n_max}]; "
          f"{adapter.request_count} request(s), {len(failed)} failure(s)")
    if failed:
        print(f"failed pairs: {failed[:20]}{' ...' if len(failed) > 20 else ''}")
        return 1
    return 0


def cmd_decompose(args):
    grid = matrix.load_grid(args.grid)
    names = (args.predictors or "levenshtein,loglinear").split(",")
    base = int(args.base) if args.base is not None else grid.meta.base
    predictor_grids = {}
    for name in names:
        kind = _predictor_kind(name.strip())
        dg = metrics.distance_grid(grid.n_min, grid.n_max, kind, base)
        predictor_grids[kind.tag] = metrics.to_similarity(dg)
    seed = int(args.seed if args.seed is not None else 0)
    report = decomposition.decompose(
        grid,
        predictor_grids,
        include_diagonal=not args.exclude_diagonal,
        n_reps=int(args.n_reps or 1000),
        seed=seed,
    )
    decomposition.save_report(report, args.out)
    _write_manifest(args.out, args, inputs=[args.grid], seed=seed)
    print(f"combined R^2 = {report.combined.r_squared:.6f} "
          f"ci=[{report.combined_r2.ci_low:.6f}, {report.combined_r2.ci_high:.6f}]")
    for k in report.predictor_names:
        fit, boot = report.per_predictor[k]
        print(f"{k}-only R^2 = {fit.r_squared:.6f} ci=[{boot.ci_low:.6f}, {boot.ci_high:.6f}]")
    return 0


def cmd_mds(args):
    grid = matrix.load_grid(args.grid)
    delta = embedding.similarity_to_dissimilarity(grid)
    seed = int(args.seed if args.seed is not None else 0)
    solution = embedding.smacof(
        delta,
        max_iters=int(args.max_iters or 300),
        tol=float(args.tol if args.tol is not None else 1e-6),
        seed=seed,
    )
    labels = [str(n) for n in range(grid.n_min, grid.n_max + 1)]
    embedding.export_points(solution, labels, args.out)
    _write_manifest(args.out, args, inputs=[args.grid], seed=seed)
    print(f"stress = {solution.stress:.6g} after {solution.n_iters} iteration(s) "
          f"(converged={solution.converged})")
    return 0


def cmd_probe(args):
    target = _predictor_kind(args.target or "loglinear")
    config = probes.TrainConfig(
        epochs=int(args.epochs or 100),
        learning_rate=float(args.learning_rate if args.learning_rate is not None else 1e-3),
        batch_size=int(args.batch_size or 256),
        seed=int(args.seed if args.seed is not None else 0),
    )
    if args.action == "train":
        ds = probes.load_residuals(args.residuals)
        probe = probes.train_probe(ds, target, config)
        probes.save_probe(probe, args.out)
        _write_manifest(args.out, args, inputs=[args.residuals], seed=config.seed)
        print(f"trained {target.tag} probe on {len(ds)} records (dim {ds.dim})")
        return 0
    if args.action == "eval":
        probe = probes.load_probe(args.probe)
        ds = probes.load_residuals(args.residuals)
        n_min, n_max = _parse_range(args.range or "0:499")
        correlations, grid = probes.evaluate_probe(probe, ds, n_min, n_max)
        decoded = probes.decoded_similarity(grid)
        decoded.n_min, decoded.n_max = n_min, n_max
        if args.out:
            matrix.save_grid(decoded, args.out)
            _write_manifest(args.out, args, inputs=[args.probe, args.residuals],
                            seed=config.seed)
        for tag, r in correlations.items():
            print(f"pearson r vs {tag}: {r:.6f}")
        return 0
    if args.action == "sweep":
        datasets = {}
        for spec in args.residuals.split(","):
            layer_str, _, path = spec.partition("=")
            datasets[int(layer_str)] = probes.load_residuals(path, layer=int(layer_str))
        rows = probes.layer_sweep(datasets, target, config)
        print("layer,train_size,test_r")
        lines = ["layer,train_size,test_r"]
        for layer, train_size, r in rows:
            line = f"{layer},{train_size},{r:.6f}"
            print(line)
            lines.append(line)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write("\n".join(lines) + "\n")
        return 0
    raise SystemExit(f"unknown probe action {args.action!r}")


def cmd_triplets(args):
    seed = int(args.seed if args.seed is not None else 0)
    if args.action == "gen":
        rng = np.random.default_rng(seed)
        batch = triplets_mod.generate_batch(
            rng, int(args.digits or 3), int(args.samples or 10000)
        )
        triplets_mod.save_triplets(batch, args.out)
        _write_manifest(args.out, args, seed=seed)
        print(f"{len(batch)} unique triplet(s) written to {args.out}")
        return 0
    if args.action == "run":
        ts = triplets_mod.load_triplets(args.triplets)
        responder_name = args.responder or "numeric"
        if responder_name == "numeric":
            responder = triplets_mod.NumericResponder()
        elif responder_name == "stringy":
            responder = triplets_mod.StringyResponder()
        else:
            endpoint = elicitation.EndpointConfig(
                base_url=args.endpoint_url,
                model_id=responder_name,
                api_key_env_var=args.api_key_env or "NUMSIM_API_KEY",
            )
            responder = elicitation.OpenAIChatAdapter(endpoint)
        results = triplets_mod.run_scenarios(responder, ts)
        triplets_mod.save_results(results, args.out)
        _write_manifest(args.out, args, inputs=[args.triplets], seed=seed)
        print(f"{len(results)} scenario result(s) written to {args.out}")
        return 0
    if args.action == "score":
        results = triplets_mod.load_results(args.results)
        table = triplets_mod.bias_score(results)
        lines = ["n_digits,order,bias,n_parsed,n_unparsed"]
        for (n_digits, order), cell in sorted(table.items()):
            lines.append(
                f"{n_digits},{order},{cell['bias']:.4f},{cell['n_parsed']},{cell['n_unparsed']}"
            )
        print("\n".join(lines))
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write("\n".join(lines) + "\n")
            _write_manifest(args.out, args, inputs=[args.results], seed=seed)
        return 0
    raise SystemExit(f"unknown triplets action {args.action!r}")


def cmd_render(args):
    if args.grid:
        grid = matrix.load_grid(args.grid)
        svg = svgplot.heatmap_svg(grid, label_every=int(args.label_every or 100))
        inputs = [args.grid]
    elif args.points:
        labels, pts = embedding.load_points(args.points)
        svg = svgplot.scatter_svg(pts, labels, label_every=int(args.label_every or 5))
        inputs = [args.points]
    else:
        raise SystemExit("render needs --grid or --points")
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    _write_manifest(args.out, args, inputs=inputs)
    print(f"wrote {args.out}")
    return 0


def cmd_stability(args):
    grid_a = matrix.load_grid(args.grid_a)
    grid_b = matrix.load_grid(args.grid_b)
    r, mad = elicitation.stability_compare(grid_a, grid_b)
    print(f"pearson_r={r:.6f} mean_abs_diff={mad:.6f}")
    return 0


def cmd_prompt(args):
    if (args.context or "basic") == "concentration":
        t = triplets_mod.Triplet(
            q0=int(args.a), q1=int(args.b), q2=int(args.c), n_digits=len(str(args.a))
        )
        text = triplets_mod.render_scenario(t, args.order or triplets_mod.LEV_FIRST)
    else:
        context = _context_from_args(args)
        text = elicitation.render_prompt(context, int(args.a), int(args.b))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _add_common(p):
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="numsim")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("elicit", help="elicit a similarity grid")
    _add_common(p)
    p.add_argument("--range", help="n_min:n_max (default 0:999)")
    p.add_argument("--context", choices=["basic", "int", "str", "base"])
    p.add_argument("--base", type=int)
    p.add_argument("--qualifier", choices=["similar", "closer"])
    p.add_argument("--temperature", type=float)
    p.add_argument("--orders", choices=["AB", "BA", "both"])
    p.add_argument("--model", help="'mock' or an endpoint model id")
    p.add_argument("--endpoint-url")
    p.add_argument("--api-key-env")
    p.add_argument("--max-parallel", type=int)
    p.add_argument("--retry-limit", type=int)
    p.add_argument("--run-id")
    p.add_argument("--cache", help="JSONL response cache path")
    p.add_argument("--mock-alpha", type=float)
    p.add_argument("--mock-beta-lev", type=float)
    p.add_argument("--mock-gamma-log", type=float)
    p.add_argument("--mock-noise-sd", type=float)
    p.add_argument("--mock-rating-step", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_elicit)

    p = sub.add_parser("decompose", help="regress a grid on theoretical predictors")
    _add_common(p)
    p.add_argument("--grid", required=True)
    p.add_argument("--predictors", help="comma list: levenshtein,loglinear,linearl1")
    p.add_argument("--base", type=int)
    p.add_argument("--n-reps", type=int)
    p.add_argument("--exclude-diagonal", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("mds", help="SMACOF embedding of a similarity grid")
    _add_common(p)
    p.add_argument("--grid", required=True)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mds)

    p = sub.add_parser("probe", help="train/eval/sweep residual probes")
    _add_common(p)
    p.add_argument("action", choices=["train", "eval", "sweep"])
    p.add_argument("--residuals", help="NSRD path (sweep: layer=path,layer=path,...)")
    p.add_argument("--probe", help="probe JSON (eval)")
    p.add_argument("--target", help="levenshtein or loglinear")
    p.add_argument("--range", help="eval range n_min:n_max (default 0:499)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("triplets", help="generate/run/score diagnostic triplets")
    _add_common(p)
    p.add_argument("action", choices=["gen", "run", "score"])
    p.add_argument("--digits", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--triplets", help="triplet CSV (run)")
    p.add_argument("--results", help="results CSV (score)")
    p.add_argument("--responder", help="numeric, stringy, or an endpoint model id")
    p.add_argument("--endpoint-url")
    p.add_argument("--api-key-env")
    p.add_argument("--out")
    p.set_defaults(func=cmd_triplets)

    p = sub.add_parser("render", help="render a grid or points file as SVG")
    _add_common(p)
    p.add_argument("--grid")
    p.add_argument("--points")
    p.add_argument("--label-every", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("stability", help="compare two grids (pearson r, MAD)")
    _add_common(p)
    p.add_argument("--grid-a", required=True)
    p.add_argument("--grid-b", required=True)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("prompt", help="export a rendered prompt fixture")
    _add_common(p)
    p.add_argument("--context", choices=["basic", "int", "str", "base", "concentration"])
    p.add_argument("--base", type=int)
    p.add_argument("--qualifier", choices=["similar", "closer"])
    p.add_argument("--a", required=True, type=int)
    p.add_argument("--b", required=True, type=int)
    p.add_argument("--c", type=int, help="third number (concentration)")
    p.add_argument("--order", choices=[triplets_mod.LEV_FIRST, triplets_mod.LOG_FIRST])
    p.add_argument("--out")
    p.set_defaults(func=cmd_prompt)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args = _merge_config(args)
    try:
        code = args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = 2
    return code


if __name__ == "__main__":
    sys.exit(main())
