"""
cli.py - Command-line interface for christoffel-osp

Subcommands:
    gen           generate a synthetic dataset (CSNAP1, optional CSV and prior JSON)
    score         empirical Christoffel scores of a snapshot file (CSV)
    place         offline sensor placement (selection CSV or JSON)
    reconstruct   one benchmark cell with its trace (JSON)
    bench         full (strategy x m x seed) sweep (rows and summary CSV)
    sample-prior  unconditional samples through the reverse diffusion (CSV)
    serve         start the HTTP service
"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

from .config import get_settings
from .diffusion.gmm import load_prior, save_prior
from .diffusion.sampler import sample_unconditional
from .errors import InvalidRequestError, OSPError, UnknownStrategyError
from .harness.benchmark import execute_cell, load_experiment_config, prepare_context, run_benchmark
from .harness.datasets import build_dataset
from .harness.reporting import write_json, write_step_record_csv
from .models.experiment import DatasetName, DatasetSpec, ExperimentConfig, OutputSpec, PlacementRequest, PlacementStrategy
from .models.scores import ChristoffelScore
from .models.sampler import SamplerConfig
from .models.sensing import Grid, SnapshotSet
from .christoffel.scores import empirical_christoffel
from .placement.registry import PlacementContext, place, place_per_channel
from .sensing.measurement import relative_l2
from .sensing.snapshot_io import (
    load_scores_csv,
    load_snapshots,
    save_christoffel_score,
    save_selection_csv,
    save_selection_json,
    save_snapshots,
    save_snapshots_csv,
)

logger = logging.getLogger("christoffel_osp.cli")

EXIT_CODES = """exit codes:
  0  success
  1  unexpected error
  2  command-line usage error
  3  malformed or inconsistent config file
  4  input file not found
  5  unknown placement strategy
  6  invalid data, file format or parameter
  7  degenerate data (all secants vanish, constant snapshots, zero reference)

Errors are printed to stderr as JSON: {"error": ..., "message": ..., "exit_code": ...}
"""


def _strategy(name: str) -> PlacementStrategy:
    try:
        return PlacementStrategy(name)
    except ValueError:
        known = ", ".join(s.value for s in PlacementStrategy)
        raise UnknownStrategyError(f"Unknown strategy '{name}' (known: {known})")


def _output(path: Optional[str], default_name: str) -> str:
    if path:
        return path
    directory = get_settings().output_dir
    os.makedirs(directory, exist_ok=True)
    return os.path.join(directory, default_name)


def cmd_gen(args) -> int:
    if args.config:
        spec = load_experiment_config(args.config).dataset
    else:
        try:
            spec = DatasetSpec(name=DatasetName(args.dataset))
        except ValueError:
            raise InvalidRequestError(f"Unknown dataset '{args.dataset}'")
    updates = {
        key: value for key, value in (
            ("n_nodes", args.n_nodes), ("n_snapshots", args.n_snapshots), ("dim", args.dim), ("seed", args.seed),
        ) if value is not None
    }
    spec = DatasetSpec.model_validate({**spec.model_dump(), **updates})
    dataset = build_dataset(spec)
    out = _output(args.out, f"{spec.name.value}.csnap")
    save_snapshots(dataset.snapshots, out)
    if args.csv:
        save_snapshots_csv(dataset.snapshots, args.csv)
    if args.prior_out:
        save_prior(dataset.prior, args.prior_out)
    print(json.dumps({"snapshots": out, "n_nodes": spec.n_nodes, "n_snapshots": spec.n_snapshots}))
    return 0


def cmd_score(args) -> int:
    snapshots = load_snapshots(args.snapshots)
    score = empirical_christoffel(snapshots, args.pair_cap, args.seed)
    out = _output(args.out, "scores.csv")
    save_christoffel_score(score, out)
    print(json.dumps({
        "scores": out,
        "n_pairs_used": score.n_pairs_used,
        "n_zero_skipped": score.n_zero_skipped,
        "exact": score.exact,
    }))
    return 0


def cmd_place(args) -> int:
    strategy = _strategy(args.strategy)
    snapshots = load_snapshots(args.snapshots)
    request = PlacementRequest(
        strategy=strategy,
        m=args.m,
        rng_seed=args.seed,
        eps_reg=args.eps_reg,
        sigma_eta=args.sigma_eta if args.sigma_eta is not None else get_settings().sigma_eta,
        pod_modes=args.pod_modes,
        replacement=args.replacement,
    )
    if args.channels > 1:
        result = place_per_channel(request, snapshots, args.channels)
    else:
        score = None
        if args.score:
            values = load_scores_csv(args.score)
            if values.shape[0] != snapshots.n_nodes:
                raise InvalidRequestError(f"Score file has {values.shape[0]} nodes, snapshots have {snapshots.n_nodes}")
            score = ChristoffelScore(scores=values, exact=True)
        result = place(request, PlacementContext(snapshots, score_seed=args.seed, score=score))
    out = _output(args.out, f"selection_{strategy.value}_m{args.m}.csv")
    if out.lower().endswith(".json"):
        save_selection_json(result.selection, out, extra={"strategy": strategy.value, "flags": result.flags})
    else:
        save_selection_csv(result.selection, out)
    print(json.dumps({"selection": out, "indices": list(result.selection.indices), "flags": result.flags}))
    return 0


def cmd_reconstruct(args) -> int:
    config = load_experiment_config(args.config) if args.config else ExperimentConfig()
    strategy = _strategy(args.strategy) if args.strategy else config.strategies[0]
    m = args.m if args.m is not None else config.m_values[0]
    if not 1 <= m <= config.dataset.n_nodes:
        raise InvalidRequestError(f"m={m} must lie in [1, {config.dataset.n_nodes}]")
    dataset = build_dataset(config.dataset)
    context = prepare_context(dataset, config.model_copy(update={"strategies": [strategy]}))
    if args.steps and strategy.is_online:
        raise InvalidRequestError("--steps applies to fixed-sensor strategies only")
    record = [] if args.steps else None
    estimate, x_star, extra, trace = execute_cell(dataset, context, config, strategy, m, args.seed, record=record)
    if args.steps:
        write_step_record_csv(record, args.steps)
    payload = {
        "dataset": config.dataset.name.value,
        "strategy": strategy.value,
        "m": m,
        "seed": args.seed,
        "rel_l2": relative_l2(estimate, x_star),
        "estimate": estimate.tolist(),
        "x_star": x_star.tolist(),
        "extra": extra,
        "trace": trace.model_dump(mode="json") if trace is not None else None,
    }
    out = _output(args.out, f"reconstruction_{strategy.value}_m{m}_s{args.seed}.json")
    write_json(payload, out)
    print(json.dumps({"result": out, "rel_l2": payload["rel_l2"]}))
    return 0


def cmd_bench(args) -> int:
    config = load_experiment_config(args.config)
    if args.out:
        config = config.model_copy(update={"output": OutputSpec(
            rows_csv=os.path.join(args.out, "rows.csv"),
            summary_csv=os.path.join(args.out, "summary.csv"),
            trace_dir=os.path.join(args.out, "traces") if args.traces else None,
        )})
    if args.n_jobs is not None:
        config = config.model_copy(update={"n_jobs": args.n_jobs})
    rows, summary = run_benchmark(config)
    print(json.dumps({
        "rows": len(rows),
        "failed": sum(row.status != "ok" for row in rows),
        "summary_csv": config.output.summary_csv,
        "rows_csv": config.output.rows_csv,
    }))
    return 0


def cmd_sample_prior(args) -> int:
    if args.prior:
        prior = load_prior(args.prior)
        sampler = SamplerConfig()
        grid = None
    else:
        config = load_experiment_config(args.config) if args.config else ExperimentConfig()
        dataset = build_dataset(config.dataset)
        prior, sampler, grid = dataset.prior, config.sampler, dataset.grid
    if args.n_steps is not None:
        sampler = sampler.model_copy(update={"n_steps": args.n_steps})
    samples = sample_unconditional(prior, sampler, rng_seed=args.seed, n_samples=args.n)
    out = _output(args.out, "prior_samples.csv")
    coords = grid.coords if grid is not None else np.linspace(0.0, 1.0, prior.n_nodes)
    save_snapshots_csv(SnapshotSet(grid=Grid(coords=coords), data=samples.T), out)
    print(json.dumps({"samples": out, "n": args.n}))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    settings = get_settings()
    uvicorn.run("src.main:app", host=args.host or settings.api_host, port=args.port or settings.api_port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="christoffel-osp",
        description="Christoffel-function sensor placement for diffusion posterior sampling",
        epilog=EXIT_CODES,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--log-level", default=None, help="Logging level (default: OSP_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Generate a synthetic dataset", epilog=EXIT_CODES,
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    gen.add_argument("--config", help="Experiment config whose dataset section is used")
    gen.add_argument("--dataset", default=DatasetName.BUMP_MANIFOLD.value,
                     help="bump_manifold, union_subspaces, gmm or fixed_bumps")
    gen.add_argument("--n-nodes", type=int)
    gen.add_argument("--n-snapshots", type=int)
    gen.add_argument("--dim", type=int)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--out", help="CSNAP1 output path")
    gen.add_argument("--csv", help="Also write the snapshots as CSV")
    gen.add_argument("--prior-out", help="Also write the prior as JSON")
    gen.set_defaults(handler=cmd_gen)

    score = sub.add_parser("score", help="Empirical Christoffel scores", epilog=EXIT_CODES,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
    score.add_argument("--snapshots", required=True, help="CSNAP1 file, or CSV with node rows (node,x,s0,..) or snapshot rows (header of node ids)")
    score.add_argument("--pair-cap", type=int, default=None)
    score.add_argument("--seed", type=int, default=0)
    score.add_argument("--out", help="Score CSV output path")
    score.set_defaults(handler=cmd_score)

    place_cmd = sub.add_parser("place", help="Offline sensor placement", epilog=EXIT_CODES,
                               formatter_class=argparse.RawDescriptionHelpFormatter)
    place_cmd.add_argument("--snapshots", required=True, help="CSNAP1 file, or CSV with node rows (node,x,s0,..) or snapshot rows (header of node ids)")
    place_cmd.add_argument("--strategy", required=True)
    place_cmd.add_argument("--m", type=int, required=True)
    place_cmd.add_argument("--seed", type=int, default=0)
    place_cmd.add_argument("--score", help="Score CSV from `score`, reused by christoffel_iid strategies")
    place_cmd.add_argument("--pod-modes", type=int, default=10)
    place_cmd.add_argument("--eps-reg", type=float, default=1e-4)
    place_cmd.add_argument("--sigma-eta", type=float, default=None)
    place_cmd.add_argument("--channels", type=int, default=1, help="Place independently in N/channels blocks")
    place_cmd.add_argument("--replacement", action="store_true", help="i.i.d. draws with replacement")
    place_cmd.add_argument("--out", help="Selection CSV (or .json) output path")
    place_cmd.set_defaults(handler=cmd_place)

    recon = sub.add_parser("reconstruct", help="Run one reconstruction with its trace", epilog=EXIT_CODES,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
    recon.add_argument("--config", help="Experiment config (defaults when omitted)")
    recon.add_argument("--strategy")
    recon.add_argument("--m", type=int)
    recon.add_argument("--seed", type=int, default=0, help="Seed index of the cell")
    recon.add_argument("--out", help="Result JSON output path")
    recon.add_argument("--steps", help="Per-step sigma and residual norm CSV (fixed-sensor strategies)")
    recon.set_defaults(handler=cmd_reconstruct)

    bench = sub.add_parser("bench", help="Run a benchmark sweep", epilog=EXIT_CODES,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
    bench.add_argument("--config", required=True)
    bench.add_argument("--out", help="Output directory (overrides the config's output section)")
    bench.add_argument("--traces", action="store_true", help="Write online traces under <out>/traces")
    bench.add_argument("--n-jobs", type=int, default=None)
    bench.set_defaults(handler=cmd_bench)

    sampler = sub.add_parser("sample-prior", help="Unconditional samples", epilog=EXIT_CODES,
                             formatter_class=argparse.RawDescriptionHelpFormatter)
    sampler.add_argument("--prior", help="Prior JSON (weights, means, variances)")
    sampler.add_argument("--config", help="Experiment config whose dataset prior is used")
    sampler.add_argument("--n", type=int, default=16)
    sampler.add_argument("--n-steps", type=int, default=None)
    sampler.add_argument("--seed", type=int, default=0)
    sampler.add_argument("--out", help="Samples CSV output path")
    sampler.set_defaults(handler=cmd_sample_prior)

    serve = sub.add_parser("serve", help="Start the HTTP service")
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    serve.set_defaults(handler=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or get_settings().log_level).upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    try:
        try:
            return args.handler(args)
        except ValidationError as e:
            raise InvalidRequestError(f"Invalid parameters: {e}")
    except OSPError as e:
        logger.error(f"{args.command} failed: {e}")
        print(json.dumps(e.to_payload()), file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception(f"{args.command} failed unexpectedly")
        print(json.dumps({"error": type(e).__name__, "message": str(e), "exit_code": 1}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
