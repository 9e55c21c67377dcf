"""Command line entry point: ``dklms run`` and ``dklms dump-stream``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness import ConfigError, emit_results, load_config, run_experiment, trial_stream
from .sim import write_stream_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_IO = 4

log = logging.getLogger("dklms")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", required=True, help="YAML experiment config")
    p.add_argument("--seed", type=int, help="master seed (config key: seed)")
    p.add_argument("--trials", type=int, help="Monte-Carlo trials (config key: trials)")
    p.add_argument("--steps", type=int, help="iterations per trial (config key: steps)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dklms", description="Diffusion kernel LMS experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo experiment and write CSV + manifest")
    _common(run)
    run.add_argument("--out", dest="output_dir", help="output directory (config key: output_dir)")
    run.add_argument("--algorithms", help="comma-separated list (config key: algorithms)")
    run.add_argument("--workers", type=int, help="worker processes (config key: workers)")

    dump = sub.add_parser("dump-stream", help="write the generated observation streams as CSV")
    _common(dump)
    dump.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    return parser


def _overrides(args) -> dict:
    keys = ("seed", "trials", "steps", "output_dir", "workers")
    over = {k: getattr(args, k, None) for k in keys}
    if getattr(args, "algorithms", None):
        over["algorithms"] = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    return over


def _run(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    log.info("running %s: %d trials x %d steps, algorithms %s", cfg.name, cfg.trials, cfg.steps,
             ",".join(cfg.algorithms))
    result = run_experiment(cfg)
    try:
        paths = emit_results(result, cfg.output_dir)
    except OSError as err:
        print(f"error: cannot write results to {cfg.output_dir}: {err}", file=sys.stderr)
        return EXIT_IO
    for name, trace in result.traces.items():
        line = f"{name:18s} steady-state MSE {trace.steady_state_mse:.6g}"
        if trace.regret_slope is not None:
            line += f"  regret slope {trace.regret_slope:.3f}"
        if trace.diverged:
            line += f"  DIVERGED after {len(trace.mse)} steps"
        print(line)
    print(f"wrote {paths['csv']}")
    if result.diverged:
        print("error: numerical divergence, traces truncated", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


def _dump(args) -> int:
    cfg = load_config(args.config, _overrides(args))
    streams = [trial_stream(cfg, t) for t in range(cfg.trials)]
    target = "/dev/stdout" if args.out == "-" else args.out
    try:
        if args.out != "-":
            Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        write_stream_csv(target, streams)
    except OSError as err:
        print(f"error: cannot write {args.out}: {err}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args) if args.command == "run" else _dump(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
