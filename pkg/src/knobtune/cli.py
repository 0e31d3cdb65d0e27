"""Command-line front end.

Subcommands: ``space-validate`` checks a knob catalog, ``run`` executes one
tuning session and writes its NDJSON history, ``compare`` aggregates the
convergence metrics of treatment histories against baselines, and
``report`` dumps best-so-far curves as CSV. Set TUNER_LOG=debug|info|...
for logging verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import metrics
from .evaluators import EvaluatorSpawnError
from .history import read_history
from .session import SessionConfig, SessionError, run_session
from .space import CATEGORICAL, SpaceError, is_hybrid, parse_space

log = logging.getLogger("knobtune")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knobtune",
        description="Black-box configuration tuning over a projected low-dimensional space.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("space-validate", help="parse and validate a space catalog")
    p_validate.add_argument("space", help="path to the JSON space file")

    p_run = sub.add_parser("run", help="run one tuning session")
    p_run.add_argument("--space", required=True, help="path to the JSON space file")
    p_run.add_argument("--evaluator", required=True,
                       help="synthetic:<kind>[:<k=v,...>] or exec:<command>")
    p_run.add_argument("--optimizer", choices=["gp", "random"], default="gp")
    p_run.add_argument("--projection", choices=["hesbo", "rembo", "none"], default="hesbo")
    p_run.add_argument("--dims", type=int, default=16,
                       help="low-dimension d (ignored for --projection none)")
    p_run.add_argument("--bias", type=float, default=0.2,
                       help="special-value bias probability")
    p_run.add_argument("--buckets", type=int, default=10000,
                       help="values per coordinate; 0 disables bucketization")
    p_run.add_argument("--iters", type=int, default=100, help="total iterations")
    p_run.add_argument("--init", type=int, default=10, help="LHS init samples")
    p_run.add_argument("--seed", type=int, default=0)
    direction = p_run.add_mutually_exclusive_group()
    direction.add_argument("--maximize", dest="direction", action="store_const",
                           const="maximize", default="maximize")
    direction.add_argument("--minimize", dest="direction", action="store_const",
                           const="minimize")
    p_run.add_argument("--early-stop", metavar="X,K", default=None,
                       help="stop when best improves < X%% over the last K iterations")
    p_run.add_argument("--timeout", type=float, default=60.0,
                       help="external evaluator timeout in seconds")
    p_run.add_argument("--output", required=True, help="history file to write (NDJSON)")

    p_cmp = sub.add_parser("compare", help="compare treatment histories against baselines")
    p_cmp.add_argument("--baseline", nargs="+", required=True, help="baseline history files")
    p_cmp.add_argument("--treatment", nargs="+", required=True, help="treatment history files")

    p_rep = sub.add_parser("report", help="emit best-so-far convergence curves as CSV")
    p_rep.add_argument("histories", nargs="+", help="history files")
    p_rep.add_argument("--output", default=None, help="CSV path (default: stdout)")
    return parser


def _parse_early_stop(text: str | None):
    if text is None:
        return None
    try:
        x_raw, k_raw = text.split(",")
        return (float(x_raw), int(k_raw))
    except ValueError:
        print(f"--early-stop expects X,K (e.g. 1,10), got {text!r}", file=sys.stderr)
        raise SystemExit(2) from None


def cmd_space_validate(args) -> int:
    try:
        space = parse_space(args.space)
    except (OSError, SpaceError) as e:
        print(f"invalid: {e}", file=sys.stderr)
        return 1
    hybrid = sum(1 for k in space.knobs if is_hybrid(k))
    categorical = sum(1 for k in space.knobs if k.kind == CATEGORICAL)
    print(
        f"ok: {space.dimension} knobs "
        f"({space.dimension - categorical} numeric, {categorical} categorical, "
        f"{hybrid} hybrid)"
    )
    return 0


def cmd_run(args) -> int:
    config = SessionConfig(
        space_path=args.space,
        evaluator=args.evaluator,
        projection=args.projection,
        dims=args.dims,
        bias_p=args.bias,
        buckets=args.buckets if args.buckets > 0 else None,
        n_init=args.init,
        n_iters=args.iters,
        seed=args.seed,
        direction=args.direction,
        optimizer=args.optimizer,
        early_stop=_parse_early_stop(args.early_stop),
        timeout=args.timeout,
    )
    try:
        history = run_session(config, output_path=args.output)
    except EvaluatorSpawnError as e:
        print(f"evaluator failed to start: {e}", file=sys.stderr)
        return 1
    except (SessionError, SpaceError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    sign = 1.0 if config.direction == "maximize" else -1.0
    best = sign * history.final_best
    print(
        f"best={best:.6g} iters={len(history.observations)} stop={history.stop_reason}"
    )
    return 0


def cmd_compare(args) -> int:
    try:
        baselines = [read_history(p) for p in args.baseline]
        treatments = [read_history(p) for p in args.treatment]
        result = metrics.compare_groups(baselines, treatments)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    lo, hi = result.improvement_ci
    print(f"pairs: {result.pairs}")
    print(
        f"final_improvement_%: mean={result.improvement_mean:.2f} "
        f"ci=[{lo:.2f}, {hi:.2f}]"
    )
    if result.speedup_mean is not None:
        slo, shi = result.speedup_ci
        mean_iter = sum(result.match_iterations) / len(result.match_iterations)
        print(
            f"time_to_optimal: speedup_mean={result.speedup_mean:.2f}x "
            f"[{mean_iter:.0f} iter] ci=[{slo:.2f}x, {shi:.2f}x]"
        )
    if result.not_reached:
        print(f"time_to_optimal: {metrics.NOT_REACHED} in {result.not_reached}/{result.pairs} pairs")
    return 0


def cmd_report(args) -> int:
    rows: list[str] = []
    summaries: list[str] = []
    try:
        for path in args.histories:
            history = read_history(path)
            if not history.observations:
                raise ValueError(f"{path}: history has no observations")
            if len(args.histories) > 1:
                rows.append(f"# file: {path}")
            rows.append("iteration,best_value")
            for iteration, best in zip(
                (o.iteration for o in history.observations),
                metrics.best_curve(history),
            ):
                rows.append(f"{iteration},{float(best)!r}")
            summaries.append(
                f"{path}: {len(history.observations)} iterations, "
                f"final best {metrics.best_curve(history)[-1]:.6g}"
            )
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    text = "\n".join(rows) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for line in summaries:
        print(line, file=sys.stderr)
    return 0


_COMMANDS = {
    "space-validate": cmd_space_validate,
    "run": cmd_run,
    "compare": cmd_compare,
    "report": cmd_report,
}


def main(argv=None) -> int:
    level = os.environ.get("TUNER_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    args = _build_parser().parse_args(argv)
    return _COMMANDS[args.command](args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
