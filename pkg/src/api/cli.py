"""
Command-line entry point for the simulator.

Verbs:
    run --preset <name> | --config <file>  [--trials N] [--horizon T] [--seed S]
        [--out DIR] [--record-every K] [--workers W]
    list-presets
    verify [--seed S]

Exit status: 0 on success, 2 on usage errors, 1 on any other failure.
Logs go to stderr as JSON lines; command output goes to stdout.
"""
import argparse
import json
import sys
from typing import List, Optional

from src.pipeline.experiment import execute
from src.pipeline.presets import list_presets, resolve
from src.pipeline.verification import run_checks
from src.utils.errors import SimulationError, UsageError, format_error_report
from src.utils.logging import get_logger


logger = get_logger(__name__)


class UsageParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting; subparsers inherit it."""

    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = UsageParser(
        prog='dcsmd',
        description='Distributed composite stochastic mirror descent simulator',
    )
    verbs = parser.add_subparsers(dest='verb', metavar='{run,list-presets,verify}')

    run_parser = verbs.add_parser('run', help='Run a preset or a TOML config file')
    source = run_parser.add_mutually_exclusive_group()
    source.add_argument('--preset', help='Preset name (see list-presets)')
    source.add_argument('--config', help='TOML experiment file')
    run_parser.add_argument('--trials', type=int, help='Independent trials per variant')
    run_parser.add_argument('--horizon', type=int, help='Iterations T per trial')
    run_parser.add_argument('--seed', type=int, help='Master seed')
    run_parser.add_argument('--out', help='Output directory')
    run_parser.add_argument('--record-every', type=int, help='Recording stride')
    run_parser.add_argument('--workers', type=int, help='Worker processes (default: DCSMD_WORKERS or CPU count)')

    verbs.add_parser('list-presets', help='List presets with descriptions')

    verify_parser = verbs.add_parser('verify', help='Run the invariant and diagnostic suites')
    verify_parser.add_argument('--seed', type=int, default=0, help='Seed of the diagnostic streams')
    return parser


def handle_run(args: argparse.Namespace) -> int:
    """Resolve, override and execute an experiment; print the artifact paths."""
    config = resolve(args.preset, args.config).with_overrides(
        trials=args.trials,
        horizon=args.horizon,
        seed=args.seed,
        output_dir=args.out,
        record_every=args.record_every,
    )
    outcome = execute(config, workers=args.workers)
    print(f"run_id: {outcome.run_id}")
    for variant, details in outcome.observations['variants'].items():
        final = details['final']
        print(f"{variant}: median={final['median']:.6g} max={final['max']:.6g} min={final['min']:.6g}")
    for name, path in outcome.paths.items():
        print(f"wrote {name}: {path}")
    return 0


def handle_list_presets(args: argparse.Namespace) -> int:
    """Print preset names and descriptions."""
    presets = list_presets()
    width = max(len(name) for name, _ in presets)
    for name, description in presets:
        print(f"{name.ljust(width)}  {description}")
    return 0


def handle_verify(args: argparse.Namespace) -> int:
    """Run every check and print a pass/fail table; 1 if any check fails."""
    results = run_checks(seed=args.seed)
    width = max(len(r.name) for r in results)
    for result in results:
        status = 'PASS' if result.passed else 'FAIL'
        print(f"{result.name.ljust(width)}  {status}  {result.detail}")
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


HANDLERS = {
    'run': handle_run,
    'list-presets': handle_list_presets,
    'verify': handle_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments and dispatch to the verb handler.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        Process exit status
    """
    try:
        args = build_parser().parse_args(argv)
        if args.verb is None:
            raise UsageError("Missing verb; expected one of: run, list-presets, verify")
        return HANDLERS[args.verb](args)
    except SimulationError as e:
        if e.exit_code != 2:
            logger.error(f"Command failed: {e.code}", context=e.to_dict(), exc_info=True)
        print(json.dumps(format_error_report(e), indent=2), file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.error("Unexpected error", context={'error_type': type(e).__name__}, exc_info=True)
        print(json.dumps(format_error_report(e), indent=2), file=sys.stderr)
        return 1
