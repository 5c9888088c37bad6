"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 rejected step, 4 verify failure.
"""

import argparse
import json
import logging
import sys

from . import baselines, svgd, theory, verify
from .config import load_config
from .targets import ConfigurationError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REJECTED = 3
EXIT_VERIFY = 4

log = logging.getLogger("relaxed_svgd")


def _build_parser():
    parser = argparse.ArgumentParser(prog="relaxed-svgd", description="SVGD under (L0, L1) smoothness")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run SVGD from a JSON config")
    p.add_argument("--config", required=True)

    p = sub.add_parser("constants", help="print the theory report for a config")
    p.add_argument("--config", required=True)
    p.add_argument("--json", action="store_true", help="emit JSON instead of key=value lines")

    p = sub.add_parser("verify", help="run the numerical inequality checks")
    p.add_argument("--filter", default=None, help="only checks whose name contains this string")

    p = sub.add_parser("baseline-lmc", help="run unadjusted Langevin chains from a JSON config")
    p.add_argument("--config", required=True)
    return parser


def _constants(config):
    target = config.build_target()
    spec = config.build_kernel(svgd.Ensemble.standard_normal(
        config.particles.n, config.particles.d, config.particles.seed
    ).positions)
    profile = config.build_profile(target)
    if profile is None:
        raise ConfigurationError("tp_profile: no T_p profile available for this target; configure one")
    return theory.theory_report(
        target, spec, profile, alpha=config.step_policy.alpha, epsilon=config.step_policy.epsilon
    )


def _print_report(report, as_json):
    data = report.to_dict()
    if as_json:
        print(json.dumps(data, indent=2, sort_keys=False))
        return
    width = max(len(k) for k in data)
    for key, value in data.items():
        if isinstance(value, float):
            value = format(value, ".17g")
        print(f"{key.ljust(width)} = {value}")


def _finish(result, kind):
    print(f"{kind}: {result.report['status']} after {result.report['steps_completed']} steps, "
          f"final ksd2 {result.report['final_ksd2']:.6g}")
    return EXIT_OK if result.ok else EXIT_REJECTED


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        results = verify.run_checks(name_filter=args.filter)
        if not results:
            print(f"no check matches {args.filter!r}", file=sys.stderr)
            return EXIT_VERIFY
        return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY
    try:
        config = load_config(args.config)
        if args.command == "constants":
            _print_report(_constants(config), args.json)
            return EXIT_OK
        if args.command == "run":
            return _finish(svgd.run(config), "svgd")
        return _finish(baselines.run_lmc(config), "lmc")
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # bad THREADS value or an out-of-range constant
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
