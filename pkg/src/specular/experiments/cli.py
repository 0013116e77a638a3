"""Command line front end for the verification suites.

    specular list-suites
    specular verify <suite> --config path [--seed N] [--out report.json]
                             [--csv samples.csv] [--jobs N]

Exit codes: 0 every mandatory check passed, 1 a bound was violated,
2 usage or configuration error.  The JSON report is byte-identical across
repeated runs with the same configuration and seed; timing goes to stderr.
"""

from __future__ import annotations

import argparse
import sys

from .config import SUITES, ConfigError, load_config
from .suites import run_suite


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specular",
        description="Numerical verification suites for billiard characteristics "
                    "outside a convex obstacle and hard-sphere collision bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list-suites", help="print the available suite names")
    verify = sub.add_parser("verify", help="run one verification suite")
    verify.add_argument("suite", help="suite name (see list-suites)")
    verify.add_argument("--config", required=True, help="experiment config file")
    verify.add_argument("--seed", type=int, default=None,
                        help="override the seed from the config")
    verify.add_argument("--out", default=None, help="write the JSON report here")
    verify.add_argument("--csv", default=None, help="write per-sample rows here")
    verify.add_argument("--jobs", type=int, default=1,
                        help="parallel workers for sample loops")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "list-suites":
        for name in SUITES:
            print(name)
        return 0

    if args.suite not in SUITES:
        print(f"error: unknown suite {args.suite!r}; run list-suites", file=sys.stderr)
        return 2
    try:
        config = load_config(args.config, args.suite, args.seed)
        report = run_suite(config, jobs=max(1, args.jobs))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    payload = report.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    if args.csv:
        report.write_csv(args.csv)

    n_fail = sum(1 for r in report.rows if r.applicable and not r.passed)
    n_inap = sum(1 for r in report.rows if not r.applicable)
    print(f"{report.suite}: {report.verdict} "
          f"({len(report.rows)} rows, {n_fail} failed, {n_inap} inapplicable, "
          f"{report.wall_time_s:.2f}s)", file=sys.stderr)
    return 0 if report.verdict == "pass" else 1


if __name__ == "__main__":
    raise SystemExit(main())
