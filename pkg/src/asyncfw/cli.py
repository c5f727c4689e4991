"""Command-line entry point: ``asyncfw <command> [--config PATH] [--out DIR] ...``.

Exit codes: 0 success, 1 verification or reproduction failure (or failed
sweep points), 2 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .errors import ConfigError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="experiment JSON (defaults if omitted)")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
    common.add_argument("--seed", type=int, metavar="N", help="override the run seed")
    common.add_argument("--live", action="store_true", help="use the threaded executor")
    common.add_argument("--quiet", action="store_true", help="print nothing on success")

    ap = argparse.ArgumentParser(prog="asyncfw", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("generate", parents=[common], help="write a problem directory")
    sub.add_parser("run", parents=[common], help="run one experiment")
    sub.add_parser("sweep", parents=[common], help="sweep workers, p, tau or c")
    sub.add_parser("speedup", parents=[common], help="time-to-target speedup table")
    v = sub.add_parser("verify", parents=[common], help="run verification suites")
    v.add_argument("suite", nargs="*", metavar="SUITE",
                   help=f"one or more of {', '.join(harness.SUITES)} (default: all)")
    sub.add_parser("replay-check", parents=[common],
                   help="rerun a manifest (--config, or manifest.json in --out) and compare")
    return ap


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def main(argv=None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    if args.command == "verify":
        bad = [s for s in args.suite if s not in (*harness.SUITES, "all")]
        if bad:
            ap.error(f"unknown suite(s): {', '.join(bad)}")
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "replay-check":
            path = args.config or (Path(args.out or "asyncfw-out") / "manifest.json")
            ok, problems = harness.replay_check(path)
            for p in problems:
                print(f"MISMATCH {p}", file=sys.stderr)
            _say(args, "replay-check: outputs reproduced" if ok else "replay-check: FAILED")
            return EXIT_OK if ok else EXIT_FAIL
        cfg = harness.load_config(args.config if args.config else {}, seed=args.seed,
                                  out=args.out, live=args.live)
        if args.command == "generate":
            _say(args, f"problem written to {harness.cmd_generate(cfg)}")
            return EXIT_OK
        if args.command == "run":
            res = harness.cmd_run(cfg)
            s = res.summary()
            _say(args, f"{s['algorithm']}: {s['iterations']} updates, final relative error "
                       f"{s['final_relative_error']:.4g}, abandoned {s['abandoned']}")
            return EXIT_OK
        if args.command in ("sweep", "speedup"):
            fn = harness.cmd_sweep if args.command == "sweep" else harness.cmd_speedup
            res = fn(cfg)
            for r in res["rows"]:
                _say(args, f"{r['algorithm']} {r['value']:g}: time {r['time_to_target']:.6g} "
                           f"speedup {r['speedup']:.3g}")
            return EXIT_FAIL if res["failed"] else EXIT_OK
        suites = harness.SUITES if not args.suite or "all" in args.suite else tuple(args.suite)
        reports = harness.cmd_verify(cfg, suites)
        for r in reports:
            for line in r.lines():
                if not args.quiet or line.startswith("FAIL"):
                    print(line)
        return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
