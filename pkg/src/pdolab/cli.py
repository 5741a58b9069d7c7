"""Command line: ``pdolab verify <scenario> --config c.json --out dir`` and ``pdolab solve ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .experiments import SCENARIOS, ExperimentConfig, run, run_solve
from .fieldio import write_field

log = logging.getLogger("pdolab")


def _load(path: str | None, scenario: str) -> ExperimentConfig:
    data = json.loads(Path(path).read_text()) if path else {}
    data["scenario"] = scenario
    return ExperimentConfig.from_dict(data)


def cmd_verify(args) -> int:
    cfg = _load(args.config, args.scenario)
    if args.workers is not None:
        cfg.workers = args.workers
    result = run(cfg)
    report = result[1] if isinstance(result, tuple) else result
    out = Path(args.out or cfg.output or "out")
    jpath, cpath = report.write(out)
    if isinstance(result, tuple) and args.dump_field:
        write_field(args.dump_field, result[0])
    print(report.summary())
    log.info("wrote %s and %s", jpath, cpath)
    return 0 if report.passed else 1


def cmd_solve(args) -> int:
    cfg = _load(args.config, "solve")
    u, report = run_solve(cfg)
    if args.dump_field:
        path = write_field(args.dump_field, u, symbol=cfg.symbol.to_dict() if cfg.symbol else None)
        log.info("wrote field %s", path)
    if args.out:
        report.write(args.out)
    print(report.summary())
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdolab", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a verification scenario and write report.json / report.csv")
    v.add_argument("scenario", choices=SCENARIOS)
    v.add_argument("--config", help="JSON experiment config (defaults are used when omitted)")
    v.add_argument("--out", help="output directory")
    v.add_argument("--workers", type=int)
    v.add_argument("--dump-field", help="binary dump of the solution (solve scenario only)")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("solve", help="solve the Cauchy problem and dump the field")
    s.add_argument("--config", help="JSON config with symbol / grid / forcing")
    s.add_argument("--dump-field", help="path of the binary field dump")
    s.add_argument("--out", help="optional report directory")
    s.set_defaults(func=cmd_solve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
