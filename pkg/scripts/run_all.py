"""Run every config in configs/ and write one report directory per config."""
from __future__ import annotations

import argparse
import logging
from pathlib import Path

from pdolab.experiments import ExperimentConfig, run

ROOT = Path(__file__).resolve().parents[1]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--configs", default=str(ROOT / "configs"))
    parser.add_argument("--out", default=str(ROOT / "out"))
    parser.add_argument("--only", nargs="*", help="config stems to run")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    failed = []
    for path in sorted(Path(args.configs).glob("*.json")):
        if args.only and path.stem not in args.only:
            continue
        cfg = ExperimentConfig.load(path)
        result = run(cfg)
        report = result[1] if isinstance(result, tuple) else result
        report.write(Path(args.out) / path.stem)
        logging.info("%s: %s (%.1f s)", path.stem, "pass" if report.passed else "FAIL",
                     report.metadata.get("runtime_s", 0.0))
        if not report.passed:
            failed.append(path.stem)
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
