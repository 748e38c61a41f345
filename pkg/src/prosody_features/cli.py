"""Command line entry: one batch run per configuration file."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .annot import AnnotationError
from .config import ConfigError, load_config
from .export import ArchiveError
from .pipeline import run
from .sigio import SignalError

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="prosody-features",
        description="Batch prosodic annotation and prosody feature extraction.")
    p.add_argument("-c", "--config", required=True, help="JSON configuration file")
    p.add_argument("--from-scratch", action="store_true",
                   help="ignore any archived results and recompute every flagged stage")
    p.add_argument("--seed", type=int, default=None, help="random seed (default: config seed)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for per-file stages")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    path = Path(args.config).resolve()
    try:
        cfg = load_config(path)
        res = run(cfg, path.parent, seed=args.seed, n_jobs=max(1, args.jobs),
                  from_scratch=args.from_scratch)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, AnnotationError, SignalError, ArchiveError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_IO
    for p in res.outputs:
        print(p)
    return res.status


if __name__ == "__main__":
    sys.exit(main())
