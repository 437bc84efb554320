"""Command-line entry point: ``phasecg run|validate|oracle|version``."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .grid import ConfigurationError
from .io import GridFormatError
from .states import InvalidStateError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="phasecg", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a configuration and write artifacts")
    r.add_argument("config")
    r.add_argument("-o", "--output", help="override [output] directory")
    v = sub.add_parser("validate", help="parse and check a configuration")
    v.add_argument("config")
    o = sub.add_parser("oracle", help="run a named reference oracle and print its table")
    o.add_argument("name", nargs="?", help="oracle name; omit to list")
    sub.add_parser("version", help="print the version")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "version":
            print(f"phasecg {__version__}")
            return EXIT_OK
        if args.command == "oracle":
            return _oracle(args.name)
        cfg = load_config(args.config)
        if args.command == "validate":
            from .runner import build_initial, build_potential
            grid = cfg.grid()
            if cfg["initial"]["kind"] != "gaussian-sweep":
                build_initial(cfg, grid, build_potential(cfg, grid))
            print(json.dumps(cfg.manifest(), indent=2, sort_keys=True))
            return EXIT_OK
        from .runner import run
        manifest = run(cfg, args.output)
        print(f"wrote {len(manifest['outputs']) + 1} files to "
              f"{args.output or cfg['output']['directory']}")
        return EXIT_OK
    except (ConfigError, ConfigurationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, GridFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvalidStateError, FloatingPointError, ArithmeticError,
            np.linalg.LinAlgError, ValueError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def _oracle(name) -> int:
    from .oracles import ORACLES, run_oracle
    if not name:
        print("\n".join(sorted(ORACLES)))
        return EXIT_OK
    if name not in ORACLES:
        print(f"unknown oracle {name!r}; available: {', '.join(sorted(ORACLES))}",
              file=sys.stderr)
        return EXIT_CONFIG
    result = run_oracle(name)
    print(result.table())
    return EXIT_OK if result.passed else EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
