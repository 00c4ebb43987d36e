"""``polytope-scope <command> --config <path> [--out <dir>] [--seed N]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from pydantic import ValidationError

from .config import load_config
from .errors import PolytopeScopeError
from .pipeline import COMMANDS, run_command

log = logging.getLogger("polytope_scope")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polytope-scope",
                                description="Polyhedral decompositions and topological signatures of ReLU networks.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=None, help="run directory (overrides out_dir)")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _error_report(command, exc) -> dict:
    report = {"status": "error", "command": command, "error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ValidationError):
        report["details"] = [{"loc": ".".join(str(x) for x in e["loc"]), "msg": e["msg"]} for e in exc.errors()]
        report["message"] = f"{exc.error_count()} configuration error(s)"
    return report


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, out_dir=args.out, seed=args.seed)
        paths, manifest = run_command(args.command, cfg)
    except (PolytopeScopeError, ValidationError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(json.dumps(_error_report(args.command, exc), sort_keys=True), file=sys.stderr)
        return 2
    print(json.dumps({"status": "ok", "command": args.command, "manifest": str(manifest),
                      "outputs": [str(p) for p in paths]}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
