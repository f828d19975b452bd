"""Command line entry point: ``llt-lab run | families | verify-fixtures``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .distributions import FAMILIES, FAMILY_DESCRIPTIONS, default_catalog
from .errors import ConfigError, LabError
from .grid import MAX_GRID_BYTES_ENV
from .runner import CHECK_GROUPS, load_config, run

log = logging.getLogger("llt_lab")


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except FileNotFoundError:
        log.error("config file %s not found", args.config)
        return 2
    except ConfigError as exc:
        log.error("%s: %s", args.config, exc)
        return 2
    if args.checks:
        wanted = [c.strip() for c in args.checks.split(",") if c.strip()]
        unknown = [c for c in wanted if c not in CHECK_GROUPS]
        if unknown:
            log.error("unknown check group(s): %s; choose from %s",
                      ", ".join(unknown), ", ".join(CHECK_GROUPS))
            return 2
        cfg = replace(cfg, checks=frozenset(wanted))
    try:
        summary = run(cfg, out_dir=args.out, jobs=max(1, args.jobs),
                      log=None if args.quiet else log.info)
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return 3
    for group in sorted(summary.counts):
        c = summary.counts[group]
        log.info("%-14s pass %4d  fail %4d", group, c["pass"], c["fail"])
    for f in summary.failures:
        log.warning("FAIL %s [%s] n=%s observed=%s required=%s %s", f["check"], f["family"],
                    f["n"], f["observed"], f["required"], f["detail"])
    log.info("%d checks, %d failed; reports in %s", summary.total, summary.failed,
             summary.output_dir)
    return summary.exit_code


def _cmd_families(args) -> int:
    for fid in FAMILIES:
        print(f"{fid:<22s} {FAMILY_DESCRIPTIONS.get(fid, '')}")
    print()
    print("default catalog:")
    for spec in default_catalog():
        flags = []
        if spec.third_moments_vanish:
            flags.append("symmetric")
        if spec.log_concave:
            flags.append("log-concave")
        print(f"  d={spec.dim}  {spec.name:<60s} {' '.join(flags)}")
    return 0


def _cmd_verify_fixtures(args) -> int:
    from .fixtures import verify_fixtures

    ok, lines = verify_fixtures(write=args.write)
    for line in lines:
        print(line)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="llt-lab",
        description="Numerical laboratory for local limit bounds of normalized sums.",
        epilog=f"Set {MAX_GRID_BYTES_ENV} to cap the memory of a single grid (bytes).",
    )
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiments of a config file")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides output_dir)")
    r.add_argument("--checks", help=f"comma list from: {','.join(CHECK_GROUPS)}")
    r.add_argument("--jobs", type=int, default=1, help="worker processes")
    r.add_argument("-q", "--quiet", action="store_true")
    r.set_defaults(func=_cmd_run)
    f = sub.add_parser("families", help="list the distribution catalog")
    f.set_defaults(func=_cmd_families)
    v = sub.add_parser("verify-fixtures",
                       help="recompute the oracle fixtures and compare with the frozen file")
    v.add_argument("--write", action="store_true", help="rewrite the frozen fixture file")
    v.set_defaults(func=_cmd_verify_fixtures)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except LabError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
