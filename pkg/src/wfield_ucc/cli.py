"""Command-line runner: ``wfield-ucc {spectrum,gaps,validate} --config FILE``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config, with_overrides
from .experiments import run_gaps, run_spectrum, run_validate, write_json, write_table

log = logging.getLogger("wfield_ucc")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wfield-ucc", description="w-field UCCSD spectra, gaps and checks")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (
        ("spectrum", "projection-extracted eigenenergies against exact diagonalization"),
        ("gaps", "neutral and charge gaps by finite weight differences"),
        ("validate", "invariant and Trotter-step checks, pass/fail JSON"),
    ):
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True, help="INI experiment file")
        s.add_argument("--out", help="output directory (overrides [output] dir)")
        s.add_argument("--seed", type=int, help="optimizer seed (overrides [experiment] seed)")
        s.add_argument("--jobs", type=int, help="worker processes over the U grid")
        s.add_argument("--strict", action="store_true", help="exit 1 when any optimization did not converge")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = with_overrides(load_config(args.config), args.out, args.seed, args.jobs, args.strict)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        report = run_validate(cfg)
        path = write_json(report, f"{cfg.out_dir}/{cfg.experiment_id}_validate.json")
        for c in report["checks"]:
            print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: {c['value']:.3e} ({c['detail']})")
        print(f"wrote {path}")
        return 0 if report["passed"] else 1

    table = run_spectrum(cfg) if args.command == "spectrum" else run_gaps(cfg)
    csv_path, json_path = write_table(table, cfg, args.command)
    print(f"wrote {csv_path} and {json_path} ({len(table)} rows)")
    unconverged = [r for r in table.rows if not r.converged]
    if unconverged:
        log.warning("%d rows come from unconverged or undefined results", len(unconverged))
        if cfg.strict:
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
