"""Command-line front end.

Subcommands: average, gkr, momentum, action, phi-set, affine-check, suite.
Configuration precedence: config file < GROUPOIDLAB_* environment variables
< command-line flags.  Reports are byte-identical across runs with the same
resolved config; timing goes to stderr only.

Exit codes: 0 success/converged, 2 defect too large, 3 stalled,
4 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import scenarios as sc
from . import suite as suite_mod

ENV_PREFIX = "GROUPOIDLAB_"

EXIT_OK = 0
EXIT_DEFECT_TOO_LARGE = 2
EXIT_STALLED = 3
EXIT_CONFIG_ERROR = 4


def _env(name: str):
    return os.environ.get(ENV_PREFIX + name.upper())


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise sc.ConfigError(f"config file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise sc.ConfigError(f"config file is not valid JSON: {exc}") from exc


def _resolve(args) -> tuple[dict, Path, str]:
    config = _load_config(args.config)
    seed = args.seed if args.seed is not None else _env("seed")
    if seed is not None:
        config["seed"] = int(seed)
    out = args.out or _env("out") or "."
    fmt = args.format or _env("format") or "csv"
    threads = args.threads if args.threads is not None else _env("threads")
    if threads is not None:
        config.setdefault("threads", int(threads))
    return config, Path(out), fmt


def _write_outputs(out_dir: Path, report: dict, tables: dict, fmt: str,
                   report_name: str = "report.json") -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / report_name).write_text(sc.canonical_json(report) + "\n")
    if fmt != "json":
        for name, text in tables.items():
            (out_dir / name).write_text(text)


def _run_driver(kind: str, args) -> int:
    try:
        config, out_dir, fmt = _resolve(args)
        driver = sc.DRIVERS[kind]
        t0 = time.monotonic()
        report, tables = driver(config)
        print(f"{kind}: done in {time.monotonic() - t0:.2f}s", file=sys.stderr)
        _write_outputs(out_dir, report, tables, fmt)
    except sc.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    code = sc.exit_code_for(report)
    if code == EXIT_STALLED:
        print("warning: iteration stalled above tolerance", file=sys.stderr)
    elif code == EXIT_DEFECT_TOO_LARGE:
        print("error: start defect too large for the averaging gate", file=sys.stderr)
    return code


def _run_suite(args) -> int:
    try:
        config, out_dir, fmt = _resolve(args)
        if args.manifest:
            manifest = _load_config(args.manifest)
        else:
            manifest = suite_mod.default_manifest()
        t0 = time.monotonic()
        summary = suite_mod.run_suite(manifest)
        print(f"suite: done in {time.monotonic() - t0:.2f}s", file=sys.stderr)
        _write_outputs(out_dir, summary, {}, fmt, report_name="suite_summary.json")
    except sc.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    for entry in summary["criteria"]:
        mark = "PASS" if entry["passed"] else "FAIL"
        print(f"[{mark}] {entry['name']}")
    return EXIT_OK if summary["all_passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupoidlab",
        description="Groupoid averaging and momentum-convexity experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help="output directory (default: cwd)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--threads", type=int, help="recorded thread cap")
        p.add_argument("--format", choices=["json", "csv"],
                       help="json: report only; csv: report plus tables")

    for name in ("average", "gkr", "momentum", "action", "phi-set", "affine-check"):
        add_common(sub.add_parser(name))
    suite_p = sub.add_parser("suite")
    add_common(suite_p)
    suite_p.add_argument("--manifest", help="criteria manifest (default: built-in matrix)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "suite":
        return _run_suite(args)
    return _run_driver(args.command, args)


if __name__ == "__main__":
    sys.exit(main())
