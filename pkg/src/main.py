"""CLI entry point for the nullgeo null-geometry toolkit."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .constants import EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE, SCENARIO_NAMES, TOOLKIT_VERSION
from .errors import NullGeoError, UsageError
from .loader import ScenarioConfig, load_config_file
from .report import write_failure_report, write_report
from .scenarios import ScenarioResult, run_scenario

logger = logging.getLogger(__name__)


# ── CLI helpers ───────────────────────────────────────────────────────────

def _configure_logging(debug: bool = False) -> None:
    """Set up root logger with a readable format."""
    level = logging.DEBUG if debug else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(levelname)-7s %(message)s",
        force=True,
    )


def _safe_print(text: str) -> None:
    """Print with a fallback for consoles that cannot render Unicode."""
    try:
        print(text)
    except UnicodeEncodeError:
        print(text.encode("ascii", errors="replace").decode("ascii"))


def _configure_windows_console() -> None:
    """Enable UTF-8 output on Windows consoles."""
    if sys.platform != "win32":
        return
    try:
        import os
        os.system("chcp 65001 > nul 2>&1")
        if hasattr(sys.stdout, "reconfigure"):
            sys.stdout.reconfigure(encoding="utf-8", errors="replace")
            sys.stderr.reconfigure(encoding="utf-8", errors="replace")
    except Exception:
        pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nullgeo",
        description="Null-geometry numerics: geodesics, congruences, null mean curvature "
                    "and maximum-principle checks on catalog spacetimes.",
        epilog="""\
Examples:
  %(prog)s focusing-sweep --config input/scenarios/focusing_minkowski.cfg
  %(prog)s splitting-verify --config input/scenarios/splitting_schwarzschild.cfg --out runs/horizon
  %(prog)s solve --config input/scenarios/solve_cone.cfg --plot
""",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("scenario", choices=SCENARIO_NAMES, help="Scenario to run")
    parser.add_argument("--config", required=True, help="Scenario config file (key = value sections)")
    parser.add_argument("--out", default=None,
                        help="Output directory (default: the config's 'output' key)")
    parser.add_argument("--plot", action="store_true", help="Also write SVG plots")
    parser.add_argument("--debug", action="store_true", help="Verbose logging")
    parser.add_argument("--version", action="version", version=f"%(prog)s {TOOLKIT_VERSION}")
    return parser


def _print_result(result: ScenarioResult, out_dir: Path) -> None:
    _safe_print(f"\nSummary ({result.scenario}):")
    for check in result.checks:
        mark = "ok  " if check.passed else "FAIL"
        _safe_print(f"   [{mark}] {check.name}: {check.value:.6g} (limit {check.limit:.6g})")
        if check.detail and not check.passed:
            _safe_print(f"          {check.detail}")
    _safe_print(f"   Output directory: {out_dir}")


# ── main ──────────────────────────────────────────────────────────────────

def run(argv: list[str] | None = None) -> int:
    """Parse *argv*, run one scenario, write its report; return the exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(debug=args.debug)

    config_path = Path(args.config).resolve()
    _safe_print(f"Scenario:       {args.scenario}")
    _safe_print(f"Config:         {config_path}")

    try:
        config: ScenarioConfig = load_config_file(config_path, args.scenario)
    except FileNotFoundError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except UsageError as exc:
        logger.error("Config error: %s", exc)
        return exc.exit_code

    out_dir = Path(args.out or config["output"]).resolve()
    plot = args.plot or config["plot"]
    _safe_print(f"Output dir:     {out_dir}")
    if args.debug:
        _safe_print("Debug mode:     ON")

    started = time.perf_counter()
    try:
        result = run_scenario(config)
    except NullGeoError as exc:
        logger.error("[%s] %s: %s", config.scenario, type(exc).__name__, exc)
        write_failure_report(config, out_dir, exc, wall_clock=time.perf_counter() - started)
        return exc.exit_code

    write_report(result, config, out_dir, plot=plot, wall_clock=time.perf_counter() - started)
    _print_result(result, out_dir)
    if not result.passed:
        _safe_print(f"{len(result.failed_checks)} check(s) failed")
        return EXIT_CHECK_FAILED
    _safe_print("All checks passed!")
    return EXIT_OK


def main() -> None:
    _configure_windows_console()
    sys.exit(run())


if __name__ == "__main__":
    main()
