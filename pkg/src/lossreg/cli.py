"""Command line front end.

    lossreg <experiment> [--config FILE] [--set key=value ...] [--out DIR]

Writes ``report.csv``, ``summary.json``, ``manifest.json`` and ``fields/`` into
the output directory. Exit status: 0 pass, 2 assertion failure, 3 configuration
error, 4 numerical divergence.
"""

from __future__ import annotations

import argparse
import logging
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import io
from .config import EXPERIMENT_NAMES, ConfigError, load_file, parse_override, resolve
from .inflation import ScalingError
from .limit import HorizonError as LimitHorizonError
from .inflation import HorizonError as TauHorizonError
from .nls import DivergenceError
from .wavepacket import PhaseSpaceField, WavePacketConfigError

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3, 4

log = logging.getLogger("lossreg")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lossreg", description="Loss-of-regularity simulation experiments.")
    p.add_argument("experiment", choices=EXPERIMENT_NAMES)
    p.add_argument("--config", type=Path, help="TOML file, or a manifest.json from an earlier run")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable; wins over the file)")
    p.add_argument("--out", type=Path, default=None, help="output directory (default runs/<experiment>)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _dump_fields(out: Path, fields: dict) -> list[str]:
    written = []
    for name, item in fields.items():
        if isinstance(item, PhaseSpaceField):
            path = out / "fields" / f"{name}.lrps"
            io.write_phase_space(path, item.x_grid, item.cfg.xi_points, item.cfg.xi_extent, item.cfg.eps,
                                 item.values)
        else:
            grid, values = item
            path = out / "fields" / f"{name}.lrfd"
            io.write_field(path, grid, values)
        written.append(str(path.relative_to(out)))
    return written


def main(argv=None) -> int:
    from .experiments import run_experiment

    started = time.perf_counter()
    manifest = {"tool": "lossreg", "version": tool_version(), "python": platform.python_version(),
                "numpy": np.__version__, "status": "failed"}
    out = None
    try:
        args = build_parser().parse_args(argv)
        out = args.out or Path("runs") / args.experiment
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        settings = load_file(args.config) if args.config else {}
        settings.pop("experiment", None)
        for text in args.overrides:
            k, v = parse_override(text)
            settings[k] = v
        cfg = resolve(settings, args.experiment)
        out.mkdir(parents=True, exist_ok=True)
        manifest["config"] = cfg.as_dict()
        outcome = run_experiment(cfg)
    except (ConfigError, ScalingError, WavePacketConfigError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return _finish(out, manifest, EXIT_CONFIG, started, str(exc))
    except (DivergenceError, LimitHorizonError, TauHorizonError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return _finish(out, manifest, EXIT_DIVERGED, started, str(exc))
    except ValueError as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return _finish(out, manifest, EXIT_CONFIG, started, str(exc))

    io.write_csv(out / "report.csv", outcome.header, outcome.rows)
    summary = dict(outcome.summary, checks=[c.as_dict() for c in outcome.checks], passed=outcome.passed)
    io.write_json(out / "summary.json", summary)
    manifest["fields"] = _dump_fields(out, outcome.fields) if cfg.write_fields else []
    manifest["stages"] = outcome.timings
    manifest["checks"] = [c.as_dict() for c in outcome.checks]
    for c in outcome.checks:
        print(c.line())
    code = EXIT_OK if outcome.passed else EXIT_ASSERT
    return _finish(out, manifest, code, started)


def _finish(out, manifest, code, started, error=None) -> int:
    manifest["exit_code"] = code
    manifest["status"] = {EXIT_OK: "passed", EXIT_ASSERT: "assertion-failed"}.get(code, "failed")
    if error:
        manifest["error"] = error
    manifest["wall_clock_s"] = time.perf_counter() - started
    if out is not None:
        io.write_json(Path(out) / "manifest.json", manifest)
    return code


if __name__ == "__main__":
    sys.exit(main())
