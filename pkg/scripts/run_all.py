"""Run every experiment through the command line front end and print the check lines.

    python scripts/run_all.py [--out runs] [--set key=value ...]
"""

import argparse
import sys
from pathlib import Path

from lossreg.cli import main
from lossreg.config import EXPERIMENT_NAMES


def run(out: Path, overrides: list[str]) -> int:
    worst = 0
    for name in EXPERIMENT_NAMES:
        print(f"== {name}")
        argv = [name, "--out", str(out / name)]
        for o in overrides:
            argv += ["--set", o]
        code = main(argv)
        print(f"   exit {code}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("runs"))
    p.add_argument("--set", dest="overrides", action="append", default=[])
    a = p.parse_args()
    sys.exit(run(a.out, a.overrides))
