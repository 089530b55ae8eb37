"""Fast-wave experiment: moment models and the reference at t_end, plus velocity profiles.

For every basis a run directory is written with the same layout as the
``simulate`` subcommand, followed by profiles at the requested x positions.
"""

import argparse
from pathlib import Path

from sswme.cli import main as cli

XS = "-0.105,0.025"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bases", default="L2,L4,Q2,Q4,Leg3")
    ap.add_argument("--t-end", default="2")
    ap.add_argument("--nx", default="200")
    ap.add_argument("--out", default="results/fast")
    args = ap.parse_args()

    out = Path(args.out)
    common = ["--experiment", "fast", "--t-end", args.t_end, "--nx", args.nx]
    runs = [("reference", ["reference", *common, "--out", str(out / "reference")])]
    for b in args.bases.split(","):
        runs.append((b, ["simulate", "--basis", b, *common, "--out", str(out / b)]))
    for name, argv in runs:
        if cli(argv) != 0:
            raise SystemExit(f"{name} failed")
        cli(["profiles", "--run", argv[-1], f"--x={XS}"])


if __name__ == "__main__":
    main()
