"""Hyperbolicity maps in scaled coefficients.

L2 and Q2 on the full (s1, s2) plane; L3 and Q3 on the plane spanned by the
linear-profile direction and one transverse direction.
"""

import argparse

from sswme.cli import main as cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolution", default="201")
    ap.add_argument("--out", default="results/hyperbolicity")
    args = ap.parse_args()
    for name, lo, hi in (("L2", -1, 1), ("Q2", -1, 1), ("L3", -0.5, 0.5), ("Q3", -0.5, 0.5)):
        for reg in ([], ["--regularized"]):
            tag = name + ("_reg" if reg else "")
            cli(["hyperbolicity-scan", name, "--range", str(lo), str(hi), "--resolution", args.resolution, *reg, "--out", f"{args.out}/{tag}"])
    cli(["catalogue", "--out", f"{args.out}/catalogue"])


if __name__ == "__main__":
    main()
