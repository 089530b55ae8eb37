"""Smooth-wave relative L1 errors against the reference solver for L2..L6 and Q2..Q6.

Writes errors.csv (raw and regularized) and prints the orderings that the
acceptance suite checks.
"""

import argparse
from pathlib import Path

from sswme.cli import FMT, error_table
from sswme.fv_solver import SimConfig

BASES = [f"L{n}" for n in range(2, 7)] + [f"Q{n}" for n in range(2, 7)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nx", type=int, default=200)
    ap.add_argument("--nzeta", type=int, default=60)
    ap.add_argument("--t-end", type=float, default=2.0)
    ap.add_argument("--out", default="results/convergence")
    args = ap.parse_args()

    cfg = SimConfig(nx=args.nx, t_end=args.t_end)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "errors.csv", "w") as fh:
        fh.write("basis,N,regularized,err_h,err_um,err_alpha1,err_alpha2\n")
        for reg in (False, True):
            rows = error_table("smooth", BASES, reg, cfg, args.nzeta)
            for name, N, e in rows:
                fh.write(f"{name},{N},{int(reg)}," + ",".join(FMT % v for v in e) + "\n")
                print(f"{'H' if reg else ' '}{name:4s} h {e[0]:.3e}  u_m {e[1]:.3e}  a1 {e[2]:.3e}  a2 {e[3]:.3e}")
            err = {name: e for name, _, e in rows}
            for fam in "LQ":
                for k, label in ((0, "h"), (1, "u_m")):
                    seq = [err[f"{fam}{n}"][k] for n in (2, 4, 6)]
                    print(f"  {fam}2 >= {fam}4 >= {fam}6 in {label}: {seq[0] >= seq[1] >= seq[2]}")
            print("  Q_N <= L_N in alpha_1:", all(err[f"Q{n}"][2] <= err[f"L{n}"][2] for n in (2, 4, 6)))


if __name__ == "__main__":
    main()
