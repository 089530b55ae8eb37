"""Smooth and fast runs for L1..L6 and Q2..Q6, raw and regularized.

Prints steps, min h and the relative mass drift of every run.
"""

import time

import numpy as np

from sswme.fv_solver import EXPERIMENTS, SimConfig, simulate
from sswme.model import build_model

BASES = [f"L{n}" for n in range(1, 7)] + [f"Q{n}" for n in range(2, 7)]


def main():
    cfg = SimConfig()
    start = time.time()
    print(f"{'experiment':10s} {'model':6s} {'steps':>6s} {'min h':>10s} {'mass drift':>11s}")
    for experiment, (params, ic) in EXPERIMENTS.items():
        for name in BASES:
            for reg in (False, True):
                m = build_model(name, params, regularized=reg)
                tr = simulate(m, cfg, ic(cfg, m))
                mass = np.array(tr.mass)
                drift = np.max(np.abs(mass - mass[0])) / mass[0]
                print(f"{experiment:10s} {m.name:6s} {len(tr.dts):6d} {tr.min_h:10.6f} {drift:11.2e}")
    print(f"total {time.time() - start:.1f}s")


if __name__ == "__main__":
    main()
