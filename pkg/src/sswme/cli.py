"""Command-line front end.

Every subcommand writes ``<out>/manifest`` (JSON) next to its CSV outputs.
CSV files have a single header line and 17 significant digits, so reruns
from the same manifest are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import metadata
from pathlib import Path

import numpy as np

from . import fv_solver as fv
from . import reference_solver as ref
from .hyperbolicity import find_witness, scan_region
from .model import Model, PhysicalParams, build_model, primitive
from .moment_tensors import format_tensors, tensors_for
from .spline_basis import BasisError, parse_basis

FMT = "%.17g"


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunManifest:
    subcommand: str
    basis: str | None = None
    regularized: bool = False
    params: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    determinism: str = "no randomness except explicit seeds in options; outputs depend only on this manifest"
    version: str = field(default_factory=_version)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def write(self, out: Path) -> None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "manifest").write_text(self.to_json())

    @classmethod
    def read(cls, run: Path) -> "RunManifest":
        return cls.from_json((run / "manifest").read_text())


def write_csv(path: Path, columns: list[str], data) -> None:
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[None]
    if data.size == 0:
        data = data.reshape(0, len(columns))
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=",".join(columns), comments="")


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data


def _params_dict(p: PhysicalParams) -> dict:
    return {"g": p.g, "nu": p.nu, "lam": p.lam}


def _floats(text: str) -> list[float]:
    return [float(Fraction(v)) for v in text.split(",") if v.strip()]


def _time_tag(t: float) -> str:
    return f"{t:.6f}"


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_basis(args) -> None:
    basis = parse_basis(args.basis)
    out = Path(args.out)
    RunManifest("basis", basis.kind, options={"samples": args.samples}).write(out)
    export = {
        "id": basis.kind,
        "degree": basis.degree,
        "N": basis.N,
        "breakpoints": [str(z) for z in basis.grid.nodes],
        "functions": [f.to_dict()["pieces"] for f in basis],
    }
    (out / "basis.json").write_text(json.dumps(export, indent=2) + "\n")
    z = np.linspace(0.0, 1.0, args.samples)
    write_csv(out / "samples.csv", ["zeta"] + [f"phi_{i + 1}" for i in range(basis.N)], np.column_stack([z, basis.evaluate(z).T]))
    print(f"{basis.kind}: N={basis.N}, degree {basis.degree}, breakpoints {export['breakpoints']}")


def cmd_tensors(args) -> None:
    basis = parse_basis(args.basis)
    out = Path(args.out)
    RunManifest("tensors", basis.kind).write(out)
    (out / "tensors.txt").write_text(format_tensors(tensors_for(basis)))


def cmd_catalogue(args) -> None:
    out = Path(args.out)
    RunManifest("catalogue", options={"max_n": args.max_n, "radius": args.radius, "n_dirs": args.n_dirs, "seed": 0}).write(out)
    rows, names = [], []
    ids = [f"L{n}" for n in range(1, args.max_n + 1)] + [f"Q{n}" for n in range(2, args.max_n + 1)]
    for name in ids:
        m = build_model(name)
        w = find_witness(m, args.radius, n_dirs=args.n_dirs, seed=0) if m.N >= 2 else None
        rows.append([m.basis.degree, m.N, m.basis.grid.M, 0.0 if w is None else w[1]])
        names.append(name)
    with open(out / "catalogue.csv", "w") as fh:
        fh.write("basis,degree,N,grid_points,max_imag_near_origin\n")
        for n, r in zip(names, rows):
            fh.write(f"{n},{r[0]},{r[1]},{r[2]},{FMT % r[3]}\n")


def cmd_scan(args) -> None:
    model = build_model(args.basis, regularized=False)
    lo, hi = args.range
    slice_ = None
    if model.N != 2 or args.d1 or args.d2:
        t = model.transform.linear_profile
        d1 = np.array(_floats(args.d1)) if args.d1 else t / np.linalg.norm(t)
        if args.d2:
            d2 = np.array(_floats(args.d2))
        else:
            e = np.zeros(model.N)
            e[-1] = 1.0
            d2 = e - (e @ d1) / (d1 @ d1) * d1
            d2 /= np.linalg.norm(d2)
        origin = np.array(_floats(args.origin)) if args.origin else np.zeros(model.N)
        slice_ = (origin, d1, d2)
    hm = scan_region(model, ((lo, hi), (lo, hi)), args.resolution, slice_, regularized=args.regularized, tol=args.tol)
    out = Path(args.out)
    RunManifest(
        "hyperbolicity-scan",
        model.basis.kind,
        args.regularized,
        {"g": 1.0},
        {"range": [lo, hi], "resolution": args.resolution},
        {"tol": args.tol, "slice": None if slice_ is None else [v.tolist() for v in slice_]},
    ).write(out)
    A1, A2 = np.meshgrid(hm.axis1, hm.axis2, indexing="ij")
    cols = ["a", "b"] + [f"s_{i + 1}" for i in range(model.N)] + ["max_imag", "hyperbolic", "on_line"]
    data = np.column_stack([A1.ravel(), A2.ravel(), hm.points.reshape(-1, model.N), hm.max_imag.ravel(), hm.hyperbolic.ravel(), hm.on_line.ravel()])
    write_csv(out / "scan.csv", cols, data)
    print(f"{model.basis.kind}: max |Im c| = {hm.max_imag.max():.3g}, hyperbolic fraction {hm.hyperbolic.mean():.3f}")


def _sim_config(args) -> fv.SimConfig:
    outputs = tuple(_floats(args.outputs)) if args.outputs else None
    return fv.SimConfig(x_min=args.x_min, x_max=args.x_max, nx=args.nx, t_end=args.t_end, cfl=args.cfl, output_times=outputs)


def _grid_dict(cfg: fv.SimConfig, **extra) -> dict:
    d = {"x_min": cfg.x_min, "x_max": cfg.x_max, "nx": cfg.nx, "t_end": cfg.t_end, "cfl": cfg.cfl, "outputs": cfg.outputs()}
    d.update(extra)
    return d


def _run_moment_model(name: str, regularized: bool, experiment: str, cfg: fv.SimConfig) -> tuple[Model, fv.Trajectory]:
    params, ic = fv.EXPERIMENTS[experiment]
    model = build_model(name, params, regularized=regularized)
    return model, fv.simulate(model, cfg, ic(cfg, model))


def _run_reference(experiment: str, cfg: fv.SimConfig, nz: int) -> ref.ReferenceTrajectory:
    params = fv.EXPERIMENTS[experiment][0]
    return ref.simulate_reference(cfg, ref.REFERENCE_ICS[experiment](cfg, nz), params)


def cmd_simulate(args) -> None:
    cfg = _sim_config(args)
    model, traj = _run_moment_model(args.basis, args.regularized, args.experiment, cfg)
    out = Path(args.out)
    RunManifest(
        "simulate", model.basis.kind, args.regularized, _params_dict(model.params), _grid_dict(cfg), {"experiment": args.experiment}
    ).write(out)
    cols = ["x", "h", "u_m", "alpha_1", "alpha_2"] + [f"s_{i + 1}" for i in range(model.N)]
    for t, f in zip(traj.times, traj.fields):
        h, um, a1, a2 = fv.moments_of_state(model, f)
        write_csv(out / f"fields_t{_time_tag(t)}.csv", cols, np.column_stack([f.x, h, um, a1, a2, primitive(f.U)[2]]))
    print(f"{model.name}: {len(traj.dts)} steps, min h {traj.min_h:.6g}")


def cmd_reference(args) -> None:
    cfg = _sim_config(args)
    traj = _run_reference(args.experiment, cfg, args.nzeta)
    out = Path(args.out)
    params = fv.EXPERIMENTS[args.experiment][0]
    RunManifest("reference", None, False, _params_dict(params), _grid_dict(cfg, nzeta=args.nzeta), {"experiment": args.experiment}).write(out)
    cols = ["x", "h", "u_m", "alpha_1", "alpha_2"] + [f"u_{j}" for j in range(args.nzeta)]
    for t, f in zip(traj.times, traj.fields):
        write_csv(out / f"fields_t{_time_tag(t)}.csv", cols, np.column_stack([f.x, *ref.moments_of_reference(f), f.u]))
    print(f"reference: {len(traj.dts)} steps, min h {traj.min_h:.6g}")


def error_table(experiment: str, bases: list[str], regularized: bool, cfg: fv.SimConfig, nz: int) -> list[tuple[str, int, list[float]]]:
    if not bases:
        return []
    R = ref.reference_moments_on(_run_reference(experiment, cfg, nz).final, cfg.nx)
    rows = []
    for name in bases:
        model, traj = _run_moment_model(name, regularized, experiment, cfg)
        M = fv.moments_of_state(model, traj.final)
        rows.append((model.basis.kind, model.N, [fv.rel_l1_error(M[k], R[k]) for k in range(4)]))
    return rows


def cmd_errors(args) -> None:
    cfg = _sim_config(args)
    bases = [b.strip() for b in args.bases.split(",") if b.strip()]
    for b in bases:
        parse_basis(b)
    rows = error_table(args.experiment, bases, args.regularized, cfg, args.nzeta)
    out = Path(args.out)
    params = fv.EXPERIMENTS[args.experiment][0]
    RunManifest(
        "errors", ",".join(bases), args.regularized, _params_dict(params), _grid_dict(cfg, nzeta=args.nzeta), {"experiment": args.experiment}
    ).write(out)
    with open(out / "errors.csv", "w") as fh:
        fh.write("basis,N,err_h,err_um,err_alpha1,err_alpha2\n")
        for name, N, e in rows:
            fh.write(f"{name},{N}," + ",".join(FMT % v for v in e) + "\n")
    for name, N, e in rows:
        print(f"{name:6s} N={N}  h {e[0]:.3e}  u_m {e[1]:.3e}  a1 {e[2]:.3e}  a2 {e[3]:.3e}")


def profiles_from_run(run: Path, xs: list[float], time: float | None = None, n: int = 101) -> tuple[np.ndarray, np.ndarray]:
    """u(zeta) at the cells nearest to ``xs``; columns follow ``xs``."""
    man = RunManifest.read(run)
    x_min, x_max = man.grid["x_min"], man.grid["x_max"]
    for x in xs:
        if not x_min <= x <= x_max:
            raise ValueError(f"x={x} outside domain [{x_min}, {x_max}]")
    t = man.grid["t_end"] if time is None else time
    path = run / f"fields_t{_time_tag(t)}.csv"
    if not path.exists():
        raise FileNotFoundError(f"no stored fields at t={t} in {run}")
    header, data = read_csv(path)
    z = np.linspace(0.0, 1.0, n)
    idx = [int(np.argmin(np.abs(data[:, 0] - x))) for x in xs]
    if man.subcommand == "simulate":
        basis = parse_basis(man.basis)
        phi = basis.evaluate(z)
        k = header.index("s_1")
        cols = [data[i, 2] + data[i, k : k + basis.N] @ phi for i in idx]
    elif man.subcommand == "reference":
        k = header.index("u_0")
        levels = ref.zeta_levels(man.grid["nzeta"])
        cols = [np.interp(z, levels, data[i, k:]) for i in idx]
    else:
        raise ValueError(f"run of type {man.subcommand!r} has no velocity profiles")
    return z, np.column_stack(cols) if cols else np.empty((n, 0))


def cmd_profiles(args) -> None:
    run = Path(args.run)
    xs = _floats(args.x)
    z, U = profiles_from_run(run, xs, args.time, args.samples)
    out = Path(args.out) if args.out else run / "profiles"
    src = RunManifest.read(run)
    RunManifest("profiles", src.basis, src.regularized, src.params, src.grid, {"run": str(run), "x": xs, "time": args.time, "samples": args.samples}).write(out)
    write_csv(out / "profiles.csv", ["zeta"] + [f"u_x={x:g}" for x in xs], np.column_stack([z, U]))


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def _add_sim_flags(p: argparse.ArgumentParser, t_end: float = 2.0) -> None:
    p.add_argument("--experiment", choices=sorted(fv.EXPERIMENTS), default="smooth")
    p.add_argument("--nx", type=int, default=200)
    p.add_argument("--cfl", type=float, default=0.5)
    p.add_argument("--t-end", type=float, default=t_end)
    p.add_argument("--x-min", type=float, default=-1.0)
    p.add_argument("--x-max", type=float, default=1.0)
    p.add_argument("--outputs", default="", help="comma-separated output times (t_end is always written)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sswme", description="Spline shallow water moment models")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("basis", help="export a basis and a sample table")
    p.add_argument("basis")
    p.add_argument("--samples", type=int, default=201)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_basis)

    p = sub.add_parser("tensors", help="dump exact moment tensors")
    p.add_argument("basis")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_tensors)

    p = sub.add_parser("catalogue", help="list L/Q models with a near-origin hyperbolicity probe")
    p.add_argument("--max-n", type=int, default=8)
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--n-dirs", type=int, default=2000)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_catalogue)

    p = sub.add_parser("hyperbolicity-scan", help="max |Im c| over a coefficient plane")
    p.add_argument("basis")
    p.add_argument("--range", type=float, nargs=2, default=(-0.1, 0.1))
    p.add_argument("--resolution", type=int, default=101)
    p.add_argument("--regularized", action="store_true")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--origin", default="")
    p.add_argument("--d1", default="")
    p.add_argument("--d2", default="")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_scan)

    p = sub.add_parser("simulate", help="run a moment model")
    p.add_argument("--basis", required=True)
    p.add_argument("--regularized", action="store_true")
    _add_sim_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("reference", help="run the vertically resolved reference solver")
    p.add_argument("--nzeta", type=int, default=60)
    _add_sim_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_reference)

    p = sub.add_parser("errors", help="relative L1 errors against the reference at t_end")
    p.add_argument("--bases", default="L2,L4,L6,Q2,Q4,Q6")
    p.add_argument("--regularized", action="store_true")
    p.add_argument("--nzeta", type=int, default=60)
    _add_sim_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_errors)

    p = sub.add_parser("profiles", help="reconstruct u(zeta) from a stored run")
    p.add_argument("--run", required=True)
    p.add_argument("--x", required=True, help="comma-separated x positions")
    p.add_argument("--time", type=float, default=None)
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--out", default="")
    p.set_defaults(fn=cmd_profiles)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except (BasisError, ValueError, FileNotFoundError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"sswme {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
