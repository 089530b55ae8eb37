"""First-order finite-volume solver for the moment balance law on a periodic domain.

Transport: Rusanov flux for F plus a midpoint-state path-conservative
fluctuation for Q dU/dx, forward Euler. Friction: backward Euler on the
(u_m, s) block, which is linear at fixed h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .model import Model, PhysicalParams, conservative, friction_operator, friction_parts, primitive, transport_matrix, transport_parts
from .moment_tensors import legendre_rows
from .spline_basis import Grid, PiecewisePoly, SplineBasis, project_profile


class CFLError(ValueError):
    pass


class InstabilityError(RuntimeError):
    def __init__(self, msg: str, time: float, cell: int):
        super().__init__(f"{msg} at t={time:.6g}, cell {cell}")
        self.time = time
        self.cell = cell


@dataclass(frozen=True)
class SimConfig:
    x_min: float = -1.0
    x_max: float = 1.0
    nx: int = 200
    t_end: float = 2.0
    cfl: float = 0.5
    output_times: tuple[float, ...] | None = None  # default: only t_end
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        if self.nx < 4:
            raise ValueError("need at least 4 cells")
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def x(self) -> np.ndarray:
        return self.x_min + (np.arange(self.nx) + 0.5) * self.dx

    def outputs(self) -> list[float]:
        times = sorted(set(self.output_times or ()) | {self.t_end})
        return [t for t in times if 0 <= t <= self.t_end]


@dataclass(frozen=True)
class StateField:
    U: np.ndarray  # (nx, N + 2)
    t: float
    x: np.ndarray

    def __post_init__(self):
        if np.any(~(self.U[:, 0] > 0)):
            raise ValueError("every cell needs h > 0")


@dataclass
class Trajectory:
    times: list[float]
    fields: list[StateField]
    dts: list[float] = field(default_factory=list)
    min_h: float = math.inf
    mass: list[float] = field(default_factory=list)
    momentum: list[float] = field(default_factory=list)

    @property
    def final(self) -> StateField:
        return self.fields[-1]


# --------------------------------------------------------------------------
# experiments
# --------------------------------------------------------------------------

SMOOTH_PARAMS = PhysicalParams(g=1.0, nu=0.1, lam=0.1)
FAST_PARAMS = PhysicalParams(g=1.0, nu=0.0005, lam=0.1)


def initial_height(x) -> np.ndarray:
    return 1.0 + np.exp(3.0 * np.cos(np.pi * (np.asarray(x) + 0.5)) - 4.0)


def fast_profile() -> PiecewisePoly:
    """Steep piecewise-quadratic profile: u_m = 1/2 plus a C^1 zero-mean deviation.

    Exact coefficients on the breakpoints {0, 1/3, 2/3, 1}.
    """
    F = Fraction
    d = F(15, 322048)
    grid = Grid((F(0), F(1, 3), F(2, 3), F(1)))
    pieces = (
        (-5215 * d, 34314 * d, -50298 * d),
        (164 * d, 2040 * d, -1887 * d),
        (1700 * d, -2568 * d, 1569 * d),
    )
    return PiecewisePoly(grid, pieces) + PiecewisePoly.constant(F(1, 2), grid)


def initial_condition_smooth(config: SimConfig, model: Model, um: float = 0.25, a1: float = 0.25) -> StateField:
    """Height bump with a linear velocity profile (alpha_2 = 0)."""
    x = config.x
    h = initial_height(x)
    s = a1 * model.transform.linear_profile
    U = conservative(h, np.full_like(h, um), np.broadcast_to(s, (len(h), model.N)))
    return StateField(U, 0.0, x)


def initial_condition_fast(config: SimConfig, model: Model | SplineBasis) -> StateField:
    basis = model.basis if isinstance(model, Model) else model
    x = config.x
    h = initial_height(x)
    dec = project_profile(fast_profile(), basis)
    U = conservative(h, np.full_like(h, dec.u_m), np.broadcast_to(dec.s, (len(h), basis.N)))
    return StateField(U, 0.0, x)


EXPERIMENTS: dict[str, tuple[PhysicalParams, Callable]] = {
    "smooth": (SMOOTH_PARAMS, initial_condition_smooth),
    "fast": (FAST_PARAMS, initial_condition_fast),
}


# --------------------------------------------------------------------------
# scheme
# --------------------------------------------------------------------------

def cell_speeds(model: Model, U: np.ndarray) -> np.ndarray:
    """Per-cell max |Re lambda| plus any |Im lambda| of the transport matrix."""
    ev = np.linalg.eigvals(transport_matrix(model, U))
    return np.max(np.abs(ev.real) + np.abs(ev.imag), axis=-1)


def max_speed(model: Model, field: StateField | np.ndarray) -> float:
    U = field.U if isinstance(field, StateField) else np.asarray(field, dtype=float)
    if U.ndim == 1:
        U = U[None]
    if U.shape[0] == 0:
        raise ValueError("empty field")
    return float(np.max(cell_speeds(model, U)))


def _transport_rhs(model: Model, U: np.ndarray, speeds: np.ndarray, dx: float) -> np.ndarray:
    UR = np.roll(U, -1, axis=0)
    F, _ = transport_parts(model, U)
    _, Qmid = transport_parts(model, 0.5 * (U + UR))
    a = np.maximum(speeds, np.roll(speeds, -1))
    jump = UR - U
    Fhat = 0.5 * (F + np.roll(F, -1, axis=0)) - 0.5 * a[:, None] * jump
    nc = np.einsum("...ij,...j->...i", Qmid, jump)
    div = Fhat - np.roll(Fhat, 1, axis=0)
    fluct = 0.5 * (nc + np.roll(nc, 1, axis=0))
    return (-div + fluct) / dx


def _apply_friction(model: Model, U: np.ndarray, dt: float, x: np.ndarray) -> np.ndarray:
    p = model.params
    out = U.copy()
    if p.bottom_slope is not None:
        out += dt * friction_parts(model, U, x)[0]
    if p.nu == 0:
        return out
    L = friction_operator(model, out[:, 0])
    lhs = np.eye(model.N + 1) + dt * L
    out[:, 1:] = np.linalg.solve(lhs, out[:, 1:, None])[..., 0]
    return out


def step(model: Model, field: StateField, dt: float, dx: float | None = None, speeds: np.ndarray | None = None, cfl: float = 1.0) -> StateField:
    """One transport + friction step of size ``dt``."""
    U = field.U
    dx = dx if dx is not None else float(field.x[1] - field.x[0])
    if speeds is None:
        speeds = cell_speeds(model, U)
    limit = cfl * dx / max(float(np.max(speeds)), 1e-300)
    if dt > limit * (1 + 1e-12):
        raise CFLError(f"dt={dt:.3g} exceeds CFL limit {limit:.3g}")
    Un = U + dt * _transport_rhs(model, U, speeds, dx)
    Un = _apply_friction(model, Un, dt, field.x)
    bad = ~np.all(np.isfinite(Un), axis=1) | ~(Un[:, 0] > 0)
    if np.any(bad):
        raise InstabilityError("non-finite or dry state", field.t + dt, int(np.argmax(bad)))
    return StateField(Un, field.t + dt, field.x)


def simulate(model: Model, config: SimConfig, ic: StateField, dt_sequence: Sequence[float] | None = None) -> Trajectory:
    """Advance ``ic`` to ``config.t_end`` with dt = cfl dx / max speed, hitting output times exactly.

    ``dt_sequence`` replays a recorded list of steps instead (for comparing
    equivalent models under identical time stepping).
    """
    dx = config.dx
    f = ic
    outs = config.outputs()
    traj = Trajectory([], [])
    k = 0

    def record_diag(fld):
        traj.min_h = min(traj.min_h, float(np.min(fld.U[:, 0])))
        traj.mass.append(float(np.sum(fld.U[:, 0]) * dx))
        traj.momentum.append(float(np.sum(fld.U[:, 1]) * dx))

    record_diag(f)
    for t_out in outs:
        while f.t < t_out - 1e-14 * max(1.0, t_out):
            if len(traj.dts) >= config.max_steps:
                raise InstabilityError("step limit reached", f.t, -1)
            speeds = cell_speeds(model, f.U)
            if dt_sequence is not None:
                dt = dt_sequence[k]
                check = 1.0
            else:
                dt = min(config.cfl * dx / float(np.max(speeds)), t_out - f.t)
                check = config.cfl
            k += 1
            f = step(model, f, dt, dx, speeds, cfl=check)
            traj.dts.append(dt)
            record_diag(f)
        if dt_sequence is None:
            f = StateField(f.U, t_out, f.x)
        traj.times.append(t_out)
        traj.fields.append(f)
    return traj


# --------------------------------------------------------------------------
# diagnostics
# --------------------------------------------------------------------------

def rel_l1_error(v, v_ref, x=None, x_ref=None) -> float:
    """sum |v - v_ref| / sum |v_ref|, interpolating the reference linearly when grids differ."""
    v = np.asarray(v, dtype=float)
    v_ref = np.asarray(v_ref, dtype=float)
    if x is not None and x_ref is not None and (len(x) != len(x_ref) or not np.allclose(x, x_ref)):
        v_ref = np.interp(x, x_ref, v_ref)
    denom = float(np.sum(np.abs(v_ref)))
    if denom == 0:
        raise ZeroDivisionError("reference has zero L1 norm")
    return float(np.sum(np.abs(v - v_ref)) / denom)


def moments_of_state(model: Model, field: StateField | np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(h, u_m, alpha_1, alpha_2): vertical mean and best-fit Legendre coefficients per cell."""
    U = field.U if isinstance(field, StateField) else np.asarray(field, dtype=float)
    h, um, s = primitive(U)
    R = _legendre_rows_float(model.basis)
    a = s @ R.T
    return h, um, a[..., 0], a[..., 1]


_ROWS: dict = {}


def _legendre_rows_float(basis: SplineBasis) -> np.ndarray:
    if basis not in _ROWS:
        _ROWS[basis] = np.vectorize(float, otypes=[float])(legendre_rows(basis, 2))
    return _ROWS[basis]


def reconstruct_profile(model: Model, U, zeta) -> np.ndarray:
    """u(zeta) = u_m + sum s_i phi_i(zeta) for one state."""
    h, um, s = primitive(U)
    return um + s @ model.basis.evaluate(zeta)
