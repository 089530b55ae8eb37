"""Vertically resolved solver for the mapped reference system.

Unknowns are h(x) and u(x, zeta_j) on equispaced levels zeta_j = j / (Nz - 1).
Each level owns a dual cell of trapezoid width w_j (dz inside, dz / 2 at the
ends), so vertical means are trapezoid sums. One step is

1. Rusanov in x for h and every level's hu, sharing the interface speed;
2. vertical transport d(h u omega)/dzeta, upwinded, with h omega at the half
   levels accumulated from the same discrete divergences (it vanishes at the
   surface exactly, so mass and momentum stay conservative);
3. implicit vertical viscosity d/dzeta((nu/h) du/dzeta) with the slip
   condition (nu/h) du/dzeta = (nu/lam) u at the bottom and zero stress at
   the surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fv_solver import InstabilityError, SimConfig, fast_profile, initial_height
from .model import PhysicalParams


@dataclass(frozen=True)
class ReferenceField:
    h: np.ndarray  # (nx,)
    u: np.ndarray  # (nx, nz)
    t: float
    x: np.ndarray

    def __post_init__(self):
        if self.u.ndim != 2 or self.u.shape[0] != self.h.shape[0]:
            raise ValueError("u must have shape (nx, nz)")
        if self.u.shape[1] < 3:
            raise ValueError("need at least 3 zeta levels")
        if np.any(~(self.h > 0)):
            raise ValueError("every cell needs h > 0")

    @property
    def nz(self) -> int:
        return self.u.shape[1]

    @property
    def zeta(self) -> np.ndarray:
        return zeta_levels(self.nz)


@dataclass
class ReferenceTrajectory:
    times: list[float]
    fields: list[ReferenceField]
    dts: list[float] = field(default_factory=list)
    min_h: float = math.inf
    mass: list[float] = field(default_factory=list)

    @property
    def final(self) -> ReferenceField:
        return self.fields[-1]


def zeta_levels(nz: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, nz)


def trapezoid_weights(nz: int) -> np.ndarray:
    if nz < 3:
        raise ValueError("need at least 3 zeta levels")
    w = np.full(nz, 1.0 / (nz - 1))
    w[0] = w[-1] = 0.5 / (nz - 1)
    return w


# --------------------------------------------------------------------------
# initial conditions
# --------------------------------------------------------------------------

def reference_ic_smooth(config: SimConfig, nz: int = 60, um: float = 0.25, a1: float = 0.25) -> ReferenceField:
    x = config.x
    z = zeta_levels(nz)
    u = np.broadcast_to(um + a1 * (1 - 2 * z), (len(x), nz)).copy()
    return ReferenceField(initial_height(x), u, 0.0, x)


def reference_ic_fast(config: SimConfig, nz: int = 60) -> ReferenceField:
    x = config.x
    u = np.broadcast_to(fast_profile()(zeta_levels(nz)), (len(x), nz)).copy()
    return ReferenceField(initial_height(x), u, 0.0, x)


REFERENCE_ICS = {"smooth": reference_ic_smooth, "fast": reference_ic_fast}


# --------------------------------------------------------------------------
# scheme
# --------------------------------------------------------------------------

def _rates(f: ReferenceField, g: float, dx: float):
    """Horizontal divergences and half-level h*omega for the current state."""
    h, u = f.h, f.u
    w = trapezoid_weights(f.nz)
    hu = h[:, None] * u
    c = np.max(np.abs(u), axis=1) + np.sqrt(g * h)
    a = np.maximum(c, np.roll(c, -1))[:, None]
    hR, huR, uR = np.roll(h, -1), np.roll(hu, -1, axis=0), np.roll(u, -1, axis=0)
    # level mass fluxes average to the depth-integrated mass flux
    fm = 0.5 * (hu + huR) - 0.5 * a * (hR - h)[:, None]
    fp = 0.5 * (hu * u + huR * uR + g * (h**2 + hR**2)[:, None] / 2) - 0.5 * a * (huR - hu)
    Dm_lev = (fm - np.roll(fm, 1, axis=0)) / dx
    Dp = (fp - np.roll(fp, 1, axis=0)) / dx
    Dh = Dm_lev @ w
    # h omega at zeta_{j+1/2}, j = 0..nz-2; zero at both ends
    how = np.cumsum(w * (Dh[:, None] - Dm_lev), axis=1)[:, :-1]
    return Dh, Dp, how, float(np.max(c))


def _vertical_flux_divergence(u: np.ndarray, how: np.ndarray, w: np.ndarray) -> np.ndarray:
    up = np.where(how > 0, u[:, :-1], u[:, 1:])
    phi = how * up
    phi = np.pad(phi, ((0, 0), (1, 1)))
    return (phi[:, 1:] - phi[:, :-1]) / w


def _thomas(a: np.ndarray, b: np.ndarray, c: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Batched tridiagonal solve; a sub-, b main-, c super-diagonal, rows along axis 1."""
    n = b.shape[1]
    cp = np.empty_like(b)
    dp = np.empty_like(b)
    cp[:, 0] = c[:, 0] / b[:, 0]
    dp[:, 0] = d[:, 0] / b[:, 0]
    for j in range(1, n):
        m = b[:, j] - a[:, j] * cp[:, j - 1]
        cp[:, j] = c[:, j] / m
        dp[:, j] = (d[:, j] - a[:, j] * dp[:, j - 1]) / m
    x = np.empty_like(b)
    x[:, -1] = dp[:, -1]
    for j in range(n - 2, -1, -1):
        x[:, j] = dp[:, j] - cp[:, j] * x[:, j + 1]
    return x


def _viscous_solve(h: np.ndarray, hu: np.ndarray, dt: float, p: PhysicalParams, w: np.ndarray) -> np.ndarray:
    """Backward Euler for h du/dt = d/dzeta((nu/h) du/dzeta) / w with the slip condition."""
    nx, nz = hu.shape
    if p.nu == 0:
        return hu / h[:, None]
    dz = 1.0 / (nz - 1)
    k = (dt * p.nu / (h * dz))[:, None] / w  # coupling per face, scaled by dual cell width
    b = np.broadcast_to(h[:, None], (nx, nz)).copy()
    lo = np.zeros((nx, nz))
    hi = np.zeros((nx, nz))
    lo[:, 1:] = -k[:, 1:]
    hi[:, :-1] = -k[:, :-1]
    b[:, 1:] += k[:, 1:]
    b[:, :-1] += k[:, :-1]
    b[:, 0] += dt * p.nu / p.lam / w[0]
    return _thomas(lo, b, hi, hu)


def reference_step(f: ReferenceField, params: PhysicalParams, dt: float, dx: float | None = None, cfl: float = 1.0, _rates_cache=None) -> ReferenceField:
    """One step of the leveled scheme; raises on CFL violation or blow-up."""
    dx = dx if dx is not None else float(f.x[1] - f.x[0])
    w = trapezoid_weights(f.nz)
    Dh, Dp, how, amax = _rates_cache or _rates(f, params.g, dx)
    limit = cfl * stable_dt(f, how, amax, dx)
    if dt > limit * (1 + 1e-12):
        raise ValueError(f"dt={dt:.3g} exceeds CFL limit {limit:.3g}")
    hu = f.h[:, None] * f.u
    hn = f.h - dt * Dh
    hun = hu - dt * Dp - dt * _vertical_flux_divergence(f.u, how, w)
    if params.bottom_slope is not None:
        sl = params.bottom_slope
        slope = sl(f.x) if callable(sl) else np.full_like(f.h, sl)
        hun += dt * params.g * (f.h * slope)[:, None]
    bad = ~(hn > 0) | ~np.isfinite(hn) | ~np.all(np.isfinite(hun), axis=1)
    if np.any(bad):
        raise InstabilityError("non-finite or dry reference state", f.t + dt, int(np.argmax(bad)))
    un = _viscous_solve(hn, hun, dt, params, w)
    return ReferenceField(hn, un, f.t + dt, f.x)


def stable_dt(f: ReferenceField, how: np.ndarray, amax: float, dx: float) -> float:
    w = trapezoid_weights(f.nz)
    dt_x = dx / amax
    # upwind outflow from a level through both faces must not exceed its content
    out = (np.pad(np.maximum(how, 0), ((0, 0), (0, 1))) + np.pad(np.maximum(-how, 0), ((0, 0), (1, 0)))) / (f.h[:, None] * w)
    m = float(np.max(out))
    return dt_x if m == 0 else min(dt_x, 1.0 / m)


def simulate_reference(config: SimConfig, ic: ReferenceField, params: PhysicalParams) -> ReferenceTrajectory:
    dx = config.dx
    f = ic
    traj = ReferenceTrajectory([], [])

    def diag(fld):
        traj.min_h = min(traj.min_h, float(np.min(fld.h)))
        traj.mass.append(float(np.sum(fld.h) * dx))

    diag(f)
    for t_out in config.outputs():
        while f.t < t_out - 1e-14 * max(1.0, t_out):
            if len(traj.dts) >= config.max_steps:
                raise InstabilityError("step limit reached", f.t, -1)
            rates = _rates(f, params.g, dx)
            dt = min(config.cfl * stable_dt(f, rates[2], rates[3], dx), t_out - f.t)
            f = reference_step(f, params, dt, dx, cfl=config.cfl, _rates_cache=rates)
            traj.dts.append(dt)
            diag(f)
        f = ReferenceField(f.h, f.u, t_out, f.x)
        traj.times.append(t_out)
        traj.fields.append(f)
    return traj


# --------------------------------------------------------------------------
# diagnostics
# --------------------------------------------------------------------------

def moments_of_reference(f: ReferenceField) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(h, u_m, alpha_1, alpha_2) from trapezoid projections of each column."""
    z = f.zeta
    w = trapezoid_weights(f.nz)
    um = f.u @ w
    # Legendre weights with their discrete mean removed, so constant columns
    # project to zero exactly (the trapezoid sum of P2 alone is -dz^2)
    p1 = 1 - 2 * z
    p2 = 6 * z**2 - 6 * z + 1
    a1 = 3 * f.u @ (w * (p1 - p1 @ w))
    a2 = 5 * f.u @ (w * (p2 - p2 @ w))
    return f.h.copy(), um, a1, a2


def restrict(values: np.ndarray, nx: int) -> np.ndarray:
    """Cell-average a fine periodic grid onto ``nx`` coarse cells (integer ratio)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if n == nx:
        return values.copy()
    if n % nx:
        raise ValueError(f"cannot restrict {n} cells to {nx}")
    return values.reshape(nx, n // nx, *values.shape[1:]).mean(axis=1)


def reference_moments_on(f: ReferenceField, nx: int) -> tuple[np.ndarray, ...]:
    return tuple(restrict(v, nx) for v in moments_of_reference(f))
