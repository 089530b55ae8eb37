"""Spline shallow water moment model as a 1-D nonconservative balance law.

State vectors are ``U = (h, h u_m, h s_1, ..., h s_N)``. All functions accept
arrays of shape ``(..., N + 2)`` so they vectorise over grid cells. The model
is stored in the form with identity mass matrix,

    dU/dt + dF(U)/dx = Q(U) dU/dx - P(U),

i.e. the moment rows of flux, nonconservative matrix and friction already
carry the inverse Gram matrix (M is constant, so it commutes with d/dx).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .moment_tensors import BasisTransform, MomentTensors, _exact_inverse, basis_transform, tensors_for
from .spline_basis import SplineBasis, parse_basis


class DryStateError(ValueError):
    """Water height is not strictly positive."""


@dataclass(frozen=True)
class PhysicalParams:
    g: float = 1.0
    nu: float = 0.1
    lam: float = 0.1
    bottom_slope: float | Callable | None = None  # d h_b / dx; None means flat

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError("g must be positive")
        if self.nu < 0:
            raise ValueError("viscosity must be nonnegative")
        if not self.lam > 0:
            raise ValueError("slip length must be positive")


@dataclass(frozen=True)
class Model:
    basis: SplineBasis
    tensors: MomentTensors
    params: PhysicalParams
    transform: BasisTransform
    regularized: bool = False
    _c: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        t = self.tensors
        if t.N != self.basis.N:
            raise ValueError("tensor size does not match basis")
        self._c["float"] = _derived(t.M, t.V0, t.C, t.A, t.B, np.linalg.inv(t.M))
        if t.exact is not None:
            ex = t.exact
            self._c["exact"] = _derived(ex["M"], ex["V0"], ex["C"], ex["A"], ex["B"], _exact_inverse(ex["M"]))

    @property
    def N(self) -> int:
        return self.basis.N

    @property
    def name(self) -> str:
        return ("H" if self.regularized else "") + self.basis.kind

    def with_params(self, **kw) -> "Model":
        p = PhysicalParams(**{**self.params.__dict__, **kw})
        return Model(self.basis, self.tensors, p, self.transform, self.regularized)

    def with_regularization(self, on: bool) -> "Model":
        return Model(self.basis, self.tensors, self.params, self.transform, on)


def _derived(M, V0, C, A, B, Minv) -> dict:
    return dict(
        M=M,
        V0=V0,
        C=C,
        A=A,
        B=B,
        Minv=Minv,
        MinvA=np.einsum("ai,ijk->ajk", Minv, A),
        MinvB=np.einsum("ai,ijk->ajk", Minv, B),
        MinvV0=Minv.dot(V0),
        MinvC=Minv.dot(C),
    )


def _is_exact(U) -> bool:
    return isinstance(U, np.ndarray) and U.dtype == object or (
        not isinstance(U, np.ndarray) and any(isinstance(v, Fraction) for v in np.ravel(np.asarray(U, dtype=object)))
    )


def _ctx(model: "Model", U):
    """Tensor set, parameter converter and array for float or exact (Fraction) evaluation."""
    if _is_exact(U):
        if "exact" not in model._c:
            raise ValueError("exact evaluation requires rationally computed tensors")
        return model._c["exact"], Fraction, np.array(U, dtype=object)
    return model._c["float"], float, np.asarray(U, dtype=float)


def build_model(basis: SplineBasis | str, params: PhysicalParams | None = None, regularized: bool = False) -> Model:
    if isinstance(basis, str):
        basis = parse_basis(basis)
    return Model(basis, tensors_for(basis), params or PhysicalParams(), basis_transform(basis), regularized)


# --------------------------------------------------------------------------
# state helpers
# --------------------------------------------------------------------------

def _batched(fn):
    """Run ``fn`` on a batch of one when given a single state (keeps object arrays indexable)."""

    @functools.wraps(fn)
    def wrapper(model, U, *args, **kw):
        arr = np.asarray(U, dtype=object if _is_exact(U) else float)
        if arr.ndim == 1:
            out = fn(model, arr[None], *args, **kw)
            return tuple(o[0] for o in out) if isinstance(out, tuple) else out[0]
        return fn(model, arr, *args, **kw)

    return wrapper


def _split(U):
    h = U[..., 0]
    if np.any(~(h > 0)):
        raise DryStateError("non-positive water height")
    return h, U[..., 1] / h, U[..., 2:] / h[..., None]


def primitive(U) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(h, u_m, s) from conservative variables."""
    U = np.asarray(U, dtype=object if _is_exact(U) else float)
    if U.ndim == 1:
        h, um, s = _split(U[None])
        return h[0], um[0], s[0]
    return _split(U)


def conservative(h, um, s) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    s = np.asarray(s, dtype=float)
    return np.concatenate([h[..., None], (h * um)[..., None], h[..., None] * s], axis=-1)


def _dot(s, M):
    return np.einsum("...j,jk->...k", s, M)


def _quad2(M, s):
    return np.einsum("jk,...j,...k->...", M, s, s)


def _quad3(T, s):
    return np.einsum("ajk,...j,...k->...a", T, s, s)


def _eye(N, conv):
    return np.eye(N, dtype=object) * Fraction(1) if conv is Fraction else np.eye(N)


def _blank(shape, conv):
    if conv is Fraction:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape)


# --------------------------------------------------------------------------
# balance-law pieces
# --------------------------------------------------------------------------

@_batched
def flux(model: Model, U, normalized: bool = True) -> np.ndarray:
    """Flux F(U); ``normalized=False`` gives the moment rows before M^-1."""
    c, conv, U = _ctx(model, U)
    h, um, s = _split(U)
    g = conv(model.params.g)
    F = _blank(U.shape, conv)
    F[..., 0] = h * um
    F[..., 1] = g * h**2 / 2 + h * um**2 + h * _quad2(c["M"], s)
    if normalized:
        F[..., 2:] = h[..., None] * (2 * um[..., None] * s + _quad3(c["MinvA"], s))
    else:
        F[..., 2:] = h[..., None] * (2 * um[..., None] * _dot(s, c["M"]) + _quad3(c["A"], s))
    return F


@_batched
def nonconservative_matrix(model: Model, U) -> np.ndarray:
    """Q(U) multiplying dU/dx on the right-hand side; only the moment block is nonzero.

    Moment block (before M^-1): u_m M_il - sum_k B_ilk s_k.
    """
    c, conv, U = _ctx(model, U)
    h, um, s = _split(U)
    N = model.N
    Q = _blank(U.shape[:-1] + (N + 2, N + 2), conv)
    Q[..., 2:, 2:] = um[..., None, None] * _eye(N, conv) - np.einsum("ilk,...k->...il", c["MinvB"], s)
    return Q


@_batched
def friction_parts(model: Model, U, x=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(P0, P1, P2) with the moment rows multiplied by M^-1.

    P0 = topography (g h dh_b/dx in the momentum row), P1 = bottom slip
    friction (nu/lam) u_b (0, 1, M^-1 V0), P2 = Newtonian friction
    (nu/h) (0, 0, M^-1 C s). The source on the right-hand side is P0 - P1 - P2.
    """
    c, conv, U = _ctx(model, U)
    p = model.params
    h, um, s = _split(U)
    P0 = _blank(U.shape, conv)
    if p.bottom_slope is not None:
        slope = p.bottom_slope(x) if callable(p.bottom_slope) else p.bottom_slope
        P0[..., 1] = conv(p.g) * h * slope
    ub = um + _dot(s, c["V0"][:, None])[..., 0]
    P1 = _blank(U.shape, conv)
    P1[..., 1] = ub
    P1[..., 2:] = ub[..., None] * c["MinvV0"]
    P1 = P1 * (conv(p.nu) / conv(p.lam))
    P2 = _blank(U.shape, conv)
    P2[..., 2:] = (conv(p.nu) / h)[..., None] * _dot(s, c["MinvC"].T)
    return P0, P1, P2


def friction_source(model: Model, U, x=None) -> np.ndarray:
    """Full right-hand-side source P0 - P1 - P2."""
    P0, P1, P2 = friction_parts(model, U, x)
    return P0 - P1 - P2


def friction_operator(model: Model, h) -> np.ndarray:
    """Matrix L(h) with d(hu_m, hs)/dt = -L(h) (hu_m, hs) from P1 + P2.

    Shape (..., N+1, N+1); the source is linear in (u_m, s) at fixed h.
    """
    p, c = model.params, model._c["float"]
    h = np.asarray(h, dtype=float)
    N = model.N
    w = np.concatenate([[1.0], c["MinvV0"]])
    v = np.concatenate([[1.0], c["V0"]])
    L = np.broadcast_to((p.nu / p.lam) * np.outer(w, v), h.shape + (N + 1, N + 1)).copy()
    L[..., 1:, 1:] += (p.nu / h)[..., None, None] * c["MinvC"]
    return L / h[..., None, None]


@_batched
def system_matrix(model: Model, U) -> np.ndarray:
    """A_sys = dF/dU - Q, whose eigenvalues are the characteristic speeds."""
    c, conv, U = _ctx(model, U)
    h, um, s = _split(U)
    g = conv(model.params.g)
    N = model.N
    A = _blank(U.shape[:-1] + (N + 2, N + 2), conv)
    Ms = _dot(s, c["M"])
    A[..., 0, 1] = conv(1)
    A[..., 1, 0] = g * h - um**2 - np.einsum("...j,...j->...", Ms, s)
    A[..., 1, 1] = 2 * um
    A[..., 1, 2:] = 2 * Ms
    A[..., 2:, 0] = -2 * um[..., None] * s - _quad3(c["MinvA"], s)
    A[..., 2:, 1] = 2 * s
    A[..., 2:, 2:] = um[..., None, None] * _eye(N, conv) + np.einsum("ilk,...k->...il", 2 * c["MinvA"] + c["MinvB"], s)
    return A


def flux_jacobian(model: Model, U) -> np.ndarray:
    return system_matrix(model, U) + nonconservative_matrix(model, U)


# --------------------------------------------------------------------------
# hyperbolic regularisation
# --------------------------------------------------------------------------

def _transform_rows(model: Model, conv):
    t = model.transform
    if conv is Fraction:
        return np.array(t.exact_alpha_row, dtype=object), np.array(t.exact_linear_profile, dtype=object)
    return t.alpha_row, t.linear_profile


@_batched
def alpha1(model: Model, U) -> np.ndarray:
    """Linear Legendre coefficient alpha_1 = 3 <sum s_i phi_i, 1 - 2 zeta>."""
    c, conv, U = _ctx(model, U)
    h, um, s = _split(U)
    r, _ = _transform_rows(model, conv)
    return _dot(s, r[:, None])[..., 0]


@_batched
def regularize_state(model: Model, U) -> np.ndarray:
    """Replace s by the linear-profile coefficients s~ = t alpha_1 (same h, u_m, alpha_1)."""
    c, conv, U = _ctx(model, U)
    h, um, s = _split(U)
    r, t = _transform_rows(model, conv)
    a1 = _dot(s, r[:, None])[..., 0]
    out = U.copy()
    out[..., 2:] = (h * a1)[..., None] * t
    return out


def regularized_system_matrix(model: Model, U) -> np.ndarray:
    return system_matrix(model, regularize_state(model, U))


def transport_matrix(model: Model, U) -> np.ndarray:
    """System matrix used for wave speeds: regularised when the model is."""
    return regularized_system_matrix(model, U) if model.regularized else system_matrix(model, U)


def transport_parts(model: Model, U) -> tuple[np.ndarray, np.ndarray]:
    """(F, Q) splitting of the transport operator actually integrated.

    Unregularised: the balance-law flux and nonconservative matrix. Regularised:
    mass and momentum rows use the flux at the linearised state, which is
    conservative with Jacobian equal to rows 1-2 of A_sys(U~); moment rows keep
    the full flux and absorb the difference dF/dU(U) - A_sys(U~) into Q.
    """
    F = flux(model, U)
    Q = nonconservative_matrix(model, U)
    if not model.regularized:
        return F, Q
    Ur = regularize_state(model, U)
    F[..., :2] = flux(model, Ur)[..., :2]
    Q[..., 2:, :] = (flux_jacobian(model, U) - system_matrix(model, Ur))[..., 2:, :]
    return F, Q
