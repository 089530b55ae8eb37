"""Galerkin tensors of a zero-mean basis and its relation to the Legendre basis.

All tensors are computed exactly in rational arithmetic (grid nodes are
stored as fractions). ``compute_tensors(..., exact=False)`` is a float
Gauss-Legendre route used for cross-checking and for large bases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .spline_basis import BasisError, PiecewisePoly, SplineBasis, _solve_exact, legendre_function


@dataclass(frozen=True)
class MomentTensors:
    """M_ij = <phi_i, phi_j>, V0_i = phi_i(0), C_ij = <phi_i', phi_j'>,
    A_ijk = int phi_i phi_j phi_k, B_ijk = int phi_i' (int_0^z phi_j) phi_k.

    Float arrays; ``exact`` holds the same data as Fractions (object arrays)
    when computed in rational mode.
    """

    M: np.ndarray
    V0: np.ndarray
    C: np.ndarray
    A: np.ndarray
    B: np.ndarray
    exact: dict | None = None

    @property
    def N(self) -> int:
        return self.M.shape[0]

    @property
    def Minv(self) -> np.ndarray:
        return np.linalg.inv(self.M)


def _exact_tensors(basis: SplineBasis) -> dict:
    phi = basis.functions
    N = len(phi)
    dphi = [f.derivative() for f in phi]
    Phi = [f.antiderivative_poly() for f in phi]
    M = np.empty((N, N), dtype=object)
    C = np.empty((N, N), dtype=object)
    A = np.empty((N, N, N), dtype=object)
    B = np.empty((N, N, N), dtype=object)
    pairs = {}
    for i in range(N):
        for j in range(i, N):
            M[i, j] = M[j, i] = phi[i].inner(phi[j])
            C[i, j] = C[j, i] = dphi[i].inner(dphi[j])
            pairs[i, j] = phi[i] * phi[j]
    for i in range(N):
        for j in range(i, N):
            for k in range(j, N):
                v = pairs[i, j].inner(phi[k])
                for a, b, c in {(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)}:
                    A[a, b, c] = v
    for j in range(N):
        for k in range(N):
            g = Phi[j] * phi[k]
            for i in range(N):
                B[i, j, k] = dphi[i].inner(g)
    V0 = np.array([f(Fraction(0)) for f in phi], dtype=object)
    if _exact_det_zero(M):
        raise BasisError("basis functions are linearly dependent (singular Gram matrix)")
    return {"M": M, "V0": V0, "C": C, "A": A, "B": B}


def _exact_det_zero(M: np.ndarray) -> bool:
    try:
        _solve_exact(M.tolist(), [Fraction(0)] * M.shape[0])
    except BasisError:
        return True
    return False


def _gauss_tensors(basis: SplineBasis, order: int) -> dict:
    xg, wg = np.polynomial.legendre.leggauss(order)
    nodes = basis.grid.float_nodes
    a, b = nodes[:-1, None], nodes[1:, None]
    x = (0.5 * (b - a) * xg + 0.5 * (a + b)).ravel()
    w = (0.5 * (b - a) * wg).ravel()
    # evaluate inside each segment; nodes coincide with no quadrature point
    phi = basis.evaluate(x)
    dphi = np.array([f.derivative()(x) for f in basis])
    Phi = np.array([f.antiderivative_poly()(x) for f in basis])
    M = np.einsum("iq,jq,q->ij", phi, phi, w)
    if np.linalg.matrix_rank(M) < M.shape[0]:
        raise BasisError("basis functions are linearly dependent (singular Gram matrix)")
    return {
        "M": M,
        "V0": np.array([f(0.0) for f in basis]),
        "C": np.einsum("iq,jq,q->ij", dphi, dphi, w),
        "A": np.einsum("iq,jq,kq,q->ijk", phi, phi, phi, w),
        "B": np.einsum("iq,jq,kq,q->ijk", dphi, Phi, phi, w),
    }


def compute_tensors(basis: SplineBasis, exact: bool = True, quad_order: int | None = None) -> MomentTensors:
    """Moment tensors of ``basis``.

    With ``exact=False`` the integrals use ``quad_order`` Gauss points per
    segment (default ``ceil((3K + 1) / 2)``, exact for the integrands).
    """
    if exact:
        ex = _exact_tensors(basis)
        fl = {k: np.vectorize(float, otypes=[float])(v) for k, v in ex.items()}
        return MomentTensors(exact=ex, **fl)
    q = quad_order or math.ceil((3 * basis.degree + 1) / 2)
    return MomentTensors(**_gauss_tensors(basis, q))


@lru_cache(maxsize=64)
def _tensors_cached(basis: SplineBasis) -> MomentTensors:
    return compute_tensors(basis)


def tensors_for(basis: SplineBasis) -> MomentTensors:
    """Cached exact tensors (bases are immutable and hashable)."""
    return _tensors_cached(basis)


# --------------------------------------------------------------------------
# Legendre relations
# --------------------------------------------------------------------------

def legendre_crossgram(basis: SplineBasis, degreeN: int) -> np.ndarray:
    """Exact M^LS_ij = <phi^Leg_i, phi_j>, shape (degreeN, N), Fraction entries."""
    out = np.empty((degreeN, basis.N), dtype=object)
    for i in range(degreeN):
        leg = legendre_function(i + 1)
        for j, f in enumerate(basis):
            out[i, j] = leg.inner(f)
    return out


def legendre_rows(basis: SplineBasis, n: int) -> np.ndarray:
    """Rows R with alpha_k = sum_i R[k-1, i] s_i, the L2-best Legendre coefficients."""
    MLS = legendre_crossgram(basis, n)
    scale = np.array([[Fraction(2 * k + 1)] for k in range(1, n + 1)], dtype=object)
    return scale * MLS


@dataclass(frozen=True)
class BasisTransform:
    """Spline <-> Legendre data.

    ``alpha_row`` maps s to alpha_1; ``linear_profile`` is the coefficient
    vector t with sum t_i phi_i = phi^Leg_1 (so s~ = t alpha_1). ``T`` is the
    square-case matrix phi^Leg = T phi^S, ``None`` otherwise.
    """

    alpha_row: np.ndarray
    linear_profile: np.ndarray
    valid_square: bool
    T: np.ndarray | None = None
    exact_alpha_row: tuple[Fraction, ...] = ()
    exact_linear_profile: tuple[Fraction, ...] = ()
    exact_T: np.ndarray | None = None

    def alpha1(self, s) -> np.ndarray:
        return np.asarray(s) @ self.alpha_row


def _exact_inverse(A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    cols = [_solve_exact(A.tolist(), [Fraction(int(i == j)) for i in range(n)]) for j in range(n)]
    return np.array(cols, dtype=object).T


def basis_transform(basis: SplineBasis) -> BasisTransform:
    ex = tensors_for(basis).exact
    MS = ex["M"]
    r = legendre_rows(basis, 1)[0]
    t = _solve_exact(MS.tolist(), [v / 3 for v in r])
    if sum(a * b for a, b in zip(r, t)) != 1:
        raise BasisError(f"{basis.kind}: linear Legendre profile is not representable")
    square = basis.grid.M == 2 and basis.degree == basis.N
    T = Tex = None
    if square:
        Tex = legendre_crossgram(basis, basis.N).dot(_exact_inverse(MS))
        T = np.vectorize(float, otypes=[float])(Tex)
    return BasisTransform(
        alpha_row=np.array([float(v) for v in r]),
        linear_profile=np.array([float(v) for v in t]),
        valid_square=square,
        T=T,
        exact_alpha_row=tuple(r),
        exact_linear_profile=tuple(t),
        exact_T=Tex,
    )


def legendre_gram(n: int) -> np.ndarray:
    return np.diag([1.0 / (2 * i + 1) for i in range(1, n + 1)])


def format_tensors(t: MomentTensors) -> str:
    """Flat text dump: one ``name index... value`` line per entry, rationals as p/q."""
    data = t.exact if t.exact is not None else {"M": t.M, "V0": t.V0, "C": t.C, "A": t.A, "B": t.B}
    lines = []
    for name in ("M", "V0", "C", "A", "B"):
        arr = data[name]
        for idx in np.ndindex(arr.shape):
            v = arr[idx]
            val = f"{v.numerator}/{v.denominator}" if isinstance(v, Fraction) else repr(float(v))
            lines.append(f"{name} {' '.join(str(i + 1) for i in idx)} {val}")
    return "\n".join(lines) + "\n"


__all__ = [
    "MomentTensors",
    "BasisTransform",
    "compute_tensors",
    "tensors_for",
    "legendre_crossgram",
    "legendre_rows",
    "basis_transform",
    "legendre_gram",
    "format_tensors",
    "PiecewisePoly",
]
