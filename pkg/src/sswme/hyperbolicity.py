"""Characteristic speeds, hyperbolicity checks and coefficient-space scans."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DryStateError, Model, conservative, primitive, regularized_system_matrix, system_matrix


@dataclass(frozen=True)
class SpeedSpectrum:
    eigenvalues: np.ndarray
    max_imag: float
    shifted_speeds: np.ndarray | None = None


def _sort_eigs(ev: np.ndarray) -> np.ndarray:
    order = np.lexsort((ev.imag, ev.real))
    return ev[order]


def spectrum(A, h: float | None = None, um: float | None = None, g: float = 1.0) -> SpeedSpectrum:
    """Eigenvalues of a real square matrix, ordered by (real, imaginary) part.

    When ``h`` and ``um`` are given the speeds are also reported in the
    shifted form ``c = (lambda - u_m) / sqrt(g h)``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("spectrum needs a square matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    ev = _sort_eigs(np.linalg.eigvals(A))
    shifted = None
    if h is not None and um is not None:
        shifted = (ev - um) / np.sqrt(g * h)
    return SpeedSpectrum(ev, float(np.max(np.abs(ev.imag))), shifted)


def default_tol(model: Model, U) -> float:
    h = primitive(U)[0]
    return 1e-9 * max(1.0, float(np.sqrt(model.params.g * np.max(h))))


def is_hyperbolic(model: Model, U, tol: float | None = None, regularized: bool | None = None) -> bool:
    """Real spectrum test for the raw or regularised system matrix.

    Only reality of the eigenvalues is checked, not diagonalisability.
    """
    reg = model.regularized if regularized is None else regularized
    A = regularized_system_matrix(model, U) if reg else system_matrix(model, U)
    tol = default_tol(model, U) if tol is None else tol
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    return bool(np.max(np.abs(np.linalg.eigvals(A).imag)) <= tol)


def scaled_matrix(model: Model, sbar, regularized: bool = False) -> np.ndarray:
    """A_sys at h = 1, u_m = 0, g = 1 for scaled coefficients ``sbar`` (batched)."""
    unit = model.with_params(g=1.0)
    sbar = np.asarray(sbar, dtype=float)
    U = conservative(np.ones(sbar.shape[:-1]), np.zeros(sbar.shape[:-1]), sbar)
    return regularized_system_matrix(unit, U) if regularized else system_matrix(unit, U)


def max_imag_scaled(model: Model, sbar, regularized: bool = False) -> np.ndarray:
    A = scaled_matrix(model, sbar, regularized)
    return np.max(np.abs(np.linalg.eigvals(A).imag), axis=-1)


def shifted_char_poly(model: Model, sbar, regularized: bool = False) -> np.ndarray:
    """Monic characteristic polynomial of A_sys(1, 0, sbar) in c, highest power first.

    Faddeev-LeVerrier recursion, so it does not rely on an eigen-solver.
    """
    A = scaled_matrix(model, sbar, regularized)
    n = A.shape[0]
    coeffs = [1.0]
    Mk = np.zeros_like(A)
    I = np.eye(n)
    for k in range(1, n + 1):
        Mk = A @ Mk + coeffs[-1] * I
        coeffs.append(-np.trace(A @ Mk) / k)
    return np.array(coeffs)


@dataclass(frozen=True)
class HyperbolicityMap:
    """Max |Im c| over a 2-D grid of scaled coefficients.

    ``points`` has shape (n1, n2, N); for N = 2 it is the (s1, s2) plane, for
    N >= 3 the affine slice ``origin + a d1 + b d2``.
    """

    axis1: np.ndarray
    axis2: np.ndarray
    points: np.ndarray
    max_imag: np.ndarray
    on_line: np.ndarray
    tol: float

    @property
    def hyperbolic(self) -> np.ndarray:
        return self.max_imag <= self.tol

    @property
    def shape(self) -> tuple[int, int]:
        return self.max_imag.shape


def scan_region(
    model: Model,
    ranges: tuple[tuple[float, float], tuple[float, float]],
    resolution: int | tuple[int, int],
    slice_: tuple | None = None,
    regularized: bool = False,
    tol: float = 1e-9,
) -> HyperbolicityMap:
    """Scan hyperbolicity at (h, u_m, g) = (1, 0, 1) over a 2-D coefficient grid."""
    n1, n2 = (resolution, resolution) if np.isscalar(resolution) else resolution
    if n1 < 1 or n2 < 1:
        raise ValueError("resolution must be positive")
    (a0, a1), (b0, b1) = ranges
    if not (a1 > a0 and b1 > b0) and not (n1 == 1 or n2 == 1):
        raise ValueError("empty scan range")
    ax1 = np.linspace(a0, a1, n1)
    ax2 = np.linspace(b0, b1, n2)
    N = model.N
    if slice_ is None:
        if N != 2:
            raise ValueError("N != 2 needs a slice (origin, d1, d2)")
        origin, d1, d2 = np.zeros(2), np.array([1.0, 0.0]), np.array([0.0, 1.0])
    else:
        origin, d1, d2 = (np.asarray(v, dtype=float) for v in slice_)
    A1, A2 = np.meshgrid(ax1, ax2, indexing="ij")
    pts = origin + A1[..., None] * d1 + A2[..., None] * d2
    mi = max_imag_scaled(model, pts, regularized)
    t = model.transform.linear_profile
    t = t / np.linalg.norm(t)
    dist = np.linalg.norm(pts - (pts @ t)[..., None] * t, axis=-1)
    cell = max((a1 - a0) / max(n1 - 1, 1) * np.linalg.norm(d1), (b1 - b0) / max(n2 - 1, 1) * np.linalg.norm(d2))
    return HyperbolicityMap(ax1, ax2, pts, mi, dist <= 0.5 * cell + 1e-15, tol)


def restriction_line(model: Model, alphas, regularized: bool = False) -> np.ndarray:
    """Max |Im c| along the linear-profile line s = t * alpha_1 (scaled)."""
    alphas = np.asarray(alphas, dtype=float)
    pts = alphas[:, None] * model.transform.linear_profile
    return max_imag_scaled(model, pts, regularized)


def find_witness(model: Model, radius: float, n_dirs: int = 4000, seed: int = 0, tol: float = 1e-9):
    """Search the sphere |sbar| = radius for a non-hyperbolic point off the linear-profile line.

    Returns ``(sbar, max_imag)`` for the worst direction found, or ``None``.
    """
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(n_dirs, model.N))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    t = model.transform.linear_profile / np.linalg.norm(model.transform.linear_profile)
    off = np.linalg.norm(d - (d @ t)[:, None] * t, axis=1) > 0.1
    pts = radius * d[off]
    if len(pts) == 0:
        # N = 1: the whole coefficient space is the linear-profile line
        return None
    mi = max_imag_scaled(model, pts)
    k = int(np.argmax(mi))
    return (pts[k], float(mi[k])) if mi[k] > tol else None


__all__ = [
    "SpeedSpectrum",
    "HyperbolicityMap",
    "spectrum",
    "is_hyperbolic",
    "scaled_matrix",
    "max_imag_scaled",
    "shifted_char_poly",
    "scan_region",
    "restriction_line",
    "find_witness",
    "DryStateError",
]
