"""Constrained zero-mean spline bases on the unit interval.

Piecewise polynomials are stored exactly: one row of :class:`fractions.Fraction`
monomial coefficients (in the global variable ``zeta``) per grid segment.
Floating point only enters when a function is evaluated at a float argument.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

Number = Fraction | int | float
Poly = tuple[Fraction, ...]


class BasisError(ValueError):
    """Raised when a basis cannot be built or a function is queried outside [0, 1]."""


# --------------------------------------------------------------------------
# dense polynomial helpers (coefficients low -> high, exact)
# --------------------------------------------------------------------------

def _trim(p: Sequence[Fraction]) -> Poly:
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return tuple(p) if p else (Fraction(0),)


def poly_add(p: Poly, q: Poly) -> Poly:
    n = max(len(p), len(q))
    return _trim([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)])


def poly_scale(p: Poly, c: Number) -> Poly:
    c = Fraction(c)
    return _trim([c * a for a in p])


def poly_mul(p: Poly, q: Poly) -> Poly:
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return _trim(out)


def poly_deriv(p: Poly) -> Poly:
    return _trim([i * p[i] for i in range(1, len(p))]) if len(p) > 1 else (Fraction(0),)


def poly_integ(p: Poly) -> Poly:
    """Antiderivative vanishing at zeta = 0."""
    return _trim([Fraction(0)] + [a / (i + 1) for i, a in enumerate(p)])


def poly_eval(p: Poly, x):
    acc = 0 * x if not isinstance(x, Fraction) else Fraction(0)
    for a in reversed(p):
        acc = acc * x + (a if isinstance(x, Fraction) else float(a))
    return acc


# --------------------------------------------------------------------------
# grids and piecewise polynomials
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Breakpoints 0 = z_0 < ... < z_{M-1} = 1."""

    nodes: tuple[Fraction, ...]

    def __post_init__(self):
        nodes = tuple(Fraction(z) for z in self.nodes)
        if len(nodes) < 2:
            raise BasisError("a grid needs at least two nodes")
        if nodes[0] != 0 or nodes[-1] != 1:
            raise BasisError("grid must start at 0 and end at 1")
        if any(b <= a for a, b in zip(nodes, nodes[1:])):
            raise BasisError("grid nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)

    @property
    def M(self) -> int:
        return len(self.nodes)

    @property
    def n_segments(self) -> int:
        return len(self.nodes) - 1

    @cached_property
    def float_nodes(self) -> np.ndarray:
        return np.array([float(z) for z in self.nodes])

    def is_uniform(self) -> bool:
        h = self.nodes[1] - self.nodes[0]
        return all(b - a == h for a, b in zip(self.nodes, self.nodes[1:]))


def uniform_grid(M: int) -> Grid:
    """Equidistant grid with ``M`` nodes, ``z_j = j / (M - 1)``."""
    if M < 2:
        raise BasisError(f"uniform_grid needs M >= 2, got {M}")
    return Grid(tuple(Fraction(j, M - 1) for j in range(M)))


def merge_grids(*grids: Grid) -> Grid:
    return Grid(tuple(sorted(set().union(*(g.nodes for g in grids)))))


def _as_grid(grid: Grid | Sequence[Number]) -> Grid:
    return grid if isinstance(grid, Grid) else Grid(tuple(grid))


@dataclass(frozen=True)
class PiecewisePoly:
    """Piecewise polynomial on ``grid``; ``pieces[j]`` lives on [z_j, z_{j+1}).

    Evaluation is right-continuous at interior breakpoints and left-continuous
    at zeta = 1.
    """

    grid: Grid
    pieces: tuple[Poly, ...]

    def __post_init__(self):
        pieces = tuple(_trim([Fraction(c) for c in p]) for p in self.pieces)
        if len(pieces) != self.grid.n_segments:
            raise BasisError("need exactly one polynomial piece per grid segment")
        object.__setattr__(self, "pieces", pieces)

    # -- construction -----------------------------------------------------
    @classmethod
    def polynomial(cls, coeffs: Sequence[Number], grid: Grid | None = None) -> "PiecewisePoly":
        grid = grid or uniform_grid(2)
        p = tuple(Fraction(c) for c in coeffs)
        return cls(grid, (p,) * grid.n_segments)

    @classmethod
    def constant(cls, c: Number, grid: Grid | None = None) -> "PiecewisePoly":
        return cls.polynomial((c,), grid)

    @property
    def degree(self) -> int:
        return max(len(p) for p in self.pieces) - 1

    def refine(self, grid: Grid) -> "PiecewisePoly":
        """Re-express on a finer grid containing all current breakpoints."""
        if grid == self.grid:
            return self
        if not set(self.grid.nodes) <= set(grid.nodes):
            raise BasisError("target grid must contain every breakpoint")
        own = self.grid.nodes
        pieces = []
        for a in grid.nodes[:-1]:
            j = max(i for i in range(len(own) - 1) if own[i] <= a)
            pieces.append(self.pieces[j])
        return PiecewisePoly(grid, tuple(pieces))

    def _binary(self, other: "PiecewisePoly", op) -> "PiecewisePoly":
        g = self.grid if self.grid == other.grid else merge_grids(self.grid, other.grid)
        a, b = self.refine(g), other.refine(g)
        return PiecewisePoly(g, tuple(op(p, q) for p, q in zip(a.pieces, b.pieces)))

    def __add__(self, other: "PiecewisePoly") -> "PiecewisePoly":
        return self._binary(other, poly_add)

    def __sub__(self, other: "PiecewisePoly") -> "PiecewisePoly":
        return self + (-1) * other

    def __mul__(self, other):
        if isinstance(other, PiecewisePoly):
            return self._binary(other, poly_mul)
        return PiecewisePoly(self.grid, tuple(poly_scale(p, other) for p in self.pieces))

    __rmul__ = __mul__

    def derivative(self) -> "PiecewisePoly":
        return PiecewisePoly(self.grid, tuple(poly_deriv(p) for p in self.pieces))

    def antiderivative_poly(self) -> "PiecewisePoly":
        """Continuous primitive F with F(0) = 0."""
        pieces = []
        offset = Fraction(0)
        for z0, p in zip(self.grid.nodes, self.pieces):
            P = poly_integ(p)
            shift = offset - poly_eval(P, z0)
            P = poly_add(P, (shift,))
            pieces.append(P)
            offset = poly_eval(P, self.grid.nodes[len(pieces)])
        return PiecewisePoly(self.grid, tuple(pieces))

    def integral(self) -> Fraction:
        total = Fraction(0)
        for z0, z1, p in zip(self.grid.nodes, self.grid.nodes[1:], self.pieces):
            P = poly_integ(p)
            total += poly_eval(P, z1) - poly_eval(P, z0)
        return total

    def inner(self, other: "PiecewisePoly") -> Fraction:
        return (self * other).integral()

    # -- evaluation -------------------------------------------------------
    @cached_property
    def _float_pieces(self) -> np.ndarray:
        deg = self.degree
        out = np.zeros((len(self.pieces), deg + 1))
        for j, p in enumerate(self.pieces):
            out[j, : len(p)] = [float(c) for c in p]
        return out

    def segment_index(self, zeta) -> np.ndarray:
        z = np.asarray(zeta, dtype=float)
        idx = np.searchsorted(self.grid.float_nodes, z, side="right") - 1
        return np.clip(idx, 0, self.grid.n_segments - 1)

    def _check_domain(self, zeta):
        if isinstance(zeta, Fraction):
            ok = 0 <= zeta <= 1
        else:
            z = np.asarray(zeta, dtype=float)
            ok = bool(np.all((z >= 0) & (z <= 1)))
        if not ok:
            raise BasisError(f"zeta outside [0, 1]: {zeta}")

    def _exact_piece(self, zeta: Fraction) -> Poly:
        nodes = self.grid.nodes
        j = max(i for i in range(len(nodes) - 1) if nodes[i] <= zeta) if zeta < 1 else len(nodes) - 2
        return self.pieces[j]

    def __call__(self, zeta):
        self._check_domain(zeta)
        if isinstance(zeta, Fraction):
            return poly_eval(self._exact_piece(zeta), zeta)
        z = np.asarray(zeta, dtype=float)
        c = self._float_pieces[self.segment_index(z)]
        acc = np.zeros(z.shape)
        for k in range(c.shape[-1] - 1, -1, -1):
            acc = acc * z + c[..., k]
        return float(acc) if acc.ndim == 0 else acc

    def continuity_jumps(self, order: int) -> list[Fraction]:
        """Jumps of the ``order``-th derivative at each interior node."""
        f = self
        for _ in range(order):
            f = f.derivative()
        return [
            poly_eval(f.pieces[j], z) - poly_eval(f.pieces[j - 1], z)
            for j, z in enumerate(self.grid.nodes[1:-1], start=1)
        ]

    def to_dict(self) -> dict:
        return {
            "nodes": [_frac_str(z) for z in self.grid.nodes],
            "pieces": [[_frac_str(c) for c in p] for p in self.pieces],
        }


def _frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def eval(f: PiecewisePoly, zeta):  # noqa: A001 - mirrors the documented operation name
    return f(zeta)


def eval_derivative(f: PiecewisePoly, zeta):
    f._check_domain(zeta)
    return f.derivative()(zeta)


def antiderivative(f: PiecewisePoly, zeta):
    f._check_domain(zeta)
    return f.antiderivative_poly()(zeta)


# --------------------------------------------------------------------------
# B-splines
# --------------------------------------------------------------------------

def knot_vector(grid: Grid, K: int, ends: str = "extended") -> list[Fraction]:
    """Knots for degree-K B-splines on ``grid``.

    ``extended`` continues the first and last spacing K times beyond [0, 1]
    (uniform knots on an equidistant grid); ``clamped`` repeats the end nodes.
    """
    z = list(grid.nodes)
    if ends == "extended":
        dl, dr = z[1] - z[0], z[-1] - z[-2]
        left = [z[0] - k * dl for k in range(K, 0, -1)]
        right = [z[-1] + k * dr for k in range(1, K + 1)]
    elif ends == "clamped":
        left, right = [z[0]] * K, [z[-1]] * K
    else:
        raise BasisError(f"unknown knot end condition {ends!r}")
    return left + z + right


def build_bspline_basis(grid: Grid | Sequence[Number], K: int, ends: str = "extended") -> list[PiecewisePoly]:
    """All M + K - 1 degree-K B-splines whose support meets [0, 1], restricted to it."""
    grid = _as_grid(grid)
    if K < 1:
        raise BasisError(f"spline degree must be >= 1, got {K}")
    t = knot_vector(grid, K, ends)
    n_b = len(t) - K - 1
    per_segment: list[list[Poly]] = []
    for j in range(grid.n_segments):
        mu = K + j  # t[mu] == grid.nodes[j]
        B: list[Poly] = [(Fraction(1),) if i == mu else (Fraction(0),) for i in range(len(t) - 1)]
        for k in range(1, K + 1):
            nxt = []
            for i in range(len(t) - 1 - k):
                term = (Fraction(0),)
                d1 = t[i + k] - t[i]
                if d1 != 0:
                    term = poly_add(term, poly_mul((-t[i] / d1, 1 / d1), B[i]))
                d2 = t[i + k + 1] - t[i + 1]
                if d2 != 0:
                    term = poly_add(term, poly_mul((t[i + k + 1] / d2, -1 / d2), B[i + 1]))
                nxt.append(term)
            B = nxt
        per_segment.append(B)
    return [PiecewisePoly(grid, tuple(per_segment[j][i] for j in range(grid.n_segments))) for i in range(n_b)]


# --------------------------------------------------------------------------
# constrained bases
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SplineBasis:
    grid: Grid
    degree: int
    functions: tuple[PiecewisePoly, ...]
    kind: str = "custom"
    mu: tuple[Fraction, ...] = field(default=(), compare=False)

    @property
    def N(self) -> int:
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    def __getitem__(self, i: int) -> PiecewisePoly:
        return self.functions[i]

    def evaluate(self, zeta) -> np.ndarray:
        """Matrix of basis values, shape (N, len(zeta))."""
        return np.array([f(np.asarray(zeta, dtype=float)) for f in self.functions])

    @cached_property
    def gram(self) -> tuple[tuple[Fraction, ...], ...]:
        return tuple(tuple(f.inner(g) for g in self.functions) for f in self.functions)

    def combine(self, coeffs: Sequence[Number]) -> PiecewisePoly:
        out = PiecewisePoly.constant(0, self.grid)
        for c, f in zip(coeffs, self.functions):
            out = out + Fraction(c) * f
        return out


def build_constrained_basis(
    grid: Grid | Sequence[Number], K: int, ends: str = "extended", kind: str = "custom"
) -> SplineBasis:
    """Zero-mean splines ``phi_i = b_i / int(b_i) - b_{i+1} / int(b_{i+1})``.

    Up to the factor ``1 / int(b_i)`` this is ``b_i + mu_i b_{i+1}`` with
    ``mu_i = -int(b_i) / int(b_{i+1})``; the scaling reproduces the
    catalogued L1..L3, Q2, Q3 functions exactly.
    """
    grid = _as_grid(grid)
    b = build_bspline_basis(grid, K, ends)
    if len(b) - 1 < 1:
        raise BasisError("constrained basis would be empty")
    ints = [bi.integral() for bi in b]
    if any(v == 0 for v in ints):
        raise BasisError("B-spline with zero integral; cannot enforce zero mean")
    phis, mus = [], []
    for i in range(len(b) - 1):
        mus.append(-ints[i] / ints[i + 1])
        phis.append((1 / ints[i]) * b[i] + (-1 / ints[i + 1]) * b[i + 1])
    return SplineBasis(grid, K, tuple(phis), kind, tuple(mus))


def legendre_function(n: int) -> PiecewisePoly:
    """Shifted Legendre polynomial P_n(1 - 2 zeta) (value 1 at zeta = 0)."""
    # Bonnet recursion in x = 1 - 2 zeta
    x = (Fraction(1), Fraction(-2))
    p0, p1 = (Fraction(1),), x
    if n == 0:
        return PiecewisePoly.polynomial(p0)
    for k in range(1, n):
        p0, p1 = p1, poly_add(poly_scale(poly_mul(x, p1), Fraction(2 * k + 1, k + 1)), poly_scale(p0, Fraction(-k, k + 1)))
    return PiecewisePoly.polynomial(p1)


def legendre_basis(N: int) -> SplineBasis:
    if N < 1:
        raise BasisError("Legendre basis needs N >= 1")
    return SplineBasis(uniform_grid(2), N, tuple(legendre_function(n) for n in range(1, N + 1)), f"Leg{N}")


_NAME = re.compile(r"^(?:(?P<fam>[LQC])(?P<n>\d+)|(?:Leg|Legendre|SWME)(?P<leg>\d+))$")


def named_basis(name: str) -> SplineBasis:
    """Catalogue: ``L<N>`` linear, ``Q<N>`` quadratic, ``C<N>`` cubic, ``Leg<N>``/``SWME<N>`` Legendre."""
    m = _NAME.match(name.strip())
    if not m:
        raise BasisError(f"unknown basis id {name!r}")
    if m["leg"]:
        return legendre_basis(int(m["leg"]))
    fam, N = m["fam"], int(m["n"])
    K = {"L": 1, "Q": 2, "C": 3}[fam]
    M = N + 2 - K
    if N < K or M < 2:
        raise BasisError(f"{name}: need N >= {K} for degree {K}")
    return build_constrained_basis(uniform_grid(M), K, kind=f"{fam}{N}")


def parse_basis(spec: str) -> SplineBasis:
    """Named basis or ``custom:K=<deg>:<z0>,<z1>,...`` with rational nodes."""
    if spec.startswith("custom:"):
        try:
            _, kpart, nodes = spec.split(":")
            K = int(kpart.split("=")[1])
            grid = Grid(tuple(Fraction(z) for z in nodes.split(",")))
        except (ValueError, IndexError) as exc:
            raise BasisError(f"malformed custom basis spec {spec!r}") from exc
        return build_constrained_basis(grid, K, kind=spec)
    return named_basis(spec)


# --------------------------------------------------------------------------
# profile projection
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ProfileDecomposition:
    u_m: float
    s: np.ndarray
    residual_l2: float


def _solve_exact(A: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> list[Fraction]:
    n = len(b)
    aug = [list(map(Fraction, row)) + [Fraction(v)] for row, v in zip(A, b)]
    for c in range(n):
        piv = next((r for r in range(c, n) if aug[r][c] != 0), None)
        if piv is None:
            raise BasisError("singular Gram matrix")
        aug[c], aug[piv] = aug[piv], aug[c]
        for r in range(n):
            if r != c and aug[r][c] != 0:
                f = aug[r][c] / aug[c][c]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[c])]
    return [aug[i][n] / aug[i][i] for i in range(n)]


def project_profile(
    profile: PiecewisePoly | Callable[[np.ndarray], np.ndarray], basis: SplineBasis, n_quad: int = 24
) -> ProfileDecomposition:
    """Least-squares fit of ``profile`` in span{1, phi_1..phi_N}.

    Piecewise-polynomial profiles are projected exactly; callables use
    composite Gauss-Legendre quadrature on the merged breakpoints.
    """
    if isinstance(profile, PiecewisePoly):
        um = profile.integral()
        dev = profile - PiecewisePoly.constant(um)
        rhs = [dev.inner(f) for f in basis]
        s = _solve_exact(basis.gram, rhs)
        resid = dev - basis.combine(s)
        r2 = resid.inner(resid)
        return ProfileDecomposition(float(um), np.array([float(v) for v in s]), math.sqrt(max(float(r2), 0.0)))

    x, w = _composite_gauss(basis.grid, n_quad)
    u = np.asarray(profile(x), dtype=float)
    um = float(w @ u)
    phi = basis.evaluate(x)
    G = np.array([[float(v) for v in row] for row in basis.gram])
    try:
        s = np.linalg.solve(G, phi @ (w * (u - um)))
    except np.linalg.LinAlgError as exc:
        raise BasisError("singular Gram matrix") from exc
    resid = u - um - s @ phi
    return ProfileDecomposition(um, s, math.sqrt(max(float(w @ resid**2), 0.0)))


def _composite_gauss(grid: Grid, n: int, subdiv: int = 8) -> tuple[np.ndarray, np.ndarray]:
    xg, wg = np.polynomial.legendre.leggauss(n)
    edges = []
    nodes = grid.float_nodes
    for a, b in zip(nodes, nodes[1:]):
        edges.extend(np.linspace(a, b, subdiv + 1)[:-1])
    edges = np.append(edges, 1.0)
    a, b = edges[:-1, None], edges[1:, None]
    x = 0.5 * (b - a) * xg + 0.5 * (a + b)
    w = 0.5 * (b - a) * wg
    return x.ravel(), w.ravel()
