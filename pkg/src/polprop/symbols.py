"""Matrix symbols of differential operators in a fixed chart and frame.

Convention
----------
The operator ``sum_alpha A_alpha(x) d^alpha`` has the symbol
``sum_alpha A_alpha(x) (i xi)^alpha``.  Coefficients are stored against
powers of ``zeta = i xi``, so a real operator has real coefficients and
every formula below is written in ``zeta``:

=============================  =============================================
``xi`` form                    ``zeta`` form
=============================  =============================================
``d/dxi_mu``                   ``i d/dzeta_mu``
refined: ``a + (i/2) dx dxi a``  ``a - (1/2) sum_mu dx_mu dzeta_mu a``
composition:                   ``sum_alpha (1/alpha!) dzeta^alpha a``
``sum (-i)^|alpha|/alpha! ...``  ``* dx^alpha a'`` (plain Leibniz)
dual: ``a(x, -xi)^T``          ``(-1)^|alpha| A_alpha^T``
=============================  =============================================

Coefficients may be complex (a refined symbol picks up ``i``), so each
matrix entry is a pair ``(re, im)`` of :class:`~polprop.exprs.Expr`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import exprs as ex
from .exprs import Expr

__all__ = [
    "PolySymbol",
    "GradedSymbol",
    "RankMismatchError",
    "NonScalarPrincipalError",
    "SingularFrameError",
    "multi_indices",
    "symbol_from_real",
    "identity_symbol",
    "matrix_symbol",
    "principal",
    "homogeneous_part",
    "refined_principal",
    "subprincipal",
    "compose",
    "dual_symbol",
    "d_zeta",
    "d_x",
    "frame_change",
    "frame_change_refined",
    "FrameChangeReport",
    "sample_points",
]

CExpr = tuple  # (re: Expr, im: Expr)
CZERO: CExpr = (ex.ZERO, ex.ZERO)
CONE: CExpr = (ex.ONE, ex.ZERO)


class RankMismatchError(ValueError):
    pass


class NonScalarPrincipalError(ValueError):
    pass


class SingularFrameError(ArithmeticError):
    pass


# -- complex Expr arithmetic ----------------------------------------------


def cadd(a: CExpr, b: CExpr) -> CExpr:
    return (ex.add(a[0], b[0]), ex.add(a[1], b[1]))


def cmul(a: CExpr, b: CExpr) -> CExpr:
    ar, ai = a
    br, bi = b
    re = ex.sub(ex.mul(ar, br), ex.mul(ai, bi))
    im = ex.add(ex.mul(ar, bi), ex.mul(ai, br))
    return (re, im)


def cscale(c: complex, a: CExpr) -> CExpr:
    c = complex(c)
    cr, ci = ex.Num(c.real), ex.Num(c.imag)
    return cmul((cr, ci), a)


def cdiff(a: CExpr, mu: int) -> CExpr:
    return (ex.diff(a[0], mu), ex.diff(a[1], mu))


def cis_zero(a: CExpr) -> bool:
    return a[0].is_zero and a[1].is_zero


Mat = tuple  # tuple of tuple of CExpr


def mat_zero(r: int) -> Mat:
    return tuple(tuple(CZERO for _ in range(r)) for _ in range(r))


def mat_add(a: Mat, b: Mat) -> Mat:
    return tuple(tuple(cadd(x, y) for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def mat_mul(a: Mat, b: Mat) -> Mat:
    r = len(a)
    out = []
    for i in range(r):
        row = []
        for j in range(r):
            acc = CZERO
            for l in range(r):
                if cis_zero(a[i][l]) or cis_zero(b[l][j]):
                    continue
                acc = cadd(acc, cmul(a[i][l], b[l][j]))
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


def mat_scale(c: complex, a: Mat) -> Mat:
    return tuple(tuple(cscale(c, x) for x in row) for row in a)


def mat_diff(a: Mat, mu: int) -> Mat:
    return tuple(tuple(cdiff(x, mu) for x in row) for row in a)


def mat_transpose(a: Mat) -> Mat:
    return tuple(zip(*a))


def mat_is_zero(a: Mat) -> bool:
    return all(cis_zero(x) for row in a for x in row)


def real_mat(rows: Sequence[Sequence]) -> Mat:
    return tuple(tuple((ex.as_expr(v), ex.ZERO) for v in row) for row in rows)


# -- multi-indices ------------------------------------------------------------


def multi_indices(dim: int, degree: int) -> list[tuple[int, ...]]:
    """All multi-indices of the given total degree, in lexicographic order."""
    out = []
    for combo in itertools.combinations_with_replacement(range(dim), degree):
        alpha = [0] * dim
        for c in combo:
            alpha[c] += 1
        out.append(tuple(alpha))
    return sorted(out, reverse=True)


def _factorial(alpha) -> int:
    return math.prod(math.factorial(a) for a in alpha)


# -- symbol types ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PolySymbol:
    """Polynomial matrix symbol ``sum_alpha A_alpha(x) zeta^alpha``.

    Attributes
    ----------
    dim : int
        Chart dimension.
    rank : int
        Bundle rank ``r``; coefficients are ``r x r``.
    order : int
        Declared order ``m``; no coefficient has ``|alpha| > m``.
    coeffs : dict
        Multi-index to ``r x r`` matrix of ``(re, im)`` Expr pairs.  Zero
        matrices are dropped.
    """

    dim: int
    rank: int
    order: int
    coeffs: Mapping[tuple[int, ...], Mat]

    def __post_init__(self):
        clean = {}
        for alpha, mat in self.coeffs.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.dim or min(alpha, default=0) < 0:
                raise ValueError(f"bad multi-index {alpha}")
            if sum(alpha) > self.order:
                raise ValueError(f"multi-index {alpha} exceeds order {self.order}")
            if len(mat) != self.rank or any(len(r) != self.rank for r in mat):
                raise RankMismatchError("coefficient matrix has wrong shape")
            if not mat_is_zero(mat):
                clean[alpha] = mat
        object.__setattr__(self, "coeffs", dict(sorted(clean.items(), reverse=True)))

    def coeff(self, alpha) -> Mat:
        return self.coeffs.get(tuple(alpha), mat_zero(self.rank))

    def degrees(self) -> set[int]:
        return {sum(a) for a in self.coeffs}

    @cached_property
    def _fn(self):
        entries = []
        for mat in self.coeffs.values():
            for row in mat:
                for re, im in row:
                    entries.extend((re, im))
        return ex.compile_exprs(entries)

    def coeff_values(self, x) -> dict[tuple[int, ...], np.ndarray]:
        """Numerical coefficient table at ``x``: multi-index to complex matrix."""
        r = self.rank
        if not self.coeffs:
            return {}
        vals = np.asarray(self._fn(tuple(float(v) for v in x)))
        vals = (vals[0::2] + 1j * vals[1::2]).reshape(len(self.coeffs), r, r)
        return dict(zip(self.coeffs.keys(), vals))

    def __call__(self, x, xi) -> np.ndarray:
        """Evaluate ``a(x, xi)`` as a complex ``r x r`` matrix."""
        zeta = 1j * np.asarray(xi, dtype=float)
        out = np.zeros((self.rank, self.rank), dtype=complex)
        for alpha, mat in self.coeff_values(x).items():
            out += mat * np.prod(zeta ** np.array(alpha))
        return out

    def __add__(self, other: "PolySymbol") -> "PolySymbol":
        _check_compatible(self, other)
        coeffs = dict(self.coeffs)
        for alpha, mat in other.coeffs.items():
            coeffs[alpha] = mat_add(coeffs[alpha], mat) if alpha in coeffs else mat
        return PolySymbol(self.dim, self.rank, max(self.order, other.order), coeffs)

    def scaled(self, c: complex) -> "PolySymbol":
        return PolySymbol(
            self.dim, self.rank, self.order, {a: mat_scale(c, m) for a, m in self.coeffs.items()}
        )

    def __neg__(self) -> "PolySymbol":
        return self.scaled(-1.0)

    def __sub__(self, other: "PolySymbol") -> "PolySymbol":
        return self + (-other)

    def __mul__(self, other: "PolySymbol") -> "PolySymbol":
        """Pointwise product in ``(x, zeta)``, matrices multiplied in order."""
        _check_compatible(self, other)
        coeffs: dict = {}
        for a, ma in self.coeffs.items():
            for b, mb in other.coeffs.items():
                g = tuple(i + j for i, j in zip(a, b))
                prod = mat_mul(ma, mb)
                coeffs[g] = mat_add(coeffs[g], prod) if g in coeffs else prod
        return PolySymbol(self.dim, self.rank, self.order + other.order, coeffs)


@dataclass(frozen=True, eq=False)
class GradedSymbol:
    """Sum of homogeneous layers keyed by degree."""

    parts: Mapping[int, PolySymbol]

    def part(self, degree: int) -> PolySymbol | None:
        return self.parts.get(degree)

    def total(self) -> PolySymbol:
        items = list(self.parts.values())
        out = items[0]
        for p in items[1:]:
            out = out + p
        return out

    def __call__(self, x, xi) -> np.ndarray:
        return sum(p(x, xi) for p in self.parts.values())


def _check_compatible(a: PolySymbol, b: PolySymbol) -> None:
    if a.rank != b.rank:
        raise RankMismatchError(f"rank {a.rank} vs {b.rank}")
    if a.dim != b.dim:
        raise ValueError(f"chart dimension {a.dim} vs {b.dim}")


# -- constructors -----------------------------------------------------------------


def symbol_from_real(
    dim: int, rank: int, order: int, coeffs: Mapping[tuple[int, ...], Sequence[Sequence]]
) -> PolySymbol:
    """Symbol of the real operator ``sum_alpha A_alpha d^alpha``.

    Matrix entries may be numbers, Exprs or expression strings.
    """
    return PolySymbol(dim, rank, order, {tuple(a): real_mat(m) for a, m in coeffs.items()})


def matrix_symbol(rows: Sequence[Sequence], dim: int) -> PolySymbol:
    """Order-zero symbol of multiplication by a matrix function."""
    return symbol_from_real(dim, len(rows), 0, {(0,) * dim: rows})


def identity_symbol(dim: int, rank: int) -> PolySymbol:
    return matrix_symbol(np.eye(rank).tolist(), dim)


# -- calculus ---------------------------------------------------------------------


def homogeneous_part(a: PolySymbol, degree: int) -> PolySymbol:
    return PolySymbol(
        a.dim, a.rank, max(degree, 0), {al: m for al, m in a.coeffs.items() if sum(al) == degree}
    )


def principal(a: PolySymbol) -> PolySymbol:
    """Degree-``m`` homogeneous part."""
    return homogeneous_part(a, a.order)


def truncate(a: PolySymbol, drop_below: int) -> PolySymbol:
    return PolySymbol(
        a.dim, a.rank, a.order, {al: m for al, m in a.coeffs.items() if sum(al) >= drop_below}
    )


def d_zeta(a: PolySymbol, mu: int) -> PolySymbol:
    """``d/dzeta_mu`` of the symbol (order drops by one)."""
    coeffs: dict = {}
    for alpha, mat in a.coeffs.items():
        if alpha[mu] == 0:
            continue
        beta = list(alpha)
        beta[mu] -= 1
        coeffs[tuple(beta)] = mat_scale(alpha[mu], mat)
    return PolySymbol(a.dim, a.rank, max(a.order - 1, 0), coeffs)


def d_x(a: PolySymbol, mu: int) -> PolySymbol:
    """``d/dx^mu`` of every coefficient."""
    return PolySymbol(a.dim, a.rank, a.order, {al: mat_diff(m, mu) for al, m in a.coeffs.items()})


def refined_principal(a: PolySymbol) -> GradedSymbol:
    """Top two layers of ``a + (i/2) d_x d_xi a``.

    In the ``zeta`` basis the correction is ``-(1/2) sum_mu dx_mu dzeta_mu a``;
    only its degree ``m - 1`` part is kept.
    """
    m = a.order
    corr = None
    for mu in range(a.dim):
        term = d_x(d_zeta(homogeneous_part(a, m), mu), mu)
        corr = term if corr is None else corr + term
    top = principal(a)
    below = homogeneous_part(a, m - 1) if m >= 1 else None
    if m >= 1:
        below = below + homogeneous_part(corr, m - 1).scaled(-0.5)
        below = PolySymbol(a.dim, a.rank, m - 1, below.coeffs)
        return GradedSymbol({m: top, m - 1: below})
    return GradedSymbol({m: top})


def subprincipal(a: PolySymbol) -> PolySymbol:
    """Degree ``m - 1`` layer of the refined principal symbol."""
    if a.order == 0:
        return PolySymbol(a.dim, a.rank, 0, {})
    return refined_principal(a).parts[a.order - 1]


def compose(a: PolySymbol, b: PolySymbol, drop_below: int = 0) -> PolySymbol:
    """Symbol of the operator product ``Op(a) Op(b)``.

    ``sum_alpha (1/alpha!) (dzeta^alpha a)(dx^alpha b)`` summed over all
    ``|alpha| <= order(a)`` (the series terminates), then layers of degree
    below ``drop_below`` are discarded.
    """
    _check_compatible(a, b)
    n = a.dim
    da: dict[tuple, PolySymbol] = {(0,) * n: a}
    db: dict[tuple, PolySymbol] = {(0,) * n: b}

    def deriv(cache, alpha, op):
        if alpha in cache:
            return cache[alpha]
        mu = next(i for i, v in enumerate(alpha) if v > 0)
        prev = list(alpha)
        prev[mu] -= 1
        val = op(deriv(cache, tuple(prev), op), mu)
        cache[alpha] = val
        return val

    out = PolySymbol(n, a.rank, a.order + b.order, {})
    for deg in range(a.order + 1):
        for alpha in multi_indices(n, deg):
            left = deriv(da, alpha, d_zeta)
            if not left.coeffs:
                continue
            right = deriv(db, alpha, d_x)
            if not right.coeffs:
                continue
            term = (left * right).scaled(1.0 / _factorial(alpha))
            out = out + term
    out = PolySymbol(n, a.rank, a.order + b.order, out.coeffs)
    return truncate(out, drop_below)


def dual_symbol(a: PolySymbol) -> PolySymbol:
    """``a(x, -xi)^T``: each layer of degree ``j`` picks up ``(-1)^j``."""
    return PolySymbol(
        a.dim,
        a.rank,
        a.order,
        {
            al: mat_scale((-1) ** sum(al), mat_transpose(m)) if sum(al) % 2 else mat_transpose(m)
            for al, m in a.coeffs.items()
        },
    )


# -- frame changes -----------------------------------------------------------------


def sample_points(
    dim: int,
    n: int = 20,
    seed: int = 0,
    box: Sequence[tuple[float, float]] | None = None,
    xi_norm: tuple[float, float] = (0.5, 5.0),
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Reproducible ``(x, xi)`` samples with ``|xi|`` uniform in ``xi_norm``."""
    rng = np.random.default_rng(seed)
    box = box or [(-1.0, 1.0)] * dim
    out = []
    for _ in range(n):
        x = np.array([rng.uniform(lo, hi) for lo, hi in box])
        d = rng.normal(size=dim)
        d /= np.linalg.norm(d)
        out.append((x, d * rng.uniform(*xi_norm)))
    return out


def frame_change(a: PolySymbol, M: Sequence[Sequence]) -> PolySymbol:
    """Symbol of ``M Op(a) M^{-1}``, the operator in the frame ``e M^{-1}``."""
    rows = [[ex.as_expr(v) for v in row] for row in M]
    if len(rows) != a.rank:
        raise RankMismatchError("frame matrix has wrong size")
    m_sym = matrix_symbol(rows, a.dim)
    minv_sym = matrix_symbol(ex.inverse(rows), a.dim)
    return compose(compose(m_sym, a), minv_sym)


@dataclass
class FrameChangeReport:
    max_residual: float
    residuals: list[float]
    samples: int


def _scalar_principal(a: PolySymbol, points) -> None:
    top = principal(a)
    for x, xi in points[:5]:
        p = top(x, xi)
        scale = 1.0 + np.abs(p).max()
        d = np.diag(p)
        off = p - np.diag(d)
        if np.abs(off).max() > 1e-12 * scale or np.abs(d - d[0]).max() > 1e-12 * scale:
            raise NonScalarPrincipalError("principal part is not a multiple of the identity")


def frame_change_refined(
    a: PolySymbol,
    M: Sequence[Sequence],
    connection: Sequence[Sequence[Sequence]] | None = None,
    points: Sequence[tuple[np.ndarray, np.ndarray]] | None = None,
    tol: float = 1e-9,
) -> tuple[PolySymbol, FrameChangeReport]:
    """Change frame and check covariance of ``a^r + i Gamma_{X_b}``.

    With ``a = b I + (lower order)``, ``V^mu = db/dxi_mu`` and a connection
    ``Gamma_mu`` in the old frame (default zero), the new-frame connection is
    ``Gamma'_V = (M Gamma_V - V^mu d_mu M) M^{-1}``.  The report holds
    ``|M (a^r + i Gamma_V) - (a'^r + i Gamma'_V) M| / (1 + |lhs|)`` per sample.

    Raises
    ------
    NonScalarPrincipalError, SingularFrameError
    """
    n, r = a.dim, a.rank
    rows = [[ex.as_expr(v) for v in row] for row in M]
    points = list(points) if points is not None else sample_points(n)
    _scalar_principal(a, points)

    m_fn = ex.compile_exprs([e for row in rows for e in row])
    dm_fn = ex.compile_exprs([ex.diff(e, mu) for mu in range(n) for row in rows for e in row])
    if connection is None:
        gam_fn = None
    else:
        gam_fn = ex.compile_exprs([ex.as_expr(e) for mu in range(n) for row in connection[mu] for e in row])

    a_new = frame_change(a, rows)
    ar = refined_principal(a)
    ar_new = refined_principal(a_new)
    b = homogeneous_part(a, a.order)
    db = [d_zeta(b, mu) for mu in range(n)]

    res = []
    for x, xi in points:
        Mx = np.asarray(m_fn(tuple(x))).reshape(r, r)
        if abs(np.linalg.det(Mx)) < 1e-12:
            raise SingularFrameError(f"frame matrix singular at {tuple(x)}")
        Minv = np.linalg.inv(Mx)
        dM = np.asarray(dm_fn(tuple(x))).reshape(n, r, r)
        gam = np.zeros((n, r, r)) if gam_fn is None else np.asarray(gam_fn(tuple(x))).reshape(n, r, r)
        # d/dxi = i d/dzeta; b is scalar so read the (0,0) entry
        V = np.array([(1j * db[mu](x, xi)[0, 0]).real for mu in range(n)])
        gam_V = np.einsum("m,mab->ab", V, gam)
        gam_V_new = (Mx @ gam_V - np.einsum("m,mab->ab", V, dM)) @ Minv
        lhs = Mx @ (ar(x, xi) + 1j * gam_V)
        rhs = (ar_new(x, xi) + 1j * gam_V_new) @ Mx
        res.append(float(np.linalg.norm(lhs - rhs) / (1.0 + np.linalg.norm(lhs))))
    return a_new, FrameChangeReport(max(res, default=0.0), res, len(res))
