"""Charts, metrics, Christoffel symbols and the Hamiltonian flow of ``q``.

Conventions
-----------
* Signature is mostly minus, ``(+, -, ..., -)``.
* ``q(x, k) = -g^{mu nu}(x) k_mu k_nu``; null covectors have ``q = 0``.
* The Hamiltonian vector field of ``q`` on the cotangent bundle is::

      xdot^mu = -2 g^{mu nu} k_nu
      kdot_mu =  k_a k_b d_mu g^{ab}

  and its integral curves satisfy ``k = -1/2 flat(xdot)``.

A model holds its metric as a matrix of :class:`~polprop.exprs.Expr`, so the
inverse, the Christoffel symbols and all derivatives are available
symbolically.  Numerical evaluation goes through compiled straight-line code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import exprs as ex
from .exprs import Expr

__all__ = [
    "SpacetimeModel",
    "PhasePoint",
    "SingularMetricError",
    "ChartDomainError",
    "UnsupportedSpacetimeError",
    "minkowski",
    "flrw",
    "custom",
    "metric_at",
    "christoffel_at",
    "q_value",
    "is_null",
    "hamiltonian_field",
    "sharp",
    "flat",
    "causal_order",
    "metric_density_power",
    "check_signature",
]

DEFAULT_TOL_NULL = 1e-10
SINGULAR_DET = 1e-14
KINDS = ("builtin-minkowski", "builtin-flrw", "custom")


class SingularMetricError(ArithmeticError):
    pass


class ChartDomainError(ValueError):
    pass


class UnsupportedSpacetimeError(ValueError):
    pass


def _expr_matrix(rows) -> tuple[tuple[Expr, ...], ...]:
    return tuple(tuple(ex.as_expr(v) for v in row) for row in rows)


@dataclass(frozen=True, eq=False)
class SpacetimeModel:
    """A single-chart Lorentzian spacetime.

    Attributes
    ----------
    dim : int
        Chart dimension, at least 2.
    g_low : tuple of tuple of Expr
        Covariant metric components ``g_{mu nu}(x)``; must be symmetric.
    domain : tuple of (float, float)
        Open interval per coordinate.
    time_axis : int
        Coordinate whose increase is future directed.
    kind : str
        ``builtin-minkowski``, ``builtin-flrw`` or ``custom``.
    scale_factor : Expr or None
        ``a(x0)`` for the FLRW builtin (conformal time chart).
    """

    dim: int
    g_low: tuple
    domain: tuple
    time_axis: int = 0
    kind: str = "custom"
    scale_factor: Expr | None = None
    label: str = field(default="")

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dimension must be at least 2")
        object.__setattr__(self, "g_low", _expr_matrix(self.g_low))
        if len(self.g_low) != self.dim or any(len(r) != self.dim for r in self.g_low):
            raise ValueError("metric must be a dim x dim matrix")
        for i in range(self.dim):
            for j in range(i):
                if self.g_low[i][j] != self.g_low[j][i]:
                    raise ValueError(f"metric not symmetric at ({i},{j})")
        for row in self.g_low:
            for e in row:
                bad = [i for i in ex.free_vars(e) if i >= self.dim]
                if bad:
                    raise ValueError(f"metric uses x{bad[0]} beyond dimension {self.dim}")
        dom = tuple((float(lo), float(hi)) for lo, hi in self.domain)
        if len(dom) != self.dim or any(lo >= hi for lo, hi in dom):
            raise ValueError("domain needs one non-empty interval per coordinate")
        object.__setattr__(self, "domain", dom)
        if not 0 <= self.time_axis < self.dim:
            raise ValueError("time_axis out of range")
        if self.kind not in KINDS:
            raise ValueError(f"unknown spacetime kind {self.kind!r}")

    # -- symbolic derived data -------------------------------------------

    @cached_property
    def is_constant(self) -> bool:
        return all(isinstance(e, ex.Num) for row in self.g_low for e in row)

    @cached_property
    def g_inv(self) -> tuple[tuple[Expr, ...], ...]:
        return ex.inverse(self.g_low)

    @cached_property
    def det_g(self) -> Expr:
        return ex.det(self.g_low)

    @cached_property
    def dg_low(self):
        """``dg_low[mu][a][b] = d_mu g_{ab}``."""
        return self._derivs(self.g_low)

    @cached_property
    def dg_inv(self):
        """``dg_inv[mu][a][b] = d_mu g^{ab}``."""
        return self._derivs(self.g_inv)

    def _derivs(self, mat):
        n = self.dim
        out = []
        for mu in range(n):
            rows = [[None] * n for _ in range(n)]
            for a in range(n):
                for b in range(a, n):
                    rows[a][b] = rows[b][a] = ex.diff(mat[a][b], mu)
            out.append(tuple(tuple(r) for r in rows))
        return tuple(out)

    @cached_property
    def christoffel(self):
        """``christoffel[l][mu][nu] = Gamma^l_{mu nu}`` as Exprs.

        Only ``mu <= nu`` is built; the other half reuses the same objects,
        so the symmetry is exact.
        """
        n = self.dim
        gi, dg = self.g_inv, self.dg_low
        out = [[[None] * n for _ in range(n)] for _ in range(n)]
        for lam in range(n):
            for mu in range(n):
                for nu in range(mu, n):
                    terms = []
                    for s in range(n):
                        if gi[lam][s].is_zero:
                            continue
                        inner = ex.sub(ex.add(dg[mu][s][nu], dg[nu][s][mu]), dg[s][mu][nu])
                        terms.append(ex.mul(gi[lam][s], inner))
                    val = ex.mul(ex.Num(0.5), ex.total(terms))
                    out[lam][mu][nu] = out[lam][nu][mu] = val
        return tuple(tuple(tuple(r) for r in m) for m in out)

    @cached_property
    def density(self) -> Expr:
        """``rho = (-det g)^{1/2}`` as an Expr."""
        return ex.call("sqrt", ex.neg(self.det_g))

    # -- compiled evaluators ---------------------------------------------

    @cached_property
    def _g_low_fn(self):
        return ex.compile_exprs([e for row in self.g_low for e in row])

    @cached_property
    def _flow_fn(self):
        n = self.dim
        flat_list = [e for row in self.g_inv for e in row]
        flat_list += [e for mu in range(n) for row in self.dg_inv[mu] for e in row]
        return ex.compile_exprs(flat_list)

    @cached_property
    def _christoffel_fn(self):
        return ex.compile_exprs([e for m in self.christoffel for row in m for e in row])

    @cached_property
    def _const_ginv(self) -> np.ndarray:
        g = np.array([[e.value for e in row] for row in self.g_low])
        return np.linalg.inv(g)

    def inverse_and_derivative(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Return ``g^{ab}(x)`` and ``d_mu g^{ab}(x)`` (shape ``(n, n, n)``)."""
        n = self.dim
        if self.is_constant:
            return self._const_ginv, np.zeros((n, n, n))
        vals = np.asarray(self._flow_fn(tuple(x)))
        return vals[: n * n].reshape(n, n), vals[n * n :].reshape(n, n, n)

    def in_domain(self, x) -> bool:
        return all(lo < float(v) < hi for v, (lo, hi) in zip(x, self.domain))

    def require_domain(self, x) -> None:
        if len(x) != self.dim:
            raise ValueError(f"expected {self.dim} coordinates, got {len(x)}")
        if not self.in_domain(x):
            raise ChartDomainError(f"point {tuple(float(v) for v in x)} outside chart domain")


@dataclass(frozen=True)
class PhasePoint:
    """A point ``(x, k)`` of the cotangent bundle in chart components."""

    x: tuple
    k: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "k", tuple(float(v) for v in self.k))
        if len(self.x) != len(self.k):
            raise ValueError("x and k must have the same length")

    @property
    def xa(self) -> np.ndarray:
        return np.array(self.x)

    @property
    def ka(self) -> np.ndarray:
        return np.array(self.k)

    def flipped(self) -> "PhasePoint":
        return PhasePoint(self.x, tuple(-v for v in self.k))


# ---------------------------------------------------------------------------
# Builtin and custom models
# ---------------------------------------------------------------------------


def _eta(dim: int):
    return tuple(
        tuple(ex.Num((1.0 if i == 0 else -1.0) if i == j else 0.0) for j in range(dim))
        for i in range(dim)
    )


def minkowski(dim: int = 4, domain: Sequence[tuple[float, float]] | None = None) -> SpacetimeModel:
    """Minkowski space in inertial coordinates, ``x0`` the time axis."""
    if not 2 <= dim <= 4:
        raise ValueError("builtin Minkowski supports dimension 2 to 4")
    if domain is None:
        domain = [(-1e6, 1e6)] * dim
    return SpacetimeModel(dim, _eta(dim), tuple(domain), 0, "builtin-minkowski", label="minkowski")


def flrw(
    a: str | Expr = "exp(H*x0)",
    params: Mapping[str, float] | None = None,
    dim: int = 4,
    domain: Sequence[tuple[float, float]] | None = None,
) -> SpacetimeModel:
    """Spatially flat FLRW in conformal time, ``g = a(x0)^2 eta``.

    ``a`` may only depend on ``x0``.  The default chart keeps ``x0`` in
    ``(-2, 3)`` so that ``a`` stays well away from zero for ``H = 1``.
    """
    if not 2 <= dim <= 4:
        raise ValueError("builtin FLRW supports dimension 2 to 4")
    params = {"H": 1.0} if params is None else dict(params)
    a_expr = ex.parse(a, dim=dim, params=params) if isinstance(a, str) else a
    if ex.free_vars(a_expr) - {0}:
        raise ValueError("FLRW scale factor may depend on x0 only")
    a2 = ex.power(a_expr, ex.TWO)
    g = tuple(
        tuple(
            (a2 if i == 0 else ex.neg(a2)) if i == j else ex.ZERO for j in range(dim)
        )
        for i in range(dim)
    )
    if domain is None:
        domain = [(-2.0, 3.0)] + [(-1e6, 1e6)] * (dim - 1)
    return SpacetimeModel(dim, g, tuple(domain), 0, "builtin-flrw", scale_factor=a_expr, label="flrw")


def custom(
    g_low: Sequence[Sequence[str | float | Expr]],
    domain: Sequence[tuple[float, float]],
    time_axis: int = 0,
    params: Mapping[str, float] | None = None,
) -> SpacetimeModel:
    """A user-supplied metric; string entries are parsed with ``params``."""
    dim = len(g_low)
    rows = [
        [ex.parse(v, dim=dim, params=params) if isinstance(v, str) else ex.as_expr(v) for v in row]
        for row in g_low
    ]
    return SpacetimeModel(dim, rows, tuple(domain), time_axis, "custom", label="custom")


# ---------------------------------------------------------------------------
# Pointwise operations
# ---------------------------------------------------------------------------


def g_low_at(M: SpacetimeModel, x) -> np.ndarray:
    n = M.dim
    return np.asarray(M._g_low_fn(tuple(float(v) for v in x))).reshape(n, n)


def metric_at(M: SpacetimeModel, x) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(g_{mu nu}, g^{mu nu})`` at ``x``.

    Raises
    ------
    SingularMetricError
        If ``|det g| < 1e-14``.
    """
    M.require_domain(x)
    g = g_low_at(M, x)
    d = np.linalg.det(g)
    if abs(d) < SINGULAR_DET:
        raise SingularMetricError(f"|det g| = {abs(d):.3e} at {tuple(x)}")
    return g, np.linalg.inv(g)


def check_signature(M: SpacetimeModel, x) -> None:
    """Raise ``ValueError`` unless ``g(x)`` is Lorentzian, mostly minus."""
    g, _ = metric_at(M, x)
    ev = np.linalg.eigvalsh(g)
    if not (np.sum(ev > 0) == 1 and np.sum(ev < 0) == M.dim - 1):
        raise ValueError(f"metric at {tuple(x)} has eigenvalues {ev}, not (+,-,...,-)")
    if np.linalg.det(g) >= 0:
        raise ValueError("det g must be negative")


def christoffel_at(M: SpacetimeModel, x) -> np.ndarray:
    """``Gamma[l, mu, nu] = Gamma^l_{mu nu}(x)``; symmetric in ``(mu, nu)``."""
    metric_at(M, x)
    n = M.dim
    if M.is_constant:
        return np.zeros((n, n, n))
    return np.asarray(M._christoffel_fn(tuple(float(v) for v in x))).reshape(n, n, n)


def q_value(M: SpacetimeModel, x, k) -> float:
    """Principal symbol ``q(x, k) = -g^{-1}(k, k)``."""
    ginv, _ = M.inverse_and_derivative(x)
    k = np.asarray(k, dtype=float)
    return float(-k @ ginv @ k)


def is_null(M: SpacetimeModel, x, k, tol_null: float = DEFAULT_TOL_NULL) -> bool:
    """Null iff ``k != 0`` and ``|q| <= tol_null * |k|^2`` (Euclidean norm)."""
    k = np.asarray(k, dtype=float)
    kk = float(k @ k)
    return kk > 0.0 and abs(q_value(M, x, k)) <= tol_null * kk


def hamiltonian_field(M: SpacetimeModel, x, k) -> tuple[np.ndarray, np.ndarray]:
    """Components ``(xdot^mu, kdot_mu)`` of the Hamiltonian field of ``q``."""
    ginv, dginv = M.inverse_and_derivative(x)
    k = np.asarray(k, dtype=float)
    xdot = -2.0 * ginv @ k
    kdot = np.einsum("mab,a,b->m", dginv, k, k)
    return xdot, kdot


def sharp(M: SpacetimeModel, x, covector) -> np.ndarray:
    _, ginv = metric_at(M, x)
    return ginv @ np.asarray(covector)


def flat(M: SpacetimeModel, x, vector) -> np.ndarray:
    g, _ = metric_at(M, x)
    return g @ np.asarray(vector)


def causal_order(M: SpacetimeModel, x, xp, rtol: float = 1e-9) -> str:
    """Causal relation of ``x`` to ``xp``: ``future``, ``past`` or
    ``spacelike-or-unrelated``.

    Only conformally flat builtin charts are supported; there the coordinate
    light cone is the metric light cone.  ``x == xp`` reports ``future`` (it
    is also in the past).  ``rtol`` absorbs rounding on the cone itself.
    """
    if M.kind not in ("builtin-minkowski", "builtin-flrw"):
        raise UnsupportedSpacetimeError("causal order is only available for builtin spacetimes")
    d = np.asarray(x, dtype=float) - np.asarray(xp, dtype=float)
    t = M.time_axis
    dt = d[t]
    dx2 = float(d @ d - dt * dt)
    on_cone = dt * dt >= dx2 - rtol * (dt * dt + dx2)
    if not on_cone:
        return "spacelike-or-unrelated"
    return "future" if dt >= 0 else "past"


def metric_density_power(M: SpacetimeModel, x, alpha: float) -> float:
    """``(-det g(x))^alpha``."""
    g, _ = metric_at(M, x)
    d = float(np.linalg.det(g))
    if d >= 0:
        raise SingularMetricError("det g is not negative")
    return (-d) ** alpha
