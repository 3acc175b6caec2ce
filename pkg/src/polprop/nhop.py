"""Normally hyperbolic operators in a global frame.

An operator is stored as ``P = I box + C^nu d_nu + V`` acting on
half-densitised frame components, where ``box`` is the scalar wave operator
on half-densities::

    box = rho^{-1/2} d_mu g^{mu nu} rho d_nu rho^{-1/2},   rho = (-det g)^{1/2}
        = g^{mu nu} d_mu d_nu + (d_mu g^{mu nu}) d_nu + W0,
    W0  = rho^{-1/2} d_mu (g^{mu nu} rho d_nu rho^{-1/2}).

Its Weitzenboeck connection collects the first-order block,
``C^nu = 2 g^{mu nu} Gamma_mu``, so ``Gamma_mu = 1/2 g_{mu nu} C^nu``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from . import exprs as ex
from . import symbols as sy
from .exprs import Expr
from .geometry import SpacetimeModel

__all__ = [
    "NHOperatorSpec",
    "ConnectionForms",
    "make_spec",
    "full_symbol",
    "box_potential",
    "weitzenboeck_extract",
    "nhop_subprincipal",
    "verify_psub_identity",
    "dual_connection",
    "half_density_conjugate",
    "reconstruct_first_order",
]


def _mat(rows, dim: int | None = None, params=None) -> tuple[tuple[Expr, ...], ...]:
    return tuple(
        tuple(ex.parse(v, dim=dim, params=params) if isinstance(v, str) else ex.as_expr(v) for v in row)
        for row in rows
    )


def _zero_mat(r: int):
    return tuple(tuple(ex.ZERO for _ in range(r)) for _ in range(r))


def _identity_mat(r: int):
    return tuple(tuple(ex.ONE if i == j else ex.ZERO for j in range(r)) for i in range(r))


@dataclass(frozen=True, eq=False)
class NHOperatorSpec:
    """Frame coefficients of ``I box + C^nu d_nu + V`` on a rank-``r`` bundle.

    ``C[nu]`` and ``V`` are ``r x r`` matrices of real Exprs.
    """

    model: SpacetimeModel
    rank: int
    C: tuple
    V: tuple

    def __post_init__(self):
        n, r = self.model.dim, self.rank
        if r < 1:
            raise ValueError("rank must be positive")
        C = tuple(_mat(c) for c in self.C)
        V = _mat(self.V)
        if len(C) != n:
            raise ValueError(f"need {n} first-order coefficient matrices, got {len(C)}")
        for m in (*C, V):
            if len(m) != r or any(len(row) != r for row in m):
                raise ValueError(f"coefficient matrices must be {r} x {r}")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "V", V)

    @cached_property
    def symbol(self) -> sy.PolySymbol:
        return full_symbol(self)

    @cached_property
    def connection(self) -> "ConnectionForms":
        return weitzenboeck_extract(self)

    @cached_property
    def _c_fn(self):
        return ex.compile_exprs([e for m in self.C for row in m for e in row])

    def C_at(self, x) -> np.ndarray:
        n, r = self.model.dim, self.rank
        return np.asarray(self._c_fn(tuple(float(v) for v in x))).reshape(n, r, r)


def make_spec(
    model: SpacetimeModel,
    C: Sequence[Sequence[Sequence]] | None = None,
    V: Sequence[Sequence] | None = None,
    rank: int | None = None,
    params: Mapping[str, float] | None = None,
) -> NHOperatorSpec:
    """Build a spec from nested lists of numbers, Exprs or expression strings."""
    n = model.dim
    if rank is None:
        rank = len(V) if V is not None else len(C[0]) if C is not None else 1
    Cm = tuple(_zero_mat(rank) for _ in range(n)) if C is None else tuple(_mat(c, n, params) for c in C)
    Vm = _zero_mat(rank) if V is None else _mat(V, n, params)
    return NHOperatorSpec(model, rank, Cm, Vm)


@dataclass(frozen=True, eq=False)
class ConnectionForms:
    """Matrix-valued one-form ``Gamma_mu(x)`` in a frame (shape ``(dim, r, r)``)."""

    dim: int
    rank: int
    forms: tuple

    def __post_init__(self):
        object.__setattr__(self, "forms", tuple(_mat(f) for f in self.forms))
        if len(self.forms) != self.dim:
            raise ValueError("one matrix per coordinate direction required")
        for f in self.forms:
            if len(f) != self.rank or any(len(row) != self.rank for row in f):
                raise ValueError("connection matrices have wrong shape")

    @cached_property
    def _fn(self):
        return ex.compile_exprs([e for f in self.forms for row in f for e in row])

    @cached_property
    def is_zero(self) -> bool:
        return all(e.is_zero for f in self.forms for row in f for e in row)

    def at(self, x) -> np.ndarray:
        if self.is_zero:
            return np.zeros((self.dim, self.rank, self.rank))
        vals = self._fn(tuple(float(v) for v in x))
        return np.asarray(vals).reshape(self.dim, self.rank, self.rank)

    def contract(self, x, v) -> np.ndarray:
        """``Gamma_v = v^mu Gamma_mu(x)``."""
        r = self.rank
        return (np.asarray(v) @ self.at(x).reshape(self.dim, r * r)).reshape(r, r)


# ---------------------------------------------------------------------------


def box_potential(model: SpacetimeModel) -> Expr:
    """Zero-order term ``W0`` of the half-density wave operator."""
    n = model.dim
    mdet = ex.neg(model.det_g)
    rho = ex.power(mdet, ex.Num(0.5))
    s = ex.power(mdet, ex.Num(-0.25))
    ds = [ex.diff(s, nu) for nu in range(n)]
    if all(d.is_zero for d in ds):
        return ex.ZERO
    gi = model.g_inv
    total = ex.ZERO
    for mu in range(n):
        flux = ex.total(ex.mul(gi[mu][nu], ds[nu]) for nu in range(n))
        total = ex.add(total, ex.diff(ex.mul(flux, rho), mu))
    return ex.mul(s, total)


def full_symbol(P: NHOperatorSpec) -> sy.PolySymbol:
    """Full chart symbol of ``P`` in the ``zeta = i xi`` basis.

    Second order ``g^{mu nu} zeta_mu zeta_nu I``, first order
    ``((d_mu g^{mu nu}) I + C^nu) zeta_nu``, zero order ``W0 I + V``.
    """
    M = P.model
    n, r = M.dim, P.rank
    gi, dgi = M.g_inv, M.dg_inv

    def scalar_times_eye(s: Expr):
        return tuple(tuple(s if i == j else ex.ZERO for j in range(r)) for i in range(r))

    coeffs: dict = {}
    for mu in range(n):
        for nu in range(mu, n):
            alpha = [0] * n
            alpha[mu] += 1
            alpha[nu] += 1
            c = gi[mu][nu] if mu == nu else ex.mul(ex.TWO, gi[mu][nu])
            coeffs[tuple(alpha)] = scalar_times_eye(c)
    for nu in range(n):
        alpha = [0] * n
        alpha[nu] = 1
        div = ex.total(dgi[mu][mu][nu] for mu in range(n))
        coeffs[tuple(alpha)] = tuple(
            tuple(ex.add(div if i == j else ex.ZERO, P.C[nu][i][j]) for j in range(r)) for i in range(r)
        )
    w0 = box_potential(M)
    coeffs[(0,) * n] = tuple(
        tuple(ex.add(w0 if i == j else ex.ZERO, P.V[i][j]) for j in range(r)) for i in range(r)
    )
    return sy.symbol_from_real(n, r, 2, coeffs)


def weitzenboeck_extract(P: NHOperatorSpec) -> ConnectionForms:
    """``Gamma_mu = 1/2 g_{mu nu} C^nu``."""
    M = P.model
    n, r = M.dim, P.rank
    g = M.g_low
    forms = []
    for mu in range(n):
        rows = []
        for a in range(r):
            row = []
            for b in range(r):
                terms = (ex.mul(g[mu][nu], P.C[nu][a][b]) for nu in range(n))
                row.append(ex.mul(ex.Num(0.5), ex.total(terms)))
            rows.append(row)
        forms.append(rows)
    return ConnectionForms(n, r, tuple(forms))


def reconstruct_first_order(model: SpacetimeModel, conn: ConnectionForms) -> tuple:
    """``C^nu = 2 g^{mu nu} Gamma_mu`` as Expr matrices."""
    n, r = model.dim, conn.rank
    gi = model.g_inv
    return tuple(
        tuple(
            tuple(
                ex.mul(ex.TWO, ex.total(ex.mul(gi[mu][nu], conn.forms[mu][a][b]) for mu in range(n)))
                for b in range(r)
            )
            for a in range(r)
        )
        for nu in range(n)
    )


def nhop_subprincipal(P: NHOperatorSpec, x, k) -> np.ndarray:
    """``p^sub(x, k) = 2 i g^{mu nu} k_nu Gamma_mu(x)``."""
    ginv, _ = P.model.inverse_and_derivative(x)
    v = ginv @ np.asarray(k, dtype=float)
    return 2j * P.connection.contract(x, v)


def verify_psub_identity(P: NHOperatorSpec, x, k) -> float:
    """Two-path check of the subprincipal formula.

    Path one reads the subprincipal symbol off the full chart symbol through
    :func:`polprop.symbols.subprincipal`; path two is
    :func:`nhop_subprincipal`.  Returns ``|difference| / (1 + |k|)``.
    """
    sub = sy.subprincipal(P.symbol)(x, k)
    direct = nhop_subprincipal(P, x, k)
    return float(np.linalg.norm(sub - direct) / (1.0 + np.linalg.norm(k)))


def dual_connection(conn: ConnectionForms) -> ConnectionForms:
    """Forms of the dual connection: ``-Gamma_mu^T``."""
    return ConnectionForms(
        conn.dim,
        conn.rank,
        tuple(tuple(tuple(ex.neg(f[b][a]) for b in range(conn.rank)) for a in range(conn.rank)) for f in conn.forms),
    )


def half_density_conjugate(P: NHOperatorSpec, alpha: float) -> NHOperatorSpec:
    """Coefficients of ``(-g)^alpha P (-g)^{-alpha}``.

    With ``phi = (-g)^{-alpha}``::

        C'^nu = C^nu - 2 alpha g^{nu mu} d_mu log(-g) I
        V'    = V + (-g)^alpha (g^{mu nu} d_mu d_nu phi + (d_mu g^{mu nu}) d_nu phi) I
                  + C^nu (-g)^alpha d_nu phi
    """
    if alpha not in (0.25, -0.25):
        raise ValueError("alpha must be +1/4 or -1/4")
    M = P.model
    n, r = M.dim, P.rank
    mdet = ex.neg(M.det_g)
    rho_a = ex.power(mdet, ex.Num(alpha))
    phi = ex.power(mdet, ex.Num(-alpha))
    dphi = [ex.diff(phi, mu) for mu in range(n)]
    if all(d.is_zero for d in dphi):
        return P
    dlog = [ex.diff(ex.call("log", mdet), mu) for mu in range(n)]
    gi, dgi = M.g_inv, M.dg_inv

    C_new = []
    for nu in range(n):
        shift = ex.mul(ex.Num(-2.0 * alpha), ex.total(ex.mul(gi[nu][mu], dlog[mu]) for mu in range(n)))
        C_new.append(
            tuple(tuple(ex.add(P.C[nu][i][j], shift if i == j else ex.ZERO) for j in range(r)) for i in range(r))
        )

    second = ex.total(
        ex.mul(gi[mu][nu], ex.diff(dphi[nu], mu)) for mu in range(n) for nu in range(n)
    )
    first = ex.total(ex.mul(dgi[mu][mu][nu], dphi[nu]) for mu in range(n) for nu in range(n))
    scalar = ex.mul(rho_a, ex.add(second, first))
    V_new = []
    for i in range(r):
        row = []
        for j in range(r):
            cterm = ex.total(ex.mul(P.C[nu][i][j], ex.mul(rho_a, dphi[nu])) for nu in range(n))
            row.append(ex.add(ex.add(P.V[i][j], scalar if i == j else ex.ZERO), cterm))
        V_new.append(tuple(row))
    return NHOperatorSpec(M, r, tuple(C_new), tuple(V_new))
