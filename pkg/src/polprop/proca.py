"""The Proca field at symbol level.

Green operators of the Proca operator factor through the Klein-Gordon
operator on one-forms, ``K`` with ``(K A)_mu = g^{ab} nabla_a nabla_b A_mu +
(m^2 delta_mu^nu + R_mu^nu) A_nu``, composed with ``R = 1 - m^{-2} d delta``.
Only principal symbols and the frame spec of ``K`` are needed here.

Curvature convention: :func:`ricci_tensor` returns ``R_{mu nu} =
R^rho_{mu nu rho}`` in the convention ``R^rho_{s m n} = d_m Gamma^rho_{n s}
- d_n Gamma^rho_{m s} + ...``, i.e. minus the contraction on the first and
third slots.  With mostly-minus signature this makes the Proca equation
``(box + m^2 + Ric) A = 0`` in the form above.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import exprs as ex
from .geometry import SpacetimeModel, metric_at
from .nhop import ConnectionForms, NHOperatorSpec
from .polsets import (
    DEFAULT_TOL_REL,
    PolFibre,
    RelationPoint,
    corollary_test,
    propagator,
    projective_distance,
)

__all__ = [
    "ProcaContext",
    "ricci_tensor",
    "ricci_at",
    "levi_civita_forms",
    "kg1_spec",
    "r_symbol",
    "predicted_proca_fibre",
    "constraint_residuals",
    "chain_distance",
    "z_from_v",
    "v_from_z",
    "proca_wf_claim",
]


@dataclass(frozen=True, eq=False)
class ProcaContext:
    """A spacetime of dimension 4 and a mass ``m > 0``."""

    model: SpacetimeModel
    m: float

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("Proca mass must be positive")
        if self.model.dim != 4:
            raise ValueError("the Proca example needs a four-dimensional spacetime")

    @cached_property
    def kg1(self) -> NHOperatorSpec:
        return kg1_spec(self)


def ricci_tensor(M: SpacetimeModel):
    """Symbolic ``R_{mu nu}`` (see module docstring for the sign)."""
    n = M.dim
    G = M.christoffel
    dG = {}

    def d(rho, nu, s, mu):
        key = (rho, nu, s, mu)
        if key not in dG:
            dG[key] = ex.diff(G[rho][nu][s], mu)
        return dG[key]

    out = [[None] * n for _ in range(n)]
    for s in range(n):
        for nu in range(s, n):
            terms = []
            for rho in range(n):
                terms.append(d(rho, nu, s, rho))
                terms.append(ex.neg(d(rho, rho, s, nu)))
                for lam in range(n):
                    terms.append(ex.mul(G[rho][rho][lam], G[lam][nu][s]))
                    terms.append(ex.neg(ex.mul(G[rho][nu][lam], G[lam][rho][s])))
            # contraction R^rho_{s rho nu}, negated
            out[s][nu] = out[nu][s] = ex.neg(ex.total(terms))
    return tuple(tuple(r) for r in out)


def _ricci_mixed_exprs(M: SpacetimeModel):
    """``R_mu^nu = g^{nu l} R_{mu l}`` as Exprs."""
    n = M.dim
    R = ricci_tensor(M)
    gi = M.g_inv
    return tuple(
        tuple(ex.total(ex.mul(gi[nu][l], R[mu][l]) for l in range(n)) for nu in range(n))
        for mu in range(n)
    )


def ricci_at(M: SpacetimeModel, x) -> np.ndarray:
    """Matrix ``R_mu^nu(x)`` (row ``mu``, column ``nu``)."""
    metric_at(M, x)
    n = M.dim
    fn = ex.compile_exprs([e for row in _ricci_mixed_exprs(M) for e in row])
    return np.asarray(fn(tuple(float(v) for v in x))).reshape(n, n)


def levi_civita_forms(M: SpacetimeModel) -> ConnectionForms:
    """Levi-Civita connection on one-forms in the coframe ``dx^b``.

    ``nabla_mu A_c = d_mu A_c - Gamma^b_{mu c} A_b`` gives
    ``(Gamma_mu)[c][b] = -Gamma^b_{mu c}``.
    """
    n = M.dim
    G = M.christoffel
    return ConnectionForms(
        n, n, tuple(tuple(tuple(ex.neg(G[b][mu][c]) for b in range(n)) for c in range(n)) for mu in range(n))
    )


def kg1_spec(ctx: ProcaContext) -> NHOperatorSpec:
    """Half-densitised frame spec of ``K`` on one-forms.

    ``C^b = 2 g^{ab} Gamma_a`` and
    ``V = g^{ab}(d_a Gamma_b + Gamma_a Gamma_b - Gamma^l_{ab} Gamma_l)
    + 2 g^{ab} Gamma_a rho^{1/2} d_b rho^{-1/2} + m^2 I + Ric``.
    """
    M = ctx.model
    n = M.dim
    gi = M.g_inv
    G = M.christoffel
    forms = levi_civita_forms(M).forms
    mdet = ex.neg(M.det_g)
    half = ex.power(mdet, ex.Num(0.25))
    dinv_half = [ex.diff(ex.power(mdet, ex.Num(-0.25)), b) for b in range(n)]

    def mat_mul(A, B):
        return tuple(
            tuple(ex.total(ex.mul(A[i][l], B[l][j]) for l in range(n)) for j in range(n)) for i in range(n)
        )

    C = []
    for b in range(n):
        C.append(
            tuple(
                tuple(
                    ex.mul(ex.TWO, ex.total(ex.mul(gi[a][b], forms[a][i][j]) for a in range(n)))
                    for j in range(n)
                )
                for i in range(n)
            )
        )

    V = [[ex.ZERO] * n for _ in range(n)]
    for a in range(n):
        for b in range(n):
            if gi[a][b].is_zero:
                continue
            prod = mat_mul(forms[a], forms[b])
            for i in range(n):
                for j in range(n):
                    t = ex.add(ex.diff(forms[b][i][j], a), prod[i][j])
                    t = ex.sub(t, ex.total(ex.mul(G[l][a][b], forms[l][i][j]) for l in range(n)))
                    t = ex.add(t, ex.mul(ex.TWO, ex.mul(forms[a][i][j], ex.mul(half, dinv_half[b]))))
                    V[i][j] = ex.add(V[i][j], ex.mul(gi[a][b], t))
    ric = _ricci_mixed_exprs(M)
    m2 = ex.Num(ctx.m**2)
    for i in range(n):
        for j in range(n):
            V[i][j] = ex.add(ex.add(V[i][j], ric[i][j]), m2 if i == j else ex.ZERO)
    return NHOperatorSpec(M, n, tuple(C), tuple(tuple(r) for r in V))


def r_symbol(ctx: ProcaContext, x, k) -> np.ndarray:
    """Principal symbol of ``R``: ``v -> -m^{-2} g^{-1}(k, v) k``.

    Matrix entry ``[a][c] = -m^{-2} k_a (g^{-1} k)^c``.
    """
    _, ginv = metric_at(ctx.model, x)
    k = np.asarray(k, dtype=float)
    return -np.outer(k, ginv @ k) / ctx.m**2


def predicted_proca_fibre(ctx: ProcaContext, rp: RelationPoint) -> PolFibre:
    """``C k (x) (k')^sharp``: matrix ``k_a (g^{-1}(x') k')^b``."""
    if rp.verdict != "in":
        raise ValueError("predicted fibre needs a point of the relation set")
    _, ginv_p = metric_at(ctx.model, rp.pp.x)
    return PolFibre(np.outer(rp.p.k, ginv_p @ np.asarray(rp.pp.k)))


def constraint_residuals(ctx: ProcaContext, rp: RelationPoint, w) -> tuple[float, float]:
    """``|k^a w_a^b|`` and ``|w_a^b k'_b|`` for a fibre element ``w``."""
    _, ginv = metric_at(ctx.model, rp.p.x)
    w = np.asarray(w, dtype=complex)
    left = (ginv @ np.asarray(rp.p.k)) @ w
    right = w @ np.asarray(rp.pp.k)
    return float(np.linalg.norm(left)), float(np.linalg.norm(right))


def chain_distance(ctx: ProcaContext, rp: RelationPoint) -> float:
    """Projective distance between ``r(x, k) Pi`` and the predicted fibre.

    ``Pi`` is Levi-Civita transport on one-forms along the witness.
    """
    Pi = propagator(ctx.kg1.connection, rp).matrix
    chained = r_symbol(ctx, rp.p.x, rp.p.k) @ Pi
    return projective_distance(predicted_proca_fibre(ctx, rp).basis, chained)


def z_from_v(k_spatial, sign: int, v_spatial) -> np.ndarray:
    """Covector ``z = (v.k, s |k| v)`` orthogonal to ``k = (s |k|, k)``.

    ``sign`` is ``+1`` or ``-1``.  Orthogonality is with respect to the
    Minkowski metric.
    """
    k = np.asarray(k_spatial, dtype=float)
    v = np.asarray(v_spatial, dtype=float)
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    nk = float(np.linalg.norm(k))
    if nk == 0.0:
        raise ValueError("spatial momentum must be non-zero")
    return np.concatenate(([v @ k], sign * nk * v))


def v_from_z(k_spatial, sign: int, z) -> np.ndarray:
    """Least-squares inverse of :func:`z_from_v` for fixed ``k``."""
    k = np.asarray(k_spatial, dtype=float)
    nk = float(np.linalg.norm(k))
    if nk == 0.0:
        raise ValueError("spatial momentum must be non-zero")
    A = np.vstack((k, sign * nk * np.eye(3)))
    v, *_ = np.linalg.lstsq(A, np.asarray(z, dtype=float), rcond=None)
    return v


def proca_wf_claim(
    ctx: ProcaContext, rp: RelationPoint, tol_rel: float = DEFAULT_TOL_REL, negative_control: bool = False
) -> dict:
    """Corollary test with ``q = id`` and ``r`` the symbol of ``R`` at ``(x', k')``.

    ``negative_control`` swaps ``q`` for the codifferential symbol
    ``v -> (g^{-1} k)^a v_a``.  Transport carries ``k'`` to ``k`` and ``k`` is
    null, so ``q Pi r`` must vanish there and the verdict must flip to zero.
    """
    P = ctx.kg1
    r_sym = lambda x, k: r_symbol(ctx, x, k)  # noqa: E731
    if negative_control:
        def q_sym(x, k):
            _, ginv = metric_at(ctx.model, x)
            return (ginv @ np.asarray(k, dtype=float))[None, :]
    else:
        def q_sym(x, k):
            return np.eye(4)

    res = corollary_test(q_sym, r_sym, P, rp, tol_rel)
    return {
        "nonzero": res.nonzero,
        "norm": res.norm,
        "threshold": res.threshold,
        "negative_control": negative_control,
        "in_wavefront": res.nonzero,
    }
