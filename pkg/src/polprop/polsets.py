"""Membership in the relation set and the predicted polarisation fibres.

A relation point is a pair ``(x, k; x', -k')``: the second covector is stored
with its sign flipped, and the relation is checked on ``(x', k')``.  Fibres
are complex ``r x r`` matrices in ``B_x (x) B*_x'`` kept up to scale (unit
Frobenius norm), or the zero fibre.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bichar import (
    DEFAULT_LAMBDA_MAX,
    DEFAULT_TOL_COV,
    DEFAULT_TOL_POS,
    Propagator,
    RelationResult,
    WitnessGeodesic,
    parallel_transport,
    relation_check,
)
from .geometry import (
    DEFAULT_TOL_NULL,
    PhasePoint,
    SpacetimeModel,
    UnsupportedSpacetimeError,
    causal_order,
)
from .nhop import ConnectionForms, NHOperatorSpec

__all__ = [
    "RelationPoint",
    "PolFibre",
    "CorollaryResult",
    "in_R",
    "fibre_EP",
    "fibre_EPpm",
    "membership",
    "projective_distance",
    "corollary_test",
    "propagator",
    "delta_fibre",
    "DEFAULT_MEMBERSHIP_TOL",
    "DEFAULT_TOL_REL",
]

DEFAULT_MEMBERSHIP_TOL = 1e-6
DEFAULT_TOL_REL = 1e-8


@dataclass(eq=False)
class RelationPoint:
    """``(x, k; x', -k')`` with its membership verdict.

    ``verdict`` is ``in``, ``out`` or ``unknown``.  ``causal`` is
    ``future`` (x in J+(x')), ``past``, ``diagonal``, ``none`` (not in the
    set) or ``unknown`` (set membership or causal order undecided).
    """

    model: SpacetimeModel
    p: PhasePoint
    pp_signed: PhasePoint
    verdict: str
    causal: str
    relation: RelationResult | None = None
    diagonal: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def pp(self) -> PhasePoint:
        """``(x', k')`` with the sign restored."""
        return self.pp_signed.flipped()

    @property
    def witness(self) -> WitnessGeodesic | None:
        return None if self.relation is None else self.relation.witness

    def in_signed(self, sign: str) -> str:
        """Membership in the ``+`` or ``-`` part: ``in``, ``out`` or ``unknown``."""
        if sign not in ("+", "-"):
            raise ValueError("sign must be '+' or '-'")
        if self.verdict != "in":
            return self.verdict
        if self.causal == "diagonal":
            return "in"
        if self.causal == "unknown":
            return "unknown"
        want = "future" if sign == "+" else "past"
        return "in" if self.causal == want else "out"

    def flipped(self, **kwargs) -> "RelationPoint":
        """The point ``(x, -k; x', k')`` re-checked from scratch."""
        return in_R(self.model, self.p.flipped(), self.pp_signed.flipped(), **kwargs)


def in_R(
    M: SpacetimeModel,
    p: PhasePoint,
    pp_signed: PhasePoint,
    tol_pos: float = DEFAULT_TOL_POS,
    tol_cov: float = DEFAULT_TOL_COV,
    lambda_max: float = DEFAULT_LAMBDA_MAX,
    tol_null: float = DEFAULT_TOL_NULL,
) -> RelationPoint:
    """Classify ``(x, k; x', -k')`` against the relation set and its parts."""
    pp = pp_signed.flipped()
    x, xp = np.asarray(p.x), np.asarray(pp.x)
    k, kp = np.asarray(p.k), np.asarray(pp.k)
    if not np.any(k) or not np.any(kp):
        raise ValueError("zero covectors are not supported")
    diagonal = bool(
        np.linalg.norm(x - xp) <= tol_pos and np.linalg.norm(k - kp) <= tol_cov * np.linalg.norm(k)
    )
    rel = relation_check(M, p, pp, tol_pos, tol_cov, lambda_max, tol_null)
    verdict = {"related": "in", "not-related": "out", "unknown": "unknown"}[rel.verdict]
    if verdict == "out":
        causal = "none"
    elif verdict == "unknown":
        causal = "unknown"
    elif diagonal:
        causal = "diagonal"
    else:
        try:
            c = causal_order(M, x, xp)
        except UnsupportedSpacetimeError:
            c = "unknown"
        causal = c if c in ("future", "past", "unknown") else "none"
    return RelationPoint(M, p, pp_signed, verdict, causal, rel, diagonal)


@dataclass(frozen=True, eq=False)
class PolFibre:
    """A line ``C w`` in ``r x r`` complex matrices, or the zero fibre."""

    basis: np.ndarray | None
    tol: float = DEFAULT_MEMBERSHIP_TOL

    def __post_init__(self):
        if self.basis is not None:
            b = np.asarray(self.basis, dtype=complex)
            nrm = np.linalg.norm(b)
            if nrm == 0.0:
                object.__setattr__(self, "basis", None)
            else:
                object.__setattr__(self, "basis", b / nrm)

    @property
    def is_zero(self) -> bool:
        return self.basis is None


def delta_fibre(rank: int, tol: float = DEFAULT_MEMBERSHIP_TOL) -> PolFibre:
    """``C delta_x``: the image of the identity of ``B_x``."""
    return PolFibre(np.eye(rank, dtype=complex), tol)


def projective_distance(u: np.ndarray, w: np.ndarray) -> float:
    """``|w - <u, w> u| / |w|`` for unit ``u`` (Frobenius); 0 for ``w = 0``."""
    w = np.asarray(w, dtype=complex)
    nw = np.linalg.norm(w)
    if nw == 0.0:
        return 0.0
    u = np.asarray(u, dtype=complex)
    u = u / np.linalg.norm(u)
    c = np.vdot(u, w)
    return float(np.linalg.norm(w - c * u) / nw)


def membership(f: PolFibre, w, tol: float | None = None) -> tuple[bool, float]:
    """Is ``w`` in the fibre?  Returns ``(member, projective distance)``.

    The zero fibre contains only ``w = 0`` (distance 1 otherwise).
    """
    tol = f.tol if tol is None else tol
    w = np.asarray(w, dtype=complex)
    if f.is_zero:
        zero = not np.any(w)
        return zero, 0.0 if zero else 1.0
    d = projective_distance(f.basis, w)
    return d <= tol, d


def propagator(conn: ConnectionForms, rp: RelationPoint) -> Propagator:
    """Transport along the witness of ``rp`` (cached per connection)."""
    if rp.verdict != "in" or rp.witness is None:
        raise ValueError(f"no witness: verdict is {rp.verdict!r}")
    key = id(conn)
    hit = rp._cache.get(key)
    if hit is None or hit[0] is not conn:
        hit = (conn, parallel_transport(conn, rp.witness))
        rp._cache[key] = hit
    return hit[1]


def fibre_EP(P: NHOperatorSpec, rp: RelationPoint, tol: float = DEFAULT_MEMBERSHIP_TOL) -> PolFibre:
    """``C Pi`` for points of the relation set, the zero fibre off it."""
    if rp.verdict == "out":
        return PolFibre(None, tol)
    if rp.verdict != "in":
        raise ValueError("membership undecided; fibre unavailable")
    return PolFibre(propagator(P.connection, rp).matrix, tol)


def fibre_EPpm(
    P: NHOperatorSpec, rp: RelationPoint, sign: str, tol: float = DEFAULT_MEMBERSHIP_TOL
) -> PolFibre:
    """Fibre of the advanced (``+``) or retarded (``-``) part.

    Diagonal points ``(x, k; x, -k)`` give ``C delta_x`` for every ``k``,
    null or not, because the identity contributes there.  Off the diagonal
    the fibre is ``C Pi`` when the causal tag matches ``sign``.
    """
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    if rp.diagonal:
        return delta_fibre(P.rank, tol)
    if rp.model.kind == "custom":
        raise UnsupportedSpacetimeError("causal order unknown for custom metrics")
    member = rp.in_signed(sign)
    if member == "unknown":
        raise ValueError("membership undecided; fibre unavailable")
    if member == "out":
        return PolFibre(None, tol)
    return PolFibre(propagator(P.connection, rp).matrix, tol)


@dataclass
class CorollaryResult:
    nonzero: bool
    norm: float
    threshold: float
    product: np.ndarray


def corollary_test(
    q_sym: Callable,
    r_sym: Callable,
    P: NHOperatorSpec,
    rp: RelationPoint,
    tol_rel: float = DEFAULT_TOL_REL,
) -> CorollaryResult:
    """Evaluate ``N = q(x, k) Pi r(x', k')`` and decide whether it vanishes.

    ``nonzero`` iff ``|N| > tol_rel |q| |Pi| |r|`` (Frobenius norms).  When
    true, the point belongs to the wavefront set of ``Q E_P R``.
    """
    Pi = propagator(P.connection, rp).matrix
    q = np.atleast_2d(np.asarray(q_sym(rp.p.x, rp.p.k), dtype=complex))
    r = np.atleast_2d(np.asarray(r_sym(rp.pp.x, rp.pp.k), dtype=complex))
    if q.shape[1] != Pi.shape[0] or r.shape[0] != Pi.shape[1]:
        raise ValueError(f"shape mismatch: q {q.shape}, Pi {Pi.shape}, r {r.shape}")
    N = q @ Pi @ r
    norm = float(np.linalg.norm(N))
    thr = tol_rel * float(np.linalg.norm(q) * np.linalg.norm(Pi) * np.linalg.norm(r))
    return CorollaryResult(norm > thr, norm, thr, N)
