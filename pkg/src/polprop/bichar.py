"""Bicharacteristic strips, the relation between phase points, and transport.

A strip is an integral curve of the Hamiltonian field of ``q``, sampled on
the adaptive grid of :func:`polprop.ode.integrate` and interpolated by cubic
Hermite polynomials built from the field itself.  Where accuracy matters
(root finding, endpoint states) the strip re-integrates one short step from
the nearest sample instead of trusting the interpolant.

Transport along a witness solves ``S' + Gamma_{xdot}(x) S = 0`` together with
the flow, so the connection sees the exact trajectory rather than an
interpolant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .geometry import DEFAULT_TOL_NULL, PhasePoint, SpacetimeModel, is_null, q_value
from .nhop import ConnectionForms, NHOperatorSpec, dual_connection, nhop_subprincipal
from .ode import OdeResult, extrapolated_step, integrate

__all__ = [
    "BicharStrip",
    "WitnessGeodesic",
    "RelationResult",
    "Candidate",
    "Propagator",
    "OrbitResult",
    "integrate_strip",
    "relation_check",
    "parallel_transport",
    "hamilton_orbit",
    "product_transport",
    "transport_path",
    "DEFAULT_TOL_POS",
    "DEFAULT_TOL_COV",
    "DEFAULT_LAMBDA_MAX",
]

DEFAULT_TOL_POS = 1e-6
DEFAULT_TOL_COV = 1e-6
DEFAULT_LAMBDA_MAX = 20.0
DEFAULT_ATOL = 1e-10
DEFAULT_H_MAX = 0.5
ROOT_XTOL = 1e-12
CONFORMALLY_FLAT = ("builtin-minkowski", "builtin-flrw")


def flow_rhs(M: SpacetimeModel):
    """Right-hand side of the Hamiltonian flow on ``y = (x, k)``."""
    n = M.dim
    if M.is_constant:
        ginv = M._const_ginv
        zeros = np.zeros(n)

        def f(t, y):
            return np.concatenate((-2.0 * ginv @ y[n:], zeros))

        return f

    def f(t, y):
        k = y[n:]
        ginv, dginv = M.inverse_and_derivative(y[:n])
        kdot = dginv.reshape(n, n * n) @ np.outer(k, k).ravel()
        return np.concatenate((-2.0 * ginv @ k, kdot))

    return f


def _valid(M: SpacetimeModel):
    n = M.dim
    lo = np.array([a for a, _ in M.domain])
    hi = np.array([b for _, b in M.domain])
    return lambda y: bool(np.all(y[:n].real > lo) and np.all(y[:n].real < hi))


def _two_sided(f, valid, y0, lam0, lam_lo, lam_hi, atol, h_max, t_eval=()):
    parts = []
    for end in (lam_lo, lam_hi):
        marks = [t for t in t_eval if min(lam0, end) <= t <= max(lam0, end)]
        parts.append(integrate(f, lam0, y0, end, atol=atol, h_max=h_max, t_eval=marks, valid=valid))
    back, fwd = parts
    t = np.concatenate((back.t[::-1], fwd.t[1:]))
    y = np.concatenate((back.y[::-1], fwd.y[1:]))
    dy = np.concatenate((back.dy[::-1], fwd.dy[1:]))
    return t, y, dy, back.status, fwd.status


@dataclass(eq=False)
class BicharStrip:
    """Sampled bicharacteristic strip ``lambda -> (x, k)``.

    ``lam`` is increasing; the initial point sits at ``lam0``.  ``status_low``
    and ``status_high`` are ``"done"`` or ``"left-domain"`` (truncated).
    """

    model: SpacetimeModel
    lam: np.ndarray
    X: np.ndarray
    K: np.ndarray
    dX: np.ndarray
    dK: np.ndarray
    lam0: float
    q0: float
    status_low: str = "done"
    status_high: str = "done"
    atol: float = DEFAULT_ATOL

    @property
    def lam_min(self) -> float:
        return float(self.lam[0])

    @property
    def lam_max(self) -> float:
        return float(self.lam[-1])

    @property
    def truncated(self) -> bool:
        return self.status_low != "done" or self.status_high != "done"

    def interp(self, lam: float) -> tuple[np.ndarray, np.ndarray]:
        """Cubic Hermite interpolation of ``(x, k)``."""
        y, _ = self._hermite(lam)
        n = self.model.dim
        return y[:n], y[n:]

    def _hermite(self, lam: float):
        t = self.lam
        if not t[0] <= lam <= t[-1]:
            raise ValueError(f"lambda={lam} outside strip range [{t[0]}, {t[-1]}]")
        if len(t) == 1:
            return np.concatenate((self.X[0], self.K[0])), np.concatenate((self.dX[0], self.dK[0]))
        i = min(max(int(np.searchsorted(t, lam)) - 1, 0), len(t) - 2)
        h = t[i + 1] - t[i]
        s = (lam - t[i]) / h
        y0 = np.concatenate((self.X[i], self.K[i]))
        y1 = np.concatenate((self.X[i + 1], self.K[i + 1]))
        d0 = np.concatenate((self.dX[i], self.dK[i]))
        d1 = np.concatenate((self.dX[i + 1], self.dK[i + 1]))
        s2, s3 = s * s, s * s * s
        y = (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * d1
        dy = (
            (6 * s2 - 6 * s) / h * y0
            + (3 * s2 - 4 * s + 1) * d0
            + (-6 * s2 + 6 * s) / h * y1
            + (3 * s2 - 2 * s) * d1
        )
        return y, dy

    def state_at(self, lam: float) -> tuple[np.ndarray, np.ndarray]:
        """``(x, k)`` at ``lam`` from one extrapolated RK4 step off the nearest sample."""
        t = self.lam
        if not t[0] <= lam <= t[-1]:
            raise ValueError(f"lambda={lam} outside strip range [{t[0]}, {t[-1]}]")
        i = int(np.argmin(np.abs(t - lam)))
        y0 = np.concatenate((self.X[i], self.K[i]))
        h = lam - t[i]
        if h == 0.0:
            y = y0
        else:
            d0 = np.concatenate((self.dX[i], self.dK[i]))
            y, _ = extrapolated_step(self._rhs, t[i], y0, h, d0)
        n = self.model.dim
        return y[:n], y[n:]

    @cached_property
    def _rhs(self):
        return flow_rhs(self.model)

    def q_drift(self) -> float:
        """Largest ``|q(x_i, k_i) - q0|`` over the samples."""
        return max(abs(q_value(self.model, x, k) - self.q0) for x, k in zip(self.X, self.K))

    def momentum_residual(self) -> float:
        """Largest ``|k_i + 1/2 g xdot_i|`` over the samples."""
        from .geometry import g_low_at

        return max(
            float(np.linalg.norm(k + 0.5 * g_low_at(self.model, x) @ dx))
            for x, k, dx in zip(self.X, self.K, self.dX)
        )

    def to_rows(self) -> list[list[float]]:
        """Rows ``lambda, x^0.., k_0.., q`` for CSV export."""
        return [
            [float(l), *map(float, x), *map(float, k), q_value(self.model, x, k)]
            for l, x, k in zip(self.lam, self.X, self.K)
        ]


def integrate_strip(
    M: SpacetimeModel,
    p0: PhasePoint,
    lam_range: tuple[float, float] = (0.0, 1.0),
    *,
    lam0: float | None = None,
    atol: float = DEFAULT_ATOL,
    h_max: float = DEFAULT_H_MAX,
    t_eval=(),
) -> BicharStrip:
    """Integrate the Hamiltonian flow of ``q`` through ``p0``.

    ``p0`` sits at ``lam0`` (default 0 if inside the range, else the lower
    end).  Leaving the chart truncates the strip and sets its status flags;
    a collapsing step raises :class:`polprop.ode.StepCollapseError`.
    """
    lo, hi = float(lam_range[0]), float(lam_range[1])
    if lo > hi:
        raise ValueError("lambda range must be increasing")
    k0 = np.asarray(p0.k, dtype=float)
    if not np.any(k0):
        raise ValueError("zero covectors are not supported")
    M.require_domain(p0.x)
    if lam0 is None:
        lam0 = 0.0 if lo <= 0.0 <= hi else lo
    y0 = np.concatenate((np.asarray(p0.x, dtype=float), k0))
    t, y, dy, s_lo, s_hi = _two_sided(flow_rhs(M), _valid(M), y0, lam0, lo, hi, atol, h_max, t_eval)
    n = M.dim
    return BicharStrip(
        M, t, y[:, :n], y[:, n:], dy[:, :n], dy[:, n:], lam0, q_value(M, p0.x, k0), s_lo, s_hi, atol
    )


# ---------------------------------------------------------------------------
# Relation check
# ---------------------------------------------------------------------------


@dataclass
class WitnessGeodesic:
    """Strip through ``(x', k')`` at ``lam_src`` reaching ``(x, k)`` at ``lam_dst``."""

    strip: BicharStrip
    lam_src: float
    lam_dst: float
    pos_residual: float
    cov_residual: float


@dataclass
class Candidate:
    lam: float
    pos_residual: float
    cov_residual: float
    position_match: bool
    accepted: bool


@dataclass
class RelationResult:
    """Outcome of :func:`relation_check`.

    ``verdict`` is ``related``, ``not-related`` or ``unknown``.  ``unknown``
    means no witness was found in the searched range and the geometry does
    not allow a refutation (``range_exhausted`` is then true).
    """

    verdict: str
    witness: WitnessGeodesic | None = None
    candidates: list[Candidate] = field(default_factory=list)
    multiple: bool = False
    reason: str = ""
    range_exhausted: bool = False

    @property
    def related(self) -> bool:
        return self.verdict == "related"


def relation_check(
    M: SpacetimeModel,
    p: PhasePoint,
    pp: PhasePoint,
    tol_pos: float = DEFAULT_TOL_POS,
    tol_cov: float = DEFAULT_TOL_COV,
    lambda_max: float = DEFAULT_LAMBDA_MAX,
    tol_null: float = DEFAULT_TOL_NULL,
    *,
    atol: float = DEFAULT_ATOL,
    h_max: float = DEFAULT_H_MAX,
) -> RelationResult:
    """Decide ``(x, k) ~ (x', k')`` with ``p = (x, k)`` and ``pp = (x', k')``.

    The strip through ``pp`` is searched over ``[-lambda_max, lambda_max]``
    for local minima of ``|x(lambda) - x|``, located by sign changes of
    ``(x(lambda) - x) . xdot`` and refined to ``1e-12`` in ``lambda``.  A
    minimum within ``tol_pos`` whose covector is within ``tol_cov |k|`` is a
    witness.

    Refutations: non-null input; a position match with the wrong covector
    (the strip through ``pp`` is the only candidate geodesic); and, in the
    conformally flat builtins where null geodesics are coordinate lines, an
    interior closest approach that misses.
    """
    k = np.asarray(p.k, dtype=float)
    kp = np.asarray(pp.k, dtype=float)
    if not np.any(k) or not np.any(kp):
        raise ValueError("zero covectors are not supported")
    if not (is_null(M, p.x, k, tol_null) and is_null(M, pp.x, kp, tol_null)):
        return RelationResult("not-related", reason="non-null covector")

    x = np.asarray(p.x, dtype=float)
    xp = np.asarray(pp.x, dtype=float)
    knorm = float(np.linalg.norm(k))

    if np.linalg.norm(x - xp) <= tol_pos:
        cov = float(np.linalg.norm(k - kp)) / knorm
        pos = float(np.linalg.norm(x - xp))
        if cov <= tol_cov:
            strip = integrate_strip(M, pp, (0.0, 0.0))
            w = WitnessGeodesic(strip, 0.0, 0.0, pos, cov)
            return RelationResult("related", w, [Candidate(0.0, pos, cov, True, True)], reason="coincident")
        return RelationResult(
            "not-related", candidates=[Candidate(0.0, pos, cov, True, False)], reason="coincident, k differs"
        )

    strip = integrate_strip(M, pp, (-lambda_max, lambda_max), atol=atol, h_max=h_max)

    def g(lam):
        xs, ks = strip.state_at(lam)
        ginv, _ = M.inverse_and_derivative(xs)
        return float((xs - x) @ (-2.0 * ginv @ ks))

    fs = np.einsum("ij,ij->i", strip.X - x, strip.dX)
    candidates: list[Candidate] = []
    for i in range(len(fs) - 1):
        if not (fs[i] < 0.0 <= fs[i + 1]):
            continue
        a, b = float(strip.lam[i]), float(strip.lam[i + 1])
        ga, gb = g(a), g(b)
        if ga < 0.0 <= gb:
            lam_star = b if gb == 0.0 else brentq(g, a, b, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps)
        else:
            lam_star = a if abs(ga) < abs(gb) else b
        xs, ks = strip.state_at(lam_star)
        pos = float(np.linalg.norm(xs - x))
        cov = float(np.linalg.norm(ks - k)) / knorm
        hit = pos <= tol_pos
        candidates.append(Candidate(lam_star, pos, cov, hit, hit and cov <= tol_cov))

    accepted = [c for c in candidates if c.accepted]
    if accepted:
        best = accepted[0]
        w = WitnessGeodesic(strip, strip.lam0, best.lam, best.pos_residual, best.cov_residual)
        return RelationResult("related", w, candidates, multiple=len(accepted) > 1, reason="witness found")
    if any(c.position_match for c in candidates):
        return RelationResult("not-related", None, candidates, reason="position match, covector differs")
    if candidates and M.kind in CONFORMALLY_FLAT:
        return RelationResult("not-related", None, candidates, reason="closest approach misses")
    return RelationResult("unknown", None, candidates, reason="no witness in search range", range_exhausted=True)


# ---------------------------------------------------------------------------
# Transport
# ---------------------------------------------------------------------------


@dataclass
class Propagator:
    """Endpoint map of transport, ``matrix`` in ``Lin(B_src, B_dst)``."""

    matrix: np.ndarray
    src: PhasePoint
    dst: PhasePoint
    condition: float
    connection: ConnectionForms | None = None


def _transport_solve(M: SpacetimeModel, generator, y_geo: np.ndarray, S0: np.ndarray, lam0: float, lam1: float, t_eval=(), atol=DEFAULT_ATOL, h_max=DEFAULT_H_MAX) -> OdeResult:
    """Integrate flow plus ``S' = generator(x, k, xdot) S`` from ``lam0`` to ``lam1``."""
    n = M.dim
    shape = S0.shape
    geo = flow_rhs(M)
    dtype = np.result_type(S0, float)

    def f(t, y):
        xk = y[: 2 * n].real
        d = geo(t, xk)
        S = y[2 * n :].reshape(shape)
        dS = generator(xk[:n], xk[n:], d[:n]) @ S
        return np.concatenate((d.astype(dtype), dS.ravel()))

    y0 = np.concatenate((y_geo.astype(dtype), S0.astype(dtype).ravel()))
    # relative control on the transported matrix, absolute on the geodesic
    rtol = np.concatenate((np.zeros(2 * n), np.full(S0.size, atol)))
    res = integrate(f, lam0, y0, lam1, atol=atol, rtol=rtol, h_max=h_max, t_eval=t_eval, valid=_valid(M))
    if res.status != "done":
        raise ValueError(f"transport left the chart: {res.message}")
    return res


def _start_state(strip: BicharStrip, lam: float) -> np.ndarray:
    x, k = strip.state_at(lam)
    return np.concatenate((x, k))


def parallel_transport(
    conn: ConnectionForms,
    witness: WitnessGeodesic,
    lam_from: float | None = None,
    lam_to: float | None = None,
    *,
    atol: float = DEFAULT_ATOL,
) -> Propagator:
    """Solve ``S' + Gamma_{xdot} S = 0``, ``S(lam_from) = I``; return ``S(lam_to)``.

    Defaults transport from the source ``(x', k')`` to the target ``(x, k)``.
    """
    strip = witness.strip
    n, r = strip.model.dim, conn.rank
    a = witness.lam_src if lam_from is None else lam_from
    b = witness.lam_dst if lam_to is None else lam_to
    res = _transport_run(conn, strip, a, b, atol=atol)
    start, end = res.y[0], res.y[-1]
    S = end[2 * n :].reshape(r, r).astype(complex)
    src = PhasePoint(start[:n].real, start[n : 2 * n].real)
    dst = PhasePoint(end[:n].real, end[n : 2 * n].real)
    return Propagator(S, src, dst, float(np.linalg.cond(S)), conn)


def _transport_run(conn, strip, a, b, t_eval=(), atol=DEFAULT_ATOL) -> OdeResult:
    def gen(x, k, xdot):
        return -conn.contract(x, xdot)

    return _transport_solve(strip.model, gen, _start_state(strip, a), np.eye(conn.rank), a, b, t_eval, atol)


def transport_path(
    conn: ConnectionForms, strip: BicharStrip, lam_from: float, points, *, atol: float = DEFAULT_ATOL
) -> list[np.ndarray]:
    """Propagators from ``lam_from`` to each of ``points`` (one integration).

    All points must lie on the same side of ``lam_from``.
    """
    pts = [float(t) for t in points]
    if not pts:
        return []
    far = max(pts, key=lambda t: abs(t - lam_from))
    if any((t - lam_from) * (far - lam_from) < 0 for t in pts):
        raise ValueError("points must lie on one side of lam_from")
    res = _transport_run(conn, strip, lam_from, far, t_eval=pts, atol=atol)
    n, r = strip.model.dim, conn.rank
    out = []
    for t in pts:
        i = int(np.argmin(np.abs(res.t - t)))
        out.append(res.y[i, 2 * n :].reshape(r, r).astype(complex))
    return out


@dataclass
class OrbitResult:
    lam: np.ndarray
    W: np.ndarray  # (N, r) complex


def hamilton_orbit(
    P: NHOperatorSpec,
    strip: BicharStrip,
    W0,
    lam_end: float | None = None,
    t_eval=None,
    *,
    atol: float = DEFAULT_ATOL,
) -> OrbitResult:
    """Solve ``W' + i p^sub(c(lam)) W = 0`` along ``strip`` from ``strip.lam0``.

    ``p^sub`` comes from :func:`polprop.nhop.nhop_subprincipal`.  The
    solution is reported at ``t_eval`` (default: strip samples on the way).
    """
    M = strip.model
    n = M.dim
    lam_end = strip.lam_max if lam_end is None else lam_end
    W0 = np.asarray(W0, dtype=complex).reshape(-1, 1)
    if t_eval is None:
        lo, hi = sorted((strip.lam0, lam_end))
        t_eval = [t for t in strip.lam if lo <= t <= hi]

    def gen(x, k, xdot):
        return -1j * nhop_subprincipal(P, x, k)

    y_geo = _start_state(strip, strip.lam0)
    res = _transport_solve(M, gen, y_geo, W0, strip.lam0, lam_end, t_eval=t_eval, atol=atol)
    want = np.asarray(sorted(set(t_eval) | {strip.lam0}, key=lambda t: abs(t - strip.lam0)))
    idx = [int(np.argmin(np.abs(res.t - t))) for t in want]
    return OrbitResult(res.t[idx], res.y[idx, 2 * n :])


def product_transport(
    conn: ConnectionForms, witness: WitnessGeodesic, witness_dual: WitnessGeodesic, Z0
) -> np.ndarray:
    """``Z = Pi_gamma Z0 (Pi^dual_gamma')^T``.

    The ``B`` factor moves with ``conn`` along ``witness`` and the ``B*``
    factor with the dual connection along ``witness_dual``.
    """
    Pi = parallel_transport(conn, witness).matrix
    Pi_dual = parallel_transport(dual_connection(conn), witness_dual).matrix
    return Pi @ np.asarray(Z0, dtype=complex) @ Pi_dual.T
