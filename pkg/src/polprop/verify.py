"""Property suite behind ``polprop verify`` and the acceptance tests.

Each check returns a :class:`CheckResult` with the worst observed metric,
the tolerance it is held to, and the wall time next to its budget.  The
acceptance checks ``A1`` .. ``A9`` run at their contractual sizes; the
invariant checks ``I-*`` are smaller sweeps of the per-module properties.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import bichar as bc
from . import exprs as ex
from . import geometry as geo
from . import nhop as nh
from . import oracles as orc
from . import polsets as ps
from . import proca as pr
from . import symbols as sy

__all__ = ["CheckResult", "ACCEPTANCE", "INVARIANTS", "run_suite", "run_model_suite"]


@dataclass
class CheckResult:
    id: str
    name: str
    passed: bool
    value: float
    tolerance: float
    seconds: float = 0.0
    budget: float | None = None
    details: dict = field(default_factory=dict)

    @property
    def within_budget(self) -> bool:
        return self.budget is None or self.seconds <= self.budget

    def line(self) -> str:
        verdict = "PASS" if self.passed and self.within_budget else "FAIL"
        budget = f"/{self.budget:.0f}s" if self.budget is not None else ""
        return (
            f"[{verdict}] {self.id} {self.name}: worst={self.value:.3e} tol={self.tolerance:.1e} "
            f"time={self.seconds:.2f}s{budget}"
        )

    def to_json(self) -> dict:
        d = asdict(self)
        d["within_budget"] = self.within_budget
        return d


def _timed(fn: Callable[[], CheckResult]) -> CheckResult:
    t0 = time.perf_counter()
    res = fn()
    res.seconds = time.perf_counter() - t0
    return res


def _models(H: float = 1.0):
    return {"minkowski": geo.minkowski(4), "flrw": geo.flrw(params={"H": H})}


# ---------------------------------------------------------------------------
# Acceptance checks
# ---------------------------------------------------------------------------


def acceptance_psub(seed: int = 1, draws: int = 100) -> CheckResult:
    rng = np.random.default_rng(seed)
    models = list(_models().values())
    worst = 0.0
    for _ in range(draws):
        M = models[rng.integers(2)]
        r = int(rng.integers(1, 4))
        P = nh.make_spec(M, C=orc.random_first_order(rng, 4, r))
        x = rng.uniform(-0.5, 0.5, size=4)
        k = rng.normal(size=4) * rng.uniform(0.5, 3.0)
        worst = max(worst, nh.verify_psub_identity(P, x, k))
    return CheckResult("A1", "subprincipal identity", worst <= 1e-9, worst, 1e-9, budget=10.0,
                       details={"draws": draws})


def acceptance_orbit(seed: int = 2, cases: int = 50, length: float = 5.0) -> CheckResult:
    rng = np.random.default_rng(seed)
    models = list(_models().values())
    worst = 0.0
    for _ in range(cases):
        M = models[rng.integers(2)]
        r = int(rng.integers(1, 4))
        P = nh.make_spec(M, C=orc.random_first_order(rng, 4, r, scale=0.3, bounded=True))
        x0 = rng.uniform(-0.5, 0.5, size=4)
        k0 = orc.random_null_covector(rng, 4, future=True)
        strip = bc.integrate_strip(M, geo.PhasePoint(x0, k0), (0.0, length))
        W0 = rng.normal(size=r) + 1j * rng.normal(size=r)
        pts = list(np.linspace(0.0, length, 6)[1:])
        orbit = bc.hamilton_orbit(P, strip, W0, lam_end=length, t_eval=pts)
        props = bc.transport_path(P.connection, strip, 0.0, pts)
        for lam, S in zip(pts, props):
            i = int(np.argmin(np.abs(orbit.lam - lam)))
            # relative to the larger end: random forms can grow W by many decades
            ref = max(np.linalg.norm(W0), np.linalg.norm(S @ W0))
            err = np.linalg.norm(orbit.W[i] - S @ W0) / ref
            worst = max(worst, float(err))
    return CheckResult("A2", "orbit-transport equivalence", worst <= 1e-6, worst, 1e-6, budget=10.0,
                       details={"cases": cases, "affine_length": length})


def acceptance_flow(seed: int = 3, strips: int = 20, length: float = 10.0) -> CheckResult:
    rng = np.random.default_rng(seed)
    models = list(_models().values())
    worst_q = worst_k = 0.0
    for i in range(strips):
        M = models[i % 2]
        x0 = rng.uniform(-0.5, 0.5, size=4)
        k0 = orc.random_null_covector(rng, 4, future=True)
        s = bc.integrate_strip(M, geo.PhasePoint(x0, k0), (0.0, length))
        if s.truncated:
            worst_q = math.inf
        worst_q = max(worst_q, s.q_drift())
        worst_k = max(worst_k, s.momentum_residual())
    worst = max(worst_q, worst_k)
    return CheckResult("A3", "flow conservation", worst <= 1e-9, worst, 1e-9, budget=5.0,
                       details={"q_drift": worst_q, "momentum": worst_k, "strips": strips})


def acceptance_relation(seed: int = 4, pairs: int = 1000) -> CheckResult:
    rng = np.random.default_rng(seed)
    M = geo.minkowski(4)
    fp = fn = 0
    for i in range(pairs):
        p, pp, lam = orc.related_pair(M, rng, (-8.0, 8.0))
        related = i % 2 == 0
        if not related:
            if i % 4 == 1:
                # shift x off the line, orthogonally to its direction
                d = orc.minkowski_flow(np.zeros(4), pp.k, 1.0)
                v = rng.normal(size=4)
                v -= (v @ d) / (d @ d) * d
                v *= rng.uniform(1e-3, 1e-1) / np.linalg.norm(v)
                p = geo.PhasePoint(np.asarray(p.x) + v, p.k)
            else:
                # another null covector at the same point
                kv = np.asarray(p.k[1:])
                rot = rng.normal(size=3)
                kv2 = kv + rng.uniform(1e-3, 1e-1) * np.linalg.norm(kv) * rot / np.linalg.norm(rot)
                p = geo.PhasePoint(p.x, np.concatenate(([np.sign(p.k[0]) * np.linalg.norm(kv2)], kv2)))
        verdict = bc.relation_check(M, p, pp).verdict
        if related and verdict != "related":
            fn += 1
        if not related and verdict != "not-related":
            fp += 1
    bad = fp + fn
    return CheckResult("A4", "relation oracle (Minkowski)", bad == 0, float(bad), 0.0, budget=20.0,
                       details={"false_positive": fp, "false_negative": fn, "pairs": pairs})


def acceptance_compose(seed: int = 5, pairs: int = 50) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(pairs):
        dim = int(rng.integers(1, 5))
        r = int(rng.integers(1, 4))
        a = orc.random_symbol(rng, dim, r, int(rng.integers(0, 3)))
        b = orc.random_symbol(rng, dim, r, int(rng.integers(0, 3)))
        c = sy.compose(a, b)
        ref = orc.operator_compose(a, b)
        for _ in range(2):
            x = rng.uniform(-1, 1, size=dim)
            got = c.coeff_values(x)
            want = orc.coefficient_table_values(ref, x)
            worst = max(worst, orc.table_difference(got, want))
    return CheckResult("A5", "composition vs operator expansion", worst <= 1e-10, worst, 1e-10, budget=5.0,
                       details={"pairs": pairs})


def random_frame_case(rng):
    dim = int(rng.integers(2, 5))
    r = int(rng.integers(1, 4))
    # b = -g^{-1}(xi, xi) for a diagonal metric with smooth entries
    diag = [f"{1 + rng.uniform(0, 0.5):.6f} + 0.2*sin(x{rng.integers(dim)})"] + [
        f"-{1 + rng.uniform(0, 0.5):.6f} - 0.2*x{rng.integers(dim)}^2" for _ in range(dim - 1)
    ]
    coeffs = {}
    for mu in range(dim):
        alpha = [0] * dim
        alpha[mu] = 2
        coeffs[tuple(alpha)] = [[diag[mu] if i == j else "0" for j in range(r)] for i in range(r)]
    for mu in range(dim):
        alpha = [0] * dim
        alpha[mu] = 1
        coeffs[tuple(alpha)] = orc.random_matrix(rng, dim, r, 0.5)
    coeffs[(0,) * dim] = orc.random_matrix(rng, dim, r, 0.5)
    a = sy.symbol_from_real(dim, r, 2, {k: [[ex.parse(s) for s in row] for row in v] for k, v in coeffs.items()})
    M = [[("1" if i == j else "0") + f" + 0.25*({orc.random_coefficient(rng, dim, 1.0, 0.5)})" for j in range(r)]
         for i in range(r)]
    gamma = [orc.random_matrix(rng, dim, r, 0.5) for _ in range(dim)]
    return a, M, gamma


def acceptance_frame(seed: int = 6, changes: int = 20, samples: int = 20) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(changes):
        a, M, gamma = random_frame_case(rng)
        pts = sy.sample_points(a.dim, samples, seed=seed * 1000 + i, box=[(-0.5, 0.5)] * a.dim)
        _, rep = sy.frame_change_refined(a, M, gamma, pts)
        worst = max(worst, rep.max_residual)
    return CheckResult("A6", "frame covariance", worst <= 1e-9, worst, 1e-9, budget=5.0,
                       details={"changes": changes, "samples": samples})


def relation_points(rng, n_points: int, models=None, diagonal_every: int = 5):
    """Seeded points of the relation set with random rank-1/2 operators."""
    models = models or list(_models().values())
    out = []
    for i in range(n_points):
        M = models[i % len(models)]
        r = 1 + (i // len(models)) % 2
        P = nh.make_spec(M, C=orc.random_first_order(rng, 4, r, scale=0.3, bounded=True))
        p, pp, lam = orc.related_pair(M, rng, (-4.0, 4.0))
        if i % diagonal_every == diagonal_every - 1:
            p = pp
        rp = ps.in_R(M, p, pp.flipped())
        out.append((P, rp))
    return out


def acceptance_fibres(seed: int = 7, n_points: int = 50) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = {"membership": 0.0, "composition": 0.0, "reversal": 0.0, "sign_flip": 0.0, "diagonal": 0.0}
    missing = 0
    for P, rp in relation_points(rng, n_points):
        if rp.verdict != "in":
            missing += 1
            continue
        fib = ps.fibre_EP(P, rp)
        w = rp.witness
        conn = P.connection
        if rp.diagonal:
            worst["diagonal"] = max(worst["diagonal"], ps.membership(ps.delta_fibre(P.rank), fib.basis)[1])
            continue
        Pi = ps.propagator(conn, rp).matrix
        mid = 0.5 * (w.lam_src + w.lam_dst)
        first = bc.parallel_transport(conn, w, w.lam_src, mid).matrix
        second = bc.parallel_transport(conn, w, mid, w.lam_dst).matrix
        back = bc.parallel_transport(conn, w, w.lam_dst, w.lam_src).matrix
        scale = max(1.0, np.linalg.norm(Pi))
        worst["composition"] = max(worst["composition"], np.linalg.norm(second @ first - Pi) / scale)
        worst["reversal"] = max(worst["reversal"], np.linalg.norm(back @ Pi - np.eye(P.rank)))
        flip = rp.flipped()
        if flip.verdict != "in":
            missing += 1
            continue
        fib2 = ps.fibre_EP(P, flip)
        worst["sign_flip"] = max(worst["sign_flip"], ps.membership(fib, fib2.basis)[1])
        worst["membership"] = max(worst["membership"], ps.membership(fib, Pi * (2.5 - 1j))[1])
    tolmap = {"membership": 1e-6, "composition": 1e-8, "reversal": 1e-8, "sign_flip": 1e-6, "diagonal": 1e-6}
    ok = missing == 0 and all(worst[k] <= tolmap[k] for k in worst)
    ratio = max(worst[k] / tolmap[k] for k in worst)
    return CheckResult("A7", "fibre consistency (ratio to tolerance)", ok, ratio, 1.0, budget=15.0,
                       details={**worst, "unrelated_or_unknown": missing, "points": n_points})


def acceptance_proca(seed: int = 8, n_points: int = 30, n_z: int = 100) -> CheckResult:
    rng = np.random.default_rng(seed)
    ctxs = [pr.ProcaContext(M, 1.0) for M in _models().values()]
    ann = chain = 0.0
    claims_ok = True
    missing = 0
    for i in range(n_points):
        ctx = ctxs[i % 2]
        p, pp, lam = orc.related_pair(ctx.model, rng, (-4.0, 4.0))
        if i % 6 == 5:
            p = pp
        rp = ps.in_R(ctx.model, p, pp.flipped())
        if rp.verdict != "in":
            missing += 1
            continue
        fib = pr.predicted_proca_fibre(ctx, rp)
        ann = max(ann, *pr.constraint_residuals(ctx, rp, fib.basis))
        chain = max(chain, pr.chain_distance(ctx, rp))
        pos = pr.proca_wf_claim(ctx, rp)
        neg = pr.proca_wf_claim(ctx, rp, negative_control=True)
        claims_ok &= pos["nonzero"] and not neg["nonzero"]
    zerr = 0.0
    for _ in range(n_z):
        kv = rng.normal(size=3)
        s = int(rng.choice([-1, 1]))
        k0 = s * np.linalg.norm(kv)
        zv = rng.normal(size=3)
        z = np.concatenate(([kv @ zv / k0], zv))
        v = pr.v_from_z(kv, s, z)
        zerr = max(zerr, float(np.linalg.norm(pr.z_from_v(kv, s, v) - z)))
    ratio = max(ann / 1e-12, chain / 1e-6, zerr / 1e-10)
    ok = missing == 0 and ratio <= 1.0 and claims_ok
    return CheckResult("A8", "Proca suite (ratio to tolerance)", ok, ratio, 1.0, budget=15.0,
                       details={"annihilator": ann, "chain_distance": chain, "claims_ok": bool(claims_ok),
                                "z_roundtrip": zerr, "unrelated_or_unknown": missing})


def acceptance_exprs(seed: int = 9) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_fd = 0.0
    for src in orc.EXPR_CORPUS:
        e = ex.parse(src)
        for _ in range(3):
            x = orc.corpus_point(rng)
            for i in range(4):
                val = ex.evaluate(ex.diff(e, i), x)
                fd = orc.central_difference(e, i, x)
                worst_fd = max(worst_fd, abs(val - fd) / (1.0 + abs(val)))
    worst_rt = 0.0
    for src in orc.EXPR_CORPUS:
        e = ex.parse(src)
        e2 = ex.parse(ex.to_str(e))
        for _ in range(100 // len(orc.EXPR_CORPUS) + 1):
            x = orc.corpus_point(rng)
            a, b = ex.evaluate(e, x), ex.evaluate(e2, x)
            worst_rt = max(worst_rt, abs(a - b) / max(1.0, abs(a)))
    ratio = max(worst_fd / 1e-6, worst_rt / 1e-12)
    return CheckResult("A9", "expression engine (ratio to tolerance)", ratio <= 1.0, ratio, 1.0, budget=2.0,
                       details={"diff_vs_fd": worst_fd, "roundtrip": worst_rt, "corpus": len(orc.EXPR_CORPUS)})


ACCEPTANCE: dict[str, Callable[[], CheckResult]] = {
    "A1": acceptance_psub,
    "A2": acceptance_orbit,
    "A3": acceptance_flow,
    "A4": acceptance_relation,
    "A5": acceptance_compose,
    "A6": acceptance_frame,
    "A7": acceptance_fibres,
    "A8": acceptance_proca,
    "A9": acceptance_exprs,
}


# ---------------------------------------------------------------------------
# Invariant sweeps (smaller, model-parametrised)
# ---------------------------------------------------------------------------


def inv_geodesic(M: geo.SpacetimeModel, seed: int = 11, n: int = 4) -> CheckResult:
    """Flow curves solve the Christoffel geodesic equation."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    h = 2e-3
    for _ in range(n):
        x0 = _interior_point(M, rng)
        k0 = orc.random_null_covector(rng, M.dim, future=True) if M.kind != "custom" else rng.normal(size=M.dim)
        s = bc.integrate_strip(M, geo.PhasePoint(x0, k0), (0.0, 2.0))
        for lam in (0.5, 1.0, 1.5):
            if lam + 2 * h > s.lam_max:
                continue

            def xdot(t):
                x, k = s.state_at(t)
                return geo.hamiltonian_field(M, x, k)[0]

            acc = (-xdot(lam + 2 * h) + 8 * xdot(lam + h) - 8 * xdot(lam - h) + xdot(lam - 2 * h)) / (12 * h)
            x, k = s.state_at(lam)
            v = xdot(lam)
            G = geo.christoffel_at(M, x)
            res = acc + np.einsum("lmn,m,n->l", G, v, v)
            worst = max(worst, float(np.linalg.norm(res)))
    return CheckResult("I-geometry-geodesic", "geodesic equation residual", worst <= 1e-7, worst, 1e-7)


def _interior_point(M, rng):
    lo = np.array([max(a, -0.5) for a, _ in M.domain])
    hi = np.array([min(b, 0.5) for _, b in M.domain])
    return lo + (hi - lo) * rng.uniform(0.2, 0.8, size=M.dim)


def inv_psub(M: geo.SpacetimeModel, seed: int = 12, n: int = 10) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        P = nh.make_spec(M, C=orc.random_first_order(rng, M.dim, int(rng.integers(1, 3))))
        worst = max(worst, nh.verify_psub_identity(P, _interior_point(M, rng), rng.normal(size=M.dim)))
    return CheckResult("I-nhop-psub", "subprincipal identity", worst <= 1e-9, worst, 1e-9)


def inv_reconstruction(M: geo.SpacetimeModel, seed: int = 13, n: int = 5) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        r = int(rng.integers(1, 3))
        P = nh.make_spec(M, C=orc.random_first_order(rng, M.dim, r))
        C2 = nh.reconstruct_first_order(M, P.connection)
        fn1 = ex.compile_exprs([e for m in P.C for row in m for e in row])
        fn2 = ex.compile_exprs([e for m in C2 for row in m for e in row])
        for _ in range(5):
            x = tuple(_interior_point(M, rng))
            a, b = np.array(fn1(x)), np.array(fn2(x))
            worst = max(worst, float(np.abs(a - b).max() / (1 + np.abs(a).max())))
    return CheckResult("I-nhop-reconstruction", "Weitzenboeck reconstruction", worst <= 1e-12, worst, 1e-12)


def inv_compose_assoc(seed: int = 14, n: int = 5) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        dim = int(rng.integers(1, 4))
        r = int(rng.integers(1, 3))
        a, b, c = (orc.random_symbol(rng, dim, r, int(rng.integers(0, 3))) for _ in range(3))
        left = sy.compose(sy.compose(a, b), c)
        right = sy.compose(a, sy.compose(b, c))
        x = rng.uniform(-1, 1, size=dim)
        worst = max(worst, orc.table_difference(left.coeff_values(x), right.coeff_values(x)))
    return CheckResult("I-symbols-assoc", "composition associativity", worst <= 1e-10, worst, 1e-10)


def inv_dual(seed: int = 15, n: int = 10) -> CheckResult:
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(n):
        a = orc.random_symbol(rng, 3, 2, 2)
        d = sy.dual_symbol(sy.dual_symbol(a))
        if d.coeffs.keys() != a.coeffs.keys() or any(
            ex.to_str(u[0]) != ex.to_str(v[0]) or ex.to_str(u[1]) != ex.to_str(v[1])
            for al in a.coeffs
            for ru, rv in zip(a.coeffs[al], d.coeffs[al])
            for u, v in zip(ru, rv)
        ):
            bad += 1
    return CheckResult("I-symbols-dual", "dual involution", bad == 0, float(bad), 0.0)


def inv_refined_composition(seed: int = 16, n: int = 5) -> CheckResult:
    """``(a o b)^r = a^r b^r - (i/2){a, b}`` on the top two layers, scalar case."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        dim = int(rng.integers(1, 4))
        a = orc.random_symbol(rng, dim, 1, int(rng.integers(1, 3)), p_skip=0.0)
        b = orc.random_symbol(rng, dim, 1, int(rng.integers(1, 3)), p_skip=0.0)
        m = a.order + b.order
        lhs = sy.refined_principal(sy.compose(a, b))
        pa, pb = sy.principal(a), sy.principal(b)
        for x, xi in sy.sample_points(dim, 5, seed=int(rng.integers(1 << 30))):
            pb_ = _poisson(pa, pb, x, xi)
            rhs_top = (pa(x, xi) * pb(x, xi))[0, 0]
            # degree m-1 part of a^r b^r: top*sub + sub*top
            sa = sy.subprincipal(a)(x, xi)[0, 0]
            sb = sy.subprincipal(b)(x, xi)[0, 0]
            rhs_sub = pa(x, xi)[0, 0] * sb + sa * pb(x, xi)[0, 0] - 0.5j * pb_
            top = lhs.parts[m](x, xi)[0, 0]
            sub = lhs.parts[m - 1](x, xi)[0, 0]
            scale = 1.0 + abs(top)
            worst = max(worst, abs(top - rhs_top) / scale, abs(sub - rhs_sub) / scale)
    return CheckResult("I-symbols-refined", "refined symbol of a composition", worst <= 1e-9, worst, 1e-9)


def _poisson(a: sy.PolySymbol, b: sy.PolySymbol, x, xi) -> complex:
    """``{a, b} = d_xi a . d_x b - d_x a . d_xi b`` (``d/dxi = i d/dzeta``)."""
    tot = 0.0
    for mu in range(a.dim):
        dxi_a = 1j * sy.d_zeta(a, mu)(x, xi)[0, 0]
        dxi_b = 1j * sy.d_zeta(b, mu)(x, xi)[0, 0]
        dx_a = sy.d_x(a, mu)(x, xi)[0, 0]
        dx_b = sy.d_x(b, mu)(x, xi)[0, 0]
        tot += dxi_a * dx_b - dx_a * dxi_b
    return tot


def inv_transport(M: geo.SpacetimeModel, seed: int = 17, n: int = 3) -> CheckResult:
    """Dual pairing constancy and the product-transport identity."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        r = int(rng.integers(1, 3))
        P = nh.make_spec(M, C=orc.random_first_order(rng, M.dim, r, 0.3, bounded=True))
        x0 = _interior_point(M, rng)
        k0 = orc.random_null_covector(rng, M.dim, future=True)
        s = bc.integrate_strip(M, geo.PhasePoint(x0, k0), (0.0, 2.0))
        pts = [0.5, 1.0, 1.5, 2.0]
        Pis = bc.transport_path(P.connection, s, 0.0, pts)
        Duals = bc.transport_path(nh.dual_connection(P.connection), s, 0.0, pts)
        u, v = rng.normal(size=r), rng.normal(size=r)
        for A, D in zip(Pis, Duals):
            worst = max(worst, abs((D @ v) @ (A @ u) - v @ u))
        w = bc.WitnessGeodesic(s, 0.0, 2.0, 0.0, 0.0)
        Z = bc.product_transport(P.connection, w, w, np.eye(r))
        worst = max(worst, float(np.linalg.norm(Z - np.eye(r))))
    return CheckResult("I-bichar-pairing", "dual pairing and product transport", worst <= 1e-8, worst, 1e-8)


def inv_polsets_minkowski(seed: int = 18, n: int = 10) -> CheckResult:
    """R+ and R- are disjoint off the diagonal; q = id corollary is nonzero."""
    rng = np.random.default_rng(seed)
    M = geo.minkowski(4)
    bad = 0
    for _ in range(n):
        p, pp, lam = orc.related_pair(M, rng)
        rp = ps.in_R(M, p, pp.flipped())
        if rp.verdict != "in" or (rp.in_signed("+") == "in" and rp.in_signed("-") == "in"):
            bad += 1
            continue
        P = nh.make_spec(M, C=orc.random_first_order(rng, 4, 2, 0.3, bounded=True))
        res = ps.corollary_test(lambda x, k: np.eye(2), lambda x, k: np.eye(2), P, rp)
        bad += not res.nonzero
    return CheckResult("I-polsets-disjoint", "R+/R- disjointness and corollary", bad == 0, float(bad), 0.0)


def inv_diff_commutes(seed: int = 19) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for src in orc.EXPR_CORPUS:
        e = ex.parse(src)
        x = orc.corpus_point(rng)
        i, j = (int(v) for v in rng.integers(4, size=2))
        a = ex.evaluate(ex.diff(ex.diff(e, i), j), x)
        b = ex.evaluate(ex.diff(ex.diff(e, j), i), x)
        worst = max(worst, abs(a - b) / max(1.0, abs(a)))
    return CheckResult("I-exprs-diff-commutes", "mixed partials commute", worst <= 1e-9, worst, 1e-9)


def inv_christoffel_symmetry(M: geo.SpacetimeModel) -> CheckResult:
    G = M.christoffel
    n = M.dim
    bad = sum(G[l][m][v] is not G[l][v][m] for l in range(n) for m in range(n) for v in range(n))
    return CheckResult("I-geometry-christoffel", "Christoffel symmetry", bad == 0, float(bad), 0.0)


def inv_relation_symmetry(M: geo.SpacetimeModel, seed: int = 20, n: int = 6) -> CheckResult:
    """Sign-flipped points share the verdict and the fibre."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    bad = 0
    for _ in range(n):
        P = nh.make_spec(M, C=orc.random_first_order(rng, 4, 2, 0.3, bounded=True))
        p, pp, _ = orc.related_pair(M, rng, (-3.0, 3.0))
        rp = ps.in_R(M, p, pp.flipped())
        fl = rp.flipped()
        if rp.verdict != fl.verdict:
            bad += 1
            continue
        if rp.verdict == "in":
            worst = max(worst, ps.membership(ps.fibre_EP(P, rp), ps.fibre_EP(P, fl).basis)[1])
    return CheckResult("I-polsets-symmetry", "sign-flip symmetry", bad == 0 and worst <= 1e-6,
                       worst if bad == 0 else math.inf, 1e-6)


def inv_proca_transport(M: geo.SpacetimeModel, seed: int = 21, n: int = 4) -> CheckResult:
    """Levi-Civita transport of ``k'`` lands on the endpoint covector ``k``."""
    rng = np.random.default_rng(seed)
    ctx = pr.ProcaContext(M, 1.0)
    worst = 0.0
    for _ in range(n):
        p, pp, _ = orc.related_pair(M, rng, (-3.0, 3.0))
        rp = ps.in_R(M, p, pp.flipped())
        Pi = ps.propagator(ctx.kg1.connection, rp).matrix
        worst = max(worst, float(np.linalg.norm(Pi @ np.asarray(rp.pp.k) - np.asarray(rp.p.k))))
    return CheckResult("I-proca-transport", "transported k' matches k", worst <= 1e-8, worst, 1e-8)


def inv_z_orthogonal(seed: int = 22, n: int = 100) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        kv = rng.normal(size=3)
        s = int(rng.choice([-1, 1]))
        k = np.concatenate(([s * np.linalg.norm(kv)], kv))
        z = pr.z_from_v(kv, s, rng.normal(size=3))
        eta = np.diag([1.0, -1.0, -1.0, -1.0])
        worst = max(worst, abs(float(k @ eta @ z)) / (1.0 + np.linalg.norm(k) * np.linalg.norm(z)))
    return CheckResult("I-proca-z-orthogonal", "z is orthogonal to k", worst <= 1e-12, worst, 1e-12)


def _per_model(fn, base_id: str):
    return {
        f"{base_id}-{name}": (lambda f=fn, m=name, i=f"{base_id}-{name}": _rename(f(_models()[m]), i))
        for name in ("flrw", "minkowski")
    }


INVARIANTS: dict[str, Callable[[], CheckResult]] = {
    **_per_model(inv_transport, "I-bichar-pairing"),
    **_per_model(inv_geodesic, "I-geometry-geodesic"),
    **_per_model(inv_christoffel_symmetry, "I-geometry-christoffel"),
    **_per_model(inv_psub, "I-nhop-psub"),
    **_per_model(inv_reconstruction, "I-nhop-reconstruction"),
    **_per_model(inv_relation_symmetry, "I-polsets-symmetry"),
    **_per_model(inv_proca_transport, "I-proca-transport"),
    "I-exprs-diff-commutes": inv_diff_commutes,
    "I-polsets-disjoint": inv_polsets_minkowski,
    "I-proca-z-orthogonal": inv_z_orthogonal,
    "I-symbols-assoc": inv_compose_assoc,
    "I-symbols-dual": inv_dual,
    "I-symbols-refined": inv_refined_composition,
}


def _rename(res: CheckResult, new_id: str) -> CheckResult:
    res.id = new_id
    return res


def run_suite(ids=None) -> list[CheckResult]:
    """Run the built-in acceptance and invariant checks, sorted by id."""
    table = {**ACCEPTANCE, **INVARIANTS}
    chosen = sorted(table if ids is None else ids)
    return [_timed(table[i]) for i in chosen]


def run_model_suite(M: geo.SpacetimeModel, P: nh.NHOperatorSpec | None = None, seed: int = 0) -> list[CheckResult]:
    """Invariants specialised to a configured spacetime (and operator)."""
    checks = {
        "I-geometry-christoffel": lambda: inv_christoffel_symmetry(M),
        "I-geometry-geodesic": lambda: inv_geodesic(M, seed + 11),
        "I-nhop-psub": lambda: inv_psub(M, seed + 12),
        "I-nhop-reconstruction": lambda: inv_reconstruction(M, seed + 13),
    }
    if M.kind != "custom":
        checks["I-bichar-pairing"] = lambda: inv_transport(M, seed + 17)
    if P is not None:
        def own_psub():
            rng = np.random.default_rng(seed)
            worst = max(
                nh.verify_psub_identity(P, _interior_point(M, rng), rng.normal(size=M.dim)) for _ in range(10)
            )
            return CheckResult("I-config-operator-psub", "configured operator subprincipal", worst <= 1e-9, worst, 1e-9)

        checks["I-config-operator-psub"] = own_psub
    return [_timed(checks[k]) for k in sorted(checks)]
