import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polprop import bichar as bc
from polprop import geometry as geo
from polprop import nhop as nh
from polprop import oracles as orc
from polprop.geometry import PhasePoint

K = np.array([1.0, 0, 0, 1])


def test_minkowski_strip_closed_form(mink):
    s = bc.integrate_strip(mink, PhasePoint(np.zeros(4), K), (0.0, 1.0))
    for lam in (0.25, 0.5, 1.0):
        x, k = s.state_at(lam)
        assert np.allclose(x, lam * np.array([-2, 0, 0, 2]), atol=1e-14)
        assert np.array_equal(k, K)


def test_empty_range(mink):
    s = bc.integrate_strip(mink, PhasePoint(np.zeros(4), K), (0.0, 0.0))
    assert len(s.lam) == 1 and np.array_equal(s.K[0], K)


def test_flrw_strip_closed_form(flrw):
    k = np.array([-1.0, 0.6, 0.0, 0.8])
    s = bc.integrate_strip(flrw, PhasePoint(np.zeros(4), k), (-3.0, 10.0))
    assert s.q_drift() <= 1e-9
    assert s.status_low == "left-domain"
    for lam in (-0.2, 3.3, 10.0):
        x, kk = s.state_at(lam)
        assert np.allclose(x, orc.flrw_exp_flow(np.zeros(4), k, lam, 1.0), atol=1e-9)
        assert np.allclose(kk, k, atol=1e-9)


def test_strip_truncates_at_chart_edge(flrw):
    # past-directed flow reaches x0 = -2 near lambda = (1 - e^{-4}) / 4
    s = bc.integrate_strip(flrw, PhasePoint(np.zeros(4), np.array([1.0, 0, 0, 1])), (0.0, 1.0))
    assert s.status_high == "left-domain" and s.truncated
    assert s.X[-1, 0] == pytest.approx(-2.0, abs=1e-6)


def test_relation_examples(mink):
    r = bc.relation_check(mink, PhasePoint([-2, 0, 0, 2], K), PhasePoint(np.zeros(4), K))
    assert r.verdict == "related"
    assert r.witness.lam_dst - r.witness.lam_src == pytest.approx(1.0, abs=1e-12)
    same = bc.relation_check(mink, PhasePoint(np.zeros(4), K), PhasePoint(np.zeros(4), K))
    assert same.verdict == "related"
    doubled = bc.relation_check(mink, PhasePoint([-2, 0, 0, 2], 2 * K), PhasePoint(np.zeros(4), K))
    assert doubled.verdict == "not-related"
    timelike = bc.relation_check(mink, PhasePoint(np.zeros(4), [1, 0, 0, 0]), PhasePoint(np.zeros(4), [1, 0, 0, 0]))
    assert timelike.verdict == "not-related"


def test_relation_flrw(flrw, rng):
    for _ in range(5):
        p, pp, lam = orc.related_pair(flrw, rng)
        r = bc.relation_check(flrw, p, pp)
        assert r.verdict == "related"
        assert r.witness.lam_dst == pytest.approx(lam, abs=1e-8)


def test_relation_unknown_outside_search(mink):
    r = bc.relation_check(mink, PhasePoint([-200, 0, 0, 200], K), PhasePoint(np.zeros(4), K), lambda_max=5.0)
    assert r.verdict == "unknown" and r.range_exhausted


def test_relation_custom_unresolved_is_unknown():
    M = geo.custom([[1, 0], [0, -1]], [(-50, 50), (-50, 50)])
    r = bc.relation_check(M, PhasePoint([0.0, 1.0], [1.0, 1.0]), PhasePoint([0.0, 0.0], [1.0, 1.0]))
    assert r.verdict == "unknown"


def test_transport_flat_is_identity(mink):
    P = nh.make_spec(mink, rank=3)
    r = bc.relation_check(mink, PhasePoint([-2, 0, 0, 2], K), PhasePoint(np.zeros(4), K))
    assert np.allclose(bc.parallel_transport(P.connection, r.witness).matrix, np.eye(3), atol=1e-14)


def _scalar_A_spec(M, A):
    sign = (1, -1, -1, -1)
    return nh.make_spec(M, C=[[[2 * sign[nu] * A[nu]]] for nu in range(4)])


def test_transport_scalar_integrating_factor(mink):
    A = np.array([0.3, -0.2, 0.1, 0.4])
    P = _scalar_A_spec(mink, A)
    x = np.array([-2.0, 0, 0, 2])
    r = bc.relation_check(mink, PhasePoint(x, K), PhasePoint(np.zeros(4), K))
    Pi = bc.parallel_transport(P.connection, r.witness).matrix
    assert Pi[0, 0] == pytest.approx(np.exp(-A @ x), rel=1e-10)


def test_orbit_scalar_integrating_factor(mink):
    A = np.array([0.3, -0.2, 0.1, 0.4])
    P = _scalar_A_spec(mink, A)
    s = bc.integrate_strip(mink, PhasePoint(np.zeros(4), K), (0.0, 1.0))
    o = bc.hamilton_orbit(P, s, [1.5], t_eval=[0.5, 1.0])
    for lam, W in zip(o.lam, o.W):
        dx = lam * np.array([-2, 0, 0, 2])
        assert W[0] == pytest.approx(1.5 * np.exp(-A @ dx), rel=1e-10)


def test_orbit_constant_without_connection(mink):
    s = bc.integrate_strip(mink, PhasePoint(np.zeros(4), K), (0.0, 2.0))
    o = bc.hamilton_orbit(nh.make_spec(mink, rank=2), s, [1.0, 2j])
    assert np.allclose(o.W, [[1.0, 2j]] * len(o.W))


def test_product_transport_examples(mink, flrw, rng):
    r = bc.relation_check(mink, PhasePoint([-2, 0, 0, 2], K), PhasePoint(np.zeros(4), K))
    Z0 = rng.normal(size=(2, 2))
    flat = nh.make_spec(mink, rank=2).connection
    assert np.allclose(bc.product_transport(flat, r.witness, r.witness, Z0), Z0)
    A, B = np.array([0.3, -0.2, 0.1, 0.4]), np.array([-0.1, 0.5, 0.0, 0.2])
    Pa, Pb = _scalar_A_spec(mink, A), _scalar_A_spec(mink, B)
    x = np.array([-2.0, 0, 0, 2])
    # B factor with conn a, B* factor with the dual of conn b (a different operator)
    Z = bc.parallel_transport(Pa.connection, r.witness).matrix @ Z0[:1, :1] @ bc.parallel_transport(
        nh.dual_connection(Pb.connection), r.witness
    ).matrix.T
    assert Z[0, 0] == pytest.approx(Z0[0, 0] * np.exp(-A @ x) * np.exp(B @ x), rel=1e-10)
    # delta goes to delta
    P = nh.make_spec(flrw, C=orc.random_first_order(rng, 4, 2, 0.3, bounded=True))
    p, pp, _ = orc.related_pair(flrw, rng)
    w = bc.relation_check(flrw, p, pp).witness
    assert np.allclose(bc.product_transport(P.connection, w, w, np.eye(2)), np.eye(2), atol=1e-8)


def test_transport_path_one_side_only(mink):
    s = bc.integrate_strip(mink, PhasePoint(np.zeros(4), K), (-1.0, 1.0))
    with pytest.raises(ValueError):
        bc.transport_path(nh.make_spec(mink).connection, s, 0.0, [-0.5, 0.5])


# ---------------------------------------------------------------- properties

seeds = st.integers(0, 2**32 - 1)
models = st.sampled_from(["minkowski", "flrw"])


def _model(kind):
    return geo.minkowski() if kind == "minkowski" else geo.flrw()


@settings(max_examples=15, deadline=None)
@given(seeds, models)
def test_composition_and_reversal(seed, kind):
    rng = np.random.default_rng(seed)
    M = _model(kind)
    P = nh.make_spec(M, C=orc.random_first_order(rng, 4, 2, 0.3, bounded=True))
    p, pp, _ = orc.related_pair(M, rng, (-3.0, 3.0))
    w = bc.relation_check(M, p, pp).witness
    conn = P.connection
    total = bc.parallel_transport(conn, w).matrix
    mid = 0.5 * (w.lam_src + w.lam_dst)
    split = bc.parallel_transport(conn, w, mid, w.lam_dst).matrix @ bc.parallel_transport(conn, w, w.lam_src, mid).matrix
    back = bc.parallel_transport(conn, w, w.lam_dst, w.lam_src).matrix
    assert np.linalg.norm(split - total) <= 1e-8 * max(1.0, np.linalg.norm(total))
    assert np.linalg.norm(back @ total - np.eye(2)) <= 1e-8


@settings(max_examples=15, deadline=None)
@given(seeds, models)
def test_dual_pairing_constant(seed, kind):
    rng = np.random.default_rng(seed)
    M = _model(kind)
    P = nh.make_spec(M, C=orc.random_first_order(rng, 4, 2, 0.3, bounded=True))
    s = bc.integrate_strip(M, PhasePoint(rng.uniform(-0.5, 0.5, 4), orc.random_null_covector(rng, 4, True)), (0, 2))
    pts = [0.5, 1.0, 2.0]
    u, v = rng.normal(size=2), rng.normal(size=2)
    for S, D in zip(bc.transport_path(P.connection, s, 0.0, pts), bc.transport_path(nh.dual_connection(P.connection), s, 0.0, pts)):
        assert abs((D @ v) @ (S @ u) - v @ u) <= 1e-8


@settings(max_examples=15, deadline=None)
@given(seeds, models)
def test_sign_flip_same_propagator(seed, kind):
    rng = np.random.default_rng(seed)
    M = _model(kind)
    P = nh.make_spec(M, C=orc.random_first_order(rng, 4, 2, 0.3, bounded=True))
    p, pp, _ = orc.related_pair(M, rng, (-3.0, 3.0))
    w1 = bc.relation_check(M, p, pp).witness
    w2 = bc.relation_check(M, p.flipped(), pp.flipped()).witness
    A = bc.parallel_transport(P.connection, w1).matrix
    B = bc.parallel_transport(P.connection, w2).matrix
    assert np.allclose(A, B, rtol=1e-8, atol=1e-10)


@settings(max_examples=10, deadline=None)
@given(seeds, models)
def test_orbit_equals_transport(seed, kind):
    rng = np.random.default_rng(seed)
    M = _model(kind)
    P = nh.make_spec(M, C=orc.random_first_order(rng, 4, 3, 0.3, bounded=True))
    s = bc.integrate_strip(M, PhasePoint(rng.uniform(-0.5, 0.5, 4), orc.random_null_covector(rng, 4, True)), (0, 5))
    W0 = rng.normal(size=3) + 1j * rng.normal(size=3)
    pts = [1.0, 2.5, 5.0]
    o = bc.hamilton_orbit(P, s, W0, t_eval=pts)
    for lam, S in zip(pts, bc.transport_path(P.connection, s, 0.0, pts)):
        W = o.W[int(np.argmin(abs(o.lam - lam)))]
        assert np.linalg.norm(W - S @ W0) <= 1e-6 * max(np.linalg.norm(W0), np.linalg.norm(S @ W0))
