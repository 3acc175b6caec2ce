import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polprop import exprs as ex
from polprop import geometry as geo
from polprop import nhop as nh
from polprop import oracles as orc
from polprop import proca as pr
from polprop import symbols as sy

A = ("1", "0.5*x1", "sin(x2)", "0")  # a covector field A_mu


def scalar_spec_from_A(M):
    # C^nu = 2 eta^{nu mu} A_mu
    sign = (1, -1, -1, -1)
    return nh.make_spec(M, C=[[[f"2*({sign[nu]})*({A[nu]})"]] for nu in range(4)])


def test_zero_first_order_gives_zero_connection(mink, flrw):
    for M in (mink, flrw):
        assert nh.make_spec(M, rank=2).connection.is_zero


def test_scalar_connection_recovers_A(mink):
    P = scalar_spec_from_A(mink)
    x = np.array([0.1, 0.4, -0.3, 0.2])
    want = [ex.evaluate(ex.parse(a), x) for a in A]
    assert np.allclose(P.connection.at(x)[:, 0, 0], want, rtol=1e-15)


def test_proca_minkowski_connection_is_flat(mink):
    ctx = pr.ProcaContext(mink, 1.0)
    assert ctx.kg1.connection.is_zero
    assert pr.levi_civita_forms(mink).is_zero


def test_psub_examples(mink):
    P = nh.make_spec(mink, C=[[["2"]], [["0"]], [["0"]], [["0"]]])  # A = dt
    assert nh.nhop_subprincipal(P, np.zeros(4), [1, 0, 0, 1])[0, 0] == pytest.approx(2j)
    assert not np.any(nh.nhop_subprincipal(P, np.zeros(4), np.zeros(4)))
    assert not np.any(nh.nhop_subprincipal(nh.make_spec(mink), np.zeros(4), [1, 0, 0, 1]))


def test_box_symbol(flrw):
    P = nh.make_spec(flrw)
    x = np.array([0.3, 0, 0, 0])
    xi = np.array([0.5, 1.0, -0.4, 0.2])
    _, gi = geo.metric_at(flrw, x)
    assert sy.principal(P.symbol)(x, xi)[0, 0] == pytest.approx(-xi @ gi @ xi)
    # first-order part i (d_mu g^{mu nu}) xi_nu; only d_0 g^{00} survives
    dg00 = -2.0 * math.exp(-2 * 0.3)
    assert sy.homogeneous_part(P.symbol, 1)(x, xi)[0, 0] == pytest.approx(1j * dg00 * xi[0])


def test_psub_identity_examples(mink, flrw):
    assert nh.verify_psub_identity(nh.make_spec(mink), np.zeros(4), [1, 0, 0, 1]) == 0.0
    assert nh.verify_psub_identity(nh.make_spec(flrw), np.array([0.2, 0, 0, 0]), [1, 0.3, 0, 1]) <= 1e-9


def test_dual_connection_examples(mink, rng):
    P = scalar_spec_from_A(mink)
    D = nh.dual_connection(P.connection)
    x = np.array([0.1, 0.4, -0.3, 0.2])
    assert np.allclose(D.at(x), -P.connection.at(x))
    Q = nh.make_spec(mink, C=orc.random_first_order(rng, 4, 2))
    assert np.allclose(nh.dual_connection(Q.connection).at(x), -np.swapaxes(Q.connection.at(x), 1, 2))
    assert nh.dual_connection(nh.make_spec(mink).connection).is_zero


def test_conjugation_minkowski_unchanged(mink, rng):
    P = nh.make_spec(mink, C=orc.random_first_order(rng, 4, 2), V=orc.random_matrix(rng, 4, 2))
    Q = nh.half_density_conjugate(P, 0.25)
    x = rng.uniform(-1, 1, size=4)
    assert np.allclose(Q.C_at(x), P.C_at(x), atol=0)


def test_conjugation_round_trip(flrw, rng):
    P = nh.make_spec(flrw, C=orc.random_first_order(rng, 4, 2), V=orc.random_matrix(rng, 4, 2))
    Q = nh.half_density_conjugate(nh.half_density_conjugate(P, 0.25), -0.25)
    fV = ex.compile_exprs([e for row in P.V for e in row])
    fQ = ex.compile_exprs([e for row in Q.V for e in row])
    for _ in range(5):
        x = tuple(rng.uniform(-0.5, 0.5, size=4))
        assert np.allclose(Q.C_at(x), P.C_at(x), atol=1e-12)
        assert np.allclose(fQ(x), fV(x), atol=1e-12)


def test_scalar_wave_operator_densitised(flrw):
    # box_g u = g dd u + (d g + g d log rho) d u; its half-density conjugate is box with V = 0
    n = 4
    rho_log = [ex.diff(ex.call("log", ex.call("sqrt", ex.neg(flrw.det_g))), mu) for mu in range(n)]
    C = [[[ex.total(ex.mul(flrw.g_inv[nu][mu], rho_log[mu]) for mu in range(n))]] for nu in range(n)]
    V = [[ex.neg(nh.box_potential(flrw))]]
    Q = nh.half_density_conjugate(nh.NHOperatorSpec(flrw, 1, tuple(C), tuple(tuple(r) for r in V)), 0.25)
    fV = ex.compile_exprs([Q.V[0][0]])
    for t in (-0.5, 0.0, 0.7):
        x = (t, 0.1, 0.2, 0.3)
        assert np.allclose(Q.C_at(x), 0.0, atol=1e-12)
        assert abs(fV(x)[0]) <= 1e-12


def test_conjugation_rejects_other_powers(mink):
    with pytest.raises(ValueError):
        nh.half_density_conjugate(nh.make_spec(mink), 0.3)


def test_make_spec_shape_errors(mink):
    with pytest.raises(ValueError):
        nh.make_spec(mink, C=[[["1"]]] * 3)
    with pytest.raises(ValueError):
        nh.make_spec(mink, C=[[["1", "0"]]] * 4)


# ---------------------------------------------------------------- properties

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from(["minkowski", "flrw"]))
def test_psub_identity_random(seed, kind):
    rng = np.random.default_rng(seed)
    M = geo.minkowski() if kind == "minkowski" else geo.flrw()
    P = nh.make_spec(M, C=orc.random_first_order(rng, 4, int(rng.integers(1, 4))))
    x = rng.uniform(-0.5, 0.5, size=4)
    assert nh.verify_psub_identity(P, x, rng.normal(size=4) * 3) <= 1e-9


@settings(max_examples=20, deadline=None)
@given(seeds, st.sampled_from(["minkowski", "flrw"]))
def test_reconstruction_exact(seed, kind):
    rng = np.random.default_rng(seed)
    M = geo.minkowski() if kind == "minkowski" else geo.flrw()
    P = nh.make_spec(M, C=orc.random_first_order(rng, 4, int(rng.integers(1, 3))))
    C2 = nh.reconstruct_first_order(M, P.connection)
    f1 = ex.compile_exprs([e for m in P.C for row in m for e in row])
    f2 = ex.compile_exprs([e for m in C2 for row in m for e in row])
    x = tuple(rng.uniform(-0.5, 0.5, size=4))
    a, b = np.array(f1(x)), np.array(f2(x))
    assert np.abs(a - b).max() <= 1e-12 * (1 + np.abs(a).max())
