import numpy as np
import pytest

from polprop import geometry as geo
from polprop import nhop as nh
from polprop import oracles as orc
from polprop import polsets as ps
from polprop import proca as pr
from polprop.geometry import PhasePoint

K = np.array([1.0, 0, 0, 1])


@pytest.fixture(scope="module")
def ctx_m():
    return pr.ProcaContext(geo.minkowski(), 1.0)


@pytest.fixture(scope="module")
def ctx_f():
    return pr.ProcaContext(geo.flrw(), 1.3)


def test_context_validation():
    with pytest.raises(ValueError):
        pr.ProcaContext(geo.minkowski(), 0.0)
    with pytest.raises(ValueError):
        pr.ProcaContext(geo.minkowski(3), 1.0)


def test_ricci_minkowski(ctx_m):
    assert not np.any(pr.ricci_at(ctx_m.model, np.zeros(4)))


def test_ricci_flrw_against_conformal_formula(ctx_f):
    x = np.array([0.3, 0.1, -0.2, 0.4])
    g, gi = geo.metric_at(ctx_f.model, x)
    mtw = orc.flrw_exp_ricci_mtw(1.0, x)
    # mixed R_mu^nu = g^{nu l} R_{mu l}; this package stores minus the MTW sign
    assert np.allclose(pr.ricci_at(ctx_f.model, x), -(mtw @ gi), atol=1e-12)


def test_kg1_connection_is_levi_civita(ctx_f):
    x = np.array([0.2, 0.3, -0.1, 0.5])
    assert np.allclose(ctx_f.kg1.connection.at(x), pr.levi_civita_forms(ctx_f.model).at(x), atol=1e-14)


def test_kg1_psub_identity(ctx_f):
    assert nh.verify_psub_identity(ctx_f.kg1, np.array([0.2, 0, 0, 0]), [1.0, 0.3, 0.2, 0.4]) <= 1e-9


def test_r_symbol_example(ctx_m):
    v = np.array([1.0, 0, 0, 0])  # dt
    assert np.allclose(pr.r_symbol(ctx_m, np.zeros(4), K) @ v, -K)


def test_predicted_fibre_diagonal(ctx_m):
    rp = ps.in_R(ctx_m.model, PhasePoint(np.zeros(4), K), PhasePoint(np.zeros(4), -K))
    f = pr.predicted_proca_fibre(ctx_m, rp)
    assert ps.membership(f, np.outer(K, [1, 0, 0, -1]))[1] <= 1e-15
    assert max(pr.constraint_residuals(ctx_m, rp, f.basis)) == 0.0


def test_z_from_v_examples():
    assert np.array_equal(pr.z_from_v([0, 0, 1], 1, [1, 0, 0]), [0, 1, 0, 0])
    z = pr.z_from_v([0, 0, 2], -1, [0, 0, 3])
    k = np.array([-2.0, 0, 0, 2])
    assert z[0] == 6.0 and k @ np.diag([1, -1, -1, -1]) @ z == 0.0
    with pytest.raises(ValueError):
        pr.z_from_v([0, 0, 0], 1, [1, 0, 0])
    with pytest.raises(ValueError):
        pr.z_from_v([0, 0, 1], 2, [1, 0, 0])


def test_z_round_trip(rng):
    for _ in range(100):
        kv = rng.normal(size=3)
        s = int(rng.choice([-1, 1]))
        v = rng.normal(size=3)
        assert np.allclose(pr.v_from_z(kv, s, pr.z_from_v(kv, s, v)), v, atol=1e-10)


@pytest.mark.parametrize("which", ["ctx_m", "ctx_f"])
def test_chain_and_claims(which, request, rng):
    ctx = request.getfixturevalue(which)
    for _ in range(3):
        p, pp, _ = orc.related_pair(ctx.model, rng, (-3.0, 3.0))
        rp = ps.in_R(ctx.model, p, pp.flipped())
        assert rp.verdict == "in"
        fib = pr.predicted_proca_fibre(ctx, rp)
        assert max(pr.constraint_residuals(ctx, rp, fib.basis)) <= 1e-12
        assert pr.chain_distance(ctx, rp) <= 1e-6
        # Levi-Civita transport carries k' onto k
        Pi = ps.propagator(ctx.kg1.connection, rp).matrix
        assert np.allclose(Pi @ rp.pp.k, rp.p.k, atol=1e-8)
        assert pr.proca_wf_claim(ctx, rp)["nonzero"]
        assert not pr.proca_wf_claim(ctx, rp, negative_control=True)["nonzero"]


def test_predicted_fibre_needs_relation(ctx_m):
    k = np.array([1.0, 0, 0, 0])
    rp = ps.in_R(ctx_m.model, PhasePoint(np.zeros(4), k), PhasePoint(np.zeros(4), -k))
    with pytest.raises(ValueError):
        pr.predicted_proca_fibre(ctx_m, rp)
