import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polprop import exprs as ex
from polprop import oracles as orc
from polprop import symbols as sy
from polprop import verify


def scalar(dim, order, coeffs):
    """Scalar symbol from ``{alpha: (re, im)}`` strings."""
    return sy.PolySymbol(
        dim, 1, order, {a: (((ex.parse(re), ex.parse(im)),),) for a, (re, im) in coeffs.items()}
    )


def test_vector_field_symbol():
    # d_0 + x1 d_1 -> i(xi_0 + x1 xi_1)
    a = sy.symbol_from_real(2, 1, 1, {(1, 0): [["1"]], (0, 1): [["x1"]]})
    val = a(np.array([0.0, 2.0]), np.array([0.5, 3.0]))
    assert val[0, 0] == pytest.approx(1j * (0.5 + 2.0 * 3.0))
    assert sy.principal(a).coeffs == a.coeffs


def test_zero_operator():
    z = sy.PolySymbol(2, 2, 1, {})
    assert not np.any(z(np.zeros(2), np.ones(2)))
    assert sy.principal(z).coeffs == {}


def test_refined_example():
    a = sy.symbol_from_real(2, 1, 1, {(0, 1): [["x1"]]})  # x1 d_1 -> i x1 xi_1
    sub = sy.subprincipal(a)
    assert sub(np.array([0.3, 0.7]), np.array([1.0, 2.0]))[0, 0] == pytest.approx(-0.5)
    # in the xi picture the operator x1 xi_1 (without i) has refined symbol x1 xi_1 + i/2
    b = scalar(2, 1, {(0, 1): ("0", "-x1")})  # x1 xi_1 = -i x1 zeta_1
    assert sy.subprincipal(b)(np.zeros(2), np.ones(2))[0, 0] == pytest.approx(0.5j)


def test_constant_coefficient_refined():
    a = sy.symbol_from_real(3, 2, 2, {(2, 0, 0): [["1", "2"], ["0", "1"]], (0, 1, 0): [["3", "0"], ["0", "1"]]})
    r = sy.refined_principal(a)
    xi = np.array([0.2, -0.4, 1.1])
    assert np.allclose(r(np.zeros(3), xi), a(np.zeros(3), xi))


def test_compose_examples():
    a = sy.symbol_from_real(2, 1, 1, {(1, 0): [["1"]]})
    b = sy.symbol_from_real(2, 1, 1, {(0, 1): [["1"]]})
    c = sy.compose(a, b)
    assert set(c.coeffs) == {(1, 1)}
    xi = np.array([0.7, -1.3])
    assert c(np.zeros(2), xi)[0, 0] == pytest.approx(-xi[0] * xi[1])
    b2 = sy.symbol_from_real(2, 1, 1, {(0, 1): [["x0"]]})
    c2 = sy.compose(a, b2)
    x = np.array([0.4, 0.0])
    assert c2(x, xi)[0, 0] == pytest.approx(-0.4 * xi[0] * xi[1] + 1j * xi[1])


def test_compose_with_identity(rng):
    a = orc.random_symbol(rng, 3, 2, 2)
    c = sy.compose(a, sy.identity_symbol(3, 2))
    x = rng.uniform(-1, 1, size=3)
    assert orc.table_difference(c.coeff_values(x), a.coeff_values(x)) == 0.0


def test_compose_drop_below(rng):
    a = orc.random_symbol(rng, 2, 1, 2, p_skip=0.0)
    c = sy.compose(a, a, drop_below=3)
    assert min(c.degrees()) >= 3


def test_rank_mismatch():
    with pytest.raises(sy.RankMismatchError):
        sy.compose(sy.identity_symbol(2, 1), sy.identity_symbol(2, 2))


def test_dual_examples():
    a = sy.symbol_from_real(2, 1, 1, {(1, 0): [["1"]]})
    d = sy.dual_symbol(a)
    assert d(np.zeros(2), np.array([1.0, 0.0]))[0, 0] == pytest.approx(-1j)
    m = sy.matrix_symbol([["x0", "1"], ["2", "3"]], 2)
    dm = sy.dual_symbol(m)
    assert np.allclose(dm(np.array([5.0, 0]), np.zeros(2)), [[5, 2], [1, 3]])
    box = sy.symbol_from_real(2, 1, 2, {(2, 0): [["1"]], (0, 2): [["-1"]]})
    assert sy.dual_symbol(box).coeffs == box.coeffs


def test_frame_change_identity_is_trivial(rng):
    a, _, gamma = verify.random_frame_case(rng)
    eye = np.eye(a.rank).tolist()
    a2, rep = sy.frame_change_refined(a, eye, gamma, sy.sample_points(a.dim, 20))
    assert rep.max_residual == 0.0 or rep.max_residual < 1e-15
    x = rng.uniform(-0.5, 0.5, size=a.dim)
    assert orc.table_difference(a2.coeff_values(x), a.coeff_values(x)) < 1e-14


def test_frame_change_rejects_non_scalar_principal():
    a = sy.symbol_from_real(2, 2, 1, {(1, 0): [["1", "0"], ["0", "2"]]})
    with pytest.raises(sy.NonScalarPrincipalError):
        sy.frame_change_refined(a, np.eye(2).tolist())


def test_frame_change_singular():
    a = sy.symbol_from_real(2, 2, 1, {(1, 0): [["1", "0"], ["0", "1"]]})
    with pytest.raises(sy.SingularFrameError):
        sy.frame_change_refined(a, [["x0", "0"], ["0", "1"]], points=[(np.zeros(2), np.ones(2))])


def test_frame_covariance_random():
    assert verify.acceptance_frame(changes=5).passed


# ---------------------------------------------------------------- properties

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_compose_matches_operator_expansion(seed):
    rng = np.random.default_rng(seed)
    dim, r = int(rng.integers(1, 5)), int(rng.integers(1, 4))
    a = orc.random_symbol(rng, dim, r, int(rng.integers(0, 3)))
    b = orc.random_symbol(rng, dim, r, int(rng.integers(0, 3)))
    x = rng.uniform(-1, 1, size=dim)
    want = orc.coefficient_table_values(orc.operator_compose(a, b), x)
    assert orc.table_difference(sy.compose(a, b).coeff_values(x), want) <= 1e-10


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_compose_associative(seed):
    rng = np.random.default_rng(seed)
    dim, r = int(rng.integers(1, 4)), int(rng.integers(1, 3))
    a, b, c = (orc.random_symbol(rng, dim, r, int(rng.integers(0, 3))) for _ in range(3))
    x = rng.uniform(-1, 1, size=dim)
    left = sy.compose(sy.compose(a, b), c).coeff_values(x)
    right = sy.compose(a, sy.compose(b, c)).coeff_values(x)
    assert orc.table_difference(left, right) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_dual_involution(seed):
    rng = np.random.default_rng(seed)
    a = orc.random_symbol(rng, 3, int(rng.integers(1, 4)), int(rng.integers(0, 3)))
    assert sy.dual_symbol(sy.dual_symbol(a)).coeffs == a.coeffs


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_dual_reverses_composition_at_top_degree(seed):
    # the sign-flip dual is the transpose up to terms with derivatives of coefficients
    rng = np.random.default_rng(seed)
    dim, r = int(rng.integers(1, 4)), int(rng.integers(1, 3))
    a = orc.random_symbol(rng, dim, r, int(rng.integers(0, 3)))
    b = orc.random_symbol(rng, dim, r, int(rng.integers(0, 3)))
    x = rng.uniform(-1, 1, size=dim)
    lhs = sy.principal(sy.dual_symbol(sy.compose(a, b))).coeff_values(x)
    rhs = sy.principal(sy.compose(sy.dual_symbol(b), sy.dual_symbol(a))).coeff_values(x)
    assert orc.table_difference(lhs, rhs) <= 1e-10


def test_refined_symbol_of_composition():
    assert verify.inv_refined_composition(n=10).passed
