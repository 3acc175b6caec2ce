import math

import numpy as np
import pytest

from polprop import exprs as ex
from polprop import ode


def test_exponential_decay():
    res = ode.integrate(lambda t, y: -y, 0.0, np.array([1.0]), 3.0, atol=1e-12)
    assert res.status == "done"
    assert res.y[-1, 0] == pytest.approx(math.exp(-3.0), abs=1e-11)


def test_backwards_and_t_eval():
    res = ode.integrate(lambda t, y: np.array([math.cos(t)]), 0.0, np.array([0.0]), -2.0, t_eval=[-0.5, -1.5])
    for t in (-0.5, -1.5, -2.0):
        assert t in res.t
        i = list(res.t).index(t)
        assert res.y[i, 0] == pytest.approx(math.sin(t), abs=1e-9)


def test_complex_state():
    res = ode.integrate(lambda t, y: 1j * y, 0.0, np.array([1.0 + 0j]), math.pi, atol=1e-12)
    assert res.y[-1, 0] == pytest.approx(-1.0, abs=1e-10)


def test_leaves_domain():
    res = ode.integrate(lambda t, y: np.array([1.0]), 0.0, np.array([0.0]), 5.0, valid=lambda y: y[0] < 2.0)
    assert res.status == "left-domain"
    assert res.y[-1, 0] == pytest.approx(2.0, abs=1e-9)


def test_domain_error_in_rhs_stops_cleanly():
    def f(t, y):
        if y[0] >= 1.0:
            raise ex.DomainError("pole")
        return np.array([1.0])

    res = ode.integrate(f, 0.0, np.array([0.0]), 3.0)
    assert res.status == "left-domain"


def test_step_collapse():
    with pytest.raises(ode.StepCollapseError):
        ode.integrate(lambda t, y: y**2, 0.0, np.array([1.0]), 2.0, h_min=1e-6)


def test_extrapolated_step_is_fifth_order():
    f = lambda t, y: np.array([y[0]])  # noqa: E731
    errs = []
    for h in (0.2, 0.1):
        y, _ = ode.extrapolated_step(f, 0.0, np.array([1.0]), h)
        errs.append(abs(y[0] - math.exp(h)))
    assert errs[0] / errs[1] > 40  # local error O(h^6)
