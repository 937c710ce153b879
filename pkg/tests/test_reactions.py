import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontlab.reactions import (extract_constants, make_arrhenius, make_ignition,
                                make_kpp_logistic, make_reaction)


def test_logistic_values():
    f = make_kpp_logistic()
    assert f(0.5) == 0.25
    assert f(0.0) == 0.0 and f(1.0) == 0.0
    T = np.linspace(1e-6, 1, 1001)
    assert np.all(f(T) / T <= 1.0 + 1e-15)       # f'(0) = 1 bounds f / T
    assert f.Lf == 1.0


def test_ignition_values():
    f = make_ignition(0.4)
    assert f(0.2) == 0.0
    assert f(1.0) == 0.0
    assert f(0.7) > 0
    assert np.all(f(np.linspace(0, 0.4, 50)) == 0.0)


def test_ignition_ramp_is_continuous():
    f = make_ignition(0.3, eps=0.05)
    T = np.linspace(0.29, 0.36, 7001)
    # Lipschitz: slope at most 1.5 (1 - theta0) / eps
    assert np.abs(np.diff(f(T))).max() <= 1.5 * 0.7 / 0.05 * (T[1] - T[0]) * 1.01


def test_arrhenius_values():
    f = make_arrhenius(5.0)
    assert f(0.5) == pytest.approx(0.5 * math.exp(-10.0), rel=1e-14)
    assert f(0.0) == 0.0 and f(1.0) == 0.0


def test_values_clamped_outside_unit_interval():
    for f in (make_kpp_logistic(), make_ignition(0.25), make_arrhenius(2.0)):
        assert np.all(f(np.array([-1e-10, -1.0, 1 + 1e-10, 2.0])) == 0.0)


def test_logistic_forced_zeta():
    f = make_kpp_logistic(0.25, 0.75, zeta=0.1)
    assert f.zeta == 0.1
    assert f.f0 == pytest.approx(0.99 * 0.15 * 0.85, rel=1e-14)
    assert f.f0 <= f(f.theta1 - f.zeta) and f.f0 <= f(f.theta4 + f.zeta)


def test_ignition_constants_by_dense_sampling():
    f = make_ignition(0.3, theta1=0.5, theta4=0.8)
    assert 0 < f.zeta <= 0.1
    lo, hi = f.theta1 - f.zeta, f.theta4 + f.zeta
    assert lo > 0.3                                   # inside the support
    dense = f(np.linspace(lo, hi, 200_001))
    assert f.f0 > 0 and dense.min() >= f.f0


def test_vanishing_reaction_is_rejected():
    with pytest.raises(ValueError, match="vanishes"):
        make_ignition(0.5, theta1=0.45, theta4=0.8)
    with pytest.raises(ValueError):
        extract_constants(lambda T: 0 * np.asarray(T), 0.25, 0.75)


def test_invalid_parameters_named():
    with pytest.raises(ValueError, match="theta0"):
        make_reaction("ignition", theta0=1.5)
    with pytest.raises(ValueError, match="unknown reaction"):
        make_reaction("stochastic")


def test_default_thresholds():
    f = make_ignition(0.2)
    assert f.theta1 == pytest.approx(0.4) and f.theta4 == pytest.approx(0.8)
    g = make_kpp_logistic()
    assert (g.theta1, g.theta4) == (0.25, 0.75)


@pytest.mark.parametrize("f", [make_kpp_logistic(), make_ignition(0.25), make_arrhenius(3.0)])
def test_constants_invariants(f):
    T = np.linspace(0, 1, 10_001)
    assert np.all(f(T) >= 0.0)
    assert 0 < f.theta1 - f.zeta and f.theta4 + f.zeta < 1 and f.theta1 < f.theta4
    assert f.f0 > 0
    assert np.all(f(np.linspace(f.theta1 - f.zeta, f.theta4 + f.zeta, 10_001)) >= f.f0)


@settings(max_examples=25, deadline=None)
@given(c=st.floats(0.01, 100.0))
def test_rescaling_scales_f0_exactly(c):
    f = make_kpp_logistic()
    g = f.scaled(c)
    assert g.zeta == f.zeta
    assert g.f0 == pytest.approx(c * f.f0, rel=1e-13)
    assert g(0.3) == pytest.approx(c * f(0.3), rel=1e-14)
