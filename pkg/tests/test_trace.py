import itertools
import random
from fractions import Fraction

import pytest

from conftest import random_torus, random_trig
from fedtrace.coeffring import TrigRing
from fedtrace.fedosov import FedosovConnection
from fedtrace.geometry import build_flat, build_s2, build_torus, cahen_gutt_momentum
from fedtrace.scalar import Scalar
from fedtrace.trace import (
    TorusPath,
    TraceError,
    trace,
    trace_density,
    variation_check,
    verify_trace_property,
)

RING = TrigRing(2)


def _path_data():
    T0 = {(0, 0, 0): RING.cos((1, 0), Fraction(1, 3)), (0, 1, 1): RING.cos((1, 1), Fraction(1, 5))}
    T1 = {(0, 0, 1): RING.sin((0, 1), Fraction(1, 2)), (1, 1, 1): RING.cos((1, 0), Fraction(1, 4))}
    Om0 = [{(0, 1): RING.cos((0, 1), Fraction(1, 2))}]
    beta = [[RING.sin((1, 1), Fraction(1, 3)), RING.cos((0, 1), Fraction(1, 2))],
            [RING.zero(), RING.cos((1, 0), Fraction(1, 2))]]
    F = RING.const(1)
    for a, b in itertools.product(range(-2, 3), repeat=2):
        F = F + RING.cos((a, b), Fraction(1, 2 + abs(a) + 2 * abs(b)))
        F = F + RING.sin((a, b), Fraction(1, 3 + abs(a) + abs(b)))
    return T0, T1, Om0, beta, F


def test_density_of_constant_alpha():
    c = Fraction(1, 3)
    g = build_torus(1, {}, [{(0, 1): RING.const(c)}], RING)
    d = trace_density(g)
    assert d.rho1 == RING.const(-c)
    assert not d.rho2


def test_density_without_omega_is_cahen_gutt():
    g, _ = random_torus(8, with_alpha=False)
    d = trace_density(g)
    assert not d.rho1
    assert d.rho2 == cahen_gutt_momentum(g).scale(Fraction(-1, 24))


def test_density_on_sphere():
    g = build_s2(k=1)
    d = trace_density(g)
    assert d.rho1 == g.scalar_curvature().scale(Fraction(-1, 2))


def test_trace_of_one_is_the_volume():
    g = build_torus(1, {}, [], RING)
    tr = trace(g, RING.one())
    assert tr[0] == Scalar.tau(1)
    assert not tr[1] and not tr[2]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_trace_property(seed):
    g, rng = random_torus(100 + seed)
    fc = FedosovConnection(g, 3)
    f, h = random_trig(g.ring, rng), random_trig(g.ring, rng)
    assert verify_trace_property(g, f, h, fc) == [Scalar(), Scalar(), Scalar()]


def test_trace_property_fails_for_wrong_density():
    g, rng = random_torus(3)
    fc = FedosovConnection(g, 3)
    d = trace_density(g)
    bad = type(d)(d.rho1.scale(-1), d.rho2, d.m)
    found = False
    for _ in range(4):
        f, h = random_trig(g.ring, rng), random_trig(g.ring, rng)
        found = found or any(verify_trace_property(g, f, h, fc, bad))
    assert found


def test_trace_property_needs_torus():
    g = build_flat(1)
    x = g.ring.coordinate(0)
    with pytest.raises(TraceError):
        verify_trace_property(g, x, x)


def test_variation_frozen_values():
    # hand check of the Omega-path value: -(1/2 pi) int F d(dbeta_1)/dt
    # with (d beta_1)_{01} = -cos(x + y)/3 and F's cos(x + y) weight 2/5
    T0, T1, Om0, beta, F = _path_data()
    res = variation_check(TorusPath(1, T0, {}, Om0, beta, RING), F, Fraction(1, 7), Fraction(1, 2))
    assert [str(v) for v in res.rhs] == ["0", "1/15·(2π)^1", "0"]
    res = variation_check(TorusPath(1, T0, T1, Om0, beta, RING), F, Fraction(1, 7), Fraction(1, 2))
    assert [str(v) for v in res.lhs] == ["0", "1/15·(2π)^1", "1/3024·(2π)^1"]
    assert res.lhs == res.rhs and res.converged()


def test_variation_is_linear_in_the_velocity():
    T0, T1, Om0, beta, F = _path_data()
    t0 = Fraction(1, 7)
    res = variation_check(TorusPath(1, T0, T1, Om0, beta, RING), F, t0, Fraction(1, 2))
    # same geometry at t0, twice the Gamma velocity
    T0b = dict(T0)
    for key, v in T1.items():
        T0b[key] = T0b.get(key, RING.zero()) - v.scale(t0)
    T1b = {key: v.scale(2) for key, v in T1.items()}
    res2 = variation_check(TorusPath(1, T0b, T1b, Om0, beta, RING), F, t0, Fraction(1, 2))
    assert res2.rhs[1] == res.rhs[1]
    assert res2.rhs[2] == res.rhs[2] * Scalar.rational(2) and res.rhs[2]
    assert res2.lhs == res2.rhs


def test_random_function_variation():
    rng = random.Random(3)
    T0, T1, Om0, beta, _ = _path_data()
    F = random_trig(RING, rng, max_freq=2, nterms=4)
    res = variation_check(TorusPath(1, T0, T1, Om0, beta, RING), F)
    assert res.precondition_ok and res.dinv_consistent
    assert all(e <= 1e-6 for e in res.rel_err)
