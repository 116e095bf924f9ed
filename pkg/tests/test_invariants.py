from fractions import Fraction

import pytest

from conftest import PROFILE_FAMILY
from fedtrace.coeffring import TrigRing
from fedtrace.fedosov import hamiltonian_field
from fedtrace.geometry import build_s2, build_torus
from fedtrace.invariants import (
    MomentError,
    QuantumMomentMap,
    check_moment_equation,
    futaki_c1p,
    invariant_leading,
    kahler_invariant,
    kahler_moment,
    normalization_bridge,
    normalize,
    solve_moment,
)
from fedtrace.scalar import Scalar
from fedtrace.trace import integrate_model

RING = TrigRing(2)


@pytest.mark.parametrize("k", [0, Fraction(1, 2), 1])
def test_moment_equation_on_sphere(k):
    g = build_s2(PROFILE_FAMILY[1], k)
    qm = solve_moment(g, mode="paper_c")
    assert check_moment_equation(qm, g)
    assert qm.mu[0] == -g.ring.z()


def test_moment_equation_detects_wrong_sign():
    g = build_s2(k=1)
    qm = solve_moment(g, mode="none")
    bad = QuantumMomentMap(qm.X, [m.scale(-1) for m in qm.mu])
    assert not check_moment_equation(bad, g)


def test_normalizations():
    g = build_s2(PROFILE_FAMILY[2], 1)
    qm = solve_moment(g, mode="none")
    shifted = QuantumMomentMap(qm.X, [m + g.ring.const(3) for m in qm.mu])
    integral = normalize(shifted, g, "integral")
    for m in integral.mu:
        assert not integrate_model(g, m)
    with pytest.raises(ValueError):
        normalize(shifted, g, "median")


def test_sphere_rejects_non_rotation_fields():
    g = build_s2()
    with pytest.raises(MomentError):
        solve_moment(g, [g.ring.one(), g.ring.zero()])


def test_torus_translation_has_no_moment_map():
    g = build_torus(1, {}, [], RING)
    with pytest.raises(MomentError, match="period class"):
        solve_moment(g, [RING.one(), RING.zero()])


def test_torus_hamiltonian_field_has_moment_map():
    g = build_torus(1, {}, [], RING)
    h = RING.sin((1, 1))
    qm = solve_moment(g, hamiltonian_field(g, h), mode="paper_c", order=1)
    assert check_moment_equation(qm, g)
    # h has mean zero, so it is already normalized
    assert qm.mu[0] == h


@pytest.mark.parametrize("phi", PROFILE_FAMILY)
def test_leading_invariant_vanishes(phi):
    g = build_s2(phi)
    rep = invariant_leading(g, solve_moment(g, mode="paper_c"))
    assert rep.values[1] == Scalar()
    assert rep.unknown_from == 2
    with pytest.raises(MomentError):
        invariant_leading(g, solve_moment(g, mode="integral"))


@pytest.mark.parametrize("k", [0, Fraction(1, 2), 1])
def test_kahler_invariant_routes_agree(k):
    for phi in PROFILE_FAMILY[:2]:
        ki = kahler_invariant(build_s2(phi, k))
        assert ki.agree


def test_futaki_is_metric_independent_only_for_moment_maps():
    moment_values, other_values = set(), set()
    for phi in PROFILE_FAMILY:
        g = build_s2(phi, 1)
        z = g.ring.z()
        f = kahler_moment(g, 1).mu[0]
        moment_values.add((futaki_c1p(g, f, 1), futaki_c1p(g, f, 2)))
        other_values.add(futaki_c1p(g, z * z, 2))
    assert len(moment_values) == 1
    assert len(other_values) > 1


def test_normalization_bridge_is_constant():
    values = {tuple(normalization_bridge(build_s2(phi, 1))) for phi in PROFILE_FAMILY}
    assert len(values) == 1
