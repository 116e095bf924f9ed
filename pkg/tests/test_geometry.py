from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import PROFILE_FAMILY, random_torus
from fedtrace.coeffring import TrigRing
from fedtrace.geometry import (
    GeometryError,
    admissible_profile,
    build_flat,
    build_s2,
    build_torus,
    cahen_gutt_momentum,
    gamma_bar,
    load_model,
    r_bar,
    validate,
)
from fedtrace.weyl import d_exterior, fiber_product, nu_divide

seeds = st.integers(min_value=0, max_value=10_000)


def test_flat_is_flat():
    g = build_flat(1)
    n = g.n
    assert all(not g.riemann[a][b][c][d] for a in range(n) for b in range(n) for c in range(n) for d in range(n))
    assert not cahen_gutt_momentum(g)


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_torus_curvature_symmetries(seed):
    g, _ = random_torus(seed)
    R, ric = g.riemann, g.ricci
    n = g.n
    for r in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    assert R[r][j][k][l] == -R[r][j][l][k]
                    # first Bianchi identity
                    assert not (R[r][j][k][l] + R[r][k][l][j] + R[r][l][j][k])
    for a in range(n):
        for b in range(n):
            assert ric[a][b] == ric[b][a]


@settings(max_examples=6, deadline=None)
@given(seeds)
def test_rbar_is_weyl_valued_curvature(seed):
    # Rbar = d Gbar + (1/nu) Gbar o Gbar
    g, _ = random_torus(seed)
    N, D = 2, 4
    G = gamma_bar(g, N + 1, D + 2)
    lhs = d_exterior(G) + nu_divide(fiber_product(G, G, g.metric))
    assert lhs.with_caps(N, D) == r_bar(g, N, D)


def test_broken_gamma_symmetry_rejected():
    g = build_torus(1)
    ring = g.ring
    G = [[[c for c in row] for row in plane] for plane in g.christoffel]
    G[0][0][1] = ring.cos((1, 0))
    assert not validate(g.with_christoffel(G)).ok


def test_non_symplectic_connection_rejected():
    g = build_torus(1)
    ring = g.ring
    G = [[[c for c in row] for row in plane] for plane in g.christoffel]
    # torsion-free but omega_il Gamma^l_jk not totally symmetric
    G[0][0][1] = G[0][1][0] = ring.cos((1, 0))
    rep = validate(g.with_christoffel(G))
    assert not rep.ok and "symmetric" in rep.failures[0]


def test_non_closed_alpha_rejected():
    ring = TrigRing(4)
    with pytest.raises(GeometryError, match="closed"):
        build_torus(2, {}, [{(0, 1): ring.cos((0, 0, 1, 0))}], ring)


def test_round_sphere_anchors():
    g = build_s2()
    S = g.scalar_curvature()
    assert S == g.ring.const(2)
    mu = cahen_gutt_momentum(g)
    values = {mu.evaluate_exact(Fraction(p, 7)) for p in range(-6, 7, 2)}
    assert len(values) == 1


@pytest.mark.parametrize("phi", PROFILE_FAMILY)
def test_s2_scalar_curvature_and_ricci_form(phi):
    g = build_s2(phi)
    S = g.scalar_curvature()
    assert S == -g.phi.derivative(0).derivative(0)
    rho = g.ricci_form()
    assert rho[0][1] == S.scale(Fraction(1, 2))
    assert rho[0][1] == -rho[1][0]
    # positive Laplacian of z
    assert g.laplacian(g.ring.z()) == -g.phi.derivative(0)


def test_inadmissible_profiles_rejected():
    with pytest.raises(GeometryError):
        build_s2((1, 0, -2))
    with pytest.raises(GeometryError):
        build_s2(admissible_profile(-2, 0))


def test_load_model_roundtrip():
    desc = {"model": "torus", "perturbation": {"0,0,1": [{"freq": [1, 0], "cos": "1/2"}]},
            "Omega": [{"0,1": "1/3"}]}
    g = load_model(desc)
    assert g.model == "torus"
    assert g.alpha(1)[0][1] == g.ring.const(Fraction(1, 3))
    with pytest.raises(GeometryError):
        load_model({"model": "cone"})


def test_random_torus_fixture_is_perturbed():
    g, _ = random_torus(7)
    assert any(c for plane in g.christoffel for row in plane for c in row)
    assert g.alpha(1)[0][1] and g.alpha(2)[0][1]
