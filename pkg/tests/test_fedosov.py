import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_torus, random_trig
from fedtrace.fedosov import (
    FedosovConnection,
    FedosovError,
    b3_term,
    c2_closed_form,
    c3_antisymmetric_closed_form,
    c3_closed_form,
    c3_hypotheses,
    lie_identity_check,
    poisson,
)
from fedtrace.geometry import build_flat, build_s2, r_bar
from fedtrace.invariants import solve_moment
from fedtrace.weyl import WeylSection, delta_inv, eval_y0, nu_divide, supercommutator

seeds = st.integers(min_value=0, max_value=10_000)


def random_section(ring, rng, N, D, nterms=3, forms=(0, 1)):
    terms = {}
    for _ in range(nterms):
        key = (rng.randint(0, 1), (rng.randint(0, 2), rng.randint(0, 2)),
               tuple(sorted(rng.sample(range(2), rng.choice(forms)))))
        terms[key] = random_trig(ring, rng, nterms=1) if hasattr(ring, "cos") else ring.random_element(rng)
    return WeylSection(ring, 2, terms, N, D)


@pytest.fixture(scope="module")
def torus_fc():
    g, _ = random_torus(21)
    return FedosovConnection(g, 3)


def test_r_solves_the_fedosov_equation(torus_fc):
    fc = torus_fc
    assert not fc.abelian_residual()
    assert not fc.weyl_curvature_residual()
    assert not delta_inv(fc.r)
    assert fc.r.min_degree() >= 3


@settings(max_examples=5, deadline=None)
@given(seeds)
def test_partial_squared_is_curvature_bracket(seed):
    g, rng = random_torus(seed)
    fc = FedosovConnection(g, 2)
    N, D = fc.N, fc.D
    a = random_section(g.ring, rng, N, D, forms=(0,))
    lhs = fc.partial(fc.partial(a))
    rhs = fc._bracket(r_bar(g, N + 1, D + 2), a.with_caps(N + 1, D + 2))
    assert lhs == rhs


@settings(max_examples=5, deadline=None)
@given(seeds)
def test_D_squared_vanishes(seed):
    g, rng = random_torus(seed)
    fc = FedosovConnection(g, 2)
    a = random_section(g.ring, rng, fc.N, fc.D, forms=(0,))
    # each application of D can lose the top Weyl degree
    assert not fc.apply_D(fc.apply_D(a)).truncate(D=fc.D - 2)


@settings(max_examples=5, deadline=None)
@given(seeds)
def test_quantization_is_flat_and_symbol_preserving(seed):
    g, rng = random_torus(seed)
    fc = FedosovConnection(g, 2)
    f = random_trig(g.ring, rng)
    Qf = fc.quantize(f)
    assert eval_y0(Qf) == [f, g.ring.zero(), g.ring.zero()]
    assert not fc.apply_D(Qf).truncate(D=fc.D - 1)


@settings(max_examples=5, deadline=None)
@given(seeds)
def test_low_order_coefficients(seed):
    g, rng = random_torus(seed)
    fc = FedosovConnection(g, 2)
    f, h = random_trig(g.ring, rng), random_trig(g.ring, rng)
    fh, hf = fc.star(f, h), fc.star(h, f)
    assert fh[0] == f * h
    assert fh[1] - hf[1] == poisson(g, f, h)
    assert fh[2] == c2_closed_form(g, f, h)
    assert fc.star(g.ring.one(), f) == [f, g.ring.zero(), g.ring.zero()]


def test_third_order_antisymmetric_part(torus_fc):
    fc = torus_fc
    g = fc.geometry
    rng = random.Random(4)
    for _ in range(2):
        f, h = random_trig(g.ring, rng), random_trig(g.ring, rng)
        fh, hf = fc.star(f, h), fc.star(h, f)
        assert fh[3] - hf[3] == c3_antisymmetric_closed_form(g, f, h)


def test_third_order_symmetric_part_carries_twice_the_alpha_term(torus_fc):
    # recorded finding: the recursion's symmetric nu^3 part equals the
    # alpha_1-dependent term evaluated twice
    fc = torus_fc
    g = fc.geometry
    rng = random.Random(9)
    f, h = random_trig(g.ring, rng), random_trig(g.ring, rng)
    fh, hf = fc.star(f, h), fc.star(h, f)
    sym = (fh[3] + hf[3]).scale(Fraction(1, 2))
    assert sym == b3_term(g, f, h).scale(2)
    assert b3_term(g, f, h)  # the discrepancy with the displayed formula is real
    assert fh[3] != c3_closed_form(g, f, h)
    hyp = c3_hypotheses(g, f, h, fh[3])
    assert hyp == {"verbatim": False, "nu->2nu, Omega->2Omega": False,
                   "nu->nu/2, Omega->Omega/2": False, "alpha_1 term doubled": True}


def test_constant_alpha_gives_rescaled_moyal():
    # Omega = nu c omega on flat space: Moyal for (1 - nu c) omega
    c = Fraction(1, 3)
    g = build_flat(1, [{(0, 1): c}])
    fc = FedosovConnection(g, 3)
    R = g.ring
    x, y = R.coordinate(0), R.coordinate(1)
    f, h = x * x, y * y
    # f *_0 h = x^2 y^2 - 2 nu xy + nu^2/2 for Lambda^{01} = -1
    base = [x * x * y * y, (x * y).scale(-2), R.const(Fraction(1, 2))]
    fh = fc.star(f, h)
    assert fh[1] == base[1]
    assert fh[2] == base[2] + base[1].scale(c)
    assert fh[3] == base[2].scale(2 * c) + base[1].scale(c * c)


def test_cap_convergence(torus_fc):
    fc = torus_fc
    g = fc.geometry
    wider = FedosovConnection(g, fc.N, fc.D + 2)
    rng = random.Random(2)
    f, h = random_trig(g.ring, rng), random_trig(g.ring, rng)
    assert fc.star(f, h) == wider.star(f, h)


def test_d_inverse_solves_D():
    g, rng = random_torus(5)
    fc = FedosovConnection(g, 2)
    f = random_trig(g.ring, rng)
    # b = D f is D-closed; build it with a wider cap so truncation loses nothing
    big = FedosovConnection(g, fc.N, fc.D + 2)
    b = big.apply_D(big.lift(f)).with_caps(fc.N, fc.D)
    a = fc.d_inverse(b)
    assert not eval_y0(a)[0]
    assert not (fc.apply_D(a) - b).truncate(D=fc.D - 2)
    # uniqueness: the solution is f - Q f
    assert not (a - fc.lift(f) + fc.quantize(f)).truncate(D=fc.D - 1)
    with pytest.raises(FedosovError):
        fc.d_inverse(fc.lift(f).with_caps(fc.N, fc.D) + random_section(g.ring, rng, fc.N, fc.D, forms=(1,)))


@pytest.mark.parametrize("k", [0, Fraction(1, 2)])
def test_lie_identity_and_its_negative_control(k):
    g = build_s2(k=k)
    N, D = 1, 2
    fc = FedosovConnection(g, N + 1, D + 2)
    qm = solve_moment(g, mode="none")
    rng = random.Random(1)
    a = random_section(g.ring, rng, N, D, nterms=3, forms=(0, 1, 2))
    assert not lie_identity_check(fc, g.rotation, qm.mu, a)
    wrong = [m.scale(-1) for m in qm.mu]
    assert lie_identity_check(fc, g.rotation, wrong, a)


def test_commutator_lifts_poisson_bracket():
    g = build_flat(1)
    R = g.ring
    fc = FedosovConnection(g, 2)
    x, y = R.coordinate(0), R.coordinate(1)
    a, b = fc.quantize(x), fc.quantize(y)
    br = nu_divide(supercommutator(a.with_caps(3, 6), b.with_caps(3, 6), g.metric))
    assert eval_y0(br.with_caps(2, 4))[0] == poisson(g, x, y)
