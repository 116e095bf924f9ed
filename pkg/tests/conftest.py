import random
from fractions import Fraction

import pytest

from fedtrace.coeffring import RATIONAL_POOL, TrigRing
from fedtrace.geometry import admissible_profile, build_torus

# profiles used by the S^2 family checks: round plus admissible deformations
PROFILE_FAMILY = [
    admissible_profile(0, 0),
    admissible_profile(Fraction(1, 5), 0),
    admissible_profile(0, Fraction(1, 4)),
    admissible_profile(Fraction(1, 6), Fraction(1, 7)),
]


def small(rng):
    return rng.choice(RATIONAL_POOL) * Fraction(1, rng.randint(2, 6))


def random_trig(ring, rng, max_freq=1, nterms=2, constant=True):
    f = ring.const(small(rng)) if constant else ring.zero()
    for _ in range(nterms):
        freq = (rng.randint(-max_freq, max_freq), rng.randint(-max_freq, max_freq))
        if not any(freq):
            continue
        if rng.random() < 0.5:
            f = f + ring.cos(freq, small(rng))
        else:
            f = f + ring.sin(freq, small(rng))
    return f


def random_torus(seed, with_alpha=True):
    """Perturbed torus T^2 with nonzero alpha_1, alpha_2."""
    rng = random.Random(seed)
    ring = TrigRing(2)
    T = {}
    for idx in rng.sample([(0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1)], 2):
        T[idx] = random_trig(ring, rng, nterms=1, constant=False) or ring.cos((1, 0), Fraction(1, 3))
    Omega = []
    if with_alpha:
        for _ in range(2):
            a = random_trig(ring, rng, nterms=1)
            Omega.append({(0, 1): a or ring.const(Fraction(1, 3))})
    return build_torus(1, T, Omega, ring), rng


@pytest.fixture
def torus():
    g, _ = random_torus(11)
    return g


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
