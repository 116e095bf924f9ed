"""Coefficient-function rings for chart computations.

Three concrete rings share one small duck-typed interface (``+``, ``-``,
``*``, ``scale``, ``derivative``, ``bool``, ``==``):

* :class:`JetRing` -- polynomial jets about a base point, truncated at a
  total degree.
* :class:`TrigRing` -- trigonometric polynomials on the flat torus T^n.
* :class:`ProfileRing` -- functions ``p(z, theta) / phi(z)**j`` on the toric
  chart of S^2, where ``phi`` is the profile of the metric.

All arithmetic is exact (FLINT rational multivariate polynomials).  Floating
point only appears in :func:`integrate_s2` and in ``evaluate``.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from functools import lru_cache

import flint
import numpy as np

from .scalar import Scalar, to_fmpq, to_fraction

fmpq = flint.fmpq

# small pool used by the seeded random generators
RATIONAL_POOL = tuple(
    Fraction(p, q) for p in (-3, -2, -1, 1, 2, 3) for q in (1, 2, 3)
)


class RingCapabilityError(ValueError):
    pass


class FunctionRing:
    """Base class: a commutative differential ring of chart functions."""

    n: int
    has_integral = False

    def zero(self):
        return self.const(0)

    def one(self):
        return self.const(1)

    def const(self, q):  # pragma: no cover - abstract
        raise NotImplementedError

    def check_index(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise RingCapabilityError(f"coordinate index {i} out of range for n={self.n}")


# ---------------------------------------------------------------------------
# jets


class JetRing(FunctionRing):
    """Polynomials in ``x - base_point`` truncated at total degree ``order``."""

    def __init__(self, n: int, order: int, base_point=None):
        self.n = n
        self.order = order
        self.base_point = tuple(to_fraction(b) for b in (base_point or (0,) * n))
        self.ctx = flint.fmpq_mpoly_ctx.get(tuple(f"x{i}" for i in range(n)), "deglex")

    def __repr__(self):
        return f"JetRing(n={self.n}, order={self.order})"

    def const(self, q):
        return JetPoly(self, self.ctx.constant(to_fmpq(q)), self.order)

    def coordinate(self, i: int):
        self.check_index(i)
        g = self.ctx.gens()[i] + to_fmpq(self.base_point[i])
        return JetPoly(self, g, self.order)

    def from_dict(self, coeffs: dict, order: int | None = None):
        poly = self.ctx.from_dict({tuple(k): to_fmpq(v) for k, v in coeffs.items()})
        return JetPoly(self, poly, self.order if order is None else order)

    def random_element(self, rng: random.Random, degree: int = 3, nterms: int = 4):
        coeffs = {}
        for _ in range(nterms):
            exp = [0] * self.n
            for _ in range(rng.randint(0, degree)):
                exp[rng.randrange(self.n)] += 1
            coeffs[tuple(exp)] = rng.choice(RATIONAL_POOL)
        return self.from_dict(coeffs)


class JetPoly:
    __slots__ = ("ring", "poly", "order")

    def __init__(self, ring: JetRing, poly, order: int):
        if poly.total_degree() > order:
            poly = ring.ctx.from_dict(
                {e: c for e, c in poly.to_dict().items() if sum(e) <= order}
            )
        self.ring = ring
        self.poly = poly
        self.order = order

    def _lift(self, other):
        if isinstance(other, JetPoly):
            return other
        return self.ring.const(other)

    def __add__(self, other):
        other = self._lift(other)
        return JetPoly(self.ring, self.poly + other.poly, min(self.order, other.order))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        return JetPoly(self.ring, self.poly - other.poly, min(self.order, other.order))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return JetPoly(self.ring, -self.poly, self.order)

    def __mul__(self, other):
        if isinstance(other, JetPoly):
            return JetPoly(self.ring, self.poly * other.poly, min(self.order, other.order))
        return self.scale(other)

    __rmul__ = __mul__

    def scale(self, q):
        return JetPoly(self.ring, self.poly * to_fmpq(q), self.order)

    def derivative(self, i: int):
        self.ring.check_index(i)
        return JetPoly(self.ring, self.poly.derivative(i), self.order - 1)

    def __bool__(self):
        return not self.poly.is_zero()

    def __eq__(self, other):
        if not isinstance(other, JetPoly):
            other = self._lift(other)
        return not bool(self - other)

    def evaluate(self, point) -> float:
        args = [to_fmpq(Fraction(p) - b) for p, b in zip(point, self.ring.base_point)]
        return float(self.poly(*args))

    def __repr__(self):
        return f"JetPoly({self.poly}, order={self.order})"


# ---------------------------------------------------------------------------
# trigonometric polynomials


class TrigRing(FunctionRing):
    """Trigonometric polynomials on T^n = (R / 2 pi Z)^n with exact coefficients.

    Internally an element is a Laurent polynomial in ``u_j = exp(i x_j)`` with
    Gaussian-rational coefficients, stored as real and imaginary FLINT
    polynomials together with a monomial shift.
    """

    has_integral = True

    def __init__(self, n: int):
        self.n = n
        self.ctx = flint.fmpq_mpoly_ctx.get(tuple(f"u{i}" for i in range(n)), "deglex")
        self._zero_shift = (0,) * n

    def __repr__(self):
        return f"TrigRing(n={self.n})"

    @lru_cache(maxsize=None)
    def monomial(self, exp: tuple):
        return self.ctx.term(exp_vec=exp)

    def const(self, q):
        return TrigPoly(self, self.ctx.constant(to_fmpq(q)), self.ctx.constant(0), self._zero_shift)

    def from_fourier(self, coeffs: dict):
        """Build sum_k c_k exp(i k.x) from ``{freq: c}``; c may be a rational
        or a ``(re, im)`` pair."""
        if not coeffs:
            return self.zero()
        shift = tuple(max(0, -min(k[j] for k in coeffs)) for j in range(self.n))
        re, im = {}, {}
        for k, c in coeffs.items():
            if len(k) != self.n:
                raise ValueError("frequency vector has wrong length")
            a, b = c if isinstance(c, tuple) else (c, 0)
            e = tuple(k[j] + shift[j] for j in range(self.n))
            a, b = to_fmpq(a), to_fmpq(b)
            if a:
                re[e] = re.get(e, 0) + a
            if b:
                im[e] = im.get(e, 0) + b
        return TrigPoly(self, self.ctx.from_dict(re), self.ctx.from_dict(im), shift)._normalized()

    def cos(self, freq, q=1):
        freq = tuple(freq)
        if not any(freq):
            return self.const(q)
        h = to_fraction(q) / 2
        neg = tuple(-f for f in freq)
        return self.from_fourier({freq: h, neg: h})

    def sin(self, freq, q=1):
        freq = tuple(freq)
        if not any(freq):
            return self.zero()
        h = to_fraction(q) / 2
        neg = tuple(-f for f in freq)
        # sin t = (e^{it} - e^{-it}) / 2i
        return self.from_fourier({freq: (0, -h), neg: (0, h)})

    def random_element(self, rng: random.Random, max_freq: int = 3, nterms: int = 3, constant=True):
        f = self.const(rng.choice(RATIONAL_POOL)) if constant else self.zero()
        for _ in range(nterms):
            freq = tuple(rng.randint(-max_freq, max_freq) for _ in range(self.n))
            q = rng.choice(RATIONAL_POOL)
            f = f + (self.cos(freq, q) if rng.random() < 0.5 else self.sin(freq, q))
        return f


class TrigPoly:
    __slots__ = ("ring", "re", "im", "shift")

    def __init__(self, ring: TrigRing, re, im, shift: tuple):
        self.ring = ring
        self.re = re
        self.im = im
        self.shift = shift

    def _normalized(self):
        re, im = self.re, self.im
        if re.is_zero() and im.is_zero():
            return TrigPoly(self.ring, re, im, self.ring._zero_shift)
        g = None
        for p in (re, im):
            if not p.is_zero():
                e = tuple(int(x) for x in p.term_content().monoms()[0])
                g = e if g is None else tuple(min(a, b) for a, b in zip(g, e))
        if any(g):
            mono = self.ring.monomial(g)
            re = re / mono if not re.is_zero() else re
            im = im / mono if not im.is_zero() else im
            return TrigPoly(self.ring, re, im, tuple(s - d for s, d in zip(self.shift, g)))
        return self

    def _aligned(self, other):
        if self.shift == other.shift:
            return self.re, self.im, other.re, other.im, self.shift
        s = tuple(max(a, b) for a, b in zip(self.shift, other.shift))
        m1 = self.ring.monomial(tuple(a - b for a, b in zip(s, self.shift)))
        m2 = self.ring.monomial(tuple(a - b for a, b in zip(s, other.shift)))
        return self.re * m1, self.im * m1, other.re * m2, other.im * m2, s

    def _lift(self, other):
        if isinstance(other, TrigPoly):
            return other
        return self.ring.const(other)

    def __add__(self, other):
        other = self._lift(other)
        a, b, c, d, s = self._aligned(other)
        return TrigPoly(self.ring, a + c, b + d, s)._normalized()

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        a, b, c, d, s = self._aligned(other)
        return TrigPoly(self.ring, a - c, b - d, s)._normalized()

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return TrigPoly(self.ring, -self.re, -self.im, self.shift)

    def __mul__(self, other):
        if not isinstance(other, TrigPoly):
            return self.scale(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        s = tuple(x + y for x, y in zip(self.shift, other.shift))
        if b.is_zero() and d.is_zero():
            return TrigPoly(self.ring, a * c, b, s)._normalized()
        ac, bd = a * c, b * d
        im = (a + b) * (c + d) - ac - bd
        return TrigPoly(self.ring, ac - bd, im, s)._normalized()

    __rmul__ = __mul__

    def scale(self, q):
        q = to_fmpq(q)
        if not q:
            return self.ring.zero()
        return TrigPoly(self.ring, self.re * q, self.im * q, self.shift)

    def derivative(self, i: int):
        self.ring.check_index(i)
        s = self.shift[i]
        gen = self.ring.ctx.gens()[i]

        def euler(p):
            out = p.derivative(i) * gen
            return out - p * s if s else out

        # d/dx_i = i * u_i d/du_i
        re, im = euler(self.re), euler(self.im)
        return TrigPoly(self.ring, -im, re, self.shift)._normalized()

    def __bool__(self):
        return not (self.re.is_zero() and self.im.is_zero())

    def __eq__(self, other):
        if not isinstance(other, TrigPoly):
            other = self._lift(other)
        return not bool(self - other)

    def constant_term(self) -> tuple[Fraction, Fraction]:
        return to_fraction(self.re[self.shift]), to_fraction(self.im[self.shift])

    def fourier(self) -> dict:
        out: dict = {}
        for p, slot in ((self.re, 0), (self.im, 1)):
            for e, c in p.to_dict().items():
                k = tuple(int(a) - b for a, b in zip(e, self.shift))
                pair = list(out.get(k, (Fraction(0), Fraction(0))))
                pair[slot] += to_fraction(c)
                out[k] = tuple(pair)
        return out

    def is_real(self) -> bool:
        coeffs = self.fourier()
        for k, (a, b) in coeffs.items():
            c, d = coeffs.get(tuple(-x for x in k), (0, 0))
            if a != c or b != -d:
                return False
        return True

    def max_frequency(self) -> int:
        return max((max(abs(x) for x in k) for k in self.fourier()), default=0)

    def evaluate(self, point) -> float:
        total = 0j
        for k, (a, b) in self.fourier().items():
            phase = sum(kj * float(xj) for kj, xj in zip(k, point))
            total += complex(float(a), float(b)) * complex(math.cos(phase), math.sin(phase))
        return total.real

    def __repr__(self):
        return f"TrigPoly({self.fourier()})"


# ---------------------------------------------------------------------------
# profile functions on the toric chart of S^2


class ProfileRing(FunctionRing):
    """Functions ``p(z, theta) / phi(z)**j`` with ``p`` a rational polynomial.

    Coordinates are ``z`` (index 0, the moment coordinate on (-1, 1)) and
    ``theta`` (index 1).  Elements are kept with the smallest possible ``j``,
    which makes the representation canonical.  Dependence on ``theta`` is
    polynomial: enough for local operator identities; integrals are only
    taken of theta-free elements.
    """

    def __init__(self, phi):
        self.n = 2
        self.ctx = flint.fmpq_mpoly_ctx.get(("z", "theta"), "lex")
        self.phi_coeffs = tuple(to_fraction(c) for c in phi)
        z = self.ctx.gens()[0]
        self.phi_poly = sum((to_fmpq(c) * z**i for i, c in enumerate(self.phi_coeffs)), self.ctx.constant(0))
        if self.phi_poly.is_zero():
            raise ValueError("profile must be nonzero")
        self._powers = [self.ctx.constant(1)]

    def __repr__(self):
        return f"ProfileRing(phi={list(map(str, self.phi_coeffs))})"

    def phi_power(self, j: int):
        while len(self._powers) <= j:
            self._powers.append(self._powers[-1] * self.phi_poly)
        return self._powers[j]

    def const(self, q):
        return Profile(self, self.ctx.constant(to_fmpq(q)), 0)

    def z(self):
        return Profile(self, self.ctx.gens()[0], 0)

    def theta(self):
        return Profile(self, self.ctx.gens()[1], 0)

    def phi(self):
        return Profile(self, self.phi_poly, 0)

    def inverse_phi(self, power: int = 1):
        return Profile(self, self.ctx.constant(1), power)

    def from_poly(self, coeffs):
        """theta-free polynomial ``sum_i coeffs[i] z**i``."""
        return self.from_dict({(i, 0): c for i, c in enumerate(coeffs)})

    def from_dict(self, coeffs: dict, j: int = 0):
        num = self.ctx.from_dict({tuple(k): to_fmpq(v) for k, v in coeffs.items()})
        return Profile(self, num, j)._reduced()

    def random_element(self, rng: random.Random, degree: int = 2, nterms: int = 3, theta: bool = True):
        coeffs = {}
        for _ in range(nterms):
            coeffs[(rng.randint(0, degree), rng.randint(0, 1) if theta else 0)] = rng.choice(RATIONAL_POOL)
        return self.from_dict(coeffs, j=rng.randint(0, 1))


class Profile:
    __slots__ = ("ring", "num", "j")

    def __init__(self, ring: ProfileRing, num, j: int):
        self.ring = ring
        self.num = num
        self.j = j

    def _reduced(self):
        num, j = self.num, self.j
        if num.is_zero():
            return Profile(self.ring, num, 0)
        phi = self.ring.phi_poly
        while j > 0:
            q, r = divmod(num, phi)
            if not r.is_zero():
                break
            num, j = q, j - 1
        if j == self.j:
            return self
        return Profile(self.ring, num, j)

    def _lift(self, other):
        if isinstance(other, Profile):
            return other
        return self.ring.const(other)

    def _common(self, other):
        if self.j == other.j:
            return self.num, other.num, self.j
        j = max(self.j, other.j)
        return (self.num * self.ring.phi_power(j - self.j),
                other.num * self.ring.phi_power(j - other.j), j)

    def __add__(self, other):
        other = self._lift(other)
        a, b, j = self._common(other)
        return Profile(self.ring, a + b, j)._reduced()

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        a, b, j = self._common(other)
        return Profile(self.ring, a - b, j)._reduced()

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return Profile(self.ring, -self.num, self.j)

    def __mul__(self, other):
        if not isinstance(other, Profile):
            return self.scale(other)
        return Profile(self.ring, self.num * other.num, self.j + other.j)._reduced()

    __rmul__ = __mul__

    def scale(self, q):
        q = to_fmpq(q)
        if not q:
            return self.ring.zero()
        return Profile(self.ring, self.num * q, self.j)

    def derivative(self, i: int):
        self.ring.check_index(i)
        if i == 1:
            return Profile(self.ring, self.num.derivative(1), self.j)._reduced()
        if self.j == 0:
            return Profile(self.ring, self.num.derivative(0), 0)
        phi = self.ring.phi_poly
        num = self.num.derivative(0) * phi - self.num * phi.derivative(0) * self.j
        return Profile(self.ring, num, self.j + 1)._reduced()

    def __bool__(self):
        return not self.num.is_zero()

    def __eq__(self, other):
        if not isinstance(other, Profile):
            other = self._lift(other)
        return self.j == other.j and self.num == other.num

    def is_invariant(self) -> bool:
        """True when independent of theta."""
        return self.num.is_zero() or self.num.degrees()[1] == 0

    def is_polynomial(self) -> bool:
        return self.j == 0

    def z_coefficients(self) -> list[Fraction]:
        """Coefficients in z of a theta-free polynomial element."""
        if not (self.is_polynomial() and self.is_invariant()):
            raise ValueError("element is not a theta-free polynomial in z")
        d = self.num.to_dict()
        d = {(int(a), int(b)): c for (a, b), c in d.items()}
        deg = max((e[0] for e in d), default=-1)
        return [to_fraction(d.get((i, 0), 0)) for i in range(deg + 1)]

    def evaluate_exact(self, z, theta=0) -> Fraction:
        zq, tq = to_fmpq(z), to_fmpq(theta)
        num = self.num(zq, tq)
        den = self.ring.phi_poly(zq, tq) ** self.j if self.j else fmpq(1)
        return to_fraction(num / den)

    def evaluate(self, z, theta=0.0) -> float:
        # exact evaluation at the binary value of the node avoids the
        # cancellation in p/phi^j near the poles z = +-1
        zq = Fraction(z) if isinstance(z, float) else z
        tq = Fraction(theta) if isinstance(theta, float) else theta
        return float(self.evaluate_exact(zq, tq))

    def __repr__(self):
        return f"Profile(({self.num}) / phi^{self.j})"


# ---------------------------------------------------------------------------
# integration


class QuadratureError(ArithmeticError):
    pass


def integrate_torus(f: TrigPoly) -> Scalar:
    """Integral over T^n with Lebesgue measure: constant coefficient * tau^n."""
    if not isinstance(f, TrigPoly):
        raise RingCapabilityError("integrate_torus needs a trigonometric polynomial")
    a, b = f.constant_term()
    if b:
        raise ValueError("integrand is not real-valued")
    return Scalar.tau(f.ring.n, a)


@lru_cache(maxsize=64)
def _legendre_nodes(n: int):
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(func, n: int, a: float = -1.0, b: float = 1.0) -> float:
    x, w = _legendre_nodes(n)
    half, mid = 0.5 * (b - a), 0.5 * (b + a)
    return half * sum(float(wi) * func(half * float(xi) + mid) for xi, wi in zip(x, w))


def integrate_s2(f: Profile, quad_order: int = 32, tol: float = 1e-12, max_order: int = 1024) -> float:
    """Integral of an S^1-invariant function against dz^dtheta over S^2,
    i.e. ``2 pi * int_{-1}^{1} f(z) dz``, by Gauss-Legendre with order doubling.
    """
    if not isinstance(f, Profile):
        raise RingCapabilityError("integrate_s2 needs a profile-ring element")
    if not f.is_invariant():
        raise ValueError("integrand depends on theta")
    if not f:
        return 0.0
    prev = gauss_legendre(f.evaluate, quad_order)
    order = quad_order
    while order < max_order:
        order *= 2
        cur = gauss_legendre(f.evaluate, order)
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return 2 * math.pi * cur
        prev = cur
    raise QuadratureError(
        f"Gauss-Legendre did not converge up to {max_order} nodes; integrand may be singular"
    )


def integrate_s2_exact(f: Profile) -> Scalar:
    """Exact ``2 pi * int_{-1}^{1} f dz`` for theta-free polynomial integrands."""
    total = Fraction(0)
    for i, c in enumerate(f.z_coefficients()):
        if i % 2 == 0:
            total += c * Fraction(2, i + 1)
    return Scalar.tau(1, total)
