"""Trace densities, the normalized trace and its two consistency checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .coeffring import Profile, TrigPoly, integrate_s2, integrate_s2_exact, integrate_torus
from .fedosov import FedosovConnection
from .geometry import ChartGeometry, _sum, build_torus, cahen_gutt_momentum, gamma_bar
from .scalar import Scalar
from .weyl import WeylSection, delta_inv, nu_divide, supercommutator


class TraceError(ValueError):
    pass


@dataclass
class TraceDensity:
    """``(2 pi nu)^m rho = 1 + nu rho1 + nu^2 rho2 + O(nu^3)``."""

    rho1: object
    rho2: object
    m: int

    def series(self) -> list:
        return [self.rho1.ring.one(), self.rho1, self.rho2]


def trace_density(g: ChartGeometry) -> TraceDensity:
    m = g.m
    a1, a2 = g.alpha(1), g.alpha(2)
    rho1 = g.top_ratio(a1).scale(-m)
    rho2 = (cahen_gutt_momentum(g).scale(Fraction(-1, 24))
            - g.top_ratio(a2).scale(m)
            + g.top_ratio(a1, a1).scale(Fraction(m * (m - 1), 2)))
    return TraceDensity(rho1, rho2, m)


def integrate_model(g: ChartGeometry, f, tol: float = 1e-12):
    """Integral of ``f omega^m / m!`` over the model.

    Exact (a :class:`Scalar`) on the torus and for polynomial integrands on
    S^2; a float from Gauss-Legendre quadrature otherwise.
    """
    if isinstance(f, TrigPoly):
        # omega^m / m! is the coordinate volume for the standard Darboux form
        return integrate_torus(f)
    if isinstance(f, Profile):
        if f.is_polynomial() and f.is_invariant():
            return integrate_s2_exact(f)
        return integrate_s2(f, tol=tol)
    raise TraceError(f"model {getattr(g, 'model', '?')} has no global integral")


def pair_series(a: list, b: list, order: int) -> list:
    """Coefficients ``sum_{i+j=k} a_i b_j`` for ``k <= order``."""
    out = []
    for k in range(order + 1):
        terms = [a[i] * b[k - i] for i in range(k + 1) if i < len(a) and k - i < len(b)]
        out.append(_sum(terms[0].ring, terms) if terms else None)
    return out


def trace(g: ChartGeometry, F, density: TraceDensity | None = None, tol: float = 1e-12) -> list:
    """``Tr(F) = (2 pi nu)^{-m} int F (1 + nu rho1 + nu^2 rho2) omega^m/m!``.

    Returns the coefficients of ``nu^{j-m}`` for ``j = 0, 1, 2``, each
    including the factor ``(2 pi)^{-m}``; higher orders are not certified.
    """
    density = density or trace_density(g)
    Fs = list(F) if isinstance(F, (list, tuple)) else [F]
    coeffs = pair_series(Fs, density.series(), 2)
    out = []
    for c in coeffs:
        val = integrate_model(g, c, tol) if c is not None else Scalar()
        out.append(val / Scalar.tau(g.m) if isinstance(val, Scalar) else val / math.tau ** g.m)
    return out


def verify_trace_property(g: ChartGeometry, f, h, fc: FedosovConnection | None = None,
                          density: TraceDensity | None = None) -> list:
    """Integrals of the nu^1, nu^2, nu^3 coefficients of
    ``[f, h]_* (1 + nu rho1 + nu^2 rho2)``; all should vanish."""
    if not isinstance(f, TrigPoly):
        raise TraceError("the trace property is checked on the torus model")
    fc = fc or FedosovConnection(g, 3)
    if fc.N < 3:
        raise ValueError("need nu-order 3")
    density = density or trace_density(g)
    comm = fc.commutator(f, h)
    prod = pair_series(comm, density.series(), 3)
    return [integrate_torus(prod[k]) for k in (1, 2, 3)]


# ---------------------------------------------------------------------------
# variation of the trace along a path of torus geometries


class TorusPath:
    """``T_t = T0 + t T1`` (totally symmetric 3-tensors), ``Omega_t = Omega0 +
    d(t beta)`` with ``beta = sum_r nu^r beta_r`` a list of 1-forms."""

    def __init__(self, m=1, T0=None, T1=None, Omega0=(), beta=(), ring=None):
        from .coeffring import TrigRing

        self.m = m
        self.n = 2 * m
        self.ring = ring or TrigRing(self.n)
        self.T0 = dict(T0 or {})
        self.T1 = dict(T1 or {})
        self.beta = [list(b) for b in beta]
        z = self.ring.zero()
        n = self.n
        self.Omega0 = [self._as_matrix(a) for a in Omega0]
        self.dbeta = [[[_sum(self.ring, [b[j].derivative(i), -b[i].derivative(j)]) for j in range(n)]
                       for i in range(n)] for b in self.beta]
        self._zero = z

    def _as_matrix(self, a):
        n = self.n
        if isinstance(a, dict):
            mat = [[self.ring.zero()] * n for _ in range(n)]
            for (i, j), v in a.items():
                mat[i][j] = mat[i][j] + v
                mat[j][i] = mat[j][i] - v
            return mat
        return a

    def geometry(self, t) -> ChartGeometry:
        t = Fraction(t)
        keys = set(self.T0) | set(self.T1)
        T = {}
        for key in keys:
            v = self.T0.get(key, self.ring.zero()) + self.T1.get(key, self.ring.zero()).scale(t)
            T[key] = v
        r = max(len(self.Omega0), len(self.dbeta))
        z = [[self.ring.zero()] * self.n for _ in range(self.n)]
        Om = []
        for k in range(r):
            a = self.Omega0[k] if k < len(self.Omega0) else z
            b = self.dbeta[k] if k < len(self.dbeta) else z
            Om.append([[a[i][j] + b[i][j].scale(t) for j in range(self.n)] for i in range(self.n)])
        return build_torus(self.m, T, Om, self.ring)

    def velocity(self) -> ChartGeometry:
        """Geometry-shaped container for (Gamma-dot, Omega-dot) (not validated)."""
        g1 = build_torus(self.m, self.T1, [], self.ring)
        return g1

    def beta_section(self, N, D) -> WeylSection:
        terms = {}
        for r, b in enumerate(self.beta, start=1):
            for i in range(self.n):
                if b[i]:
                    terms[(r, (0,) * self.n, (i,))] = b[i]
        return WeylSection(self.ring, self.n, terms, N, D)


@dataclass
class VariationResult:
    lhs: list
    rhs: list
    rel_err: list
    precondition_ok: bool
    dinv_consistent: bool
    halving_ratio: list | None = None

    def converged(self, tol: float = 1e-6) -> bool:
        if not (self.precondition_ok and self.dinv_consistent):
            return False
        if any(e > tol for e in self.rel_err):
            return False
        # second order: halving dt divides the error by about 4
        return all(r is None or r >= 3.5 for r in (self.halving_ratio or []))


def _rel(a: Scalar, b: Scalar) -> float:
    fa, fb = float(a), float(b)
    den = max(abs(fa), abs(fb))
    if den == 0:
        return 0.0
    return float(abs(a - b)) / den


def _trace_at(path: TorusPath, t, F) -> list:
    g = path.geometry(t)
    return trace(g, F)


def variation_check(path: TorusPath, F, t0=0, dt=Fraction(1, 10 ** 4), halving: bool = True) -> VariationResult:
    """Compare a central difference of ``Tr_t(F)`` with
    ``(2 pi nu)^{-m} int sigma((1/nu)[D^{-1}(Gbar-dot - beta-dot), Q F]) rho``
    at the relative orders nu^1 and nu^2."""
    t0, dt = Fraction(t0), Fraction(dt)
    N, D = 3, 6
    g = path.geometry(t0)
    fc = FedosovConnection(g, N, D)
    density = trace_density(g)
    gdot = gamma_bar(path.velocity(), N + 1, D + 2)
    bdot = path.beta_section(N + 1, D + 2)
    omega_dot = WeylSection(path.ring, path.n, {
        (r, (0,) * path.n, (i, j)): db[i][j]
        for r, db in enumerate(path.dbeta, start=1)
        for i in range(path.n) for j in range(i + 1, path.n) if db[i][j]
    }, N, D)
    rdot = fc.tangent(gdot, omega_dot)
    b = (gdot.with_caps(N, D) + rdot - bdot.with_caps(N, D))
    precondition = not fc.apply_D(b).truncate(D=D - 1)
    A = fc.d_inverse(b, check=False)
    A_alt = -fc._neumann(delta_inv((gdot - bdot).with_caps(N, D)))
    consistent = A == A_alt
    QF = fc.quantize(F)
    br = nu_divide(supercommutator(A.with_caps(N + 1, D), QF.with_caps(N + 1, D), fc.metric))
    # sigma of a 0-form: the y-free part
    s = [path.ring.zero() for _ in range(N + 1)]
    for (k, al, be), c in br.terms.items():
        if not any(al) and not be and k <= N:
            s[k] = s[k] + c
    dens = pair_series(s, density.series(), 2)
    rhs = [integrate_model(g, c) / Scalar.tau(path.m) for c in dens]

    def lhs_at(step):
        lo, hi = _trace_at(path, t0 - step, F), _trace_at(path, t0 + step, F)
        return [(h - l) * Scalar.rational(1 / (2 * step)) for l, h in zip(lo, hi)]

    lhs = lhs_at(dt)
    errs = [_rel(a, b_) for a, b_ in zip(lhs[1:], rhs[1:])]
    ratio = None
    if halving:
        lhs2 = lhs_at(dt / 2)
        ratio = []
        for a, a2, r_ in zip(lhs[1:], lhs2[1:], rhs[1:]):
            e1, e2 = float(abs(a - r_)), float(abs(a2 - r_))
            # None: both differences vanish exactly (the trace is a low-degree
            # polynomial in t, so the central difference has no error)
            ratio.append(None if e1 == e2 == 0 else (e1 / e2 if e2 else float("inf")))
    return VariationResult(lhs, rhs, errs, precondition, consistent, ratio)
