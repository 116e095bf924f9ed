"""Quantum moment maps and the trace invariants built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .coeffring import TrigPoly
from .geometry import (
    ChartGeometry,
    KahlerModelS2,
    _sum,
    cahen_gutt_momentum,
    form_from_matrix,
    top_component,
    wedge_forms,
)
from .scalar import Scalar, to_fmpq, to_fraction
from .trace import integrate_model, trace

MODES = ("paper_c", "integral", "none")


class MomentError(ValueError):
    pass


@dataclass
class QuantumMomentMap:
    X: list
    mu: list
    normalization: str = "none"

    def order(self, j):
        return self.mu[j] if j < len(self.mu) else self.mu[0].ring.zero()


@dataclass
class InvariantReport:
    model: str
    k: Fraction
    values: dict = field(default_factory=dict)       # nu-exponent -> Scalar | float
    provenance: dict = field(default_factory=dict)
    unknown_from: int | None = None

    def as_dict(self):
        return {
            "model": self.model,
            "k": str(self.k),
            "values": {str(e): _render(v) for e, v in sorted(self.values.items())},
            "provenance": {str(e): p for e, p in sorted(self.provenance.items())},
            "unknown_from_exponent": self.unknown_from,
        }


def _render(v):
    if isinstance(v, Scalar):
        return {"exact": str(v), "decimal": float(v)}
    return {"exact": None, "decimal": float(v)}


def _to_float(v) -> float:
    return float(v)


# ---------------------------------------------------------------------------
# primitives of exact 1-forms


def interior_two_form(X, alpha, ring):
    n = len(X)
    return [_sum(ring, [X[i] * alpha[i][j] for i in range(n) if X[i] and alpha[i][j]]) for j in range(n)]


def _primitive_s2(beta, g: KahlerModelS2):
    """``f`` with ``df = beta`` for an invariant 1-form ``beta = b(z) dz``."""
    bz, bt = beta
    if bt:
        raise MomentError("the theta-component of i(X)(omega - Omega) is nonzero")
    if not bz.is_invariant():
        raise MomentError("contraction depends on theta: X is not a symmetry of the data")
    if not bz.is_polynomial():
        raise MomentError("primitive of a non-polynomial profile function is not supported")
    coeffs = bz.z_coefficients()
    return g.ring.from_poly([Fraction(0)] + [c / (i + 1) for i, c in enumerate(coeffs)])


def _primitive_torus(beta, ring):
    n = ring.n
    comps = [b.fourier() for b in beta]
    const = [c.get((0,) * n, (Fraction(0), Fraction(0))) for c in comps]
    if any(a or b for a, b in const):
        coeff = [str(a) for a, _ in const]
        raise MomentError(f"i(X)(omega - Omega) is closed but not exact: period class {coeff}")
    # closedness
    for i in range(n):
        for j in range(i + 1, n):
            if _sum(ring, [beta[j].derivative(i), -beta[i].derivative(j)]):
                raise MomentError("i(X)(omega - Omega) is not closed")
    out = {}
    for j, comp in enumerate(comps):
        for k, (re, im) in comp.items():
            if k in out or k[j] == 0:
                continue
            # c e^{ikx} = d/dx_j (c / (i k_j) e^{ikx})
            out[k] = (im / k[j], -re / k[j])
    return ring.from_fourier(out)


def solve_moment(g: ChartGeometry, X=None, mode: str = "paper_c", order: int = 2) -> QuantumMomentMap:
    """``d mu = i(X)(omega - Omega)`` solved order by order, then normalized."""
    if mode not in MODES:
        raise ValueError(f"unknown normalization {mode!r}")
    ring = g.ring
    if X is None:
        if not isinstance(g, KahlerModelS2):
            raise MomentError("no symmetry given")
        X = g.rotation
    if isinstance(g, KahlerModelS2) and not (X[0] == 0 and not any(X[1].derivative(i) for i in range(2))):
        raise MomentError("only multiples of the rotation field are admitted on S^2")
    mu = []
    for j in range(order + 1):
        if j == 0:
            form = g.omega_matrix()
            beta = interior_two_form(X, form, ring)
        else:
            beta = [-b for b in interior_two_form(X, g.alpha(j), ring)]
        if isinstance(g, KahlerModelS2):
            f = _primitive_s2(beta, g)
        elif all(isinstance(b, TrigPoly) for b in beta):
            f = _primitive_torus(beta, ring)
        else:
            raise MomentError(f"model {g.model} provides no primitives")
        for i in range(g.n):
            if f.derivative(i) != beta[i]:
                raise MomentError("primitive check failed")
        mu.append(f)
    qm = QuantumMomentMap(list(X), mu, "none")
    return normalize(qm, g, mode) if mode != "none" else qm


def _omega_minus_Omega_ratios(g: ChartGeometry, order: int) -> list:
    """nu-coefficients of ``(omega - Omega)^m / omega^m``."""
    ring, n, m = g.ring, g.n, g.m
    series = [form_from_matrix(g.omega_matrix())]
    for r in range(1, order + 1):
        series.append(form_from_matrix([[-x for x in row] for row in g.alpha(r)]))
    power = [{(): ring.one()}] + [{} for _ in range(order)]
    for _ in range(m):
        new = [{} for _ in range(order + 1)]
        for a in range(order + 1):
            for b in range(order + 1 - a):
                if not power[a] or not series[b]:
                    continue
                w = wedge_forms(power[a], series[b])
                for key, v in w.items():
                    new[a + b][key] = new[a + b][key] + v if key in new[a + b] else v
        power = new
    den = {(): to_fmpq(1)}
    om_q = form_from_matrix(g.metric.omega)
    for _ in range(m):
        den = wedge_forms(den, om_q)
    d = top_component(den, n)
    out = []
    for p in power:
        top = top_component(p, n)
        out.append(ring.zero() if top is None else top.scale(1 / d))
    return out


def _integral(g, f):
    v = integrate_model(g, f)
    if not isinstance(v, Scalar):
        raise MomentError("normalization needs exact integrals (polynomial integrand)")
    return v


def normalize(qm: QuantumMomentMap, g: ChartGeometry, mode: str) -> QuantumMomentMap:
    """Shift each nu-order of ``mu`` by a constant so that
    ``int mu (omega - Omega)^m = 0`` (``paper_c``) or ``int mu omega^m = 0``
    (``integral``)."""
    if mode == "none":
        return QuantumMomentMap(qm.X, list(qm.mu), "none")
    ring = g.ring
    order = len(qm.mu) - 1
    if mode == "paper_c":
        w = _omega_minus_Omega_ratios(g, order)
    elif mode == "integral":
        w = [ring.one()] + [ring.zero()] * order
    else:
        raise ValueError(f"unknown normalization {mode!r}")
    vol = _integral(g, w[0])
    new = []
    for j in range(order + 1):
        acc = _integral(g, qm.mu[j] * w[0])
        for i in range(j):
            acc = acc + _integral(g, new[i] * w[j - i])
        c = acc / vol
        if any(k != 0 for k in c.coeffs):
            raise MomentError("normalizing constant is not rational")
        new.append(qm.mu[j] - ring.const(c.coeffs.get(0, 0)))
    return QuantumMomentMap(qm.X, new, mode)


def kahler_shift(qm: QuantumMomentMap, g: KahlerModelS2, k) -> QuantumMomentMap:
    """``mu - (nu k / 2) Delta mu``."""
    k = to_fraction(k)
    mu = list(qm.mu) + [g.ring.zero()]
    out = [mu[0]]
    for j in range(1, len(mu)):
        out.append(mu[j] - g.laplacian(mu[j - 1]).scale(k / 2) if k else mu[j])
    while len(out) > 1 and not out[-1] and len(out) > len(qm.mu):
        out.pop()
    return QuantumMomentMap(qm.X, out, "none")


def kahler_moment(g: KahlerModelS2, k=None, mode: str = "integral", order: int = 2) -> QuantumMomentMap:
    """``mu~^k`` built from the classical moment map of the rotation."""
    k = g.k if k is None else to_fraction(k)
    classical = solve_moment(g, mode="none", order=0)
    shifted = kahler_shift(classical, g, k)
    mu = (shifted.mu + [g.ring.zero()] * (order + 1))[: order + 1]
    qm = QuantumMomentMap(shifted.X, mu, "none")
    return normalize(qm, g, mode)


def check_moment_equation(qm: QuantumMomentMap, g: ChartGeometry) -> bool:
    ring = g.ring
    for j, f in enumerate(qm.mu):
        if j == 0:
            beta = interior_two_form(qm.X, g.omega_matrix(), ring)
        else:
            beta = [-b for b in interior_two_form(qm.X, g.alpha(j), ring)]
        if any(f.derivative(i) != beta[i] for i in range(g.n)):
            return False
    return True


# ---------------------------------------------------------------------------
# Futaki invariants and the trace invariants on S^2


def futaki_c1p(g: KahlerModelS2, f, p: int):
    """``(1/2pi)^p int -(m-p+1) f Ric^p ^ omega^{m-p} - (p/2) Delta f Ric^{p-1} ^ omega^{m-p+1}``."""
    m = g.m
    if p < 1 or p > m + 1:
        raise ValueError("need 1 <= p <= m + 1")
    rho = g.ricci_form()
    fact = math.factorial(m)
    total = None

    def add(v):
        nonlocal total
        total = v if total is None else total + v

    if m - p + 1:
        ratio = g.top_ratio(*([rho] * p))
        add(_times(integrate_model(g, (f * ratio).scale(-(m - p + 1))), fact))
    ratio = g.top_ratio(*([rho] * (p - 1)))
    add(_times(integrate_model(g, (g.laplacian(f) * ratio).scale(Fraction(-p, 2))), fact))
    return _over_tau(total, p)


def _times(v, q):
    return v * Scalar.rational(q) if isinstance(v, Scalar) else v * q


def _over_tau(v, p):
    return v / Scalar.tau(p) if isinstance(v, Scalar) else v / (2 * math.pi) ** p


def invariant_leading(g: ChartGeometry, qm: QuantumMomentMap) -> InvariantReport:
    """``Tr^{[omega],[Omega]}(X)``: only the nu^{2-m} coefficient survives,
    ``-(1/((2 pi)^m 24)) int mu^0 mu(nabla) omega^m/m!``."""
    if qm.normalization != "paper_c":
        raise MomentError("the leading invariant needs the paper_c normalization")
    m = g.m
    k = getattr(g, "k", Fraction(0))
    rep = InvariantReport(getattr(g, "model", "chart"), k)
    val = integrate_model(g, qm.mu[0] * cahen_gutt_momentum(g))
    val = _times(val, Fraction(-1, 24))
    rep.values[-m] = Scalar()
    rep.values[1 - m] = Scalar()
    rep.values[2 - m] = _over_tau(val, m)
    rep.provenance[-m] = "normalization"
    rep.provenance[1 - m] = "normalization"
    rep.provenance[2 - m] = "cahen-gutt integral"
    rep.unknown_from = 3 - m
    return rep


def trace_of_moment(g: ChartGeometry, qm: QuantumMomentMap) -> list:
    """The full density trace of ``mu_X`` through relative order nu^2."""
    return trace(g, qm.mu[:3])


@dataclass
class KahlerInvariant:
    direct: InvariantReport
    futaki: InvariantReport
    agree: bool
    max_diff: float


def kahler_invariant(g: KahlerModelS2, k=None, tol: float = 1e-8) -> KahlerInvariant:
    """``Tr^{M,k}(X)`` for m = 1, by the density trace of ``mu~^k`` and by the
    Futaki combination ``k F_c1`` and ``-(1 + 12 k^2)/24 F_{c1^2}``."""
    k = g.k if k is None else to_fraction(k)
    if g.m != 1:
        raise ValueError("only m = 1 is supported")
    if k != g.k:
        g = KahlerModelS2(list(g.ring.phi_coeffs), k)
    qm = kahler_moment(g, k, mode="integral")
    tr = trace(g, qm.mu)
    direct = InvariantReport("s2", k)
    for j, v in enumerate(tr):
        direct.values[j - 1] = v
        direct.provenance[j - 1] = "density trace"
    direct.unknown_from = 2
    f = qm.mu[0]
    fc1 = futaki_c1p(g, f, 1)
    fc2 = futaki_c1p(g, f, 2)
    fut = InvariantReport("s2", k)
    fut.values[-1] = Scalar()
    fut.values[0] = _times(fc1, k)
    fut.values[1] = _times(fc2, Fraction(-(1 + 12 * k * k), 24)) * (Scalar.tau(1) if isinstance(fc2, Scalar) else 2 * math.pi)
    fut.provenance = {-1: "volume term (mean zero)", 0: "k F_c1", 1: "-(1+12k^2)/24 F_c1^2 (c2 term vanishes for m = 1)"}
    fut.unknown_from = 2
    diffs = [abs(_to_float(direct.values[e]) - _to_float(fut.values[e])) for e in (-1, 0, 1)]
    scale = max([1.0] + [abs(_to_float(v)) for v in direct.values.values()])
    return KahlerInvariant(direct, fut, max(diffs) <= tol * scale, max(diffs))


def normalization_bridge(g: KahlerModelS2, k=None, order: int = 2) -> list:
    """``mu~^k - mu^k``: the formal constant between the integral and the
    paper_c normalizations, per nu-order (rational constants)."""
    k = g.k if k is None else to_fraction(k)
    if k != g.k:
        g = KahlerModelS2(list(g.ring.phi_coeffs), k)
    tilde = kahler_moment(g, k, mode="integral", order=order)
    # mu^k solved from d mu = i(X)(omega - Omega) on its own
    direct = solve_moment(g, mode="paper_c", order=order)
    out = []
    for a, b in zip(tilde.mu, direct.mu):
        d = a - b
        if any(d.derivative(i) for i in range(2)):
            raise MomentError("normalizations differ by a non-constant")
        out.append(d.evaluate_exact(0))
    return out
