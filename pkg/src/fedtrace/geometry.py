"""Chart-level symplectic and Kaehler data.

Conventions (fixed here, checked by the test-suite):

* ``omega = 1/2 omega_ij dx^i ^ dx^j`` and ``Lambda^ij omega_jk = delta^i_k``.
* ``nabla_i d_j = Gamma^k_ij d_k``.
* ``R^r_jkl`` is the ``d_r`` component of ``R(d_k, d_l) d_j`` with
  ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]``.  With this choice the fiber
  curvature operator satisfies ``del^2 = (1/nu)[Rbar, .]``.
* ``Ric_ab = R^k_bka``, the trace of ``V -> R(V, d_a) d_b``.
* 2-forms are stored as antisymmetric component matrices ``alpha_ij``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .coeffring import JetRing, ProfileRing, TrigRing
from .scalar import to_fmpq, to_fraction
from .weyl import FiberMetric, WeylSection, wedge_indices


class GeometryError(ValueError):
    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))


def _lin(ring, pairs):
    """sum of q * f over pairs, skipping zeros."""
    acc = None
    for q, f in pairs:
        if not q or not f:
            continue
        t = f if q == 1 else f.scale(q)
        acc = t if acc is None else acc + t
    return ring.zero() if acc is None else acc


def _sum(ring, items):
    acc = None
    for f in items:
        if f:
            acc = f if acc is None else acc + f
    return ring.zero() if acc is None else acc


# ---------------------------------------------------------------------------
# small exterior algebra on a chart: {increasing index tuple: coefficient}


def form_from_matrix(alpha) -> dict:
    n = len(alpha)
    return {(i, j): alpha[i][j] for i in range(n) for j in range(i + 1, n) if alpha[i][j]}


def wedge_forms(a: dict, b: dict) -> dict:
    out: dict = {}
    for ia, ca in a.items():
        for ib, cb in b.items():
            w = wedge_indices(ia, ib)
            if w is None:
                continue
            sign, idx = w
            v = ca * cb
            v = v if sign > 0 else -v
            out[idx] = out[idx] + v if idx in out else v
    return {k: v for k, v in out.items() if v}


def top_component(form: dict, n: int):
    return form.get(tuple(range(n)))


@dataclass
class ValidationReport:
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


class ChartGeometry:
    """Symplectic form, symplectic connection and formal 2-form ``Omega`` on
    one chart.  ``omega`` is constant (Darboux chart); ``Omega`` is the list
    ``[alpha_1, alpha_2, ...]`` with ``Omega = sum_r nu^r alpha_r``."""

    model = "chart"

    def __init__(self, ring, metric: FiberMetric, christoffel, Omega=()):
        self.ring = ring
        self.metric = metric
        self.n = metric.n
        self.m = self.n // 2
        z = ring.zero()
        self.christoffel = [[[christoffel[k][i][j] or z for j in range(self.n)]
                             for i in range(self.n)] for k in range(self.n)]
        self.Omega = [[[a[i][j] or z for j in range(self.n)] for i in range(self.n)] for a in Omega]
        self._riemann = None
        self._ricci = None

    # -- derived tensors ----------------------------------------------------

    @property
    def riemann(self):
        if self._riemann is None:
            self._riemann, self._ricci = curvature_from_christoffel(self)
        return self._riemann

    @property
    def ricci(self):
        self.riemann
        return self._ricci

    def alpha(self, r: int):
        """``alpha_r`` (1-based); zero beyond the supplied list."""
        if 1 <= r <= len(self.Omega):
            return self.Omega[r - 1]
        z = self.ring.zero()
        return [[z] * self.n for _ in range(self.n)]

    def omega_matrix(self):
        return [[self.ring.const(self.metric.omega[i][j]) for j in range(self.n)] for i in range(self.n)]

    def top_ratio(self, *forms):
        """``(f_1 ^ ... ^ f_s ^ omega^{m-s}) / omega^m`` for 2-form matrices."""
        n, m = self.n, self.m
        if len(forms) > m:
            return self.ring.zero()
        om = form_from_matrix(self.omega_matrix())
        num = {(): self.ring.one()}
        for f in forms:
            num = wedge_forms(num, form_from_matrix(f))
        for _ in range(m - len(forms)):
            num = wedge_forms(num, om)
        om_q = form_from_matrix(self.metric.omega)
        den = {(): to_fmpq(1)}
        for _ in range(m):
            den = wedge_forms(den, om_q)
        top = top_component(num, n)
        if top is None:
            return self.ring.zero()
        return top.scale(1 / top_component(den, n))

    def with_christoffel(self, christoffel) -> "ChartGeometry":
        return ChartGeometry(self.ring, self.metric, christoffel, self.Omega)

    def with_omega(self, Omega) -> "ChartGeometry":
        g = ChartGeometry(self.ring, self.metric, self.christoffel, Omega)
        g._riemann, g._ricci = self._riemann, self._ricci
        return g


def curvature_from_christoffel(g: ChartGeometry):
    n, ring = g.n, g.ring
    G = g.christoffel
    dG = [[[[G[r][i][j].derivative(k) for k in range(n)] for j in range(n)] for i in range(n)] for r in range(n)]
    R = [[[[ring.zero()] * n for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for r in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(k + 1, n):
                    val = _sum(ring, [dG[r][l][j][k], -dG[r][k][j][l]]
                               + [G[r][k][p] * G[p][l][j] for p in range(n)]
                               + [-(G[r][l][p] * G[p][k][j]) for p in range(n)])
                    R[r][j][k][l] = val
                    R[r][j][l][k] = -val
    ric = [[_sum(ring, [R[k][b][k][a] for k in range(n)]) for b in range(n)] for a in range(n)]
    return R, ric


def validate(g: ChartGeometry) -> ValidationReport:
    rep = ValidationReport()
    n = g.n
    if not g.metric.check():
        rep.failures.append("Lambda is not the inverse of omega")
    # omega has constant coefficients here, so d(omega) = 0 holds trivially
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if g.christoffel[k][i][j] != g.christoffel[k][j][i]:
                    rep.failures.append(f"torsion: Gamma^{k}_{i}{j} != Gamma^{k}_{j}{i}")
                    return rep
    low = lowered_christoffel(g)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if not (low[i][j][k] == low[j][i][k] == low[k][j][i]):
                    rep.failures.append(f"omega_il Gamma^l_jk not totally symmetric at ({i},{j},{k})")
                    return rep
    for r, a in enumerate(g.Omega, start=1):
        for i in range(n):
            for j in range(n):
                if a[i][j] != -a[j][i]:
                    rep.failures.append(f"alpha_{r} not antisymmetric")
                    return rep
        for i, j, k in combinations(range(n), 3):
            if _sum(g.ring, [a[j][k].derivative(i), -a[i][k].derivative(j), a[i][j].derivative(k)]):
                rep.failures.append(f"alpha_{r} not closed")
                break
    return rep


def require_valid(g):
    rep = validate(g)
    if not rep.ok:
        raise GeometryError(rep.failures)
    return g


def lowered_christoffel(g: ChartGeometry):
    """``omega_il Gamma^l_jk``."""
    n = g.n
    om = g.metric.omega
    return [[[_lin(g.ring, [(om[i][l], g.christoffel[l][j][k]) for l in range(n)])
              for k in range(n)] for j in range(n)] for i in range(n)]


def _exp(n, *idx):
    e = [0] * n
    for i in idx:
        e[i] += 1
    return tuple(e)


def gamma_bar(g: ChartGeometry, N: int, D: int) -> WeylSection:
    """``1/2 omega_lk Gamma^k_ij y^l y^j dx^i``."""
    n = g.n
    low = lowered_christoffel(g)
    terms: dict = {}
    half = Fraction(1, 2)
    for i in range(n):
        for l in range(n):
            for j in range(n):
                c = low[l][i][j]
                if not c:
                    continue
                key = (0, _exp(n, l, j), (i,))
                v = c.scale(half)
                terms[key] = terms[key] + v if key in terms else v
    return WeylSection(g.ring, n, terms, N, D)


def r_bar(g: ChartGeometry, N: int, D: int) -> WeylSection:
    """``1/4 omega_ir R^r_jkl y^i y^j dx^k ^ dx^l``."""
    n = g.n
    R = g.riemann
    om = g.metric.omega
    terms: dict = {}
    for k in range(n):
        for l in range(k + 1, n):
            for i in range(n):
                for j in range(n):
                    c = _lin(g.ring, [(om[i][r], R[r][j][k][l]) for r in range(n)])
                    if not c:
                        continue
                    # the (k,l) and (l,k) terms coincide: 2 * 1/4
                    key = (0, _exp(n, i, j), (k, l))
                    v = c.scale(Fraction(1, 2))
                    terms[key] = terms[key] + v if key in terms else v
    return WeylSection(g.ring, n, terms, N, D)


def omega_section(g: ChartGeometry, N: int, D: int) -> WeylSection:
    """``Omega = sum_r nu^r alpha_r`` as a central Weyl 2-form."""
    n = g.n
    terms = {}
    for r, a in enumerate(g.Omega, start=1):
        for i in range(n):
            for j in range(i + 1, n):
                if a[i][j]:
                    terms[(r, (0,) * n, (i, j))] = a[i][j]
    return WeylSection(g.ring, n, terms, N, D)


def symplectic_section(g: ChartGeometry, N: int, D: int) -> WeylSection:
    n = g.n
    terms = {}
    for i in range(n):
        for j in range(i + 1, n):
            q = g.metric.omega[i][j]
            if q:
                terms[(0, (0,) * n, (i, j))] = g.ring.const(q)
    return WeylSection(g.ring, n, terms, N, D)


def covariant_derivative_2tensor(g: ChartGeometry, T):
    """``(nabla T)_qab = d_q T_ab - Gamma^m_qa T_mb - Gamma^m_qb T_am``."""
    n, G = g.n, g.christoffel
    return [[[_sum(g.ring, [T[a][b].derivative(q)]
                   + [-(G[m][q][a] * T[m][b]) for m in range(n)]
                   + [-(G[m][q][b] * T[a][m]) for m in range(n)])
              for b in range(n)] for a in range(n)] for q in range(n)]


def cahen_gutt_momentum(g: ChartGeometry):
    """``Lambda^pa Lambda^qb (nabla_p nabla_q Ric_ab - 1/2 Ric_pq Ric_ab)
    + 1/4 R_pqrs R^pqrs`` with ``R_pqrs = omega_pt R^t_qrs``.

    ``Lambda^pa Lambda^qb Ric_ab`` is symmetric in (p, q), so the order of the
    two covariant derivatives does not matter.
    """
    n, ring, L, om = g.n, g.ring, g.metric.lam, g.metric.omega
    G = g.christoffel
    ric = g.ricci
    nric = covariant_derivative_2tensor(g, ric)
    # (nabla nabla Ric)_pqab = d_p (nabla Ric)_qab - Gamma terms on q, a, b
    terms = []
    for p in range(n):
        for a in range(n):
            if not L[p][a]:
                continue
            for q in range(n):
                for b in range(n):
                    if not L[q][b]:
                        continue
                    lam = L[p][a] * L[q][b]
                    parts = [nric[q][a][b].derivative(p)]
                    for m in range(n):
                        parts.append(-(G[m][p][q] * nric[m][a][b]))
                        parts.append(-(G[m][p][a] * nric[q][m][b]))
                        parts.append(-(G[m][p][b] * nric[q][a][m]))
                    val = _sum(ring, parts)
                    val = val - (ric[p][q] * ric[a][b]).scale(Fraction(1, 2))
                    terms.append((lam, val))
    total = _lin(ring, terms)
    R = g.riemann
    low = [[[[_lin(ring, [(om[p][t], R[t][q][r][s]) for t in range(n)]) for s in range(n)]
             for r in range(n)] for q in range(n)] for p in range(n)]

    def raise_all(T):
        # raise every index with Lambda on the left slot: T^{pqrs} = L^pa L^qb L^rc L^sd T_abcd
        for axis in range(4):
            T = _raise_axis(ring, T, L, axis, n)
        return T

    up = raise_all(low)
    sq = _sum(ring, [low[p][q][r][s] * up[p][q][r][s]
                     for p in range(n) for q in range(n) for r in range(n) for s in range(n)
                     if low[p][q][r][s] and up[p][q][r][s]])
    return total + sq.scale(Fraction(1, 4))


def _raise_axis(ring, T, L, axis, n):
    import itertools

    out = [[[[None] * n for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for idx in itertools.product(range(n), repeat=4):
        pairs = []
        for a in range(n):
            src = list(idx)
            src[axis] = a
            pairs.append((L[idx[axis]][a], T[src[0]][src[1]][src[2]][src[3]]))
        out[idx[0]][idx[1]][idx[2]][idx[3]] = _lin(ring, pairs)
    return out


# ---------------------------------------------------------------------------
# models


def build_flat(m: int = 1, Omega=(), order: int = 64) -> ChartGeometry:
    """Flat R^{2m} with standard omega and Gamma = 0, on polynomial jets."""
    ring = JetRing(2 * m, order)
    metric = FiberMetric.standard(m)
    n = 2 * m
    z = ring.zero()
    Gam = [[[z] * n for _ in range(n)] for _ in range(n)]
    g = ChartGeometry(ring, metric, Gam, _omega_list(ring, n, Omega))
    g.model = "flat"
    return require_valid(g)


def _omega_list(ring, n, Omega):
    out = []
    for a in Omega:
        if isinstance(a, dict):
            mat = [[ring.zero()] * n for _ in range(n)]
            for (i, j), v in a.items():
                v = v if hasattr(v, "derivative") else ring.const(v)
                mat[i][j] = mat[i][j] + v
                mat[j][i] = mat[j][i] - v
            out.append(mat)
        else:
            out.append([[x if hasattr(x, "derivative") else ring.const(x) for x in row] for row in a])
    return out


def build_torus(m: int = 1, T=None, Omega=(), ring: TrigRing | None = None) -> ChartGeometry:
    """Flat torus T^{2m} with standard omega; the connection is
    ``Gamma^p_jk = Lambda^pi T_ijk`` for a totally symmetric 3-tensor ``T``.

    ``T`` maps index triples to trig polynomials; each entry is symmetrized
    over the permutations of its triple.  ``Omega`` entries are either
    antisymmetric matrices or ``{(i, j): f}`` meaning ``f dx^i ^ dx^j``.
    """
    n = 2 * m
    ring = ring or TrigRing(n)
    metric = FiberMetric.standard(m)
    Tfull = [[[ring.zero()] * n for _ in range(n)] for _ in range(n)]
    for idx, val in (T or {}).items():
        perms = {p for p in _permutations(tuple(idx))}
        share = val.scale(Fraction(1, len(perms)))
        for i, j, k in perms:
            Tfull[i][j][k] = Tfull[i][j][k] + share
    L = metric.lam
    Gam = [[[_lin(ring, [(L[p][i], Tfull[i][j][k]) for i in range(n)]) for k in range(n)]
            for j in range(n)] for p in range(n)]
    g = ChartGeometry(ring, metric, Gam, _omega_list(ring, n, Omega))
    g.model = "torus"
    g.symmetric_tensor = Tfull
    return require_valid(g)


def _permutations(t):
    from itertools import permutations

    return set(permutations(t))


class KahlerModelS2(ChartGeometry):
    """S^1-invariant Kaehler metric ``phi^{-1} dz^2 + phi dtheta^2`` on S^2 with
    ``omega = dz ^ dtheta``; coordinates ``(z, theta)``; ``Omega = nu k Ric``."""

    model = "s2"

    def __init__(self, phi, k=0):
        ring = ProfileRing(phi)
        self.k = to_fraction(k)
        _check_profile(ring)
        self.phi = ring.phi()
        one = ring.one()
        inv = ring.inverse_phi(1)
        self.g = [[inv, ring.zero()], [ring.zero(), self.phi]]
        self.g_inv = [[self.phi, ring.zero()], [ring.zero(), inv]]
        # J d_z = phi^{-1} d_theta, J d_theta = -phi d_z ; J[a][i] = (J d_i)^a
        self.J = [[ring.zero(), -self.phi], [inv, ring.zero()]]
        gam = _levi_civita(ring, self.g, self.g_inv)
        metric = FiberMetric([[0, 1], [-1, 0]])
        super().__init__(ring, metric, gam, ())
        rho = self.ricci_form()
        if self.k:
            self.Omega = [[[x.scale(self.k) for x in row] for row in rho]]
        require_valid(self)
        self.rotation = [ring.zero(), one]

    def scalar_curvature(self):
        ric = self.ricci
        return _sum(self.ring, [self.g_inv[a][b] * ric[a][b] for a in range(2) for b in range(2)])

    def ricci_form(self):
        """``rho_ij = Ric(J d_i, d_j)``."""
        ric = self.ricci
        return [[_sum(self.ring, [self.J[a][i] * ric[a][j] for a in range(2)]) for j in range(2)]
                for i in range(2)]

    def laplacian(self, f):
        """Positive Laplacian ``-d_i(g^ij d_j f)`` (here sqrt(det g) = 1)."""
        ring = self.ring
        parts = []
        for i in range(2):
            flux = _sum(ring, [self.g_inv[i][j] * f.derivative(j) for j in range(2)])
            parts.append(-flux.derivative(i))
        return _sum(ring, parts)

    def volume_form_coefficient(self):
        return self.ring.one()


def _levi_civita(ring, g, g_inv):
    n = len(g)
    dg = [[[g[i][j].derivative(k) for k in range(n)] for j in range(n)] for i in range(n)]
    out = [[[None] * n for _ in range(n)] for _ in range(n)]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                parts = []
                for l in range(n):
                    if not g_inv[k][l]:
                        continue
                    s = _sum(ring, [dg[l][j][i], dg[l][i][j], -dg[i][j][l]])
                    if s:
                        parts.append(g_inv[k][l] * s)
                out[k][i][j] = _sum(ring, parts).scale(Fraction(1, 2))
    return out


def _check_profile(ring: ProfileRing):
    phi = ring.phi()
    dphi = phi.derivative(0)
    errs = []
    if phi.evaluate_exact(1) != 0 or phi.evaluate_exact(-1) != 0:
        errs.append("profile must vanish at z = +-1")
    if dphi.evaluate_exact(-1) != 2 or dphi.evaluate_exact(1) != -2:
        errs.append("profile must have phi'(-1) = 2 and phi'(1) = -2")
    # positivity on (-1, 1): phi / (1 - z^2) has no real root in [-1, 1]
    if not errs:
        z = ring.ctx.gens()[0]
        q, _ = divmod(ring.phi_poly, 1 - z * z)
        coeffs = [0.0] * (q.degrees()[0] + 1)
        for e, c in q.to_dict().items():
            coeffs[int(e[0])] = float(c)
        roots = np.roots(coeffs[::-1]) if len(coeffs) > 1 else []
        real = [r.real for r in roots if abs(r.imag) < 1e-12]
        if any(-1 <= r <= 1 for r in real) or q(to_fmpq(0), to_fmpq(0)) <= 0:
            errs.append("profile must be positive on (-1, 1)")
    if errs:
        raise GeometryError(errs)


def build_s2(phi=(1, 0, -1), k=0) -> KahlerModelS2:
    return KahlerModelS2(phi, k)


# ---------------------------------------------------------------------------
# JSON model descriptions


def _trig_from_json(ring: TrigRing, spec):
    """``[{"freq": [...], "cos" | "sin" | "re" + "im": "p/q"}, ...]`` or a rational."""
    if isinstance(spec, (str, int)):
        return ring.const(to_fraction(spec))
    total = ring.zero()
    for term in spec:
        freq = tuple(term["freq"])
        if "cos" in term:
            total = total + ring.cos(freq, to_fraction(term["cos"]))
        elif "sin" in term:
            total = total + ring.sin(freq, to_fraction(term["sin"]))
        else:
            total = total + ring.from_fourier({freq: (to_fraction(term.get("re", 0)), to_fraction(term.get("im", 0)))})
    return total


def load_model(desc) -> ChartGeometry:
    """Build a geometry from a JSON description (dict or JSON text)."""
    if isinstance(desc, str):
        desc = json.loads(desc)
    kind = desc.get("model")
    m = int(desc.get("m", 1))
    if kind == "flat":
        Omega = [{tuple(map(int, key.split(","))): to_fraction(v) for key, v in a.items()}
                 for a in desc.get("Omega", [])]
        return build_flat(m, Omega)
    if kind == "torus":
        ring = TrigRing(2 * m)
        pert = desc.get("perturbation", {}) or {}
        T = {tuple(map(int, key.split(","))): _trig_from_json(ring, v) for key, v in pert.items()}
        Omega = [{tuple(map(int, key.split(","))): _trig_from_json(ring, v) for key, v in a.items()}
                 for a in desc.get("Omega", [])]
        return build_torus(m, T, Omega, ring)
    if kind == "s2":
        if m != 1:
            raise GeometryError(["the S^2 model has m = 1"])
        return build_s2([to_fraction(c) for c in desc.get("profile", ["1", "0", "-1"])],
                        to_fraction(desc.get("k", "0")))
    raise GeometryError([f"unknown model {kind!r}"])


def admissible_profile(even=0, odd=0) -> list:
    """Coefficients (low to high) of ``(1 - z^2)(1 + (even + odd z)(1 - z^2))``,
    an S^1-invariant metric on S^2 in the class of the round one for small
    ``even`` and ``odd``."""
    e, o = to_fraction(even), to_fraction(odd)
    base = [Fraction(1), Fraction(0), Fraction(-1)]
    g = [1 + e, o, -e, -o]  # 1 + (e + o z)(1 - z^2)
    out = [Fraction(0)] * (len(base) + len(g) - 1)
    for i, a in enumerate(base):
        for j, b in enumerate(g):
            out[i + j] += a * b
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return out
