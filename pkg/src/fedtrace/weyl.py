"""Weyl-algebra-bundle valued forms on a chart.

A :class:`WeylSection` is a finite sum of terms ``nu^k c(x) y^alpha dx^beta``
stored as ``{(k, alpha, beta): c}`` where ``alpha`` is an exponent vector and
``beta`` a strictly increasing tuple of form indices.  Every section carries
truncation caps ``(N, D)``: terms with ``k > N`` or Weyl degree
``2k + |alpha| > D`` are dropped on construction.
"""

from __future__ import annotations

from functools import lru_cache

import flint

from .scalar import to_fmpq

fmpq = flint.fmpq


class WeylError(ValueError):
    pass


class FiberMetric:
    """Constant symplectic matrix ``omega_ij`` and its inverse ``Lambda^ij``
    (``Lambda^ij omega_jk = delta^i_k``) on a Darboux chart."""

    def __init__(self, omega):
        n = len(omega)
        om = [[to_fmpq(omega[i][j]) for j in range(n)] for i in range(n)]
        for i in range(n):
            for j in range(n):
                if om[i][j] != -om[j][i]:
                    raise WeylError("omega is not antisymmetric")
        mat = flint.fmpq_mat(n, n, [x for row in om for x in row])
        if mat.det() == 0:
            raise WeylError("omega is degenerate")
        inv = mat.inv()
        self.n = n
        self.omega = tuple(tuple(row) for row in om)
        self.lam = tuple(tuple(inv[i, j] for j in range(n)) for i in range(n))
        self._nonzero = tuple(
            (i, j, self.lam[i][j]) for i in range(n) for j in range(n) if self.lam[i][j]
        )
        self._cache: dict = {}

    @classmethod
    def standard(cls, m: int) -> "FiberMetric":
        """omega = dx^1^dx^2 + dx^3^dx^4 + ..."""
        n = 2 * m
        om = [[0] * n for _ in range(n)]
        for a in range(m):
            om[2 * a][2 * a + 1] = 1
            om[2 * a + 1][2 * a] = -1
        return cls(om)

    def check(self) -> bool:
        n = self.n
        for i in range(n):
            for k in range(n):
                s = sum((self.lam[i][j] * self.omega[j][k] for j in range(n)), fmpq(0))
                if s != (1 if i == k else 0):
                    return False
        return True

    def contraction(self, alpha: tuple, beta: tuple, tmax: int):
        """Terms of ``y^alpha o y^beta`` with at most ``tmax`` contractions.

        Returns a tuple of ``(t, exponent, coefficient)``; the coefficient
        includes ``(1/2)^t / t!`` and the nu-power is ``t``.
        """
        key = (alpha, beta, tmax)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        out = [(0, tuple(a + b for a, b in zip(alpha, beta)), fmpq(1))]
        level = {(alpha, beta): fmpq(1)}
        for t in range(1, tmax + 1):
            nxt: dict = {}
            for (a, b), c in level.items():
                for i, j, lij in self._nonzero:
                    if a[i] and b[j]:
                        a2 = a[:i] + (a[i] - 1,) + a[i + 1:]
                        b2 = b[:j] + (b[j] - 1,) + b[j + 1:]
                        v = c * lij * a[i] * b[j] / (2 * t)
                        nxt[(a2, b2)] = nxt.get((a2, b2), 0) + v
            level = {k: v for k, v in nxt.items() if v}
            if not level:
                break
            merged: dict = {}
            for (a, b), c in level.items():
                e = tuple(x + y for x, y in zip(a, b))
                merged[e] = merged.get(e, 0) + c
            out.extend((t, e, c) for e, c in merged.items() if c)
        res = tuple(out)
        self._cache[key] = res
        return res


@lru_cache(maxsize=None)
def wedge_indices(b1: tuple, b2: tuple):
    """``dx^b1 ^ dx^b2`` as ``(sign, merged)``, or ``None`` if it vanishes."""
    if set(b1) & set(b2):
        return None
    seq = b1 + b2
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return (-1 if inversions % 2 else 1), tuple(sorted(seq))


def _unit(n: int, i: int) -> tuple:
    return tuple(1 if j == i else 0 for j in range(n))


class WeylSection:
    __slots__ = ("ring", "n", "terms", "N", "D")

    def __init__(self, ring, n: int, terms: dict, N: int, D: int):
        self.ring = ring
        self.n = n
        self.N = N
        self.D = D
        self.terms = {
            key: c for key, c in terms.items()
            if c and key[0] <= N and 2 * key[0] + sum(key[1]) <= D
        }

    # -- construction ------------------------------------------------------

    @classmethod
    def zero(cls, ring, n, N, D):
        return cls(ring, n, {}, N, D)

    @classmethod
    def function(cls, f, n, N, D, nu_power: int = 0):
        return cls(f.ring, n, {(nu_power, (0,) * n, ()): f}, N, D)

    @classmethod
    def series(cls, coeffs, n, N, D):
        """Lift a nu-series ``[f0, f1, ...]`` of functions to a y-free section."""
        ring = next(c.ring for c in coeffs)
        return cls(ring, n, {(k, (0,) * n, ()): c for k, c in enumerate(coeffs)}, N, D)

    @classmethod
    def monomial(cls, ring, n, N, D, k=0, alpha=None, beta=(), coeff=1):
        alpha = tuple(alpha) if alpha is not None else (0,) * n
        c = coeff if hasattr(coeff, "derivative") else ring.const(coeff)
        beta = tuple(beta)
        if len(set(beta)) != len(beta):
            return cls.zero(ring, n, N, D)
        sign, beta_sorted = wedge_indices(beta, ())
        return cls(ring, n, {(k, alpha, beta_sorted): c.scale(sign) if sign < 0 else c}, N, D)

    def _new(self, terms, N=None, D=None):
        return WeylSection(self.ring, self.n, terms, self.N if N is None else N, self.D if D is None else D)

    # -- bookkeeping -------------------------------------------------------

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    @staticmethod
    def weyl_degree(key) -> int:
        return 2 * key[0] + sum(key[1])

    def degrees(self) -> set:
        return {self.weyl_degree(k) for k in self.terms}

    def min_degree(self) -> int | None:
        return min(self.degrees(), default=None)

    def form_degrees(self) -> set:
        return {len(k[2]) for k in self.terms}

    def form_degree(self) -> int:
        qs = self.form_degrees()
        if len(qs) > 1:
            raise WeylError(f"section has mixed form degrees {sorted(qs)}")
        return qs.pop() if qs else 0

    def homogeneous(self, d: int) -> "WeylSection":
        return self._new({k: c for k, c in self.terms.items() if self.weyl_degree(k) == d})

    def truncate(self, N=None, D=None) -> "WeylSection":
        N = self.N if N is None else min(N, self.N)
        D = self.D if D is None else min(D, self.D)
        return self._new(self.terms, N, D)

    def with_caps(self, N, D) -> "WeylSection":
        """Same terms under new caps (terms beyond the new caps are dropped)."""
        return self._new(self.terms, N, D)

    def y_free(self) -> "WeylSection":
        return self._new({k: c for k, c in self.terms.items() if not any(k[1])})

    # -- linear structure --------------------------------------------------

    def _caps(self, other):
        if self.n != other.n:
            raise WeylError("dimension mismatch")
        return min(self.N, other.N), min(self.D, other.D)

    def __add__(self, other):
        N, D = self._caps(other)
        terms = dict(self.terms)
        for k, c in other.terms.items():
            prev = terms.get(k)
            terms[k] = c if prev is None else prev + c
        return self._new(terms, N, D)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return self._new({k: -c for k, c in self.terms.items()})

    def scale(self, q) -> "WeylSection":
        """Multiply by a rational or by a coefficient function."""
        if hasattr(q, "derivative"):
            return self._new({k: c * q for k, c in self.terms.items()})
        q = to_fmpq(q)
        return self._new({k: c.scale(q) for k, c in self.terms.items()})

    def shift_nu(self, s: int) -> "WeylSection":
        """Multiply by nu^s."""
        return self._new({(k[0] + s,) + k[1:]: c for k, c in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, WeylSection):
            return NotImplemented
        diff = self - other
        return not diff.terms

    def __repr__(self):
        return f"WeylSection(n={self.n}, caps=({self.N},{self.D}), terms={len(self.terms)})"


def _accumulate(out: dict, key, val):
    prev = out.get(key)
    out[key] = val if prev is None else prev + val


def _product(a: WeylSection, b: WeylSection, metric: FiberMetric, commutator: bool) -> WeylSection:
    N, D = a._caps(b)
    out: dict = {}
    bterms = sorted(b.terms.items(), key=lambda kv: WeylSection.weyl_degree(kv[0]))
    bdeg = [WeylSection.weyl_degree(k) for k, _ in bterms]
    for (k1, al1, be1), c1 in a.terms.items():
        d1 = 2 * k1 + sum(al1)
        p1 = sum(al1)
        for idx, ((k2, al2, be2), c2) in enumerate(bterms):
            if d1 + bdeg[idx] > D:
                break
            w = wedge_indices(be1, be2)
            if w is None:
                continue
            sign, be = w
            tmax = min(N - k1 - k2, p1, sum(al2))
            if tmax < 0 or (commutator and tmax < 1):
                continue
            table = metric.contraction(al1, al2, tmax)
            prod = None
            for t, exp, q in table:
                if commutator:
                    if not t % 2:
                        continue
                    q = 2 * q
                if prod is None:
                    prod = c1 * c2
                _accumulate(out, (k1 + k2 + t, exp, be), prod.scale(q if sign > 0 else -q))
    return WeylSection(a.ring, a.n, out, N, D)


def fiber_product(a: WeylSection, b: WeylSection, metric: FiberMetric) -> WeylSection:
    """Weyl-rule product, wedging the form parts."""
    return _product(a, b, metric, commutator=False)


def supercommutator(a: WeylSection, b: WeylSection, metric: FiberMetric) -> WeylSection:
    """Graded commutator extended bilinearly over form degrees.

    For a pair of terms of form degrees q1, q2 the Weyl-rule terms with an
    even number of contractions cancel against ``(-1)^{q1 q2} b o a`` and the
    odd ones double.
    """
    return _product(a, b, metric, commutator=True)


def graded_commutator(a: WeylSection, b: WeylSection, metric: FiberMetric) -> WeylSection:
    a.form_degree()
    b.form_degree()
    return supercommutator(a, b, metric)


def sigma_product(a: WeylSection, b: WeylSection, metric: FiberMetric) -> list:
    """nu-coefficients of ``(a o b)|_{y=0}`` for 0-forms, without forming a o b."""
    N, D = a._caps(b)
    by_deg: dict = {}
    for key, c in b.terms.items():
        if key[2]:
            raise WeylError("sigma_product expects 0-forms")
        by_deg.setdefault(sum(key[1]), []).append((key, c))
    out = [None] * (N + 1)
    for (k1, al1, be1), c1 in a.terms.items():
        if be1:
            raise WeylError("sigma_product expects 0-forms")
        t = sum(al1)
        for (k2, al2, _), c2 in by_deg.get(t, ()):
            k = k1 + k2 + t
            if k > N:
                continue
            for tt, exp, q in metric.contraction(al1, al2, t):
                if tt == t:
                    v = (c1 * c2).scale(q)
                    out[k] = v if out[k] is None else out[k] + v
    zero = a.ring.zero()
    return [zero if v is None else v for v in out]


def delta(a: WeylSection) -> WeylSection:
    """``dx^l ^ d/dy^l``."""
    out: dict = {}
    for (k, al, be), c in a.terms.items():
        for l, e in enumerate(al):
            if not e:
                continue
            w = wedge_indices((l,), be)
            if w is None:
                continue
            sign, be2 = w
            al2 = al[:l] + (e - 1,) + al[l + 1:]
            _accumulate(out, (k, al2, be2), c.scale(e * sign))
    return a._new(out)


def delta_inv(a: WeylSection) -> WeylSection:
    """``(1/(p+q)) y^k i(d/dx^k)`` on the part of y-degree p and form degree q."""
    out: dict = {}
    for (k, al, be), c in a.terms.items():
        p, q = sum(al), len(be)
        if p + q == 0 or q == 0:
            continue
        for pos, idx in enumerate(be):
            be2 = be[:pos] + be[pos + 1:]
            al2 = al[:idx] + (al[idx] + 1,) + al[idx + 1:]
            coeff = fmpq(-1 if pos % 2 else 1, p + q)
            _accumulate(out, (k, al2, be2), c.scale(coeff))
    return a._new(out)


def d_exterior(a: WeylSection) -> WeylSection:
    """``dx^i ^ d/dx^i`` acting on coefficients, y treated as constant."""
    out: dict = {}
    for (k, al, be), c in a.terms.items():
        for i in range(a.n):
            w = wedge_indices((i,), be)
            if w is None:
                continue
            dc = c.derivative(i)
            if not dc:
                continue
            sign, be2 = w
            _accumulate(out, (k, al, be2), dc if sign > 0 else -dc)
    return a._new(out)


def nu_divide(a: WeylSection) -> WeylSection:
    out = {}
    for (k, al, be), c in a.terms.items():
        if k < 1:
            raise WeylError("section is not divisible by nu")
        out[(k - 1, al, be)] = c
    return a._new(out)


def eval_y0(a: WeylSection) -> list:
    """The y-free, form-degree-0 part as a nu-series ``[a_0, a_1, ...]``."""
    if any(key[2] for key in a.terms):
        raise WeylError("eval_y0 needs a 0-form")
    zero_alpha = (0,) * a.n
    series = [a.ring.zero() for _ in range(a.N + 1)]
    for (k, al, _), c in a.terms.items():
        if al == zero_alpha:
            series[k] = c
    return series


def interior(X, a: WeylSection) -> WeylSection:
    """Contraction ``i(X)`` of the form part with the vector field ``X``."""
    out: dict = {}
    for (k, al, be), c in a.terms.items():
        for pos, idx in enumerate(be):
            if not X[idx]:
                continue
            v = c * X[idx]
            _accumulate(out, (k, al, be[:pos] + be[pos + 1:]), -v if pos % 2 else v)
    return a._new(out)


def lie_derivative(X, a: WeylSection) -> WeylSection:
    """Lie derivative along ``X``; y^i and dx^i both transform as
    ``(d_j X^i) y^j`` (covariant symmetric tensors and forms)."""
    n = a.n
    dX = [[X[i].derivative(j) for j in range(n)] for i in range(n)]
    out: dict = {}
    for (k, al, be), c in a.terms.items():
        xc = None
        for i in range(n):
            if X[i]:
                t = X[i] * c.derivative(i)
                xc = t if xc is None else xc + t
        if xc is not None and xc:
            _accumulate(out, (k, al, be), xc)
        for i, e in enumerate(al):
            if not e:
                continue
            for j in range(n):
                if not dX[i][j]:
                    continue
                al2 = list(al)
                al2[i] -= 1
                al2[j] += 1
                _accumulate(out, (k, tuple(al2), be), (c * dX[i][j]).scale(e))
        for pos, i in enumerate(be):
            for j in range(n):
                if not dX[i][j]:
                    continue
                rest = be[:pos] + (j,) + be[pos + 1:]
                if len(set(rest)) < len(rest):
                    continue
                sign, be2 = wedge_indices(rest, ())
                v = c * dX[i][j]
                _accumulate(out, (k, al, be2), v if sign > 0 else -v)
    return a._new(out)
