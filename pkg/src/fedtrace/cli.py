"""Command-line front end.

    fedtrace verify --job job.json --seed 7 --out report.json

A job is a JSON object ``{"command", "model", "order", "weyl_cap", "seed",
"tolerance", "output", ...}``; flags override job fields.  Reports are JSON
with exact values as strings and decimals as renderings only.  The exit
status is 0 iff every check passes.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .coeffring import JetRing, Profile, TrigPoly, TrigRing
from .fedosov import (
    FedosovConnection,
    FedosovError,
    c2_closed_form,
    c3_antisymmetric_closed_form,
    c3_closed_form,
    c3_hypotheses,
    lie_identity_check,
    poisson,
)
from .geometry import GeometryError, KahlerModelS2, cahen_gutt_momentum, load_model, _trig_from_json
from .invariants import (
    MomentError,
    futaki_c1p,
    invariant_leading,
    kahler_invariant,
    normalization_bridge,
    solve_moment,
)
from .scalar import Scalar, to_fraction
from .trace import TorusPath, trace_density, variation_check, verify_trace_property
from .weyl import WeylSection, eval_y0

COMMANDS = ("star", "verify", "density", "momentum", "invariant", "variation")


class JobError(ValueError):
    pass


@dataclass
class JobSpec:
    command: str
    model: dict
    order: int = 2
    weyl_cap: int | None = None
    seed: int = 0
    tolerance: float = 1e-8
    output: str | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "JobSpec":
        d = dict(d)
        command = d.pop("command", None)
        if command not in COMMANDS:
            raise JobError(f"command must be one of {COMMANDS}, got {command!r}")
        model = d.pop("model", None)
        if not isinstance(model, dict) or "model" not in model:
            raise JobError("job needs a model description object")
        order = int(d.pop("order", 2))
        if order < 1:
            raise JobError("order must be >= 1")
        cap = d.pop("weyl_cap", None)
        tol = float(d.pop("tolerance", 1e-8))
        if tol <= 0:
            raise JobError("tolerance must be positive")
        return cls(command, model, order, None if cap is None else int(cap), int(d.pop("seed", 0)),
                   tol, d.pop("output", None), d)

    def echo(self) -> dict:
        out = {"command": self.command, "model": self.model, "order": self.order,
               "weyl_cap": self.weyl_cap, "seed": self.seed, "tolerance": self.tolerance}
        out.update(self.extra)
        return out


class Report:
    def __init__(self, job: JobSpec | None):
        self.job = job
        self.checks: list[dict] = []
        self.values: dict = {}

    def check(self, name: str, ok: bool | None, **detail):
        status = "unknown" if ok is None else ("pass" if ok else "fail")
        entry = {"name": name, "status": status}
        entry.update({k: _jsonable(v) for k, v in detail.items()})
        self.checks.append(entry)
        return ok

    def error(self, name: str, exc: Exception):
        self.checks.append({"name": name, "status": "fail", "error": f"{type(exc).__name__}: {exc}"})

    @property
    def ok(self) -> bool:
        return all(c["status"] == "pass" for c in self.checks)

    def to_json(self) -> str:
        doc = {"job": self.job.echo() if self.job else None, "checks": self.checks,
               "values": {k: _jsonable(v) for k, v in self.values.items()}, "ok": self.ok}
        return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False)


def _jsonable(v):
    if isinstance(v, Scalar):
        return {"exact": str(v), "decimal": float(v)}
    if isinstance(v, Fraction):
        return {"exact": str(v), "decimal": float(v)}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (TrigPoly, Profile)) or hasattr(v, "derivative"):
        return render_function(v)
    return v


def render_function(f) -> str:
    """Canonical text of a coefficient function."""
    if isinstance(f, TrigPoly):
        terms = sorted(f.fourier().items())
        if not terms:
            return "0"
        parts = []
        for k, (a, b) in terms:
            c = str(a) if not b else f"({a}{'+' if b >= 0 else '-'}{abs(b)}i)"
            parts.append(c if not any(k) else f"{c}·e^(i{list(k)}·x)")
        return " + ".join(parts)
    if isinstance(f, Profile):
        num = str(f.num)
        return num if f.j == 0 else f"({num})/phi^{f.j}"
    return str(f.poly)


# ---------------------------------------------------------------------------
# function input


def parse_function(g, spec):
    ring = g.ring
    if isinstance(spec, (str, int)):
        return ring.const(to_fraction(spec))
    if isinstance(ring, TrigRing):
        return _trig_from_json(ring, spec)
    if isinstance(spec, dict):
        coeffs = {tuple(int(x) for x in key.split(",")): to_fraction(v) for key, v in spec.items()}
        if isinstance(ring, JetRing):
            return ring.from_dict(coeffs)
        return ring.from_dict(coeffs)
    raise JobError(f"cannot parse function {spec!r}")


def random_function(g, rng: random.Random):
    ring = g.ring
    if isinstance(ring, TrigRing):
        return ring.random_element(rng, max_freq=2, nterms=2)
    if isinstance(ring, JetRing):
        return ring.random_element(rng, degree=4, nterms=3)
    return ring.random_element(rng, degree=2, nterms=3)


# ---------------------------------------------------------------------------
# commands


def _connection(g, job: JobSpec, N=None):
    return FedosovConnection(g, job.order if N is None else N, job.weyl_cap)


def cmd_star(job, g, rep):
    rng = random.Random(job.seed)
    f = parse_function(g, job.extra["f"]) if "f" in job.extra else random_function(g, rng)
    h = parse_function(g, job.extra["g"]) if "g" in job.extra else random_function(g, rng)
    fc = _connection(g, job)
    series = fc.star(f, h)
    rep.values["f"] = f
    rep.values["g"] = h
    rep.values["star"] = {f"nu^{k}": c for k, c in enumerate(series)}
    rep.check("C0 is the pointwise product", series[0] == f * h)
    if len(series) > 1:
        other = fc.star(h, f)
        rep.check("C1 antisymmetric part is the Poisson bracket", series[1] - other[1] == poisson(g, f, h))


def _moyal(g, f, h, N):
    """Weyl-rule expansion of the Moyal product on flat space."""
    lam = g.metric.lam
    n = g.n
    out = []
    # iterate the bidifferential operator Lambda^ij d_i (x) d_j
    level = [(f, h, Fraction(1))]
    for k in range(N + 1):
        acc = g.ring.zero()
        for a, b, c in level:
            acc = acc + (a * b).scale(c)
        out.append(acc)
        nxt = []
        for a, b, c in level:
            for i in range(n):
                for j in range(n):
                    if lam[i][j]:
                        da, db = a.derivative(i), b.derivative(j)
                        if da and db:
                            nxt.append((da, db, c * to_fraction(lam[i][j]) / (2 * (k + 1))))
        level = nxt
    return out


def cmd_verify(job, g, rep):
    rng = random.Random(job.seed)
    N = job.order
    trials = int(job.extra.get("trials", 3))
    kind = getattr(g, "model", "chart")
    fc = _connection(g, job)
    rep.check("Abelian condition", not fc.abelian_residual(), residual_terms=len(fc.abelian_residual()))
    rep.check("Weyl curvature is -omega + Omega", not fc.weyl_curvature_residual())
    rep.check("delta^{-1} r = 0", not _delta_inv_r(fc))
    for t in range(trials):
        f, h, k = (random_function(g, rng) for _ in range(3))
        Qf = fc.quantize(f)
        rep.check(f"sigma Q = id [{t}]", eval_y0(Qf)[0] == f and not any(eval_y0(Qf)[1:]))
        rep.check(f"D Q = 0 [{t}]", not fc.apply_D(Qf).truncate(D=fc.D - 1))
        s_fh = fc.star(f, h)
        if kind == "flat" and not g.Omega:
            rep.check(f"Moyal equality [{t}]", s_fh == _moyal(g, f, h, N))
        left = fc.star(s_fh, k)
        right = fc.star(f, fc.star(h, k))
        rep.check(f"associativity mod nu^{N + 1} [{t}]", left == right)
        if N >= 2:
            rep.check(f"C2 closed form [{t}]", s_fh[2] == c2_closed_form(g, f, h))
        if N >= 3:
            s_hf = fc.star(h, f)
            rep.check(f"C3 antisymmetric closed form [{t}]", s_fh[3] - s_hf[3] == c3_antisymmetric_closed_form(g, f, h))
            ok3 = s_fh[3] == c3_closed_form(g, f, h)
            hyp = {} if ok3 else c3_hypotheses(g, f, h, s_fh[3])
            rep.check(f"C3 closed form as displayed [{t}]", ok3, hypotheses=hyp)
        if kind == "torus" and N >= 3:
            res = verify_trace_property(g, f, h, fc if fc.N >= 3 else None)
            rep.check(f"trace property nu^1..nu^3 [{t}]", all(not r for r in res), residuals=res)
    wider = FedosovConnection(g, N, fc.D + 2)
    f, h = random_function(g, rng), random_function(g, rng)
    rep.check("cap convergence (D + 2)", fc.star(f, h) == wider.star(f, h))
    if isinstance(g, KahlerModelS2):
        _verify_s2(job, g, rep, rng)
    if kind == "flat":
        rep.check("mu(flat) = 0", not cahen_gutt_momentum(g))


def _delta_inv_r(fc):
    from .weyl import delta_inv

    return delta_inv(fc.r)


def _verify_s2(job, g, rep, rng):
    S = g.scalar_curvature()
    rep.check("S = -phi''", S == -g.phi.derivative(0).derivative(0))
    N, D = max(1, job.order - 1), 2 * max(1, job.order - 1)
    fc = FedosovConnection(g, N + 1, D + 2)
    qm = solve_moment(g, mode="none")
    for t in range(int(job.extra.get("trials", 3))):
        terms = {}
        for _ in range(4):
            key = (rng.randint(0, 1), (rng.randint(0, 2), rng.randint(0, 2)),
                   tuple(sorted(rng.sample(range(2), rng.randint(0, 2)))))
            terms[key] = g.ring.random_element(rng)
        a = WeylSection(g.ring, 2, terms, N, D)
        res = lie_identity_check(fc, g.rotation, qm.mu[: N + 2], a)
        rep.check(f"Lie-derivative identity [{t}]", not res, residual_terms=len(res))


def cmd_density(job, g, rep):
    d = trace_density(g)
    rep.values["rho1"] = d.rho1
    rep.values["rho2"] = d.rho2
    rep.values["mu_cahen_gutt"] = cahen_gutt_momentum(g)
    if isinstance(g, KahlerModelS2):
        rep.check("rho1 = -(k/2) S", d.rho1 == g.scalar_curvature().scale(-g.k / 2))
    if not g.Omega:
        rep.check("rho1 = 0 and rho2 = -mu/24 without Omega",
                  not d.rho1 and d.rho2 == cahen_gutt_momentum(g).scale(Fraction(-1, 24)))


def cmd_momentum(job, g, rep):
    mode = job.extra.get("normalization", "paper_c")
    X = job.extra.get("X")
    if X is not None:
        X = [parse_function(g, c) for c in X]
    try:
        qm = solve_moment(g, X, mode=mode)
    except MomentError as exc:
        rep.error("quantum moment map exists", exc)
        return
    rep.values["mu"] = {f"nu^{j}": f for j, f in enumerate(qm.mu)}
    rep.values["normalization"] = qm.normalization
    from .invariants import check_moment_equation

    rep.check("d mu = i(X)(omega - Omega)", check_moment_equation(qm, g))


def cmd_invariant(job, g, rep):
    if not isinstance(g, KahlerModelS2):
        rep.error("invariant", JobError("invariants are computed on the S^2 model"))
        return
    tol = job.tolerance
    qm = solve_moment(g, mode="paper_c")
    lead = invariant_leading(g, qm)
    rep.values["leading"] = lead.as_dict()
    ki = kahler_invariant(g, tol=tol)
    rep.values["kahler_direct"] = ki.direct.as_dict()
    rep.values["kahler_futaki"] = ki.futaki.as_dict()
    rep.check("direct and Futaki routes agree", ki.agree, max_diff=ki.max_diff)
    f = qm.mu[0]
    rep.values["F_c1"] = futaki_c1p(g, f, 1)
    rep.values["F_c1^2"] = futaki_c1p(g, f, 2)
    rep.values["normalization_constant"] = normalization_bridge(g)


def cmd_variation(job, g, rep):
    spec = job.extra.get("path", {})
    ring = g.ring if isinstance(g.ring, TrigRing) else None
    if ring is None:
        rep.error("variation", JobError("the variation check runs on the torus model"))
        return

    def tensor(d):
        return {tuple(int(x) for x in key.split(",")): _trig_from_json(ring, v) for key, v in (d or {}).items()}

    def forms(lst):
        return [{tuple(int(x) for x in key.split(",")): _trig_from_json(ring, v) for key, v in a.items()}
                for a in (lst or [])]

    beta = [[_trig_from_json(ring, c) for c in b] for b in spec.get("beta", [])]
    path = TorusPath(g.m, tensor(spec.get("T0", job.model.get("perturbation"))), tensor(spec.get("T1")),
                     forms(spec.get("Omega0", job.model.get("Omega"))), beta, ring)
    F = parse_function(g, job.extra["F"]) if "F" in job.extra else random_function(g, random.Random(job.seed))
    dt = to_fraction(job.extra.get("dt", "1/10000"))
    res = variation_check(path, F, to_fraction(job.extra.get("t0", "0")), dt)
    rep.values["lhs"] = res.lhs
    rep.values["rhs"] = res.rhs
    rep.values["rel_err"] = res.rel_err
    rep.values["halving_ratio"] = ["exact" if r is None else r for r in res.halving_ratio]
    rep.check("D-flatness of Gbar-dot + r-dot - beta-dot", res.precondition_ok)
    rep.check("D^{-1} = -Q delta^{-1}", res.dinv_consistent)
    rep.check("variation formula", res.converged(1e-6), rel_err=res.rel_err)


HANDLERS = {"star": cmd_star, "verify": cmd_verify, "density": cmd_density,
            "momentum": cmd_momentum, "invariant": cmd_invariant, "variation": cmd_variation}


def run(job: JobSpec) -> Report:
    rep = Report(job)
    try:
        g = load_model(job.model)
    except (GeometryError, ValueError, KeyError) as exc:
        rep.error("model validation", exc)
        return rep
    try:
        HANDLERS[job.command](job, g, rep)
    except (FedosovError, MomentError, GeometryError, JobError) as exc:
        rep.error(job.command, exc)
    return rep


def _load_json_arg(text: str) -> dict:
    p = Path(text)
    if p.exists():
        return json.loads(p.read_text())
    return json.loads(text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fedtrace", description="Fedosov star products, trace densities and invariants.")
    ap.add_argument("command", nargs="?", choices=COMMANDS, help="overrides the job's command")
    ap.add_argument("--job", help="job file (JSON)")
    ap.add_argument("--model", help="model description, JSON text or file; overrides the job's model")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--order", type=int)
    ap.add_argument("--weyl-cap", type=int)
    ap.add_argument("--tolerance", type=float)
    ap.add_argument("--out")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    raw = _load_json_arg(args.job) if args.job else {}
    if args.command:
        raw["command"] = args.command
    if args.model:
        raw["model"] = _load_json_arg(args.model)
    for key, val in (("seed", args.seed), ("order", args.order), ("weyl_cap", args.weyl_cap),
                     ("tolerance", args.tolerance), ("output", args.out)):
        if val is not None:
            raw[key] = val
    try:
        job = JobSpec.from_dict(raw)
    except (JobError, ValueError, TypeError) as exc:
        rep = Report(None)
        rep.error("job schema", exc)
        print(rep.to_json())
        return 2
    rep = run(job)
    text = rep.to_json()
    if job.output:
        Path(job.output).write_text(text + "\n")
    else:
        print(text)
    return 0 if rep.ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
