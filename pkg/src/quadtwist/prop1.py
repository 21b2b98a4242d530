"""Bounded-degree classification of equivariant semilinear involutions of K^2.

We look for maps

    tau(x, y) = (sigma(x), f1(x) * y + f2(x) * sigma(y))

with f1, f2 polynomials in x and sigma(x) of bidegree <= D and unknown
coefficients, subject to tau o tau = id and tau o mu_l = mu_(1/l) o tau for
mu_l(x, y) = (l^2 x, l^3 y), l in the norm-one torus.  The pipeline is

1. ``ansatz``: unknowns a_{k,l}, b_{k,l} (each with a formal conjugate);
2. ``apply_equivariance_filter``: equivariance kills every unknown whose
   monomial has nonzero torus weight;
3. ``normal_form_norm``: what survives is f1 = xb^3 R(x xb), f2 = Q(x xb);
4. ``extract_involution_constraints``: tau o tau = id, coefficientwise in z;
5. ``eliminate``: top-degree descent.  z^3 R(z)^2 has odd degree and Q sigma(Q)
   even degree, so the top equation is always r^2 = 0 or q sigma(q) = 0.

The result is the family f1 = 0, f2 = w with w sigma(w) = 1.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .arith import Discriminant, QuadElem, is_square_rational
from .checks import DEFAULT_SEED, CheckResult, result, small_rational
from .maps import PolyMap, map_compose
from .poly import PolyError, PolyRing, SparsePoly, Var, conjugate_pair, rewrite_norm, unit, weight_decompose
from .schwarz import check_equivariance
from .twist import weil_restrict

MAX_DEGREE_BOUND = 12
DEFAULT_DEGREE_BOUND = 8

PHI_PRIME = "phi_prime"
PHI_DOUBLEPRIME = "phi_doubleprime"

# weight of the constant term of each slot under l^w f(l^2 x)
SLOT_SHIFT = {PHI_PRIME: 6, PHI_DOUBLEPRIME: 0}
SLOT_PREFIX = {PHI_PRIME: "a", PHI_DOUBLEPRIME: "b"}

X, XB = conjugate_pair("x", "xb")
Y, YB = conjugate_pair("y", "yb")
LAM = unit("l")


class EliminationError(RuntimeError):
    """Internal consistency failure: the parity argument did not apply."""


class ReplayError(RuntimeError):
    pass


def symbol(name: str) -> tuple[Var, Var]:
    return conjugate_pair(name, "s" + name)


@dataclass(frozen=True)
class UnknownPoly:
    """sum over (k, l) of coeffs[(k, l)] * x^k * xb^l, coefficients formal."""

    bound: int
    slot: str
    coeffs: dict[tuple[int, int], str]
    killed: tuple[tuple[int, int], ...] = ()

    def poly(self, K: Discriminant) -> SparsePoly:
        vars = [X, XB]
        for name in self.coeffs.values():
            vars.extend(symbol(name))
        ring = PolyRing(K, vars)
        total = ring.const(0)
        for (k, l), name in sorted(self.coeffs.items()):
            total = total + ring[name] * ring["x"] ** k * ring["xb"] ** l
        return total


def ansatz(D: int, K: Discriminant | None = None) -> tuple[UnknownPoly, UnknownPoly]:
    if not 0 <= D:
        raise ValueError("degree bound must be >= 0")
    out = []
    for slot in (PHI_PRIME, PHI_DOUBLEPRIME):
        p = SLOT_PREFIX[slot]
        coeffs = {(k, l): f"{p}{k}_{l}" for k in range(D + 1) for l in range(D + 1)}
        out.append(UnknownPoly(D, slot, coeffs))
    return out[0], out[1]


def equivariance_weights(p: UnknownPoly, K: Discriminant) -> dict[tuple[int, int], int]:
    """Torus weight of each ansatz monomial in l^w f(l^2 x), via the polynomial engine."""
    ring = PolyRing(K, [X, XB, LAM])
    x, xb, l = ring.gens("x", "xb", "l")
    shifted = p.poly(K).compose({"x": l**2 * x, "xb": l**-2 * xb}) * l ** SLOT_SHIFT[p.slot]
    weights: dict[tuple[int, int], int] = {}
    names = {name: kl for kl, name in p.coeffs.items()}
    for w, part in weight_decompose(shifted, "l").items():
        for name in part.used_vars() & set(names):
            weights[names[name]] = w
    return weights


def apply_equivariance_filter(p: UnknownPoly, K: Discriminant) -> UnknownPoly:
    """Zero every unknown whose monomial has nonzero torus weight."""
    weights = equivariance_weights(p, K)
    keep = {kl: n for kl, n in p.coeffs.items() if weights[kl] == 0}
    killed = tuple(sorted(kl for kl in p.coeffs if weights[kl] != 0))
    return UnknownPoly(p.bound, p.slot, keep, p.killed + killed)


@dataclass(frozen=True)
class NormPoly:
    """A univariate polynomial in z = x * xb with formal coefficients."""

    prefix: str
    shift: int
    symbols: dict[int, str]
    source: dict[int, str]  # z-power -> original ansatz unknown

    @property
    def degree(self) -> int:
        return max(self.symbols, default=-1)

    def is_empty(self) -> bool:
        return not self.symbols

    def in_x(self, K: Discriminant) -> SparsePoly:
        """xb^shift * U(x xb) as a polynomial in x, xb."""
        vars = [X, XB]
        for name in self.symbols.values():
            vars.extend(symbol(name))
        ring = PolyRing(K, vars)
        total = ring.const(0)
        for i, name in sorted(self.symbols.items()):
            total = total + ring[name] * ring["x"] ** i * ring["xb"] ** (i + self.shift)
        return total


def normal_form_norm(phi1: UnknownPoly, phi2: UnknownPoly, K: Discriminant) -> tuple[NormPoly, NormPoly]:
    """Rewrite the filtered ansatz as xb^3 R(x xb) and Q(x xb).

    Raises NormFormError when a monomial is off the allowed shift, which is
    what happens for an unfiltered ansatz.
    """
    out = []
    for p, shift, prefix in ((phi1, 3, "r"), (phi2, 0, "q")):
        nf = rewrite_norm(p.poly(K), ("x", "xb"), shifts=(shift,))
        symbols, source = {}, {}
        for i, coeff in nf.coeffs.items():
            (name,) = [n for n in coeff.used_vars() if not n.startswith("s")]
            symbols[i] = f"{prefix}{i}"
            source[i] = name
        out.append(NormPoly(prefix, shift, symbols, source))
    return out[0], out[1]


@dataclass(frozen=True)
class Equation:
    """``poly = 0`` with provenance."""

    poly: SparsePoly
    source: str
    degree: int

    def __str__(self) -> str:
        return f"[{self.source} z^{self.degree}] {self.poly} = 0"


@dataclass
class ConstraintSystem:
    field: Discriminant
    equations: list[Equation]
    unknowns: list[str]

    def __str__(self) -> str:
        return "\n".join(str(e) for e in self.equations)

    def pending(self) -> list[Equation]:
        return [e for e in self.equations if not e.poly.is_zero()]

    def substitute_zero(self, names: Iterable[str]) -> "ConstraintSystem":
        names = list(names)
        eqs = [Equation(e.poly.substitute_zero(names), e.source, e.degree) for e in self.equations]
        return ConstraintSystem(self.field, eqs, [u for u in self.unknowns if u not in names])

    def snapshot(self) -> list[str]:
        return [str(e) for e in self.pending()]


def build_candidate(R: NormPoly, Q: NormPoly, K: Discriminant) -> PolyMap:
    """tau(x, y) = (xb, xb^3 R(x xb) y + Q(x xb) yb) with formal R, Q."""
    ring = PolyRing(K, [X, XB, Y, YB])
    xb, y, yb = ring.gens("xb", "y", "yb")
    f1 = R.in_x(K)
    f2 = Q.in_x(K)
    return PolyMap.from_components(("x", "y"), (xb.lift(ring.vars), f1 * y + f2 * yb), "tau")


def extract_involution_constraints(R: NormPoly, Q: NormPoly, K: Discriminant) -> ConstraintSystem:
    """Coefficient equations of tau o tau = id for the normal-form candidate."""
    tau = build_candidate(R, Q, K)
    sq = map_compose(tau, tau)
    coeffs = sq.components[1].collect(["y", "yb"])
    extra = set(coeffs) - {(1, 0), (0, 1)}
    if extra:
        raise EliminationError(f"tau o tau is not linear in y: {sorted(extra)}")
    zero = sq.components[1].zero()
    e1 = coeffs.get((1, 0), zero) - 1
    e2 = coeffs.get((0, 1), zero)
    # (1): coefficient of y is xb-shift 0, i.e. a polynomial in z = x xb
    nf1 = rewrite_norm(e1, ("x", "xb"), shifts=(0,))
    # (2): coefficient of yb carries x^3 when R is nonzero
    nf2 = rewrite_norm(e2, ("xb", "x"), shifts=(0, 3))
    eqs = [Equation(c, "eq1", n) for n, c in sorted(nf1.coeffs.items(), reverse=True)]
    eqs += [Equation(c, "eq2", n) for n, c in sorted(nf2.coeffs.items(), reverse=True)]
    unknowns = [f"r{i}" for i in sorted(R.symbols)] + [f"q{i}" for i in sorted(Q.symbols)]
    return ConstraintSystem(K, eqs, unknowns)


@dataclass(frozen=True)
class TraceStep:
    kind: str
    anchor: str
    before: str = ""
    after: str = ""
    symbols: tuple[str, ...] = ()
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "anchor": self.anchor,
            "before": self.before,
            "after": self.after,
            "symbols": list(self.symbols),
            "note": self.note,
        }


@dataclass
class ProofTrace:
    bound: int
    alpha: str
    steps: list[TraceStep] = field(default_factory=list)

    def add(self, *args, **kwargs) -> None:
        self.steps.append(TraceStep(*args, **kwargs))

    def kinds(self) -> list[str]:
        return [s.kind for s in self.steps]

    def to_json(self) -> dict:
        return {"degree_bound": self.bound, "alpha": self.alpha, "steps": [s.as_dict() for s in self.steps]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


@dataclass(frozen=True)
class SolutionFamily:
    """f1 = 0, f2 = omega with omega * sigma(omega) = 1."""

    bound: int
    omega: str
    phi_prime: str
    phi_doubleprime: str
    constraint: str
    eliminated: tuple[str, ...]


ANCHOR_WEIGHT = "a_{k,l} = 0 unless l = k + 3"
ANCHOR_WEIGHT2 = "f2(x) = f2(l^2 x) forces l = k"
ANCHOR_NORM = "f1 = xb^3 R(x xb), f2 = Q(x xb)"
ANCHOR_IDENTITY = "each coefficient of z^n vanishes separately"
ANCHOR_PARITY = "z^3 R(z)^2 has odd degree, P = Q sigma(Q) even degree"
ANCHOR_CONCLUSION = "R = 0 and Q is a constant of norm one"


def _top_rule(eq: Equation, unknowns: Sequence[str]) -> tuple[str, str]:
    """Classify a top equation as square-zero or norm-zero; return (rule, symbol)."""
    p = eq.poly
    if len(p.terms) != 1:
        raise EliminationError(f"top equation mixes terms: {eq}")
    ((exps, _c),) = p.items()
    if exps and len(exps) == 1:
        ((name, e),) = exps.items()
        if e == 2 and name.startswith("r") and name in unknowns:
            return "square-zero", name
    if len(exps) == 2:
        names = sorted(exps)
        if all(exps[n] == 1 for n in names):
            base = names[0]
            if names[1] == "s" + base and base in unknowns:
                return "norm-zero", base
    raise EliminationError(f"top equation is neither r^2 = 0 nor c sigma(c) = 0: {eq}")


def _top_equation(cs: ConstraintSystem) -> Equation | None:
    pending = [e for e in cs.pending() if e.source == "eq1" and e.degree > 0]
    if not pending:
        return None
    return max(pending, key=lambda e: e.degree)


def _discharge(cs: ConstraintSystem, trace: ProofTrace, before: list[str]) -> None:
    after = set(cs.snapshot())
    gone = [s for s in before if s not in after]
    if gone:
        trace.add("substitution", "substitute the eliminated unknowns", before="; ".join(gone), after="0 = 0")


def run_pipeline(D: int, K: Discriminant) -> tuple[ConstraintSystem, ProofTrace, NormPoly, NormPoly]:
    """Ansatz, filter, normal form and constraint extraction, with trace."""
    if not 0 <= D <= MAX_DEGREE_BOUND:
        raise ValueError(f"degree bound must be in 0..{MAX_DEGREE_BOUND}")
    trace = ProofTrace(D, str(K.alpha))
    phi1, phi2 = ansatz(D, K)
    f1 = apply_equivariance_filter(phi1, K)
    f2 = apply_equivariance_filter(phi2, K)
    trace.add(
        "weight-filter",
        ANCHOR_WEIGHT,
        before=f"{len(phi1.coeffs)} unknowns a_(k,l)",
        after=", ".join(f"a{k}_{l}" for k, l in sorted(f1.coeffs)) or "none",
        symbols=tuple(phi1.coeffs[kl] for kl in f1.killed),
    )
    trace.add(
        "weight-filter",
        ANCHOR_WEIGHT2,
        before=f"{len(phi2.coeffs)} unknowns b_(k,l)",
        after=", ".join(f"b{k}_{l}" for k, l in sorted(f2.coeffs)),
        symbols=tuple(phi2.coeffs[kl] for kl in f2.killed),
    )
    R, Q = normal_form_norm(f1, f2, K)
    trace.add(
        "norm-rewrite",
        ANCHOR_NORM,
        before=", ".join(f"{R.source[i]} -> r{i}" for i in sorted(R.source)) or "R = 0",
        after=", ".join(f"{Q.source[i]} -> q{i}" for i in sorted(Q.source)),
    )
    cs = extract_involution_constraints(R, Q, K)
    trace.add("norm-rewrite", ANCHOR_IDENTITY, after="; ".join(cs.snapshot()))
    return cs, trace, R, Q


def eliminate(cs: ConstraintSystem, trace: ProofTrace | None = None) -> tuple[SolutionFamily, ProofTrace]:
    K = cs.field
    if trace is None:
        trace = ProofTrace(-1, str(K.alpha))
    if is_square_rational(K.alpha):
        raise EliminationError("norm-zero rule needs an anisotropic norm form (alpha must be a non-square)")
    eliminated: list[str] = []
    while True:
        top = _top_equation(cs)
        if top is None:
            break
        rule, name = _top_rule(top, cs.unknowns)
        before = cs.snapshot()
        trace.add(
            "top-coefficient",
            ANCHOR_PARITY,
            before=str(top),
            note=f"degree {top.degree} is {'odd' if top.degree % 2 else 'even'}",
        )
        cs = cs.substitute_zero([name, "s" + name])
        eliminated.append(name)
        anchor = "r^2 = 0 implies r = 0 in a field" if rule == "square-zero" else "c sigma(c) = 0 implies c = 0, norm form anisotropic"
        trace.add(rule, anchor, before=str(top), after=f"{name} = 0", symbols=(name, "s" + name))
        _discharge(cs, trace, before)

    leftover = cs.pending()
    eq2_left = [e for e in leftover if e.source == "eq2"]
    if eq2_left:
        raise EliminationError(f"companion equations survive: {[str(e) for e in eq2_left]}")
    trace.add(
        "substitution",
        "companion equation discharged once R = 0",
        note="the companion (sigma y) equation is never used in the descent; it vanishes identically after R = 0",
    )
    final = [e for e in leftover if e.source == "eq1"]
    if len(final) != 1 or final[0].degree != 0:
        raise EliminationError(f"unexpected final system: {[str(e) for e in final]}")
    ring = PolyRing(K, symbol("q0"))
    expected = ring["q0"] * ring["sq0"] - 1
    if final[0].poly != expected:
        raise EliminationError(f"final equation is {final[0]}, expected q0*sq0 - 1 = 0")
    if cs.unknowns != ["q0"]:
        raise EliminationError(f"unknowns left: {cs.unknowns}")
    trace.add("conclusion", ANCHOR_CONCLUSION, before=str(final[0]), after="f1 = 0, f2 = w, w sigma(w) = 1", symbols=("q0",))
    family = SolutionFamily(
        bound=trace.bound,
        omega="q0",
        phi_prime="0",
        phi_doubleprime="q0",
        constraint="q0*sq0 = 1",
        eliminated=tuple(eliminated),
    )
    return family, trace


def solve(D: int = DEFAULT_DEGREE_BOUND, K: Discriminant | None = None) -> tuple[SolutionFamily, ProofTrace]:
    K = K or Discriminant(2)
    cs, trace, _, _ = run_pipeline(D, K)
    return eliminate(cs, trace)


def replay(trace: ProofTrace, K: Discriminant) -> SolutionFamily:
    """Re-derive the initial system, then apply the recorded inferences one by one.

    Every inference is re-validated against the current state; nothing is
    taken from the trace except which rule to apply to which equation.
    """
    cs, fresh, _, _ = run_pipeline(trace.bound, K)
    n_setup = len(fresh.steps)
    if [s.as_dict() for s in trace.steps[:n_setup]] != [s.as_dict() for s in fresh.steps]:
        raise ReplayError("setup steps do not match the re-derived system")
    eliminated: list[str] = []
    steps = trace.steps[n_setup:]
    for i, step in enumerate(steps):
        if step.kind in ("square-zero", "norm-zero"):
            name = step.symbols[0]
            eq = next((e for e in cs.pending() if str(e) == step.before), None)
            if eq is None:
                raise ReplayError(f"step {i}: equation {step.before!r} is not pending")
            top = _top_equation(cs)
            if top is None or top.degree != eq.degree:
                raise ReplayError(f"step {i}: {step.before!r} is not the top equation")
            rule, sym = _top_rule(eq, cs.unknowns)
            if (rule, sym) != (step.kind, name):
                raise ReplayError(f"step {i}: recorded {step.kind} on {name}, valid inference is {rule} on {sym}")
            cs = cs.substitute_zero([name, "s" + name])
            eliminated.append(name)
        elif step.kind == "conclusion":
            pending = cs.pending()
            if [str(e) for e in pending] != [step.before]:
                raise ReplayError(f"conclusion does not match remaining system {[str(e) for e in pending]}")
        elif step.kind not in ("top-coefficient", "substitution"):
            raise ReplayError(f"unknown step kind {step.kind!r}")
    if cs.unknowns != ["q0"]:
        raise ReplayError(f"replay leaves unknowns {cs.unknowns}")
    return SolutionFamily(trace.bound, "q0", "0", "q0", "q0*sq0 = 1", tuple(eliminated))


# --- verification of the family ---------------------------------------------


def prop1_mu(K: Discriminant) -> PolyMap:
    ring = PolyRing(K, [X, XB, Y, YB, LAM])
    x, y, l = ring.gens("x", "y", "l")
    return PolyMap(ring.vars, ("x", "y"), (l**2 * x, l**3 * y), "mu2")


def family_member(K: Discriminant, omega: QuadElem | None = None) -> PolyMap:
    """tau_w(x, y) = (xb, w yb); formal w (partner sw) when ``omega`` is None."""
    vars = [X, XB, Y, YB]
    if omega is None:
        vars.extend(symbol("w"))
    ring = PolyRing(K, vars)
    xb, yb = ring.gens("xb", "yb")
    w = ring["w"] if omega is None else ring.const(omega)
    return PolyMap(ring.vars, ("x", "y"), (xb, w * yb), f"tau[{omega if omega is not None else 'w'}]")


def reduce_norm_relation(p: SparsePoly, name: str) -> SparsePoly:
    """Rewrite with name * s<name> = 1."""
    names = [v.name for v in p.vars]
    if name not in names or "s" + name not in names:
        return p
    i, j = names.index(name), names.index("s" + name)
    out: dict = {}
    for exps, c in p.terms.items():
        m = min(exps[i], exps[j])
        key = list(exps)
        key[i] -= m
        key[j] -= m
        key = tuple(key)
        out[key] = out[key] + c if key in out else c
    return SparsePoly(p.field, p.vars, {k: v for k, v in out.items() if v})


def check_prop1_conditions(tau: PolyMap, seed: int = DEFAULT_SEED, relation: str | None = None) -> dict[str, bool]:
    """Conditions (i)-(v) for a candidate tau on K^2 with coordinates (x, y)."""
    K = tau.field
    out = {}
    x_dom, y_dom = tau.domain
    xbar = tau.var(x_dom).partner
    ybar = tau.var(y_dom).partner
    c0, c1 = tau.components

    out["(i) first component is sigma(x)"] = xbar is not None and c0 == SparsePoly.gen(K, tau.var(xbar))

    groups = c1.collect([y_dom, ybar]) if ybar else {}
    out["(ii) k-linear in y"] = bool(groups) and set(groups) <= {(1, 0), (0, 1)}

    try:
        restricted = weil_restrict(tau)
        ok = restricted.has_rational_coefficients()
        rng = random.Random(seed)
        for _ in range(5):
            kpoint, point = {}, {}
            for v in restricted.vars:
                if v.name.endswith("_r"):
                    base = v.name[:-2]
                    re_, im_ = small_rational(rng), small_rational(rng)
                    kpoint[base + "_r"], kpoint[base + "_t"] = re_, im_
                    point[base] = K(re_, im_)
                    partner = tau.var(base).partner
                    if partner:
                        point[partner] = point[base].conjugate()
            lhs = [c.evaluate(point) for c in tau.components]
            rhs = [c.evaluate(kpoint) for c in restricted.components]
            ok = ok and all(z == K(rhs[2 * i].x, rhs[2 * i + 1].x) for i, z in enumerate(lhs))
        out["(iii) Weil restriction is a k-morphism"] = ok
    except PolyError:
        out["(iii) Weil restriction is a k-morphism"] = False

    sq = map_compose(tau, tau)
    if relation is not None:
        sq = sq.with_components([reduce_norm_relation(c, relation) for c in sq.components])
    out["(iv) tau o tau = id"] = sq.is_identity()

    mu = prop1_mu(K).rename({"x": x_dom, "y": y_dom, "xb": xbar or "xb", "yb": ybar or "yb"})
    out["(v) tau o mu_l = mu_(1/l) o tau"] = check_equivariance(mu, tau).passed
    return out


def verify_family(sol: SolutionFamily | None, K: Discriminant, omegas: Sequence[QuadElem] = ()) -> CheckResult:
    """Re-check conditions (i)-(v) for the formal member and for each sample omega.

    Passes iff the formal member (with w sigma(w) = 1) and every sample on the
    norm-one torus satisfy all conditions; samples off the torus are reported
    and must fail (iv).
    """
    members = {"formal": check_prop1_conditions(family_member(K), relation="w")}
    ok = all(members["formal"].values())
    for w in omegas:
        conds = check_prop1_conditions(family_member(K, w))
        members[str(w)] = conds
        if w.norm() == 1:
            ok = ok and all(conds.values())
        else:
            others = {k: v for k, v in conds.items() if not k.startswith("(iv)")}
            ok = ok and all(others.values()) and not conds["(iv) tau o tau = id"]
    return result(
        "prop1.verify_family",
        "tau(x, y) = (sigma x, w sigma y) with N(w) = 1",
        ok,
        bound=sol.bound if sol else None,
        members=members,
    )
