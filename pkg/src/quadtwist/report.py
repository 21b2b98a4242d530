"""Run the verification suites and render reports."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from . import prop1, schwarz, twist
from .arith import (
    Discriminant,
    QuadElem,
    Rational,
    TorusPoint,
    det2,
    format_rational,
    is_square_rational,
    matmul2,
    torus_matrix,
)
from .checks import ASSUMPTION, DEFAULT_SEED, FAIL, PASS, CheckResult, result, small_rational, timed
from .maps import PolyMap
from .poly import SparsePoly

SUITES = ("arith", "schwarz", "twist", "prop1")
REPORT_FORMAT = "quadtwist.report/1"
ARITH_SAMPLES = 1000


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SuiteConfig:
    alpha: Rational
    suites: tuple[str, ...] = SUITES
    degree_bound: int = prop1.DEFAULT_DEGREE_BOUND
    seed: int = DEFAULT_SEED
    format: str = "text"
    trace: bool = False
    map_file: str | None = None
    timing: bool = True

    def validate(self) -> Discriminant:
        if is_square_rational(self.alpha):
            raise ConfigError(f"alpha is a square: {format_rational(self.alpha)}")
        if not 0 <= self.degree_bound <= prop1.MAX_DEGREE_BOUND:
            raise ConfigError(f"degree bound must be in 0..{prop1.MAX_DEGREE_BOUND}, got {self.degree_bound}")
        unknown = set(self.suites) - set(SUITES)
        if unknown:
            raise ConfigError(f"unknown suites: {sorted(unknown)}")
        if self.format not in ("text", "json"):
            raise ConfigError(f"unknown format {self.format!r}")
        return Discriminant(self.alpha)

    def ordered_suites(self) -> list[str]:
        # arith always runs; schwarz before twist
        chosen = set(self.suites) | {"arith"}
        return [s for s in SUITES if s in chosen]


@dataclass
class VerificationReport:
    config: SuiteConfig | None
    checks: list[CheckResult] = field(default_factory=list)
    trace: prop1.ProofTrace | None = None

    @property
    def overall(self) -> str:
        return FAIL if any(c.status == FAIL for c in self.checks) else PASS

    @property
    def exit_code(self) -> int:
        return 1 if self.overall == FAIL else 0

    def counts(self) -> dict[str, int]:
        out = {PASS: 0, FAIL: 0, ASSUMPTION: 0}
        for c in self.checks:
            out[c.status] += 1
        return out

    def by_name(self, name: str) -> CheckResult:
        return next(c for c in self.checks if c.name == name)


def assumption(name: str, anchor: str, **details: Any) -> CheckResult:
    return CheckResult(name, anchor, ASSUMPTION, details)


# --- arith suite -------------------------------------------------------------


def _samples(K: Discriminant, rng: random.Random, n: int) -> list[QuadElem]:
    return [K(small_rational(rng), small_rational(rng)) for _ in range(n)]


def arith_checks(K: Discriminant, seed: int, n: int = ARITH_SAMPLES) -> list[CheckResult]:
    rng = random.Random(seed)
    out = []

    def disc() -> CheckResult:
        return result(
            "arith.discriminant",
            "alpha is not a square in Q and t^2 = alpha",
            not is_square_rational(K.alpha) and K.t * K.t == K(K.alpha),
            alpha=format_rational(K.alpha),
        )

    def norm_mult() -> CheckResult:
        xs, ys = _samples(K, rng, n), _samples(K, rng, n)
        bad = [f"{a} * {b}" for a, b in zip(xs, ys) if (a * b).norm() != a.norm() * b.norm()]
        return result("arith.norm_multiplicative", "N(ab) = N(a) N(b)", not bad, samples=n, failures=bad[:5])

    def sigma() -> CheckResult:
        xs, ys = _samples(K, rng, n), _samples(K, rng, n)
        bad = [
            f"{a}, {b}"
            for a, b in zip(xs, ys)
            if (a * b).conjugate() != a.conjugate() * b.conjugate()
            or (a + b).conjugate() != a.conjugate() + b.conjugate()
            or a.conjugate().conjugate() != a
        ]
        return result("arith.sigma_involution", "sigma is a ring involution fixing Q", not bad, samples=n, failures=bad[:5])

    def torus() -> CheckResult:
        pts = [TorusPoint(K.one), TorusPoint(-K.one)]
        zs = [z for z in _samples(K, rng, n) if z]
        pts += [TorusPoint(z / z.conjugate()) for z in zs]
        bad = []
        for a, b in zip(pts, pts[1:]):
            if torus_matrix(a * b) != matmul2(torus_matrix(a), torus_matrix(b)) or det2(torus_matrix(a)) != 1:
                bad.append(f"{a}, {b}")
        return result("arith.torus_matrix", "z -> [[x, alpha y], [y, x]] is a homomorphism into SL2(Q)", not bad, samples=len(pts), failures=bad[:5])

    def aniso() -> CheckResult:
        zs = [z for z in _samples(K, rng, n) if z]
        bad = [str(z) for z in zs if z.norm() == 0]
        return result("arith.anisotropy", "x^2 - alpha y^2 = 0 only at 0", not bad, samples=len(zs), failures=bad[:5])

    def minus_one() -> CheckResult:
        m = -K.one
        return result("arith.minus_one_in_S", "-1 lies in the norm-one torus", m.norm() == 1 and m * m == K.one)

    for fn in (disc, norm_mult, sigma, torus, aniso, minus_one):
        out.append(timed(fn))
    return out


# --- twist suite ---------------------------------------------------------------


def check_E0(bundle: schwarz.ActionBundle) -> tuple[twist.KStructure, CheckResult]:
    E0 = twist.build_E0(bundle.phi, bundle.tau, bundle.phi_inverse)
    ok = E0.k_dimension == 4 and E0.spans_K
    res = result(
        "twist.E0",
        "E0 = {sigma w = L w} is a k-form of K^4",
        ok,
        k_dimension=E0.k_dimension,
        spans_K=E0.spans_K,
        basis=[[str(c) for c in v] for v in E0.basis],
        conjugated_involution=[[str(c) for c in row] for row in E0.notes["conjugated_involution"]],
        coordinate_shape_match=E0.notes["coordinate_shape_match"],
    )
    return E0, res


# --- prop1 suite ---------------------------------------------------------------


def check_weight_filter(K: Discriminant, bound: int = 10) -> CheckResult:
    """Engine weights against 6 + 2k - 2l and 2k - 2l, and the survivor pattern."""
    phi1, phi2 = prop1.ansatz(bound, K)
    w1 = prop1.equivariance_weights(phi1, K)
    w2 = prop1.equivariance_weights(phi2, K)
    rng = range(bound + 1)
    formula = all(w1[(k, l)] == 6 + 2 * k - 2 * l and w2[(k, l)] == 2 * k - 2 * l for k in rng for l in rng)
    s1 = sorted(prop1.apply_equivariance_filter(phi1, K).coeffs)
    s2 = sorted(prop1.apply_equivariance_filter(phi2, K).coeffs)
    pattern = s1 == [(k, k + 3) for k in rng if k + 3 <= bound] and s2 == [(k, k) for k in rng]
    return result(
        "prop1.weight_filter",
        "a_{k,l} = 0 unless l = k + 3; b_{k,l} = 0 unless l = k",
        formula and pattern,
        bound=bound,
        survivors_f1=[f"({k},{l})" for k, l in s1],
        survivors_f2=[f"({k},{l})" for k, l in s2],
    )


def check_elimination(K: Discriminant, D: int) -> tuple[CheckResult, prop1.SolutionFamily | None, prop1.ProofTrace | None]:
    try:
        fam, trace = prop1.solve(D, K)
    except prop1.EliminationError as exc:
        return result("prop1.eliminate", prop1.ANCHOR_PARITY, False, error=str(exc)), None, None
    expected = {f"q{i}" for i in range(1, D + 1)} | {f"r{i}" for i in range(0, D - 2)}
    ok = set(fam.eliminated) == expected and fam.phi_prime == "0" and fam.omega == "q0"
    res = result(
        "prop1.eliminate",
        "only f1 = 0, f2 = w with w sigma(w) = 1 survives",
        ok,
        degree_bound=D,
        family={"f1": fam.phi_prime, "f2": fam.phi_doubleprime, "constraint": fam.constraint},
        eliminated=list(fam.eliminated),
        trace_length=len(trace.steps),
    )
    return res, fam, trace


def check_replay(K: Discriminant, fam: prop1.SolutionFamily, trace: prop1.ProofTrace) -> CheckResult:
    try:
        again = prop1.replay(trace, K)
        ok, err = again == fam, ""
    except prop1.ReplayError as exc:
        ok, err = False, str(exc)
    return result("prop1.replay", "the recorded descent re-derives the same family", ok, steps=len(trace.steps), error=err)


def family_samples(K: Discriminant) -> list[QuadElem]:
    pts = [K.one, -K.one] + [p.value for p in twist.default_torus_points(K)[2:]]
    # off the torus: 1 + t has norm 1 - alpha != 1
    return pts + [K(1, 1)]


def negative_control() -> CheckResult:
    """With alpha = 1 the norm form is isotropic and the norm-zero rule is unsound."""
    K1 = Discriminant(1, validate=False)
    c = K1(1, -1)
    witness = c != K1.zero and c * c.conjugate() == K1.zero
    try:
        prop1.solve(3, K1)
        refused = False
    except prop1.EliminationError:
        refused = True
    return result(
        "prop1.anisotropy_negative_control",
        "c sigma(c) = 0 implies c = 0 needs alpha to be a non-square",
        witness and refused,
        alpha="1",
        witness=str(c),
        witness_norm=str(c.norm()),
        elimination_refused=refused,
    )


# --- user map ----------------------------------------------------------------


def check_user_map(f: PolyMap, K: Discriminant, seed: int) -> list[CheckResult]:
    name = f.name or "map"
    if f.domain_dim == 2:
        conds = prop1.check_prop1_conditions(f, seed=seed)
        return [result(f"map[{name}].conditions", "conditions (i)-(v) for tau on K^2", all(conds.values()), conditions=conds)]
    if f.domain_dim == 4:
        mu = schwarz.build_mu(f.field)
        inv = schwarz.check_involution(f)
        eq = schwarz.check_equivariance(mu, f)
        return [
            CheckResult(f"map[{name}].involution", inv.anchor, inv.status, inv.details),
            CheckResult(f"map[{name}].equivariance", eq.anchor, eq.status, eq.details),
        ]
    return [result(f"map[{name}]", "map on K^2 or A^4", False, error=f"unsupported domain dimension {f.domain_dim}")]


# --- driver ------------------------------------------------------------------


def run_suite(cfg: SuiteConfig, user_map: PolyMap | None = None) -> VerificationReport:
    K = cfg.validate()
    rep = VerificationReport(cfg)
    suites = cfg.ordered_suites()
    add = rep.checks.append
    bundle = None

    if "arith" in suites:
        rep.checks.extend(arith_checks(K, cfg.seed))

    if "schwarz" in suites or "twist" in suites:
        bundle = schwarz.ActionBundle.build(K)

    if "schwarz" in suites:
        b = bundle
        add(timed(schwarz.check_involution, b.tau))
        add(timed(schwarz.check_group_law, b.mu))
        add(timed(schwarz.check_equivariance, b.mu, b.tau))
        add(timed(schwarz.check_fiber_determinant, b.tau, 1))
        add(timed(schwarz.check_fiber_determinant, b.phi))
        add(timed(schwarz.check_linearization, b.phi, b.tau))
        add(timed(schwarz.check_defined_over_Q, b.mu, b.tau, b.phi))
        add(timed(schwarz.check_sampled_identities, K, 100, cfg.seed))
        add(
            assumption(
                "assumption.schwarz_not_linearizable_over_C",
                "the Schwarz action on A^4 is not linearizable over C",
                source="Schwarz; used without proof",
            )
        )

    if "twist" in suites:
        b = bundle
        box: dict[str, Any] = {}

        def e0() -> CheckResult:
            box["E0"], res = check_E0(b)
            return res

        add(timed(e0))
        add(timed(twist.check_stabilization, b.mu, b.tau, box["E0"], 100, cfg.seed))
        fixed = timed(lambda: twist.fixed_locus_I(b.mu)[1])
        add(fixed)
        if fixed.passed:
            add(
                assumption(
                    "assumption.equivariant_bundle_criterion",
                    "Masuda-Petrie: a G-vector bundle over a representation is non-linearizable when fixed-point normal bundles differ",
                    source="Masuda and Petrie; used without proof",
                    applies_to="I = {1, -1} fixing exactly the zero-section",
                )
            )

    if "prop1" in suites:
        add(timed(check_weight_filter, K))
        box2: dict[str, Any] = {}

        def elim() -> CheckResult:
            res, box2["fam"], box2["trace"] = check_elimination(K, cfg.degree_bound)
            return res

        add(timed(elim))
        fam, trace = box2["fam"], box2["trace"]
        if trace is not None:
            add(timed(check_replay, K, fam, trace))
            rep.trace = trace if cfg.trace else None
        add(timed(prop1.verify_family, fam, K, family_samples(K)))
        add(timed(negative_control))

    if user_map is not None:
        for res in check_user_map(user_map, K, cfg.seed):
            rep.checks.append(res)
    return rep


# --- rendering -----------------------------------------------------------------


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, (QuadElem, SparsePoly, TorusPoint)):
        return str(obj)
    if isinstance(obj, (Rational, Fraction)):
        return format_rational(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    return str(obj)


def report_to_json(r: VerificationReport, timing: bool = True) -> dict:
    checks = []
    for c in r.checks:
        rec = {"name": c.name, "anchor": c.anchor, "status": c.status, "details": _jsonable(c.details)}
        if timing:
            rec["wall_time"] = round(c.wall_time, 6)
        checks.append(rec)
    cfg = r.config
    out = {
        "format": REPORT_FORMAT,
        "config": None
        if cfg is None
        else {
            "alpha": format_rational(cfg.alpha),
            "suites": cfg.ordered_suites(),
            "degree_bound": cfg.degree_bound,
            "seed": cfg.seed,
        },
        "checks": checks,
        "counts": r.counts(),
        "overall": r.overall,
    }
    if r.trace is not None:
        out["trace"] = r.trace.to_json()
    return out


def emit_report(r: VerificationReport, format: str = "text", timing: bool = True) -> str:
    if format == "json":
        return json.dumps(report_to_json(r, timing), indent=2, sort_keys=True) + "\n"
    cfg = r.config
    lines = []
    if cfg is None:
        lines.append("quadtwist verify")
    else:
        lines.append(
            f"quadtwist verify alpha={format_rational(cfg.alpha)} suites={','.join(cfg.ordered_suites())} "
            f"degree_bound={cfg.degree_bound} seed={cfg.seed}"
        )
    for c in r.checks:
        t = f" ({c.wall_time:.3f}s)" if timing else ""
        lines.append(f"CHECK {c.name} [{c.anchor}] {c.status}{t}")
    if r.trace is not None:
        lines.append(f"TRACE degree_bound={r.trace.bound}")
        for i, s in enumerate(r.trace.steps):
            body = " -> ".join(p for p in (s.before, s.after) if p)
            lines.append(f"  {i:3d} {s.kind} [{s.anchor}] {body}")
    if not r.checks:
        lines.append("STATUS no checks run")
    else:
        n = r.counts()
        lines.append(f"OVERALL {r.overall.upper()} ({n[PASS]} pass, {n[FAIL]} fail, {n[ASSUMPTION]} assumption)")
    return "\n".join(lines) + "\n"
