"""The Schwarz action of G = Z/2 x| G_m on A^4 and its partial linearization.

Coordinates are ``(a, b, x, y)`` with base ``(a, b)`` and fiber ``(x, y)``; the
torus parameter is the unit variable ``l``.

* ``mu``:  l.(a, b, x, y) = (l^2 a, l^-2 b, l^3 x, l^-3 y)
* ``tau``: (a, b, x, y) -> (b, a, M(a, b) . (y, x)) with
  M = [[1 + ab + (ab)^2, -b^3], [a^3, 1 - ab]]
* ``phi``: (a, b, x, y) -> (a, b, C(a, b) . (x, y)), the fiberwise automorphism
  that turns tau into a linear map.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .arith import Discriminant, QuadElem, Rational
from .checks import DEFAULT_SEED, CheckResult, result, small_rational
from .maps import PolyMap, map_compose, maps_equal
from .poly import PolyError, PolyRing, SparsePoly, affine, unit

BASE = ("a", "b")
FIBER = ("x", "y")
COORDS = BASE + FIBER
LAMBDA = "l"

DEFAULT_FIELD = Discriminant(2)


class NotFiberwiseLinearError(PolyError):
    def __init__(self, message: str, monomials: list[str]) -> None:
        super().__init__(f"{message}: {', '.join(monomials)}")
        self.monomials = monomials


class NotInvertibleError(PolyError):
    def __init__(self, det: SparsePoly) -> None:
        super().__init__(f"fiber determinant {det} is not a nonzero constant")
        self.det = det


def schwarz_ring(field: Discriminant = DEFAULT_FIELD) -> PolyRing:
    return PolyRing(field, [affine(n) for n in COORDS] + [unit(LAMBDA)])


def build_mu(field: Discriminant = DEFAULT_FIELD) -> PolyMap:
    R = schwarz_ring(field)
    a, b, x, y, l = R.gens(*COORDS, LAMBDA)
    return PolyMap(R.vars, COORDS, (l**2 * a, l**-2 * b, l**3 * x, l**-3 * y), "mu")


def build_tau(field: Discriminant = DEFAULT_FIELD) -> PolyMap:
    R = schwarz_ring(field)
    a, b, x, y = R.gens(*COORDS)
    ab = a * b
    m11, m12 = 1 + ab + ab**2, -(b**3)
    m21, m22 = a**3, 1 - ab
    comps = (b, a, m11 * y + m12 * x, m21 * y + m22 * x)
    return PolyMap(R.vars, COORDS, comps, "tau", fiber_order=("y", "x"))


def phi_coefficients(field: Discriminant = DEFAULT_FIELD) -> tuple[tuple[SparsePoly, SparsePoly], tuple[SparsePoly, SparsePoly]]:
    R = schwarz_ring(field)
    a, b = R.gens(*BASE)
    c11 = 2 * (1 + a - 2 * b - a**2 * b + 2 * a * b**2 - b**3)
    c12 = 2 * (1 - 2 * a + b + a * b + a**4 - 2 * a**3 * b + a**2 * b**2)
    c21 = -2 - a - b + a * b - b**2 + a**2 * b - b**3
    c22 = 2 + b + a + a**2 + a * b - a**3 + a**2 * b - a**4 + a**2 * b**2
    return (c11, c12), (c21, c22)


def build_phi(field: Discriminant = DEFAULT_FIELD) -> PolyMap:
    R = schwarz_ring(field)
    a, b, x, y = R.gens(*COORDS)
    (c11, c12), (c21, c22) = phi_coefficients(field)
    return PolyMap(R.vars, COORDS, (a, b, c11 * x + c12 * y, c21 * x + c22 * y), "phi", fiber_order=FIBER)


@dataclass(frozen=True)
class FiberMatrix:
    entries: tuple[tuple[SparsePoly, SparsePoly], tuple[SparsePoly, SparsePoly]]
    order: tuple[str, str]

    @property
    def det(self) -> SparsePoly:
        (m11, m12), (m21, m22) = self.entries
        return m11 * m22 - m12 * m21

    def evaluate(self, point) -> tuple[tuple[QuadElem, QuadElem], tuple[QuadElem, QuadElem]]:
        return tuple(tuple(e.evaluate(point) for e in row) for row in self.entries)  # type: ignore[return-value]

    def __str__(self) -> str:
        rows = ["[" + ", ".join(str(e) for e in row) + "]" for row in self.entries]
        return "[" + ", ".join(rows) + f"] on ({', '.join(self.order)})"


def fiber_matrix(f: PolyMap, order: Sequence[str] | None = None) -> FiberMatrix:
    """Read off the 2x2 fiber matrix of a fiberwise-linear endomap of A^2 x A^2."""
    if f.domain_dim != 4 or f.codomain_dim != 4:
        raise NotFiberwiseLinearError("not an endomap of A^2 x A^2", [])
    fiber = f.domain[2:]
    order = tuple(order or f.fiber_order or fiber)
    bad = []
    for comp in f.components[:2]:
        for exps, _ in comp.items():
            if any(n in exps for n in fiber):
                bad.append(_mono(exps))
    if bad:
        raise NotFiberwiseLinearError("base components depend on the fiber", bad)
    rows = []
    for comp in f.components[2:]:
        groups = comp.collect(order)
        for key, coeff in groups.items():
            if sum(key) != 1:
                bad.extend(_mono({**e, **dict(zip(order, key))}) for e, _ in coeff.items())
        rows.append(tuple(groups.get(k, comp.zero()) for k in ((1, 0), (0, 1))))
    if bad:
        raise NotFiberwiseLinearError("fiber components are not linear in the fiber", bad)
    return FiberMatrix(tuple(rows), order)  # type: ignore[arg-type]


def _mono(exps: dict[str, int]) -> str:
    exps = {n: e for n, e in exps.items() if e}
    return "*".join(n if e == 1 else f"{n}^{e}" for n, e in exps.items()) or "1"


def invert_fiberwise(f: PolyMap) -> PolyMap:
    """Inverse of a base-preserving fiberwise-linear map with constant determinant."""
    if any(c != SparsePoly.gen(f.field, f.var(d)) for c, d in zip(f.components[:2], f.domain[:2])):
        raise NotFiberwiseLinearError("map does not fix the base", [str(c) for c in f.components[:2]])
    fm = fiber_matrix(f, f.domain[2:])
    det = fm.det
    if not det.is_constant() or det.is_zero():
        raise NotInvertibleError(det)
    inv = det.constant_term().inverse()
    (m11, m12), (m21, m22) = fm.entries
    R = PolyRing(f.field, f.vars)
    a, b = R.gens(*f.domain[:2])
    x, y = R.gens(*f.domain[2:])
    comps = (a, b, (m22 * x - m12 * y) * inv, (-m21 * x + m11 * y) * inv)
    name = f"{f.name}^-1" if f.name else "inverse"
    return PolyMap(f.vars, f.domain, comps, name, fiber_order=f.domain[2:])


def build_phi_inverse(field: Discriminant = DEFAULT_FIELD) -> PolyMap:
    return invert_fiberwise(build_phi(field))


# --- checks ------------------------------------------------------------


def check_involution(f: PolyMap) -> CheckResult:
    sq = map_compose(f, f)
    ok = sq.is_identity()
    details = {"map": f.name}
    if not ok:
        details["square"] = [str(c) for c in sq.components]
    return result(f"involution[{f.name}]", "tau o tau = id", ok, **details)


def check_group_law(mu: PolyMap, param: str = LAMBDA) -> CheckResult:
    one = mu.substitute({param: 1})
    mu1 = mu.rename({param: param + "1"})
    mu2 = mu.rename({param: param + "2"})
    composed = map_compose(mu1, mu2)
    R = PolyRing(mu.field, [unit(param + "1"), unit(param + "2")])
    product = mu.substitute({param: R[param + "1"] * R[param + "2"]})
    law = maps_equal(composed, product)
    neutral = one.is_identity()
    return result(
        f"group_law[{mu.name}]",
        "mu(l1, mu(l2, v)) = mu(l1 l2, v), mu(1, v) = v",
        law and neutral,
        composition=law,
        neutral=neutral,
    )


def check_equivariance(mu: PolyMap, tau: PolyMap, param: str = LAMBDA) -> CheckResult:
    R = PolyRing(mu.field, [unit(param)])
    lhs = map_compose(tau, mu)
    rhs = map_compose(mu.substitute({param: R[param] ** -1}), tau)
    ok = maps_equal(lhs, rhs)
    details = {}
    if not ok:
        details["lhs"] = [str(c) for c in lhs.components]
        details["rhs"] = [str(c) for c in rhs.components]
    return result(f"equivariance[{tau.name},{mu.name}]", "tau o mu_l = mu_(1/l) o tau", ok, **details)


@dataclass
class LinearityReport:
    linear: bool
    involutive: bool
    matrix: list[list[str]] | None
    diagonal_shape: bool
    nonlinear_terms: list[str]

    def as_dict(self) -> dict:
        return {
            "linear": self.linear,
            "involutive": self.involutive,
            "matrix": self.matrix,
            "diagonal_shape": self.diagonal_shape,
            "nonlinear_terms": self.nonlinear_terms,
        }


def conjugate_involution(phi: PolyMap, tau: PolyMap, phi_inverse: PolyMap | None = None) -> tuple[PolyMap, LinearityReport]:
    """L = phi o tau o phi^-1 together with its linearity report."""
    phi_inverse = phi_inverse or invert_fiberwise(phi)
    L = map_compose(phi, map_compose(tau, phi_inverse))
    L = PolyMap(L.vars, L.domain, L.components, "L")
    matrix = L.linear_matrix()
    nonlinear = []
    if matrix is None:
        dom = set(L.domain)
        for comp in L.components:
            for exps, _ in comp.items():
                if sum(exps.values()) != 1 or set(exps) - dom:
                    nonlinear.append(_mono(exps))
    involutive = map_compose(L, L).is_identity()
    diagonal = False
    if matrix is not None:
        zero, one = L.field.zero, L.field.one
        base_swap = [row[:2] for row in matrix[:2]] == [[zero, one], [one, zero]]
        off = [matrix[0][2], matrix[0][3], matrix[1][2], matrix[1][3], matrix[2][0], matrix[2][1],
               matrix[3][0], matrix[3][1], matrix[2][3], matrix[3][2]]
        diagonal = base_swap and all(not e for e in off)
    report = LinearityReport(
        linear=matrix is not None,
        involutive=involutive,
        matrix=[[str(e) for e in row] for row in matrix] if matrix is not None else None,
        diagonal_shape=diagonal,
        nonlinear_terms=sorted(set(nonlinear)),
    )
    return L, report


def check_linearization(phi: PolyMap, tau: PolyMap) -> CheckResult:
    phi_inv = invert_fiberwise(phi)
    det = fiber_matrix(phi).det
    round_trip = map_compose(phi, phi_inv).is_identity() and map_compose(phi_inv, phi).is_identity()
    L, rep = conjugate_involution(phi, tau, phi_inv)
    ok = round_trip and rep.linear and rep.involutive
    return result(
        "linearization[phi o tau o phi^-1]",
        "phi o tau o phi^-1 is linear and involutive",
        ok,
        det_C=str(det),
        phi_round_trip=round_trip,
        **rep.as_dict(),
    )


def check_fiber_determinant(f: PolyMap, expected: int | None = None) -> CheckResult:
    det = fiber_matrix(f).det
    ok = det.is_constant() and not det.is_zero()
    if expected is not None:
        ok = ok and det == expected
    return result(f"fiber_det[{f.name}]", "det of the fiber matrix is a nonzero constant", ok, det=str(det))


def check_defined_over_Q(*maps: PolyMap) -> CheckResult:
    bad = [f.name for f in maps if not f.has_rational_coefficients()]
    return result("defined_over_Q", "all maps defined over Q", not bad, maps=[f.name for f in maps], offending=bad)


def check_sampled_identities(field: Discriminant, samples: int = 100, seed: int = DEFAULT_SEED) -> CheckResult:
    """Evaluate both sides of each identity at random rational points.

    Works pointwise with nested evaluation, independent of symbolic composition.
    """
    rng = random.Random(seed)
    mu, tau, phi = build_mu(field), build_tau(field), build_phi(field)
    phi_inv = invert_fiberwise(phi)
    failures: list[str] = []

    def at(f: PolyMap, v: Sequence[QuadElem], lam: QuadElem | None = None) -> tuple[QuadElem, ...]:
        pt = dict(zip(COORDS, v))
        if lam is not None:
            pt[LAMBDA] = lam
        return f.evaluate(pt)

    for i in range(samples):
        v = tuple(field(small_rational(rng)) for _ in COORDS)
        l1 = field(small_rational(rng, nonzero=True))
        l2 = field(small_rational(rng, nonzero=True))
        if at(tau, at(tau, v)) != v:
            failures.append(f"tau^2 at sample {i}")
        if at(mu, at(mu, v, l2), l1) != at(mu, v, l1 * l2):
            failures.append(f"group law at sample {i}")
        if at(mu, v, field.one) != v:
            failures.append(f"mu(1) at sample {i}")
        if at(tau, at(mu, v, l1)) != at(mu, at(tau, v), l1.inverse()):
            failures.append(f"equivariance at sample {i}")
        if at(phi, at(phi_inv, v)) != v:
            failures.append(f"phi o phi^-1 at sample {i}")
    return result(
        "sampled_identities",
        "pointwise evaluation of all action identities",
        not failures,
        samples=samples,
        failures=failures[:10],
    )


@dataclass(frozen=True)
class ActionBundle:
    """Everything built for one field: the action, tau, and phi."""

    field: Discriminant
    mu: PolyMap
    tau: PolyMap
    phi: PolyMap
    phi_inverse: PolyMap

    @classmethod
    def build(cls, field: Discriminant = DEFAULT_FIELD) -> "ActionBundle":
        phi = build_phi(field)
        return cls(field, build_mu(field), build_tau(field), phi, invert_fiberwise(phi))

    @property
    def base_vars(self) -> tuple[str, str]:
        return BASE

    @property
    def fiber_vars(self) -> tuple[str, str]:
        return FIBER

    def mu_slice(self, lam: QuadElem | int | Rational) -> PolyMap:
        return self.mu.substitute({LAMBDA: lam}, name=f"mu[{lam}]")
