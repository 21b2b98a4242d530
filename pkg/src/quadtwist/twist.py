"""Semilinear algebra over K/k and the twisted form E0 of the Schwarz space.

Vectors of K^m are tuples of :class:`QuadElem`.  Over k they are read in the
basis {1, t} per coordinate, i.e. (x1, y1, x2, y2, ...) for z_i = x_i + t y_i.
Exact rank and kernel computations go through sympy's ``DomainMatrix`` over QQ.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from gmpy2 import mpq
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from .arith import Discriminant, QuadElem, Rational, TorusPoint, format_rational, torus_point_from
from .checks import DEFAULT_SEED, CheckResult, result, small_rational
from .maps import PolyMap
from .poly import AFFINE, UNIT, PolyError, PolyRing, SparsePoly, Var, merge_vars, unit
from .schwarz import FIBER, LAMBDA, conjugate_involution, invert_fiberwise

Vector = tuple  # tuple[QuadElem, ...]
Matrix = list  # list[list[QuadElem]]


class CocycleError(ValueError):
    def __init__(self, defect: list[list[Rational]]) -> None:
        rows = ["[" + ", ".join(format_rational(q) for q in row) + "]" for row in defect]
        super().__init__("cocycle condition fails, defect F^2 - I = " + "; ".join(rows))
        self.defect = defect


# --- exact linear algebra over Q ------------------------------------------


def _dm(rows: Sequence[Sequence[Rational]], ncols: int | None = None) -> DomainMatrix:
    ncols = len(rows[0]) if rows else (ncols or 0)
    data = [[QQ(q.numerator, q.denominator) for q in row] for row in rows]
    return DomainMatrix(data, (len(rows), ncols), QQ)


def _frac(q) -> Rational:
    return mpq(int(q.numerator), int(q.denominator))


def rational_rank(rows: Sequence[Sequence[Rational]]) -> int:
    if not rows:
        return 0
    return _dm(rows).rank()


def rational_nullspace(rows: Sequence[Sequence[Rational]], ncols: int) -> list[list[Rational]]:
    """Basis of {v : M v = 0}, free variables set to 1 (RREF convention)."""
    if not rows:
        return [[mpq(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    ns = _dm(rows, ncols).nullspace()
    return [[_frac(q) for q in row] for row in ns.to_list()]


def to_k(v: Sequence[QuadElem]) -> list[Rational]:
    out = []
    for z in v:
        out.extend((z.x, z.y))
    return out


def from_k(coords: Sequence[Rational], field_: Discriminant) -> Vector:
    return tuple(field_(coords[2 * i], coords[2 * i + 1]) for i in range(len(coords) // 2))


def mat_vec(A: Matrix, v: Sequence[QuadElem]) -> Vector:
    return tuple(sum((a * z for a, z in zip(row, v)), v[0].disc.zero) for row in A)


def conj_vec(v: Sequence[QuadElem]) -> Vector:
    return tuple(z.conjugate() for z in v)


# --- semilinear maps --------------------------------------------------------


@dataclass(frozen=True)
class SemilinearMap:
    """v -> A v + B sigma(v) on K^m."""

    linear_part: tuple[tuple[QuadElem, ...], ...]
    antilinear_part: tuple[tuple[QuadElem, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.linear_part)

    @property
    def field(self) -> Discriminant:
        return self.linear_part[0][0].disc

    @classmethod
    def linear(cls, A: Matrix) -> "SemilinearMap":
        A = tuple(tuple(row) for row in A)
        zero = A[0][0].disc.zero
        return cls(A, tuple(tuple(zero for _ in row) for row in A))

    def __call__(self, v: Sequence[QuadElem]) -> Vector:
        a = mat_vec(self.linear_part, v)
        b = mat_vec(self.antilinear_part, conj_vec(v))
        return tuple(p + q for p, q in zip(a, b))

    def k_matrix(self) -> list[list[Rational]]:
        """The 2m x 2m rational matrix of this map in the basis {1, t} per coordinate."""
        m = self.dim
        K = self.field
        cols = []
        for j in range(m):
            for unit_vec in (K.one, K.t):
                e = [K.zero] * m
                e[j] = unit_vec
                cols.append(to_k(self(e)))
        return [[cols[c][r] for c in range(2 * m)] for r in range(2 * m)]


def decompose_semilinear(f: Sequence[Sequence[Rational]], field_: Discriminant) -> SemilinearMap:
    """Split a k-linear map of K^m (given as a 2m x 2m matrix) into A v + B sigma(v)."""
    n = len(f)
    if n % 2 or any(len(row) != n for row in f):
        raise ValueError("expected a square matrix of even size")
    m = n // 2
    t_inv = field_.t.inverse()
    A = [[field_.zero] * m for _ in range(m)]
    B = [[field_.zero] * m for _ in range(m)]
    for i in range(m):
        for j in range(m):
            # block (i, j): images of 1 and t from coordinate j into coordinate i
            p = field_(f[2 * i][2 * j], f[2 * i + 1][2 * j])
            q = field_(f[2 * i][2 * j + 1], f[2 * i + 1][2 * j + 1])
            qt = q * t_inv
            A[i][j] = (p + qt) * mpq(1, 2)
            B[i][j] = (p - qt) * mpq(1, 2)
    return SemilinearMap(tuple(map(tuple, A)), tuple(map(tuple, B)))


# --- Weil restriction -------------------------------------------------------


def restricted_names(name: str) -> tuple[str, str]:
    return f"{name}_r", f"{name}_t"


def weil_restrict(f: PolyMap, split: Iterable[str] | None = None) -> PolyMap:
    """Rewrite a map on K-points as a map over k in doubled coordinates.

    Every K-valued variable ``x`` becomes ``x_r + t*x_t`` (its partner, if any,
    ``x_r - t*x_t``); each component splits into its t-free part and t-part.
    By default the K-valued variables are the domain coordinates and every
    parameter that has a Galois partner.
    """
    if any(v.kind == UNIT for v in f.vars if v.name in {n for c in f.components for n in c.used_vars()}):
        raise PolyError("cannot restrict scalars with a torus parameter still present")
    K = f.field
    if split is None:
        split_set = list(f.domain)
        for v in f.vars:
            if v.partner is not None and v.name not in split_set and v.partner not in split_set:
                split_set.append(v.name)
    else:
        split_set = list(split)
    new_vars: list[Var] = []
    subst: dict[str, SparsePoly] = {}
    for name in split_set:
        r, i = restricted_names(name)
        vr, vi = Var(r), Var(i)
        new_vars.extend((vr, vi))
        pr, pi = SparsePoly.gen(K, vr), SparsePoly.gen(K, vi)
        subst[name] = pr + pi * K.t
        partner = f.var(name).partner
        if partner is not None:
            subst[partner] = pr - pi * K.t
    comps = []
    for c in f.components:
        e = c.compose(subst)
        re = {k: K(v.x) for k, v in e.terms.items() if v.x}
        im = {k: K(v.y) for k, v in e.terms.items() if v.y}
        comps.append(SparsePoly(K, e.vars, re, _trusted=True))
        comps.append(SparsePoly(K, e.vars, im, _trusted=True))
    domain = [n for d in f.domain for n in restricted_names(d)]
    table = tuple(new_vars) + tuple(v for c in comps for v in c.vars)
    name = f"R({f.name})" if f.name else "R"
    return PolyMap(merge_vars(table), tuple(domain), tuple(comps), name)


# --- k-structures -----------------------------------------------------------


@dataclass
class KStructure:
    """A k-form of K^m, given by a k-basis of its k-points.

    ``chart`` maps original coordinates to the coordinates the basis lives in
    (identity when absent).
    """

    field: Discriminant
    ambient_dim: int
    basis: list[Vector]
    chart: PolyMap | None = None
    chart_inverse: PolyMap | None = None
    notes: dict = field(default_factory=dict)

    @property
    def k_dimension(self) -> int:
        return rational_rank([to_k(v) for v in self.basis])

    @property
    def spans_K(self) -> bool:
        t = self.field.t
        rows = [to_k(v) for v in self.basis] + [to_k([t * z for z in v]) for v in self.basis]
        return rational_rank(rows) == 2 * self.ambient_dim

    def contains(self, w: Sequence[QuadElem]) -> bool:
        """Is ``w`` (in chart coordinates) in the k-span of the basis?"""
        rows = [to_k(v) for v in self.basis]
        return rational_rank(rows + [to_k(w)]) == rational_rank(rows)

    def same_span(self, other_basis: Sequence[Vector]) -> bool:
        rows = [to_k(v) for v in self.basis]
        other = [to_k(v) for v in other_basis]
        r = rational_rank(rows)
        return r == rational_rank(other) == rational_rank(rows + other)

    def combination(self, coeffs: Sequence[Rational]) -> Vector:
        zero = self.field.zero
        out = [zero] * self.ambient_dim
        for c, v in zip(coeffs, self.basis):
            out = [o + z * c for o, z in zip(out, v)]
        return tuple(out)

    def to_json(self) -> dict:
        return {
            "alpha": format_rational(self.field.alpha),
            "ambient_dim": self.ambient_dim,
            "k_dimension": self.k_dimension,
            "basis": [[str(z) for z in v] for v in self.basis],
        }


def twisted_points(L: SemilinearMap) -> KStructure:
    """k-points of the twist by L: the fixed set {v : sigma(v) = L v}."""
    m = L.dim
    K = L.field
    F = L.k_matrix()
    # F' = matrix of v -> sigma(L v): negate the t-rows
    Fs = [[-q if r % 2 else q for q in row] for r, row in enumerate(F)]
    n = 2 * m
    sq = [[sum((Fs[i][k] * Fs[k][j] for k in range(n)), mpq(0)) for j in range(n)] for i in range(n)]
    defect = [[sq[i][j] - (1 if i == j else 0) for j in range(n)] for i in range(n)]
    if any(any(row) for row in defect):
        raise CocycleError(defect)
    fixed = [[Fs[i][j] - (1 if i == j else 0) for j in range(n)] for i in range(n)]
    basis = [from_k(v, K) for v in rational_nullspace(fixed, n)]
    return KStructure(K, m, basis)


def coordinate_shape_basis(field_: Discriminant, m: int = 4) -> list[Vector]:
    """{j e1, e2, ..., em}: the k-points when only the first coordinate is twisted."""
    basis = []
    for i in range(m):
        e = [field_.zero] * m
        e[i] = field_.j if i == 0 else field_.one
        basis.append(tuple(e))
    return basis


def build_E0(phi: PolyMap, tau: PolyMap, phi_inverse: PolyMap | None = None) -> KStructure:
    """k-points of the twist of E = A^4 by tau, in phi-coordinates.

    phi has rational coefficients so it commutes with sigma; the fixed-point
    problem sigma(v) = tau(v) becomes sigma(w) = L w for w = phi(v).
    """
    phi_inverse = phi_inverse or invert_fiberwise(phi)
    L, report = conjugate_involution(phi, tau, phi_inverse)
    if not report.linear:
        raise PolyError(f"phi o tau o phi^-1 is not linear: {report.nonlinear_terms}")
    if not phi.has_rational_coefficients():
        raise PolyError("the chart must be defined over Q")
    matrix = L.linear_matrix()
    E0 = twisted_points(SemilinearMap.linear(matrix))
    E0.chart, E0.chart_inverse = phi, phi_inverse
    expected = coordinate_shape_basis(phi.field, E0.ambient_dim)
    E0.notes = {
        "conjugated_involution": report.matrix,
        "coordinate_shape_match": E0.same_span(expected),
    }
    return E0


# --- stabilization ------------------------------------------------------------

SIGMA_PREFIX = "s"


def on_K_points(f: PolyMap) -> PolyMap:
    """Redeclare the coordinates of ``f`` as K-valued, with partners ``s<name>``."""
    ren = {}
    for v in f.vars:
        if v.name in f.domain and v.partner is None:
            ren[v.name] = Var(v.name, AFFINE, SIGMA_PREFIX + v.name)
    table = tuple(ren.get(v.name, v) for v in f.vars)
    comps = tuple(SparsePoly(c.field, table, c.lift(f.vars).terms, _trusted=True) for c in f.components)
    return PolyMap(table, f.domain, comps, f.name, f.fiber_order)


def default_torus_points(field_: Discriminant) -> list[TorusPoint]:
    pts = [TorusPoint(field_.one), TorusPoint(-field_.one)]
    if field_.alpha == 2:
        pts.append(TorusPoint(field_(3, 2)))
    elif field_.alpha == -1:
        pts.append(TorusPoint(field_(mpq(3, 5), mpq(4, 5))))
    else:
        pts.append(torus_point_from(field_(1, 1)))
    return pts


def stabilization_chain(mu: PolyMap, tau: PolyMap, param: str = LAMBDA) -> list[tuple[str, bool]]:
    """Each equality of sigma.tau(l v) = tau.sigma(l v) = tau(sigma(l) sigma(v))
    = tau(l^-1 tau v) = l v as a separate structural identity."""
    muK, tauK = on_K_points(mu), on_K_points(tau)
    K = mu.field
    v = [SparsePoly.gen(K, muK.var(d)) for d in muK.domain]
    sv = [p.sigma() for p in v]
    lv = list(muK.components)
    inv = PolyRing(K, [unit(param)])[param] ** -1
    mu_inv = muK.substitute({param: inv})
    tau_v = list(tauK(*v))

    sigma_tau_lv = [c.sigma() for c in tauK(*lv)]
    sigma_lv = [c.sigma() for c in lv]
    tau_sigma_lv = list(tauK(*sigma_lv))
    step1 = sigma_tau_lv == tau_sigma_lv

    step2 = sigma_lv == list(mu_inv(*sv))

    hyp = {SIGMA_PREFIX + d: img for d, img in zip(muK.domain, tau_v)}
    lhs3 = [c.compose(hyp) for c in tauK(*mu_inv(*sv))]
    rhs3 = list(tauK(*mu_inv(*tau_v)))
    step3 = lhs3 == rhs3

    step4 = rhs3 == lv

    # tau preserves E0: sigma(tau v) = tau(sigma v) = tau(tau v)
    tau_step = [c.sigma() for c in tau_v] == list(tauK(*sv)) and list(tauK(*tau_v)) == v
    return [
        ("sigma o tau (l v) = tau o sigma (l v)", step1),
        ("sigma(l v) = l^-1 sigma(v)", step2),
        ("tau(l^-1 sigma v) = tau(l^-1 tau v) given sigma v = tau v", step3),
        ("tau(l^-1 tau v) = l v", step4),
        ("sigma(tau v) = tau(sigma v) and tau(tau v) = v", tau_step),
    ]


def check_stabilization(
    mu: PolyMap,
    tau: PolyMap,
    E0: KStructure,
    samples: int = 100,
    seed: int = DEFAULT_SEED,
    torus_points: Sequence[TorusPoint] | None = None,
) -> CheckResult:
    chain = stabilization_chain(mu, tau)
    symbolic_ok = all(ok for _, ok in chain)

    K = E0.field
    rng = random.Random(seed)
    pts = list(torus_points or default_torus_points(K))
    chart = E0.chart or PolyMap.identity(K, mu.vars, mu.domain)
    chart_inv = E0.chart_inverse or chart
    failures: list[str] = []

    def pt(vec, lam=None):
        p = dict(zip(mu.domain, vec))
        if lam is not None:
            p[LAMBDA] = lam
        return p

    def in_E0(vec) -> bool:
        return conj_vec(vec) == tau.evaluate(pt(vec)) and E0.contains(chart.evaluate(pt(vec)))

    for i in range(samples):
        w = E0.combination([small_rational(rng) for _ in E0.basis])
        v = chart_inv.evaluate(pt(w))
        if not in_E0(v):
            failures.append(f"sample {i} is not a k-point")
            continue
        if not in_E0(tau.evaluate(pt(v))):
            failures.append(f"tau(sample {i}) left E0")
        for p in pts:
            if not in_E0(mu.evaluate(pt(v, p.value))):
                failures.append(f"mu({p}, sample {i}) left E0")
    sampled_ok = not failures
    return result(
        "stabilization[H(k) on E0(k)]",
        "tau(l^-1 tau v) = l v, so H(k) stabilizes E0(k)",
        symbolic_ok and sampled_ok,
        chain=[{"step": s, "ok": ok} for s, ok in chain],
        samples=samples,
        torus_points=[str(p) for p in pts],
        failures=failures[:10],
    )


@dataclass(frozen=True)
class FixedLocus:
    forced_zero: tuple[str, ...]
    free: tuple[str, ...]
    unresolved: tuple[str, ...]

    def describe(self) -> str:
        if self.unresolved:
            return "unresolved components: " + ", ".join(self.unresolved)
        if not self.forced_zero:
            return "whole space"
        return "{" + ", ".join(f"{n} = 0" for n in self.forced_zero) + "}"


def fixed_locus_I(mu: PolyMap, param: str = LAMBDA, expected: Sequence[str] = FIBER) -> tuple[FixedLocus, CheckResult]:
    """Fixed points of l = -1; they should be exactly the zero-section."""
    s = mu.substitute({param: -1})
    forced, free, unresolved = [], [], []
    for d, comp in zip(s.domain, s.components):
        diff = comp - SparsePoly.gen(s.field, s.var(d))
        if diff.is_zero():
            free.append(d)
            continue
        lin = diff.collect([d])
        if set(lin) == {(1,)} and lin[(1,)].is_constant():
            forced.append(d)
        else:
            unresolved.append(f"{d}: {diff}")
    locus = FixedLocus(tuple(forced), tuple(free), tuple(unresolved))
    ok = not unresolved and set(forced) == set(expected)
    details = {"locus": locus.describe()}
    if not forced and not unresolved:
        details["criterion"] = "inapplicable: l = -1 acts trivially"
    return locus, result("fixed_locus[I = {1, -1}]", "the l = -1 slice fixes exactly {x = y = 0}", ok, **details)
