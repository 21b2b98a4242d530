"""Sparse multivariate Laurent polynomials over a quadratic field K.

Variables come in two kinds:

* ``affine``: ordinary polynomial variables, exponents >= 0.  An affine
  variable may have a *partner*, its Galois conjugate (``x`` and ``xb``).
  Affine variables without a partner are treated as k-valued, i.e. fixed by
  the Galois involution.
* ``unit``: Laurent variables, exponents of any sign.  They model a point of
  the norm-one torus, so the Galois involution acts on them by inversion.

Polynomials carry their own ordered variable table; binary operations merge
tables by name.  Terms are kept in a dict from exponent tuples to nonzero
:class:`~quadtwist.arith.QuadElem` coefficients, so equality is structural.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Union

from .arith import RATIONAL_TYPES, Discriminant, QuadElem, Rational, format_rational

AFFINE = "affine"
UNIT = "unit"


class PolyError(ValueError):
    pass


class VarConflictError(PolyError):
    pass


class CompositionError(PolyError):
    pass


class EvaluationError(PolyError):
    pass


class NormFormError(PolyError):
    """Raised by :func:`rewrite_norm`; ``monomials`` lists the offenders."""

    def __init__(self, message: str, monomials: list[str]) -> None:
        super().__init__(f"{message}: {', '.join(monomials)}")
        self.monomials = monomials


@dataclass(frozen=True)
class Var:
    name: str
    kind: str = AFFINE
    partner: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in (AFFINE, UNIT):
            raise PolyError(f"unknown variable kind {self.kind!r}")
        if self.partner == self.name:
            raise PolyError(f"variable {self.name} cannot be its own partner")
        if self.kind == UNIT and self.partner is not None:
            raise PolyError(f"unit variable {self.name} cannot have a partner")

    def conjugate_var(self) -> "Var":
        assert self.partner is not None
        return Var(self.partner, self.kind, self.name)


def affine(name: str, partner: str | None = None) -> Var:
    return Var(name, AFFINE, partner)


def unit(name: str) -> Var:
    return Var(name, UNIT)


def conjugate_pair(name: str, bar: str | None = None) -> tuple[Var, Var]:
    bar = bar or name + "b"
    return Var(name, AFFINE, bar), Var(bar, AFFINE, name)


VarTable = tuple  # tuple[Var, ...]


@lru_cache(maxsize=4096)
def _merge(va: VarTable, vb: VarTable) -> VarTable:
    if va == vb:
        return va
    seen = {v.name: v for v in va}
    out = list(va)
    for v in vb:
        old = seen.get(v.name)
        if old is None:
            seen[v.name] = v
            out.append(v)
        elif old != v:
            raise VarConflictError(f"conflicting declarations {old} and {v}")
    return tuple(out)


@lru_cache(maxsize=4096)
def _positions(src: VarTable, dst: VarTable) -> tuple[int, ...]:
    index = {v.name: i for i, v in enumerate(dst)}
    return tuple(index[v.name] for v in src)


def merge_vars(*tables: Iterable[Var]) -> VarTable:
    out: VarTable = ()
    for t in tables:
        out = _merge(out, tuple(t))
    return out


Scalar = Union[int, Rational, QuadElem]


class SparsePoly:
    """Immutable sparse Laurent polynomial. Build via :class:`PolyRing`."""

    __slots__ = ("field", "vars", "terms", "_hash")

    def __init__(
        self,
        field: Discriminant,
        vars: Iterable[Var],
        terms: Mapping[tuple[int, ...], QuadElem] | None = None,
        *,
        _trusted: bool = False,
    ) -> None:
        self.field = field
        self.vars = tuple(vars)
        self._hash = None
        if _trusted:
            self.terms = terms  # type: ignore[assignment]
            return
        n = len(self.vars)
        clean: dict[tuple[int, ...], QuadElem] = {}
        for exps, c in (terms or {}).items():
            exps = tuple(exps)
            if len(exps) != n:
                raise PolyError(f"exponent vector {exps} has wrong length for {n} variables")
            c = field.coerce(c)
            for v, e in zip(self.vars, exps):
                if e < 0 and v.kind == AFFINE:
                    raise PolyError(f"negative exponent {e} on affine variable {v.name}")
            if c:
                if exps in clean:
                    c = clean[exps] + c
                    if not c:
                        del clean[exps]
                        continue
                clean[exps] = c
        self.terms = clean

    # construction --------------------------------------------------------

    @classmethod
    def constant(cls, field: Discriminant, c: Scalar, vars: Iterable[Var] = ()) -> "SparsePoly":
        vars = tuple(vars)
        c = field.coerce(c)
        terms = {(0,) * len(vars): c} if c else {}
        return cls(field, vars, terms, _trusted=True)

    @classmethod
    def gen(cls, field: Discriminant, var: Var) -> "SparsePoly":
        return cls(field, (var,), {(1,): field.one}, _trusted=True)

    @classmethod
    def monomial(cls, field: Discriminant, vars: Iterable[Var], exps: Mapping[str, int], c: Scalar = 1) -> "SparsePoly":
        vars = tuple(vars)
        key = tuple(exps.get(v.name, 0) for v in vars)
        return cls(field, vars, {key: field.coerce(c)})

    def zero(self) -> "SparsePoly":
        return SparsePoly(self.field, self.vars, {}, _trusted=True)

    def one(self) -> "SparsePoly":
        return SparsePoly.constant(self.field, 1, self.vars)

    # variable tables -----------------------------------------------------

    def lift(self, vars: VarTable) -> "SparsePoly":
        """Re-express over a superset variable table."""
        vars = tuple(vars)
        if vars == self.vars:
            return self
        merged = _merge(vars, self.vars)
        if len(merged) != len(vars):
            missing = [v.name for v in merged[len(vars):]]
            raise PolyError(f"variables {missing} not present in target table")
        pos = _positions(self.vars, vars)
        n = len(vars)
        out = {}
        for exps, c in self.terms.items():
            key = [0] * n
            for p, e in zip(pos, exps):
                key[p] = e
            out[tuple(key)] = c
        return SparsePoly(self.field, vars, out, _trusted=True)

    def _aligned(self, other: "SparsePoly") -> tuple["SparsePoly", "SparsePoly"]:
        if other.field != self.field:
            raise PolyError("polynomials over different fields")
        if self.vars == other.vars:
            return self, other
        vars = _merge(self.vars, other.vars)
        return self.lift(vars), other.lift(vars)

    def _coerce(self, other: object) -> "SparsePoly | None":
        if isinstance(other, SparsePoly):
            return other
        if isinstance(other, (*RATIONAL_TYPES, QuadElem)):
            return SparsePoly.constant(self.field, other, self.vars)
        return None

    def var(self, name: str) -> Var:
        for v in self.vars:
            if v.name == name:
                return v
        raise KeyError(name)

    def used_vars(self) -> set[str]:
        used = set()
        for exps in self.terms:
            for v, e in zip(self.vars, exps):
                if e:
                    used.add(v.name)
        return used

    def pruned(self) -> "SparsePoly":
        used = self.used_vars()
        keep = tuple(v for v in self.vars if v.name in used)
        if len(keep) == len(self.vars):
            return self
        idx = [i for i, v in enumerate(self.vars) if v.name in used]
        out = {tuple(exps[i] for i in idx): c for exps, c in self.terms.items()}
        return SparsePoly(self.field, keep, out, _trusted=True)

    # ring operations -----------------------------------------------------

    def __add__(self, other: object) -> "SparsePoly":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a, b = self._aligned(o)
        out = dict(a.terms)
        for exps, c in b.terms.items():
            s = out.get(exps)
            if s is None:
                out[exps] = c
            else:
                s = s + c
                if s:
                    out[exps] = s
                else:
                    del out[exps]
        return SparsePoly(self.field, a.vars, out, _trusted=True)

    __radd__ = __add__

    def __neg__(self) -> "SparsePoly":
        return SparsePoly(self.field, self.vars, {e: -c for e, c in self.terms.items()}, _trusted=True)

    def __sub__(self, other: object) -> "SparsePoly":
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other: object) -> "SparsePoly":
        return (-self) + other

    def scale(self, c: Scalar) -> "SparsePoly":
        c = self.field.coerce(c)
        if not c:
            return self.zero()
        return SparsePoly(self.field, self.vars, {e: c * v for e, v in self.terms.items()}, _trusted=True)

    def __mul__(self, other: object) -> "SparsePoly":
        if isinstance(other, (*RATIONAL_TYPES, QuadElem)):
            return self.scale(other)
        if not isinstance(other, SparsePoly):
            return NotImplemented
        a, b = self._aligned(other)
        out: dict[tuple[int, ...], QuadElem] = {}
        for ea, ca in a.terms.items():
            for eb, cb in b.terms.items():
                key = tuple(x + y for x, y in zip(ea, eb))
                c = ca * cb
                s = out.get(key)
                out[key] = c if s is None else s + c
        out = {k: v for k, v in out.items() if v}
        return SparsePoly(self.field, a.vars, out, _trusted=True)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "SparsePoly":
        if n < 0:
            return self.inverse_monomial() ** (-n)
        result = self.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def is_invertible_monomial(self) -> bool:
        if len(self.terms) != 1:
            return False
        (exps,) = self.terms
        return all(e == 0 or v.kind == UNIT for v, e in zip(self.vars, exps))

    def inverse_monomial(self) -> "SparsePoly":
        if not self.is_invertible_monomial():
            raise CompositionError(f"{self} is not an invertible monomial")
        ((exps, c),) = self.terms.items()
        return SparsePoly(self.field, self.vars, {tuple(-e for e in exps): c.inverse()}, _trusted=True)

    # comparison ----------------------------------------------------------

    def _sparse_items(self) -> frozenset:
        names = [v.name for v in self.vars]
        return frozenset(
            (tuple(sorted((n, e) for n, e in zip(names, exps) if e)), c) for exps, c in self.terms.items()
        )

    def __eq__(self, other: object) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if o.field != self.field:
            return False
        if o.vars == self.vars:
            return o.terms == self.terms
        return self._sparse_items() == o._sparse_items()

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._sparse_items())
        return self._hash

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and not any(next(iter(self.terms))))

    def constant_term(self) -> QuadElem:
        return self.terms.get((0,) * len(self.vars), self.field.zero)

    # inspection ----------------------------------------------------------

    def items(self) -> Iterator[tuple[dict[str, int], QuadElem]]:
        """Terms as ({name: exponent} with zero exponents dropped, coefficient)."""
        names = [v.name for v in self.vars]
        for exps, c in self.sorted_terms():
            yield {n: e for n, e in zip(names, exps) if e}, c

    def sorted_terms(self) -> list[tuple[tuple[int, ...], QuadElem]]:
        # graded lex, highest first
        return sorted(self.terms.items(), key=lambda kv: (-sum(kv[0]), tuple(-e for e in kv[0])))

    def degree(self, name: str | None = None) -> int:
        if not self.terms:
            return -1
        if name is None:
            return max(sum(e) for e in self.terms)
        try:
            i = [v.name for v in self.vars].index(name)
        except ValueError:
            return 0
        return max(e[i] for e in self.terms)

    def coefficients(self) -> list[QuadElem]:
        return [c for _, c in self.sorted_terms()]

    def has_rational_coefficients(self) -> bool:
        return all(c.is_rational for c in self.terms.values())

    def collect(self, names: Iterable[str]) -> dict[tuple[int, ...], "SparsePoly"]:
        """Group terms by their exponents in ``names``.

        Returns {exponents of names: coefficient polynomial in the other vars}.
        """
        names = list(names)
        index = {v.name: i for i, v in enumerate(self.vars)}
        sel = [index[n] if n in index else None for n in names]
        rest = [i for i, v in enumerate(self.vars) if v.name not in names]
        rest_vars = tuple(self.vars[i] for i in rest)
        groups: dict[tuple[int, ...], dict] = {}
        for exps, c in self.terms.items():
            key = tuple(exps[i] if i is not None else 0 for i in sel)
            groups.setdefault(key, {})[tuple(exps[i] for i in rest)] = c
        return {k: SparsePoly(self.field, rest_vars, t, _trusted=True) for k, t in groups.items()}

    def coefficient(self, exps: Mapping[str, int]) -> "SparsePoly":
        """Coefficient of the monomial ``exps`` (in the named variables only)."""
        names = list(exps)
        return self.collect(names).get(tuple(exps[n] for n in names), _empty_over(self, names))

    # substitution --------------------------------------------------------

    def compose(self, subst: Mapping[str, "SparsePoly | Scalar"]) -> "SparsePoly":
        """Substitute variables simultaneously; unmentioned variables stay.

        A unit variable that occurs with a negative exponent must be replaced by
        an invertible monomial (a nonzero constant times unit variables).
        """
        subst = {k: v for k, v in subst.items() if any(var.name == k for var in self.vars)}
        if not subst:
            return self
        images: list[SparsePoly] = []
        tables = []
        for v in self.vars:
            img = subst.get(v.name)
            if img is None:
                img = SparsePoly.gen(self.field, v)
            elif not isinstance(img, SparsePoly):
                img = SparsePoly.constant(self.field, img)
            elif img.field != self.field:
                raise CompositionError("substitution over a different field")
            images.append(img)
            tables.append(img.vars)
        vars = merge_vars(*tables)
        images = [im.lift(vars) for im in images]
        powers: list[dict[int, SparsePoly]] = [{} for _ in images]

        def power(i: int, e: int) -> SparsePoly:
            cache = powers[i]
            p = cache.get(e)
            if p is None:
                if e < 0:
                    if not images[i].is_invertible_monomial():
                        raise CompositionError(
                            f"negative power of {self.vars[i].name} needs an invertible "
                            f"monomial, got {images[i]}"
                        )
                    p = images[i].inverse_monomial() ** (-e)
                else:
                    p = images[i] ** e
                cache[e] = p
            return p

        acc: dict[tuple[int, ...], QuadElem] = {}
        zero_key = (0,) * len(vars)
        for exps, c in self.terms.items():
            term = SparsePoly(self.field, vars, {zero_key: c}, _trusted=True)
            for i, e in enumerate(exps):
                if e:
                    term = term * power(i, e)
            for k, v in term.terms.items():
                s = acc.get(k)
                acc[k] = v if s is None else s + v
        return SparsePoly(self.field, vars, {k: v for k, v in acc.items() if v}, _trusted=True)

    def substitute_zero(self, names: Iterable[str]) -> "SparsePoly":
        """Fast path for compose({n: 0 for n in names})."""
        idx = [i for i, v in enumerate(self.vars) if v.name in set(names)]
        if not idx:
            return self
        out = {e: c for e, c in self.terms.items() if all(e[i] == 0 for i in idx)}
        return SparsePoly(self.field, self.vars, out, _trusted=True)

    def rename(self, mapping: Mapping[str, str]) -> "SparsePoly":
        """Rename variables (and partner references) without touching terms."""
        def ren(v: Var) -> Var:
            p = mapping.get(v.partner, v.partner) if v.partner else None
            return Var(mapping.get(v.name, v.name), v.kind, p)

        return SparsePoly(self.field, tuple(ren(v) for v in self.vars), self.terms, _trusted=True)

    # Galois action -------------------------------------------------------

    def sigma(self) -> "SparsePoly":
        """Apply the Galois involution.

        Coefficients are conjugated, partner variables swapped, and unit
        variables inverted (sigma(l) = 1/l on the norm-one torus).
        """
        vars = list(self.vars)
        names = {v.name for v in vars}
        for v in self.vars:
            if v.partner is not None and v.partner not in names:
                vars.append(v.conjugate_var())
                names.add(v.partner)
        vars_t = tuple(vars)
        index = {v.name: i for i, v in enumerate(vars_t)}
        target = []
        for v in self.vars:
            if v.partner is not None:
                target.append((index[v.partner], 1))
            elif v.kind == UNIT:
                target.append((index[v.name], -1))
            else:
                target.append((index[v.name], 1))
        n = len(vars_t)
        out = {}
        for exps, c in self.terms.items():
            key = [0] * n
            for (j, s), e in zip(target, exps):
                key[j] = s * e
            out[tuple(key)] = c.conjugate()
        return SparsePoly(self.field, vars_t, out, _trusted=True)

    # evaluation ----------------------------------------------------------

    def evaluate(self, point: Mapping[str, Scalar]) -> QuadElem:
        values = []
        for v in self.vars:
            if v.name not in point:
                if any(exps[len(values)] for exps in self.terms):
                    raise EvaluationError(f"no value for variable {v.name}")
                values.append(self.field.one)
                continue
            val = self.field.coerce(point[v.name])
            if v.kind == UNIT and not val:
                raise EvaluationError(f"zero assigned to unit variable {v.name}")
            values.append(val)
        powers: list[dict[int, QuadElem]] = [{} for _ in values]
        total = self.field.zero
        for exps, c in self.terms.items():
            term = c
            for i, e in enumerate(exps):
                if e:
                    p = powers[i].get(e)
                    if p is None:
                        p = powers[i][e] = values[i] ** e
                    term = term * p
            total = total + term
        return total

    # serialization -------------------------------------------------------

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        names = [v.name for v in self.vars]
        parts = []
        for exps, c in self.sorted_terms():
            mono = "*".join(
                n if e == 1 else f"{n}^{e}" for n, e in zip(names, exps) if e
            )
            if not mono:
                parts.append(_coeff_str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{_coeff_str(c)}*{mono}")
        out = parts[0]
        for part in parts[1:]:
            out += " - " + part[1:] if part.startswith("-") else " + " + part
        return out

    def __repr__(self) -> str:
        return f"SparsePoly({self})"

    def term_list(self) -> list[list]:
        return [
            [list(exps), format_rational(c.x), format_rational(c.y)]
            for exps, c in self.sorted_terms()
        ]


def _coeff_str(c: QuadElem) -> str:
    if c.is_rational:
        return format_rational(c.x)
    return f"({c})"


def _empty_over(p: SparsePoly, names: list[str]) -> SparsePoly:
    rest = tuple(v for v in p.vars if v.name not in names)
    return SparsePoly(p.field, rest, {}, _trusted=True)


class PolyRing:
    """A field together with a variable table; hands out generators."""

    def __init__(self, field: Discriminant, vars: Iterable[Var]) -> None:
        self.field = field
        self.vars = merge_vars(tuple(vars))

    def __getitem__(self, name: str) -> SparsePoly:
        for v in self.vars:
            if v.name == name:
                return SparsePoly.gen(self.field, v).lift(self.vars)
        raise KeyError(name)

    def gens(self, *names: str) -> tuple[SparsePoly, ...]:
        return tuple(self[n] for n in names)

    def const(self, c: Scalar) -> SparsePoly:
        return SparsePoly.constant(self.field, c, self.vars)

    def poly(self, terms: Mapping[tuple[int, ...], Scalar]) -> SparsePoly:
        return SparsePoly(self.field, self.vars, {k: self.field.coerce(v) for k, v in terms.items()})

    def extend(self, *vars: Var) -> "PolyRing":
        return PolyRing(self.field, self.vars + tuple(vars))


# module-level operation names ---------------------------------------------


def poly_mul(p: SparsePoly, q: SparsePoly) -> SparsePoly:
    return p * q


def poly_compose(p: SparsePoly, subst: Mapping[str, SparsePoly | Scalar]) -> SparsePoly:
    return p.compose(subst)


def apply_sigma(p: SparsePoly) -> SparsePoly:
    return p.sigma()


def poly_eval(p: SparsePoly, point: Mapping[str, Scalar]) -> QuadElem:
    return p.evaluate(point)


def weight_decompose(p: SparsePoly, u: str) -> dict[int, SparsePoly]:
    """Split ``p`` by the exponent of the unit variable ``u``.

    The parts no longer mention ``u``; ``sum(u**w * part)`` recovers ``p``.
    """
    if p.var(u).kind != UNIT:
        raise PolyError(f"{u} is not a unit variable")
    return {w[0]: part for w, part in p.collect([u]).items()}


def filter_weight(p: SparsePoly, u: str, w: int) -> SparsePoly:
    try:
        var = p.var(u)
    except KeyError:
        return p if w == 0 else p.zero()
    if var.kind != UNIT:
        raise PolyError(f"{u} is not a unit variable")
    parts = weight_decompose(p, u)
    if w in parts:
        return parts[w]
    return _empty_over(p, [u])


def recombine_weights(parts: Mapping[int, SparsePoly], u: Var) -> SparsePoly | None:
    total = None
    for w, part in parts.items():
        term = part * SparsePoly.monomial(part.field, (u,), {u.name: w})
        total = term if total is None else total + term
    return total


@dataclass(frozen=True)
class NormForm:
    """``p = shift_var**shift * U(z)`` with ``z = x * xb``.

    ``coeffs[i]`` is the coefficient of ``z**i``; it may still involve other
    variables (unknown parameters), never the pair itself.
    """

    pair: tuple[str, str]
    shift: int
    coeffs: dict[int, SparsePoly]

    @property
    def degree(self) -> int:
        return max(self.coeffs, default=-1)

    def univariate(self, z: Var) -> SparsePoly | None:
        total = None
        for i, c in sorted(self.coeffs.items()):
            term = c * SparsePoly.monomial(c.field, (z,), {z.name: i})
            total = term if total is None else total + term
        return total

    def expand(self, template: SparsePoly) -> SparsePoly:
        """Substitute z = x*xb back, multiply by the shift power."""
        x, xb = self.pair
        total = template.zero()
        for i, c in self.coeffs.items():
            mono = SparsePoly.monomial(template.field, template.vars, {x: i, xb: i + self.shift})
            total = total + c * mono
        return total


def rewrite_norm(
    p: SparsePoly,
    pair: tuple[str, str],
    shifts: Iterable[int] = (0, 3),
) -> NormForm:
    """Write ``p`` as ``xb**s * U(x*xb)`` for an allowed shift ``s``.

    ``pair`` is ``(x, xb)``; swap the pair to put the shift on ``x`` instead.
    Other variables are treated as coefficients.
    """
    x, xb = pair
    shifts = tuple(shifts)
    groups = p.collect([x, xb])
    by_shift: dict[int, list[tuple[int, int]]] = {}
    for k, l in groups:
        by_shift.setdefault(l - k, []).append((k, l))

    def mono(k: int, l: int) -> str:
        return f"{x}^{k}*{xb}^{l}"

    if not by_shift:
        return NormForm(pair, shifts[0] if shifts else 0, {})
    if len(by_shift) > 1:
        bad = sorted(by_shift.items(), key=lambda kv: kv[0])
        raise NormFormError(
            "mixed shifts " + ", ".join(str(s) for s, _ in bad),
            [mono(k, l) for _, kls in bad for k, l in sorted(kls)],
        )
    ((s, kls),) = by_shift.items()
    if s not in shifts:
        raise NormFormError(f"shift {s} not in {list(shifts)}", [mono(k, l) for k, l in sorted(kls)])
    return NormForm(pair, s, {k: groups[(k, l)] for k, l in kls})
