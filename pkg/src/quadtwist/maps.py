"""Polynomial maps between affine spaces, and their JSON file format.

A :class:`PolyMap` names its domain coordinates; every other variable in its
table (a torus parameter ``l``, unknown coefficients) is a parameter shared by
name with whatever the map is composed with.

When a domain coordinate ``x`` has a Galois partner ``xb`` that is not itself a
coordinate, the map is understood to act on K-points: composing ``f`` after
``g`` substitutes ``x -> g_x`` *and* ``xb -> sigma(g_x)``.  This is how
semilinear maps such as ``(x, y) -> (xb, w * yb)`` compose.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .arith import Discriminant, QuadElem, Rational, format_rational, parse_rational
from .poly import AFFINE, UNIT, PolyError, SparsePoly, Var, merge_vars

FORMAT_TAG = "quadtwist.polymap/1"


class MapError(PolyError):
    pass


@dataclass(frozen=True)
class PolyMap:
    vars: tuple[Var, ...]
    domain: tuple[str, ...]
    components: tuple[SparsePoly, ...]
    name: str = ""
    # order of the fiber coordinates a printed fiber matrix multiplies
    fiber_order: tuple[str, str] | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.components:
            raise MapError("a map needs at least one component")
        table = merge_vars(self.vars, *(c.vars for c in self.components))
        names = {v.name for v in table}
        for d in self.domain:
            if d not in names:
                raise MapError(f"domain variable {d} is not declared")
        fields = {c.field for c in self.components}
        if len(fields) != 1:
            raise MapError("components over different fields")
        object.__setattr__(self, "vars", table)
        object.__setattr__(self, "domain", tuple(self.domain))
        object.__setattr__(self, "components", tuple(c.lift(table) for c in self.components))

    @classmethod
    def from_components(
        cls,
        domain: Sequence[str],
        components: Sequence[SparsePoly],
        name: str = "",
        fiber_order: tuple[str, str] | None = None,
    ) -> "PolyMap":
        return cls(merge_vars(*(c.vars for c in components)), tuple(domain), tuple(components), name, fiber_order)

    @classmethod
    def identity(cls, field_: Discriminant, vars: Iterable[Var], domain: Sequence[str]) -> "PolyMap":
        vars = tuple(vars)
        by_name = {v.name: v for v in vars}
        comps = tuple(SparsePoly.gen(field_, by_name[d]).lift(vars) for d in domain)
        return cls(vars, tuple(domain), comps, "id")

    @property
    def field(self) -> Discriminant:
        return self.components[0].field

    @property
    def domain_dim(self) -> int:
        return len(self.domain)

    @property
    def codomain_dim(self) -> int:
        return len(self.components)

    def var(self, name: str) -> Var:
        for v in self.vars:
            if v.name == name:
                return v
        raise KeyError(name)

    def parameters(self) -> list[Var]:
        dom = set(self.domain)
        partners = {self.var(d).partner for d in self.domain}
        return [v for v in self.vars if v.name not in dom and v.name not in partners]

    def substitution(self, images: Sequence[SparsePoly]) -> dict[str, SparsePoly]:
        """Substitution dict sending domain coordinates to ``images``.

        Partners of coordinates that are not coordinates themselves receive the
        conjugate image.
        """
        if len(images) != self.domain_dim:
            raise MapError(f"expected {self.domain_dim} images, got {len(images)}")
        subst = dict(zip(self.domain, images))
        dom = set(self.domain)
        for d, img in zip(self.domain, images):
            partner = self.var(d).partner
            if partner is not None and partner not in dom:
                subst[partner] = img.sigma()
        return subst

    def __call__(self, *images: SparsePoly) -> tuple[SparsePoly, ...]:
        subst = self.substitution(images)
        return tuple(c.compose(subst) for c in self.components)

    def with_components(self, comps: Sequence[SparsePoly], name: str | None = None) -> "PolyMap":
        return PolyMap.from_components(self.domain, comps, self.name if name is None else name, self.fiber_order)

    def substitute(self, subst: Mapping[str, Any], name: str | None = None) -> "PolyMap":
        """Substitute parameters (e.g. ``l -> l1*l2`` or ``l -> -1``)."""
        comps = [c.compose(subst) for c in self.components]
        table = merge_vars(*(c.vars for c in comps), [v for v in self.vars if v.name in self.domain])
        return PolyMap(table, self.domain, tuple(comps), self.name if name is None else name, self.fiber_order)

    def rename(self, mapping: Mapping[str, str]) -> "PolyMap":
        comps = tuple(c.rename(mapping) for c in self.components)
        dom = tuple(mapping.get(d, d) for d in self.domain)
        table = tuple(
            Var(mapping.get(v.name, v.name), v.kind, mapping.get(v.partner, v.partner) if v.partner else None)
            for v in self.vars
        )
        return PolyMap(table, dom, comps, self.name, self.fiber_order)

    def is_identity(self) -> bool:
        if self.codomain_dim != self.domain_dim:
            return False
        for d, c in zip(self.domain, self.components):
            if c != SparsePoly.gen(self.field, self.var(d)):
                return False
        return True

    def has_rational_coefficients(self) -> bool:
        return all(c.has_rational_coefficients() for c in self.components)

    def evaluate(self, point: Mapping[str, Any]) -> tuple[QuadElem, ...]:
        """Evaluate at a point; partners of coordinates default to conjugates."""
        pt = dict(point)
        dom = set(self.domain)
        for d in self.domain:
            partner = self.var(d).partner
            if partner is not None and partner not in dom and partner not in pt and d in pt:
                pt[partner] = self.field.coerce(pt[d]).conjugate()
        return tuple(c.evaluate(pt) for c in self.components)

    def linear_matrix(self) -> list[list[QuadElem]] | None:
        """The constant matrix of a linear map in its domain coordinates, else None."""
        rows = []
        dom = list(self.domain)
        for c in self.components:
            if c.used_vars() - set(dom):
                return None
            row = [self.field.zero] * len(dom)
            for exps, coeff in c.items():
                if len(exps) != 1:
                    return None
                ((n, e),) = exps.items()
                if e != 1:
                    return None
                row[dom.index(n)] = coeff
            rows.append(row)
        return rows

    def __str__(self) -> str:
        args = ", ".join(self.domain)
        body = ", ".join(str(c) for c in self.components)
        return f"{self.name or 'f'}({args}) = ({body})"


def map_compose(f: PolyMap, g: PolyMap) -> PolyMap:
    """f after g."""
    if g.codomain_dim != f.domain_dim:
        raise MapError(f"cannot compose: {g.codomain_dim} outputs into {f.domain_dim} inputs")
    comps = f(*g.components)
    table = merge_vars(g.vars, *(c.vars for c in comps))
    return PolyMap(table, g.domain, tuple(comps), f"{f.name}o{g.name}", g.fiber_order)


def maps_equal(f: PolyMap, g: PolyMap) -> bool:
    """Same coordinates and structurally equal components (names ignored)."""
    return f.domain == g.domain and len(f.components) == len(g.components) and all(
        a == b for a, b in zip(f.components, g.components)
    )


def identity_like(f: PolyMap) -> PolyMap:
    return PolyMap.identity(f.field, f.vars, f.domain)


# --- JSON --------------------------------------------------------------


class MapFormatError(MapError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None) -> None:
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.field = field
        self.line = line


def map_to_json(f: PolyMap) -> dict:
    return {
        "format": FORMAT_TAG,
        "name": f.name,
        "alpha": format_rational(f.field.alpha),
        "vars": [{"name": v.name, "kind": v.kind, "partner": v.partner} for v in f.vars],
        "domain": list(f.domain),
        "fiber_order": list(f.fiber_order) if f.fiber_order else None,
        "components": [c.term_list() for c in f.components],
    }


def dump_map(f: PolyMap) -> str:
    return json.dumps(map_to_json(f), indent=2) + "\n"


def _strict_rational(text: Any, where: str) -> Rational:
    if not isinstance(text, str):
        raise MapFormatError(f"expected a rational string, got {text!r}", where)
    try:
        return parse_rational(text, strict=True)
    except (ValueError, ZeroDivisionError) as exc:
        msg = str(exc)
        if msg.startswith("non-canonical"):
            raise MapFormatError(f"non-canonical rational {text!r}", where) from None
        raise MapFormatError(msg, where) from None


def map_from_json(data: Any) -> PolyMap:
    if not isinstance(data, dict):
        raise MapFormatError("top level must be an object")
    if data.get("format") != FORMAT_TAG:
        raise MapFormatError(f"unknown format {data.get('format')!r}", "format")
    alpha = _strict_rational(data.get("alpha"), "alpha")
    try:
        field_ = Discriminant(alpha)
    except ValueError as exc:
        raise MapFormatError(str(exc), "alpha") from None

    raw_vars = data.get("vars")
    if not isinstance(raw_vars, list) or not raw_vars:
        raise MapFormatError("vars must be a non-empty list", "vars")
    vars = []
    for i, rv in enumerate(raw_vars):
        where = f"vars[{i}]"
        if not isinstance(rv, dict) or not isinstance(rv.get("name"), str):
            raise MapFormatError("variable entry needs a string name", where)
        kind = rv.get("kind")
        if kind not in (AFFINE, UNIT):
            raise MapFormatError(f"unknown variable kind {kind!r}", where + ".kind")
        partner = rv.get("partner")
        if partner is not None and not isinstance(partner, str):
            raise MapFormatError("partner must be a name or null", where + ".partner")
        try:
            vars.append(Var(rv["name"], kind, partner))
        except PolyError as exc:
            raise MapFormatError(str(exc), where) from None
    names = [v.name for v in vars]
    if len(set(names)) != len(names):
        raise MapFormatError("duplicate variable names", "vars")
    by_name = dict(zip(names, vars))
    for i, v in enumerate(vars):
        if v.partner is not None:
            other = by_name.get(v.partner)
            if other is None or other.partner != v.name:
                raise MapFormatError(f"partner relation of {v.name} is not symmetric", f"vars[{i}].partner")

    domain = data.get("domain")
    if not isinstance(domain, list) or not all(isinstance(d, str) for d in domain):
        raise MapFormatError("domain must be a list of names", "domain")
    for i, d in enumerate(domain):
        if d not in by_name:
            raise MapFormatError(f"unknown domain variable {d!r}", f"domain[{i}]")

    fiber_order = data.get("fiber_order")
    if fiber_order is not None:
        if not (isinstance(fiber_order, list) and len(fiber_order) == 2 and all(n in by_name for n in fiber_order)):
            raise MapFormatError("fiber_order must name two variables", "fiber_order")
        fiber_order = tuple(fiber_order)

    comps_raw = data.get("components")
    if not isinstance(comps_raw, list) or not comps_raw:
        raise MapFormatError("components must be a non-empty list", "components")
    comps = []
    n = len(vars)
    for ci, terms_raw in enumerate(comps_raw):
        if not isinstance(terms_raw, list):
            raise MapFormatError("component must be a list of terms", f"components[{ci}]")
        terms: dict[tuple[int, ...], QuadElem] = {}
        for ti, term in enumerate(terms_raw):
            where = f"components[{ci}][{ti}]"
            if not (isinstance(term, list) and len(term) == 3):
                raise MapFormatError("term must be [exponents, x, y]", where)
            exps, xs, ys = term
            if not (isinstance(exps, list) and len(exps) == n and all(type(e) is int for e in exps)):
                raise MapFormatError(f"exponent vector must be {n} integers", where + "[0]")
            for v, e in zip(vars, exps):
                if e < 0 and v.kind == AFFINE:
                    raise MapFormatError(f"negative exponent on affine variable {v.name}", where + "[0]")
            key = tuple(exps)
            if key in terms:
                raise MapFormatError("repeated monomial", where + "[0]")
            c = QuadElem(_strict_rational(xs, where + "[1]"), _strict_rational(ys, where + "[2]"), field_)
            if not c:
                raise MapFormatError("zero coefficient stored", where)
            terms[key] = c
        comps.append(SparsePoly(field_, tuple(vars), terms))
    name = data.get("name", "")
    if not isinstance(name, str):
        raise MapFormatError("name must be a string", "name")
    return PolyMap(tuple(vars), tuple(domain), tuple(comps), name, fiber_order)


def loads_map(text: str) -> PolyMap:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MapFormatError(f"malformed JSON: {exc.msg}", line=exc.lineno) from None
    return map_from_json(data)


def load_map_file(path: str | Path) -> PolyMap:
    return loads_map(Path(path).read_text())


def save_map_file(f: PolyMap, path: str | Path) -> None:
    Path(path).write_text(dump_map(f))
