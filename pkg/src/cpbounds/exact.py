"""Exact rational model representation shared by every other module.

Scalars are :class:`fractions.Fraction`.  Variables are identified by
:class:`VarId`, linear expressions by :class:`LinExpr`, and an LP by
:class:`LinearModel`.  An :class:`SdpModel` adds bordered PSD blocks on top of
a linear model.  Everything here is immutable once built.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import NamedTuple, Union

from .errors import DuplicateTag, UnassignedVariable, UndeclaredVariable

Rat = Fraction
Number = Union[int, Fraction]

KINDS = ("x", "y", "X", "Y", "beta", "gamma")
KIND_RANK = {kind: rank for rank, kind in enumerate(KINDS)}
_PAIR_KINDS = {"X", "Y", "beta"}


class VarId(NamedTuple):
    """A scalar variable such as ``x_3``, ``Y_1_2`` or ``gamma``.

    Unused indices are 0.  Ordering follows ``(kind, i, j)`` with kinds ranked
    in the order of :data:`KINDS`, which fixes column order everywhere.
    """

    kind: str
    i: int = 0
    j: int = 0

    @property
    def key(self) -> tuple[int, int, int]:
        return (KIND_RANK[self.kind], self.i, self.j)

    def __lt__(self, other):
        return self.key < other.key

    def __le__(self, other):
        return self.key <= other.key

    def __gt__(self, other):
        return self.key > other.key

    def __ge__(self, other):
        return self.key >= other.key

    @property
    def name(self) -> str:
        if self.kind == "gamma":
            return "gamma"
        if self.kind in _PAIR_KINDS:
            return f"{self.kind}_{self.i}_{self.j}"
        return f"{self.kind}_{self.i}"

    def __str__(self):
        return self.name

    def __repr__(self):
        return f"VarId({self.name})"

    @property
    def block(self) -> str | None:
        """'x' for x/X variables, 'y' for y/Y, None otherwise."""
        if self.kind in ("x", "X"):
            return "x"
        if self.kind in ("y", "Y"):
            return "y"
        return None


_NAME_RE = re.compile(r"^(x|y|X|Y|beta)_(\d+)(?:_(\d+))?$")


def var(kind: str, i: int = 0, j: int = 0) -> VarId:
    """Build a validated VarId; pair indices are stored with i <= j."""
    if kind not in KIND_RANK:
        raise ValueError(f"unknown variable kind {kind!r}")
    if kind == "gamma":
        if i or j:
            raise ValueError("gamma takes no index")
        return GAMMA
    if kind in _PAIR_KINDS:
        if i > j:
            i, j = j, i
        if i < 1 or (kind == "beta" and i == j):
            raise ValueError(f"bad indices for {kind}: ({i}, {j})")
        return VarId(kind, i, j)
    if i < 1 or j:
        raise ValueError(f"bad index for {kind}: {i}")
    return VarId(kind, i)


def parse_var(name: str) -> VarId:
    if name == "gamma":
        return GAMMA
    match = _NAME_RE.match(name)
    if not match:
        raise ValueError(f"not a variable name: {name!r}")
    kind, i, j = match.groups()
    if (kind in _PAIR_KINDS) != (j is not None):
        raise ValueError(f"not a variable name: {name!r}")
    return var(kind, int(i), int(j) if j else 0)


GAMMA = VarId("gamma")


def x(i: int) -> VarId:
    return VarId("x", i)


def y(i: int) -> VarId:
    return VarId("y", i)


def X(i: int, j: int) -> VarId:
    return VarId("X", min(i, j), max(i, j))


def Y(i: int, j: int) -> VarId:
    return VarId("Y", min(i, j), max(i, j))


def point_var(block: str, i: int) -> VarId:
    return VarId(block, i)


def product_var(block: str, i: int, j: int) -> VarId:
    return VarId(block.upper(), min(i, j), max(i, j))


class LinExpr:
    """Sparse affine expression ``sum(coef * var) + constant``.

    Zero coefficients are never stored.  Instances are treated as immutable;
    arithmetic returns new objects.
    """

    __slots__ = ("_terms", "_constant")

    def __init__(self, terms: Mapping[VarId, Number] | Iterable[tuple[VarId, Number]] = (),
                 constant: Number = 0):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[VarId, Fraction] = {}
        for v, c in items:
            acc[v] = acc.get(v, 0) + Fraction(c)
        self._terms = {v: c for v, c in sorted(acc.items()) if c != 0}
        self._constant = Fraction(constant)

    @classmethod
    def of(cls, v: VarId, coef: Number = 1) -> LinExpr:
        return cls({v: coef})

    @property
    def terms(self) -> Mapping[VarId, Fraction]:
        return self._terms

    @property
    def constant(self) -> Fraction:
        return self._constant

    def variables(self) -> list[VarId]:
        return list(self._terms)

    def coef(self, v: VarId) -> Fraction:
        return self._terms.get(v, Fraction(0))

    def without_constant(self) -> LinExpr:
        return LinExpr(self._terms)

    def _combine(self, other, sign: int) -> LinExpr:
        if isinstance(other, LinExpr):
            terms = list(self._terms.items())
            terms += [(v, sign * c) for v, c in other._terms.items()]
            return LinExpr(terms, self._constant + sign * other._constant)
        if isinstance(other, VarId):
            return self._combine(LinExpr.of(other), sign)
        if isinstance(other, (int, Fraction)):
            return LinExpr(self._terms, self._constant + sign * other)
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __rsub__(self, other):
        return (-self)._combine(other, 1)

    def __neg__(self):
        return self * -1

    def __mul__(self, k):
        if not isinstance(k, (int, Fraction)):
            return NotImplemented
        return LinExpr({v: c * k for v, c in self._terms.items()}, self._constant * k)

    __rmul__ = __mul__

    def __truediv__(self, k):
        return self * (1 / Fraction(k))

    def __eq__(self, other):
        if not isinstance(other, LinExpr):
            return NotImplemented
        return self._terms == other._terms and self._constant == other._constant

    def __hash__(self):
        return hash((tuple(self._terms.items()), self._constant))

    def __repr__(self):
        return f"LinExpr({format_expr(self)})"


def lin(*pairs: tuple[Number, VarId], constant: Number = 0) -> LinExpr:
    """Shorthand: ``lin((1, x(1)), (-2, X(1, 2)))``."""
    return LinExpr([(v, c) for c, v in pairs], constant)


def format_expr(expr: LinExpr) -> str:
    parts = []
    for v, c in expr.terms.items():
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        parts.append(f"{sign} {v}" if mag == 1 else f"{sign} {mag} {v}")
    if expr.constant or not parts:
        sign = "-" if expr.constant < 0 else "+"
        parts.append(f"{sign} {abs(expr.constant)}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else "-" + text[2:]


SENSES = ("<=", ">=", "=")


@dataclass(frozen=True)
class Constraint:
    """``expr sense rhs``; any constant in ``expr`` is folded into ``rhs``."""

    expr: LinExpr
    sense: str
    rhs: Fraction
    tag: str

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValueError(f"bad sense {self.sense!r}")
        if not self.tag:
            raise ValueError("constraint tag must be nonempty")
        rhs = Fraction(self.rhs) - self.expr.constant
        object.__setattr__(self, "rhs", rhs)
        if self.expr.constant:
            object.__setattr__(self, "expr", self.expr.without_constant())

    def slack(self, point: Mapping[VarId, Fraction]) -> Fraction:
        """Nonnegative iff satisfied; for equalities minus the absolute gap."""
        lhs = eval_expr(self.expr, point)
        if self.sense == "<=":
            return self.rhs - lhs
        if self.sense == ">=":
            return lhs - self.rhs
        return -abs(lhs - self.rhs)

    def __str__(self):
        return f"{self.tag}: {format_expr(self.expr)} {self.sense} {self.rhs}"


def le(expr: LinExpr, rhs: Number, tag: str) -> Constraint:
    return Constraint(expr, "<=", Fraction(rhs), tag)


def ge(expr: LinExpr, rhs: Number, tag: str) -> Constraint:
    return Constraint(expr, ">=", Fraction(rhs), tag)


def eq(expr: LinExpr, rhs: Number, tag: str) -> Constraint:
    return Constraint(expr, "=", Fraction(rhs), tag)


class VarDecl(NamedTuple):
    var: VarId
    lower: Fraction | None
    upper: Fraction | None


@dataclass(frozen=True)
class LinearModel:
    """Maximize ``objective`` subject to ``constraints`` and variable bounds.

    A bound of None is infinite.  Variables are kept in VarId order and
    constraint tags are unique, so tags double as row names.
    """

    n: int
    variables: tuple[VarDecl, ...]
    constraints: tuple[Constraint, ...]
    objective: LinExpr = field(default_factory=lambda: LinExpr.of(GAMMA))
    name: str = ""

    def __post_init__(self):
        decls = tuple(sorted((VarDecl(v, _opt(lo), _opt(hi)) for v, lo, hi in self.variables),
                             key=lambda d: d.var.key))
        object.__setattr__(self, "variables", decls)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        declared = {d.var for d in decls}
        if len(declared) != len(decls):
            raise UndeclaredVariable("variable declared twice")
        if GAMMA not in declared:
            raise UndeclaredVariable("gamma must be declared")
        for v in self.objective.terms:
            if v not in declared:
                raise UndeclaredVariable(f"objective uses undeclared {v}")
        tags = set()
        for con in self.constraints:
            if con.tag in tags:
                raise DuplicateTag(con.tag)
            tags.add(con.tag)
            for v in con.expr.terms:
                if v not in declared:
                    raise UndeclaredVariable(f"{con.tag} uses undeclared {v}")

    @cached_property
    def bounds(self) -> dict[VarId, tuple[Fraction | None, Fraction | None]]:
        return {d.var: (d.lower, d.upper) for d in self.variables}

    @cached_property
    def var_ids(self) -> tuple[VarId, ...]:
        return tuple(d.var for d in self.variables)

    @cached_property
    def row_index(self) -> dict[str, int]:
        return {con.tag: k for k, con in enumerate(self.constraints)}

    def row(self, tag: str) -> Constraint:
        return self.constraints[self.row_index[tag]]

    def rows_tagged(self, prefix: str) -> list[Constraint]:
        return [c for c in self.constraints if c.tag.startswith(prefix)]

    def with_constraints(self, extra: Iterable[Constraint]) -> LinearModel:
        return LinearModel(self.n, self.variables, self.constraints + tuple(extra),
                           self.objective, self.name)


def _opt(value) -> Fraction | None:
    return None if value is None else Fraction(value)


@dataclass(frozen=True)
class PsdBlock:
    """Bordered matrix ``((1, v^T), (v, M))`` required to be PSD."""

    name: str
    vector: tuple[VarId, ...]
    matrix: tuple[tuple[VarId, ...], ...]

    @property
    def size(self) -> int:
        return len(self.vector) + 1

    def variables(self) -> set[VarId]:
        return set(self.vector) | {v for row in self.matrix for v in row}

    def evaluate(self, point: Mapping[VarId, Fraction]) -> list[list[Fraction]]:
        top = [Fraction(1)] + [_lookup(point, v) for v in self.vector]
        rows = [top]
        for k, v in enumerate(self.vector):
            rows.append([_lookup(point, v)] + [_lookup(point, m) for m in self.matrix[k]])
        return rows


def bordered_block(name: str, block: str, n: int) -> PsdBlock:
    vec = tuple(point_var(block, i) for i in range(1, n + 1))
    mat = tuple(tuple(product_var(block, i, j) for j in range(1, n + 1))
                for i in range(1, n + 1))
    return PsdBlock(name, vec, mat)


@dataclass(frozen=True)
class SdpModel:
    base: LinearModel
    psd_blocks: tuple[PsdBlock, ...]

    def __post_init__(self):
        object.__setattr__(self, "psd_blocks", tuple(self.psd_blocks))
        declared = set(self.base.bounds)
        for blk in self.psd_blocks:
            missing = blk.variables() - declared
            if missing:
                raise UndeclaredVariable(f"block {blk.name} uses undeclared {sorted(missing)}")

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def name(self) -> str:
        return self.base.name


class FeasiblePoint(Mapping):
    """Immutable assignment VarId -> Fraction."""

    __slots__ = ("_values",)

    def __init__(self, values: Mapping[VarId, Number] | Iterable[tuple[VarId, Number]] = ()):
        items = values.items() if isinstance(values, Mapping) else values
        self._values = {v: Fraction(c) for v, c in items}

    def __getitem__(self, v: VarId) -> Fraction:
        try:
            return self._values[v]
        except KeyError:
            raise UnassignedVariable(v) from None

    def __iter__(self) -> Iterator[VarId]:
        return iter(sorted(self._values))

    def __len__(self):
        return len(self._values)

    def __contains__(self, v):
        return v in self._values

    def updated(self, changes: Mapping[VarId, Number]) -> FeasiblePoint:
        merged = dict(self._values)
        merged.update({v: Fraction(c) for v, c in changes.items()})
        return FeasiblePoint(merged)

    def restrict(self, keep) -> FeasiblePoint:
        return FeasiblePoint({v: c for v, c in self._values.items() if keep(v)})

    def __repr__(self):
        inner = ", ".join(f"{v}={self._values[v]}" for v in self)
        return f"FeasiblePoint({inner})"


def _lookup(point: Mapping[VarId, Fraction], v: VarId) -> Fraction:
    try:
        return point[v]
    except KeyError:
        raise UnassignedVariable(v) from None


def eval_expr(expr: LinExpr, point: Mapping[VarId, Fraction]) -> Fraction:
    total = expr.constant
    for v, c in expr.terms.items():
        total += c * _lookup(point, v)
    return total


@dataclass(frozen=True)
class Violation:
    kind: str  # "bound", "row" or "psd"
    name: str
    slack: Fraction | None
    detail: str = ""


@dataclass
class FeasibilityReport:
    violations: list[Violation]
    row_slacks: dict[str, Fraction]
    psd: dict[str, object] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def summary(self) -> str:
        if self.ok:
            return "feasible"
        return "; ".join(f"{v.kind} {v.name} slack {v.slack}" for v in self.violations)


def check_feasible(model: LinearModel | SdpModel, point: Mapping[VarId, Fraction]) -> FeasibilityReport:
    """Check every bound, row and PSD block of ``model`` at ``point`` exactly."""
    base = model.base if isinstance(model, SdpModel) else model
    violations: list[Violation] = []
    for v, lo, hi in base.variables:
        val = _lookup(point, v)
        if lo is not None and val < lo:
            violations.append(Violation("bound", v.name, val - lo, "below lower bound"))
        if hi is not None and val > hi:
            violations.append(Violation("bound", v.name, hi - val, "above upper bound"))
    slacks = {}
    for con in base.constraints:
        s = con.slack(point)
        slacks[con.tag] = s
        if s < 0:
            violations.append(Violation("row", con.tag, s))
    report = FeasibilityReport(violations, slacks)
    if isinstance(model, SdpModel):
        from .certificates import NotPsdWitness, ldl_verify

        for blk in model.psd_blocks:
            result = ldl_verify(blk.evaluate(point))
            report.psd[blk.name] = result
            if isinstance(result, NotPsdWitness):
                violations.append(Violation("psd", blk.name, result.value, "negative curvature"))
    return report
