"""Builders for the single-row, multi-row and SDP relaxations.

Every builder is deterministic: rows come out in a fixed order with unique
tags, and variables are declared in VarId order.

Row tags:

* ``tw_pair_i_j_k``  single-row pair rows, k-th (x-piece, y-piece) combination
* ``mt_pair_i_j_k``  lifted pair rows of the multi-row and SDP models
* ``diag_x_i``       X_ii <= x_i (or x_i / 2 under tightened bounds)
* ``chain_x_i``      x_i <= x_{i+1}
* ``clique_m{m}_a{alpha}_{block}_{i1}_{i2}...``  clique inequalities
* ``rlt_ord_i_j_a`` / ``rlt_ord_i_j_b``  order-based RLT cuts
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import combinations
from math import comb

from .envelopes import EnvelopeSet, Polytope2, envelope_box, envelope_polytope, envelope_triangle
from .errors import BadAlpha, InstanceTooSmall, MixedBlocks, SetTooSmall, StrategyInfeasible
from .exact import (
    GAMMA,
    Constraint,
    FeasiblePoint,
    LinearModel,
    LinExpr,
    SdpModel,
    VarDecl,
    VarId,
    bordered_block,
    ge,
    le,
    point_var,
    product_var,
)

HALF = Fraction(1, 2)
EXHAUSTIVE_MAX_N = 12


class Relaxation(str, Enum):
    TW = "TW"
    TWbnd = "TWbnd"
    TWord = "TWord"
    TWcomb = "TWcomb"
    MTclique = "MTclique"
    MTbndClique = "MTbndClique"
    MTordTri = "MTordTri"
    MTcombTri = "MTcombTri"
    SDP1 = "SDP1"
    SDP2 = "SDP2"
    SDPord = "SDPord"
    SDPcomb = "SDPcomb"

    def __str__(self):
        return self.value

    @property
    def is_sdp(self) -> bool:
        return self in SDP_KINDS

    @property
    def min_n(self) -> int:
        return MIN_N[self]


SINGLE_ROW = (Relaxation.TW, Relaxation.TWbnd, Relaxation.TWord, Relaxation.TWcomb)
MULTI_ROW = (Relaxation.MTclique, Relaxation.MTbndClique, Relaxation.MTordTri, Relaxation.MTcombTri)
LP_KINDS = SINGLE_ROW + MULTI_ROW
SDP_KINDS = (Relaxation.SDP1, Relaxation.SDP2, Relaxation.SDPord, Relaxation.SDPcomb)
ALL_KINDS = LP_KINDS + SDP_KINDS

MIN_N = {
    Relaxation.TW: 2, Relaxation.TWbnd: 5, Relaxation.TWord: 2, Relaxation.TWcomb: 5,
    Relaxation.MTclique: 3, Relaxation.MTbndClique: 5,
    Relaxation.MTordTri: 3, Relaxation.MTcombTri: 5,
    Relaxation.SDP1: 2, Relaxation.SDP2: 5, Relaxation.SDPord: 2, Relaxation.SDPcomb: 5,
}


def as_relaxation(kind) -> Relaxation:
    if isinstance(kind, Relaxation):
        return kind
    try:
        return Relaxation(kind)
    except ValueError:
        lowered = {r.value.lower(): r for r in Relaxation}
        if str(kind).lower() in lowered:
            return lowered[str(kind).lower()]
        raise ValueError(f"unknown relaxation {kind!r}") from None


def _check_n(kind: Relaxation, n: int):
    if n < kind.min_n:
        raise InstanceTooSmall(f"{kind} needs n >= {kind.min_n}, got {n}")


@dataclass(frozen=True)
class IndexPartition:
    n: int
    n_x: int
    n_y: int

    def cut(self, block: str) -> int:
        return self.n_x if block == "x" else self.n_y

    def upper(self, block: str, i: int) -> Fraction:
        """Tightened upper bound of coordinate i in the given block."""
        return HALF if i <= self.cut(block) else Fraction(1)


def partition_indices(n: int) -> IndexPartition:
    if n < 2:
        raise InstanceTooSmall("n must be at least 2")
    n_x = -(-n // 2)
    return IndexPartition(n, n_x, -(-n_x // 2))


@dataclass(frozen=True)
class OrderChain:
    n: int
    break_points: frozenset[int] = frozenset()

    def links(self) -> list[int]:
        return [i for i in range(1, self.n) if i not in self.break_points]


def full_chain(n: int) -> OrderChain:
    return OrderChain(n)


def semi_chain(partition: IndexPartition) -> OrderChain:
    return OrderChain(partition.n, frozenset({partition.n_y}))


def chain_rows(chain: OrderChain) -> list[Constraint]:
    return [le(LinExpr({point_var("x", i): 1, point_var("x", i + 1): -1}), 0, f"chain_x_{i}")
            for i in chain.links()]


# ---------------------------------------------------------------- envelopes

def domain_for_pair(partition: IndexPartition, i: int, j: int) -> Polytope2:
    """x-side domain of pair i < j under the broken order chain and bounds."""
    n_x, n_y = partition.n_x, partition.n_y
    if j <= n_y or n_y < i < j <= n_x:
        return Polytope2.triangle(HALF)
    if n_y < i <= n_x < j:
        return Polytope2.trapezoid(HALF, 1)
    if i <= n_y < j <= n_x:
        return Polytope2.box(HALF, HALF)
    if i <= n_y < j:
        return Polytope2.box(HALF, 1)
    return Polytope2.triangle(1)


def _envelope_for(domain: Polytope2) -> EnvelopeSet:
    verts = domain.vertices
    if len(verts) == 4 and verts[0] == (0, 0) and verts[1][1] == 0:
        return envelope_box(verts[2][0], verts[2][1])
    if len(verts) == 3 and verts[1][0] == verts[1][1]:
        return envelope_triangle(verts[1][0])
    return envelope_polytope(domain)


def x_envelope(kind: Relaxation, partition: IndexPartition, i: int, j: int) -> EnvelopeSet:
    if kind in (Relaxation.TW,):
        return envelope_box(1, 1)
    if kind is Relaxation.TWbnd:
        return envelope_box(partition.upper("x", i), partition.upper("x", j))
    if kind in (Relaxation.TWord, Relaxation.MTordTri, Relaxation.SDPord):
        return envelope_triangle(1)
    return _envelope_for(domain_for_pair(partition, i, j))


def y_envelope(kind: Relaxation, partition: IndexPartition, i: int, j: int) -> EnvelopeSet:
    if kind in (Relaxation.TWbnd, Relaxation.TWcomb):
        return envelope_box(partition.upper("y", i), partition.upper("y", j))
    return envelope_box(1, 1)


# --------------------------------------------------------------- variables

def _decls(n: int, partition: IndexPartition | None, *, x_bnd: bool, y_bnd: bool,
           lifted: str = "") -> list[VarDecl]:
    decls = []
    for block, tight in (("x", x_bnd), ("y", y_bnd)):
        for i in range(1, n + 1):
            hi = partition.upper(block, i) if tight else Fraction(1)
            decls.append(VarDecl(point_var(block, i), Fraction(0), hi))
    for block in lifted:
        for i in range(1, n + 1):
            for j in range(i, n + 1):
                decls.append(VarDecl(product_var(block, i, j), None, None))
    decls.append(VarDecl(GAMMA, None, None))
    return decls


def _pair_moment(block: str, i: int, j: int) -> LinExpr:
    """V_ii - 2 V_ij + V_jj."""
    return LinExpr({product_var(block, i, i): 1, product_var(block, i, j): -2,
                    product_var(block, j, j): 1})


def _diag_rows(block: str, n: int, cut: int) -> list[Constraint]:
    """V_ii <= v_i / 2 for i <= cut, V_ii <= v_i beyond."""
    rows = []
    for i in range(1, n + 1):
        scale = HALF if i <= cut else Fraction(1)
        expr = LinExpr({product_var(block, i, i): 1, point_var(block, i): -scale})
        rows.append(le(expr, 0, f"diag_{block}_{i}"))
    return rows


# ------------------------------------------------------------- single row

def build_single_row(kind, n: int) -> LinearModel:
    kind = as_relaxation(kind)
    if kind not in SINGLE_ROW:
        raise ValueError(f"{kind} is not a single-row relaxation")
    _check_n(kind, n)
    part = partition_indices(n)
    bnd = kind in (Relaxation.TWbnd, Relaxation.TWcomb)
    rows = []
    for i, j in combinations(range(1, n + 1), 2):
        xs = x_envelope(kind, part, i, j).pieces
        ys = y_envelope(kind, part, i, j).pieces
        k = 0
        for p in xs:
            for q in ys:
                k += 1
                expr = p.expr(point_var("x", i), point_var("x", j)) \
                    + q.expr(point_var("y", i), point_var("y", j)) - LinExpr.of(GAMMA)
                rows.append(ge(expr, 0, f"tw_pair_{i}_{j}_{k}"))
    if kind is Relaxation.TWord:
        rows += chain_rows(full_chain(n))
    elif kind is Relaxation.TWcomb:
        rows += chain_rows(semi_chain(part))
    return LinearModel(n, _decls(n, part, x_bnd=bnd, y_bnd=bnd), rows, name=kind.value)


# ------------------------------------------------------------ clique cuts

@dataclass(frozen=True)
class CliqueCut:
    index_set: tuple[int, ...]
    alpha: int
    block: str

    def __post_init__(self):
        object.__setattr__(self, "index_set", tuple(sorted(self.index_set)))
        m = len(self.index_set)
        if m < 3:
            raise SetTooSmall(f"clique cuts need |I| >= 3, got {m}")
        if len(set(self.index_set)) != m or self.index_set[0] < 1:
            raise SetTooSmall("index set must hold distinct positive indices")
        if not 1 <= self.alpha <= max(m - 2, 1):
            raise BadAlpha(f"alpha must lie in [1, {max(m - 2, 1)}], got {self.alpha}")
        if self.block not in ("x", "y"):
            raise MixedBlocks(f"unknown block {self.block!r}")

    @property
    def m(self) -> int:
        return len(self.index_set)

    @property
    def rhs(self) -> Fraction:
        return Fraction(self.alpha * (self.alpha + 1), 2)

    @property
    def tag(self) -> str:
        idx = "_".join(map(str, self.index_set))
        return f"clique_m{self.m}_a{self.alpha}_{self.block}_{idx}"

    def lhs(self, point) -> Fraction:
        """Left-hand side value at a point holding the block's variables."""
        total = self.alpha * sum(point[point_var(self.block, i)] for i in self.index_set)
        total -= sum(point[product_var(self.block, i, j)]
                     for i, j in combinations(self.index_set, 2))
        return total

    def violation(self, point) -> Fraction:
        return self.lhs(point) - self.rhs

    def constraint(self) -> Constraint:
        terms = [(point_var(self.block, i), self.alpha) for i in self.index_set]
        terms += [(product_var(self.block, i, j), -1)
                  for i, j in combinations(self.index_set, 2)]
        return le(LinExpr(terms), self.rhs, self.tag)


def clique_cut(index_set, alpha: int, block: str) -> Constraint:
    return CliqueCut(tuple(index_set), alpha, block).constraint()


def enumerate_clique_cuts(n: int, max_m: int | None = None, block: str = "x") -> list[CliqueCut]:
    """All (I, alpha) with 3 <= |I| <= max_m, ordered by |I|, then I, then alpha."""
    if n > EXHAUSTIVE_MAX_N:
        raise StrategyInfeasible(f"exhaustive clique enumeration is capped at n = {EXHAUSTIVE_MAX_N}")
    max_m = n if max_m is None else max_m
    if not 3 <= max_m <= n:
        raise StrategyInfeasible(f"need 3 <= max_m <= n, got max_m={max_m}, n={n}")
    return [CliqueCut(subset, alpha, block)
            for m in range(3, max_m + 1)
            for subset in combinations(range(1, n + 1), m)
            for alpha in range(1, m - 1)]


def triangle_cuts(n: int, block: str) -> list[CliqueCut]:
    return [CliqueCut(t, 1, block) for t in combinations(range(1, n + 1), 3)]


def clique_cut_count(n: int, max_m: int | None = None) -> int:
    max_m = n if max_m is None else max_m
    return sum(comb(n, m) * (m - 2) for m in range(3, max_m + 1))


# -------------------------------------------------------- bound mapping

def _scale(partition: IndexPartition, block: str, i: int) -> int:
    return 2 if i <= partition.cut(block) else 1


def _hat_factor(partition: IndexPartition, block: str, v: VarId) -> int:
    """hat(v) = factor * v for the block variable v."""
    if v.kind == block:
        return _scale(partition, block, v.i)
    return _scale(partition, block, v.i) * _scale(partition, block, v.j)


def _check_block(variables, block: str):
    for v in variables:
        if v.block != block:
            raise MixedBlocks(f"{v} does not belong to block {block}")


def apply_bnd_mapping(obj, partition: IndexPartition, block: str, inverse: bool = False):
    """Map between hat coordinates and tightened-bound coordinates.

    Forward: a constraint written in hat variables becomes one in the
    original variables (hat(x_i) = 2 x_i for i <= cut, hat(X_ij) = 4, 2 or 1
    times X_ij by quadrant); a hat point becomes an original point.
    ``inverse`` undoes either direction.
    """
    if isinstance(obj, Constraint):
        _check_block(obj.expr.terms, block)
        terms = {}
        for v, c in obj.expr.terms.items():
            f = _hat_factor(partition, block, v)
            terms[v] = c / f if inverse else c * f
        return Constraint(LinExpr(terms), obj.sense, obj.rhs, obj.tag)
    if isinstance(obj, FeasiblePoint) or hasattr(obj, "items"):
        _check_block(obj.keys(), block)
        values = {}
        for v, val in obj.items():
            f = _hat_factor(partition, block, v)
            values[v] = val * f if inverse else Fraction(val) / f
        return FeasiblePoint(values)
    raise TypeError(f"cannot map {type(obj).__name__}")


def block_restriction(point, block: str) -> FeasiblePoint:
    return FeasiblePoint({v: c for v, c in point.items() if v.block == block})


def realize_cut(cut: CliqueCut, partition: IndexPartition | None) -> Constraint:
    """Clique cut as a model row, mapped when bounds are tightened."""
    con = cut.constraint()
    return con if partition is None else apply_bnd_mapping(con, partition, cut.block)


# ------------------------------------------------------------- multi row

@dataclass(frozen=True)
class CliqueStrategy:
    mode: str
    max_m: int | None = None

    def __post_init__(self):
        if self.mode not in ("exhaustive", "triangle_only", "row_generation"):
            raise StrategyInfeasible(f"unknown clique strategy {self.mode!r}")


def exhaustive(max_m: int | None = None) -> CliqueStrategy:
    return CliqueStrategy("exhaustive", max_m)


def as_strategy(strategy) -> CliqueStrategy:
    if isinstance(strategy, CliqueStrategy):
        return strategy
    return CliqueStrategy(str(strategy))


def _block_cuts(kind: Relaxation, n: int, block: str, strategy: CliqueStrategy) -> list[CliqueCut]:
    if kind in (Relaxation.MTordTri, Relaxation.MTcombTri) or strategy.mode != "exhaustive":
        # Tri models only ever use triangles; row generation starts from them
        # because the clique-free model is unbounded.
        return triangle_cuts(n, block)
    return enumerate_clique_cuts(n, strategy.max_m or n, block)


def build_multi_row(kind, n: int, clique_strategy="exhaustive") -> LinearModel:
    kind = as_relaxation(kind)
    if kind not in MULTI_ROW:
        raise ValueError(f"{kind} is not a multi-row relaxation")
    _check_n(kind, n)
    strategy = as_strategy(clique_strategy)
    if strategy.mode == "exhaustive" and kind in (Relaxation.MTclique, Relaxation.MTbndClique) \
            and n > EXHAUSTIVE_MAX_N:
        raise StrategyInfeasible(f"exhaustive clique cuts are capped at n = {EXHAUSTIVE_MAX_N}")
    part = partition_indices(n)
    bnd = kind in (Relaxation.MTbndClique, Relaxation.MTcombTri)
    mapping = part if bnd else None
    ordered = kind in (Relaxation.MTordTri, Relaxation.MTcombTri)
    blocks = "y" if ordered else "xy"

    rows = []
    for i, j in combinations(range(1, n + 1), 2):
        y_part = _pair_moment("y", i, j)
        if ordered:
            for k, piece in enumerate(x_envelope(kind, part, i, j).pieces, 1):
                expr = piece.expr(point_var("x", i), point_var("x", j)) + y_part - GAMMA
                rows.append(ge(expr, 0, f"mt_pair_{i}_{j}_{k}"))
        else:
            expr = _pair_moment("x", i, j) + y_part - GAMMA
            rows.append(ge(expr, 0, f"mt_pair_{i}_{j}_1"))
    for block in blocks:
        cut = part.cut(block) if bnd else 0
        rows += _diag_rows(block, n, cut)
    if kind is Relaxation.MTordTri:
        rows += chain_rows(full_chain(n))
    elif kind is Relaxation.MTcombTri:
        rows += chain_rows(semi_chain(part))
    for block in blocks:
        rows += [realize_cut(c, mapping) for c in _block_cuts(kind, n, block, strategy)]
    decls = _decls(n, part, x_bnd=bnd, y_bnd=bnd, lifted=blocks.upper())
    return LinearModel(n, decls, rows, name=kind.value)


# -------------------------------------------------------------------- RLT

def rlt_order_cuts(partition: IndexPartition, variant: str = "full_chain") -> list[Constraint]:
    """X_ii <= X_ij and the linearized (1 - x)-side product of x_i <= x_j."""
    n, n_x, n_y = partition.n, partition.n_x, partition.n_y
    if n < 2:
        raise InstanceTooSmall("n must be at least 2")
    if variant == "full_chain":
        pairs = list(combinations(range(1, n + 1), 2))
    elif variant == "broken_chain":
        pairs = [(i, j) for i, j in combinations(range(1, n + 1), 2)
                 if j <= n_y or i > n_y]
    else:
        raise ValueError(f"unknown chain variant {variant!r}")
    rows = []
    for i, j in pairs:
        rows.append(le(LinExpr({product_var("x", i, i): 1, product_var("x", i, j): -1}), 0,
                       f"rlt_ord_{i}_{j}_a"))
        w = HALF if variant == "broken_chain" and j <= n_x else Fraction(1)
        expr = LinExpr({point_var("x", i): w, point_var("x", j): -w,
                        product_var("x", i, j): -1, product_var("x", j, j): 1})
        rows.append(le(expr, 0, f"rlt_ord_{i}_{j}_b"))
    return rows


# -------------------------------------------------------------------- SDP

def build_sdp(kind, n: int) -> SdpModel:
    kind = as_relaxation(kind)
    if kind not in SDP_KINDS:
        raise ValueError(f"{kind} is not an SDP relaxation")
    _check_n(kind, n)
    part = partition_indices(n)
    bnd = kind in (Relaxation.SDP2, Relaxation.SDPcomb)
    blocks = "y" if kind is Relaxation.SDPord else "xy"
    rows = []
    for i, j in combinations(range(1, n + 1), 2):
        if kind is Relaxation.SDPord:
            expr = LinExpr({point_var("x", j): 1, point_var("x", i): -1}) + _pair_moment("y", i, j)
        else:
            expr = _pair_moment("x", i, j) + _pair_moment("y", i, j)
        rows.append(ge(expr - GAMMA, 0, f"mt_pair_{i}_{j}_1"))
    for block in blocks:
        rows += _diag_rows(block, n, part.cut(block) if bnd else 0)
    if kind is Relaxation.SDPord:
        rows += chain_rows(full_chain(n))
    elif kind is Relaxation.SDPcomb:
        rows += chain_rows(semi_chain(part))
        rows += rlt_order_cuts(part, "broken_chain")
    decls = _decls(n, part, x_bnd=bnd, y_bnd=bnd, lifted=blocks.upper())
    base = LinearModel(n, decls, rows, name=kind.value)
    return SdpModel(base, [bordered_block(f"psd_{b}", b, n) for b in blocks])


def build(kind, n: int, strategy="exhaustive") -> LinearModel | SdpModel:
    """Dispatch to the builder for ``kind``."""
    kind = as_relaxation(kind)
    if kind in SINGLE_ROW:
        return build_single_row(kind, n)
    if kind in MULTI_ROW:
        return build_multi_row(kind, n, strategy)
    return build_sdp(kind, n)
