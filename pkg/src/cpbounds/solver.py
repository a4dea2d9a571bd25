"""Exact bounded-variable primal simplex, clique separation and row generation.

The simplex keeps a condensed tableau: every basic variable is written as a
linear combination of the nonbasic ones.  Each model row ``a.v (sense) b``
gets an activity variable ``s = a.v`` whose bounds encode the sense, so
variable bounds and row bounds are handled the same way.  Pivoting follows
Bland's rule over the fixed variable order (structural variables in VarId
order, then row activities, then phase-one artificials), which guarantees
termination.  Arithmetic is exact throughout; gmpy2's mpq is used inside the
pivot loop and results are handed back as Fractions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from itertools import combinations

from gmpy2 import mpq

from .errors import NumericBlowup, SignError, StrategyInfeasible, Unavailable
from .exact import Constraint, FeasiblePoint, LinearModel, VarId, point_var, product_var
from .relaxations import (
    EXHAUSTIVE_MAX_N,
    CliqueCut,
    IndexPartition,
    Relaxation,
    apply_bnd_mapping,
    as_relaxation,
    block_restriction,
    build,
    partition_indices,
    realize_cut,
)

DEFAULT_BIT_CAP = 1_000_000


class Status(str, Enum):
    OPTIMAL = "Optimal"
    UNBOUNDED = "Unbounded"
    INFEASIBLE = "Infeasible"

    def __str__(self):
        return self.value


@dataclass
class SolveResult:
    status: Status
    value: Fraction | None
    primal: FeasiblePoint | None
    duals: dict[int, Fraction]
    pivots: int = 0
    rounds: int = 0
    model: LinearModel | None = None
    trace: list[tuple[int, int]] = field(default_factory=list, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def duals_by_tag(self, model: LinearModel | None = None) -> dict[str, Fraction]:
        model = model or self.model
        return {model.constraints[r].tag: lam for r, lam in self.duals.items()}


def _q(value) -> mpq:
    value = Fraction(value)
    return mpq(value.numerator, value.denominator)


def _frac(value) -> Fraction:
    return Fraction(int(value.numerator), int(value.denominator))


class _Simplex:
    """One solve of one model; not reused."""

    def __init__(self, model: LinearModel, bit_cap: int):
        self.model = model
        self.bit_cap = bit_cap
        self.n_struct = len(model.variables)
        self.col_of = {v: k for k, v in enumerate(model.var_ids)}
        self.lo: list = []
        self.hi: list = []
        for d in model.variables:
            self.lo.append(None if d.lower is None else _q(d.lower))
            self.hi.append(None if d.upper is None else _q(d.upper))
        self.pivots = 0
        self.trace: list[tuple[int, int]] = []

    # -- setup -----------------------------------------------------------

    def _start_value(self, var: int):
        lo, hi = self.lo[var], self.hi[var]
        if lo is not None:
            return lo
        if hi is not None:
            return hi
        return mpq(0)

    def setup(self) -> bool:
        """Build the initial tableau; False if a constant row is violated."""
        ns = self.n_struct
        self.nonbasic = list(range(ns))
        self.nb_val = [self._start_value(k) for k in range(ns)]
        self.basis: list[int] = []
        self.rows: list[dict[int, mpq]] = []
        self.beta: list[mpq] = []
        self.row_var: dict[int, int] = {}
        for r, con in enumerate(self.model.constraints):
            rhs = _q(con.rhs)
            lo = rhs if con.sense in (">=", "=") else None
            hi = rhs if con.sense in ("<=", "=") else None
            if not con.expr.terms:
                if (lo is not None and lo > 0) or (hi is not None and hi < 0):
                    return False
                continue
            var = len(self.lo)
            self.lo.append(lo)
            self.hi.append(hi)
            self.row_var[r] = var
            coeffs = {self.col_of[v]: _q(c) for v, c in con.expr.terms.items()}
            self.rows.append(coeffs)
            self.basis.append(var)
            self.beta.append(sum((c * self.nb_val[k] for k, c in coeffs.items()), mpq(0)))
        self.artificials = []
        for t, var in enumerate(self.basis):
            val, lo, hi = self.beta[t], self.lo[var], self.hi[var]
            if lo is not None and val < lo:
                bound, sign = lo, 1
            elif hi is not None and val > hi:
                bound, sign = hi, -1
            else:
                continue
            # Replace the row by an artificial a = sign * (s - a.x) >= 0 and
            # make the activity s nonbasic at the violated bound.
            col = len(self.nonbasic)
            self.nonbasic.append(var)
            self.nb_val.append(bound)
            art = len(self.lo)
            self.lo.append(mpq(0))
            self.hi.append(None)
            row = {k: -sign * c for k, c in self.rows[t].items()}
            row[col] = mpq(sign)
            self.rows[t] = row
            self.basis[t] = art
            self.beta[t] = sign * (bound - val)
            self.artificials.append(art)
        return True

    # -- pricing ---------------------------------------------------------

    def _objective_row(self, cost: dict[int, mpq]) -> dict[int, mpq]:
        d: dict[int, mpq] = {}
        for k, var in enumerate(self.nonbasic):
            if var in cost:
                d[k] = cost[var]
        for t, var in enumerate(self.basis):
            c = cost.get(var)
            if c:
                for k, a in self.rows[t].items():
                    d[k] = d.get(k, 0) + c * a
        return {k: v for k, v in d.items() if v != 0}

    def _entering(self, d):
        best = None
        for k, dk in d.items():
            var = self.nonbasic[k]
            if best is not None and var >= best[1]:
                continue
            val = self.nb_val[k]
            if dk > 0 and (self.hi[var] is None or val < self.hi[var]):
                best = (k, var, 1)
            elif dk < 0 and (self.lo[var] is None or val > self.lo[var]):
                best = (k, var, -1)
        return best

    def _ratio(self, k: int, direction: int):
        """Smallest step; returns (t, row or None for a bound flip) or None."""
        var = self.nonbasic[k]
        best_t, best_row, best_var = None, None, None
        if self.lo[var] is not None and self.hi[var] is not None:
            best_t = self.hi[var] - self.lo[var]
        for t, row in enumerate(self.rows):
            a = row.get(k)
            if a is None:
                continue
            rate = a * direction
            bvar = self.basis[t]
            if rate > 0:
                bound = self.hi[bvar]
                if bound is None:
                    continue
                step = (bound - self.beta[t]) / rate
            else:
                bound = self.lo[bvar]
                if bound is None:
                    continue
                step = (self.beta[t] - bound) / -rate
            if best_t is None or step < best_t or (
                    step == best_t and best_row is not None and bvar < best_var):
                best_t, best_row, best_var = step, t, bvar
        if best_t is None:
            return None
        return best_t, best_row

    def _pivot(self, t: int, k: int, d: dict[int, mpq]):
        prow = self.rows[t]
        inv = 1 / prow[k]
        if inv.denominator.bit_length() > self.bit_cap or inv.numerator.bit_length() > self.bit_cap:
            raise NumericBlowup("pivot element exceeds the denominator bit cap")
        new = {j: -v * inv for j, v in prow.items() if j != k}
        new[k] = inv
        self.rows[t] = new
        for other in self.rows:
            if other is new:
                continue
            a = other.pop(k, None)
            if a is None:
                continue
            for j, v in new.items():
                nv = other.get(j, 0) + a * v
                if nv:
                    other[j] = nv
                else:
                    other.pop(j, None)
        a = d.pop(k, None)
        if a is not None:
            for j, v in new.items():
                nv = d.get(j, 0) + a * v
                if nv:
                    d[j] = nv
                else:
                    d.pop(j, None)

    def run(self, d: dict[int, mpq]) -> bool:
        """Maximize; returns False if unbounded."""
        while True:
            choice = self._entering(d)
            if choice is None:
                return True
            k, var, direction = choice
            found = self._ratio(k, direction)
            if found is None:
                return False
            step, t = found
            delta = step * direction
            if delta:
                for s, row in enumerate(self.rows):
                    a = row.get(k)
                    if a is not None:
                        self.beta[s] += a * delta
            entering_value = self.nb_val[k] + delta
            self.pivots += 1
            if t is None:
                self.nb_val[k] = entering_value
                self.trace.append((var, -1))
                continue
            leaving = self.basis[t]
            rate = self.rows[t][k] * direction
            leave_value = self.hi[leaving] if rate > 0 else self.lo[leaving]
            self.trace.append((var, leaving))
            self._pivot(t, k, d)
            self.basis[t] = var
            self.beta[t] = entering_value
            self.nonbasic[k] = leaving
            self.nb_val[k] = leave_value
            if entering_value.denominator.bit_length() > self.bit_cap:
                raise NumericBlowup("basic value exceeds the denominator bit cap")

    def objective_value(self, cost: dict[int, mpq]) -> mpq:
        total = mpq(0)
        for k, var in enumerate(self.nonbasic):
            if var in cost:
                total += cost[var] * self.nb_val[k]
        for t, var in enumerate(self.basis):
            if var in cost:
                total += cost[var] * self.beta[t]
        return total

    def drop_artificials(self):
        arts = set(self.artificials)
        for var in arts:
            self.hi[var] = mpq(0)
        dead = [k for k, var in enumerate(self.nonbasic) if var in arts]
        if not dead:
            return
        keep = [k for k in range(len(self.nonbasic)) if k not in set(dead)]
        remap = {old: new for new, old in enumerate(keep)}
        self.nonbasic = [self.nonbasic[k] for k in keep]
        self.nb_val = [self.nb_val[k] for k in keep]
        self.rows = [{remap[k]: v for k, v in row.items() if k in remap} for row in self.rows]

    # -- results ---------------------------------------------------------

    def values(self) -> dict[int, mpq]:
        vals = {var: self.nb_val[k] for k, var in enumerate(self.nonbasic)}
        vals.update({var: self.beta[t] for t, var in enumerate(self.basis)})
        return vals

    def duals(self, d: dict[int, mpq]) -> dict[int, Fraction]:
        col_of_var = {var: k for k, var in enumerate(self.nonbasic)}
        out = {}
        for r, con in enumerate(self.model.constraints):
            var = self.row_var.get(r)
            y = d.get(col_of_var[var], 0) if var in col_of_var else 0
            lam = -y if con.sense == ">=" else y
            out[r] = _frac(mpq(lam))
        return out


def solve_exact(model: LinearModel, bit_cap: int = DEFAULT_BIT_CAP) -> SolveResult:
    """Maximize the model objective exactly.

    Duals are keyed by constraint index and sign-normalized so that the
    aggregation accepted by :func:`dual_certificate_check` reproduces the
    optimal value.
    """
    sx = _Simplex(model, bit_cap)
    if not sx.setup():
        return SolveResult(Status.INFEASIBLE, None, None, {}, model=model)
    if sx.artificials:
        phase1 = {var: mpq(-1) for var in sx.artificials}
        d1 = sx._objective_row(phase1)
        sx.run(d1)
        if sx.objective_value(phase1) < 0:
            return SolveResult(Status.INFEASIBLE, None, None, {}, sx.pivots, model=model,
                               trace=sx.trace)
        sx.drop_artificials()
    cost = {sx.col_of[v]: _q(c) for v, c in model.objective.terms.items()}
    d = sx._objective_row(cost)
    if not sx.run(d):
        return SolveResult(Status.UNBOUNDED, None, None, {}, sx.pivots, model=model,
                           trace=sx.trace)
    vals = sx.values()
    primal = FeasiblePoint({v: _frac(vals[k]) for k, v in enumerate(model.var_ids)})
    value = _frac(sx.objective_value(cost)) + model.objective.constant
    return SolveResult(Status.OPTIMAL, value, primal, sx.duals(d), sx.pivots, model=model,
                       trace=sx.trace)


# ------------------------------------------------------------ certificates

def implied_bound(model: LinearModel, multipliers: dict) -> Fraction | None:
    """Upper bound on the objective implied by aggregating rows.

    ``<=`` rows are added as they are, ``>=`` rows are negated first and
    ``=`` rows may carry either sign.  Whatever objective terms the aggregate
    does not cancel are bounded over the variable box; None means some
    leftover term is unbounded in the needed direction.
    """
    agg: dict[VarId, Fraction] = {}
    rhs = Fraction(0)
    for key, lam in multipliers.items():
        lam = Fraction(lam)
        con = model.constraints[key] if isinstance(key, int) else model.row(key)
        if con.sense != "=" and lam < 0:
            raise SignError(f"negative multiplier {lam} on inequality row {con.tag}")
        if lam == 0:
            continue
        sign = -lam if con.sense == ">=" else lam
        for v, c in con.expr.terms.items():
            agg[v] = agg.get(v, 0) + sign * c
        rhs += sign * con.rhs
    bound = rhs + model.objective.constant
    bounds = model.bounds
    for v in set(agg) | set(model.objective.terms):
        r = model.objective.coef(v) - agg.get(v, 0)
        if r == 0:
            continue
        lo, hi = bounds[v]
        limit = hi if r > 0 else lo
        if limit is None:
            return None
        bound += r * limit
    return bound


def dual_certificate_check(model: LinearModel, multipliers: dict, claimed) -> bool:
    bound = implied_bound(model, multipliers)
    return bound is not None and bound <= Fraction(claimed)


# -------------------------------------------------------------- separation

@dataclass(frozen=True)
class SeparationResult:
    cut: CliqueCut | None
    violation: Fraction


def _hat_block(point, n: int, block: str, partition: IndexPartition | None):
    sub = block_restriction(point, block)
    if partition is not None:
        sub = apply_bnd_mapping(sub, partition, block, inverse=True)
    v = [None] + [sub[point_var(block, i)] for i in range(1, n + 1)]
    V = {(i, j): sub[product_var(block, i, j)] for i, j in combinations(range(1, n + 1), 2)}
    return v, V


def _best_alpha(total: Fraction, pairs: Fraction, m: int) -> tuple[int, Fraction]:
    """Integer alpha in [1, m-2] maximizing alpha*total - pairs - alpha(alpha+1)/2."""
    best = None
    floor = int(total)
    for alpha in sorted({max(1, min(m - 2, a)) for a in (1, m - 2, floor - 1, floor, floor + 1)}):
        viol = alpha * total - pairs - Fraction(alpha * (alpha + 1), 2)
        if best is None or viol > best[1] or (viol == best[1] and alpha < best[0]):
            best = (alpha, viol)
    return best


def violated_cliques(point, n: int, block: str, partition: IndexPartition | None = None,
                     max_m: int | None = None) -> list[tuple[Fraction, CliqueCut]]:
    """Most violated alpha for every subset with a positive violation.

    Subsets larger than ``max_m`` are skipped.  Sorted by decreasing
    violation, ties in enumeration order.
    """
    if n > EXHAUSTIVE_MAX_N:
        raise StrategyInfeasible(f"exhaustive separation is capped at n = {EXHAUSTIVE_MAX_N}")
    v, V = _hat_block(point, n, block, partition)
    limit = n if max_m is None else min(n, max_m)
    found = []

    def grow(subset, total, pairs):
        m = len(subset)
        if m >= 3:
            alpha, viol = _best_alpha(total, pairs, m)
            if viol > 0:
                found.append((viol, m, subset, alpha))
        if m == limit:
            return
        for e in range(subset[-1] + 1 if subset else 1, n + 1):
            extra = sum((V[i, e] for i in subset), Fraction(0))
            grow(subset + (e,), total + v[e], pairs + extra)

    grow((), Fraction(0), Fraction(0))
    found.sort(key=lambda item: (-item[0], item[1], item[2], item[3]))
    return [(viol, CliqueCut(subset, alpha, block)) for viol, _, subset, alpha in found]


def separate_clique(point, n: int, block: str, mode: str = "exhaustive",
                    partition: IndexPartition | None = None) -> SeparationResult:
    """Find a violated clique inequality of the block at ``point``.

    With ``partition`` the block variables are read in tightened-bound
    coordinates and mapped to hat coordinates before separating.
    """
    if mode == "exhaustive":
        cuts = violated_cliques(point, n, block, partition)
        if cuts:
            return SeparationResult(cuts[0][1], cuts[0][0])
        return SeparationResult(None, Fraction(0))
    if mode == "greedy":
        return _greedy(point, n, block, partition)
    raise StrategyInfeasible(f"unknown separation mode {mode!r}")


def _greedy(point, n, block, partition) -> SeparationResult:
    v, V = _hat_block(point, n, block, partition)
    if n < 3:
        return SeparationResult(None, Fraction(0))

    def score(subset):
        total = sum((v[i] for i in subset), Fraction(0))
        pairs = sum((V[p] for p in combinations(subset, 2)), Fraction(0))
        return _best_alpha(total, pairs, len(subset))[1]

    subset = max(combinations(range(1, n + 1), 3), key=lambda s: (score(s), [-i for i in s]))
    current = score(subset)
    while len(subset) < n:
        options = [tuple(sorted(subset + (e,))) for e in range(1, n + 1) if e not in subset]
        best = max(options, key=score)
        if score(best) <= current:
            break
        subset, current = best, score(best)
    total = sum((v[i] for i in subset), Fraction(0))
    pairs = sum((V[p] for p in combinations(subset, 2)), Fraction(0))
    alpha = max(1, min(len(subset) - 2, round(total)))
    viol = alpha * total - pairs - Fraction(alpha * (alpha + 1), 2)
    if viol > 0:
        return SeparationResult(CliqueCut(subset, alpha, block), viol)
    return SeparationResult(None, Fraction(0))


def solve_with_row_generation(base: LinearModel, n: int, blocks=("x", "y"),
                              mode: str = "exhaustive", partition: IndexPartition | None = None,
                              cuts_per_round: int = 8, max_rounds: int = 10_000,
                              bit_cap: int = DEFAULT_BIT_CAP, max_m: int | None = None,
                              ) -> SolveResult:
    """Alternate exact solves and clique separation until nothing is violated.

    Each round adds up to ``cuts_per_round`` of the most violated cuts per
    block.  ``partition`` switches to tightened-bound coordinates and
    ``max_m`` restricts exhaustive separation to small subsets (3 for the
    triangle-only models).
    """
    model = base
    rounds = 0
    while True:
        result = solve_exact(model, bit_cap)
        if not result.optimal or rounds >= max_rounds:
            break
        present = set(model.row_index)
        new_rows: list[Constraint] = []
        for block in blocks:
            if mode == "exhaustive":
                found = [c for _, c in violated_cliques(result.primal, n, block, partition, max_m)]
            else:
                sep = separate_clique(result.primal, n, block, mode, partition)
                found = [sep.cut] if sep.cut else []
            fresh = [c for c in found if c.tag not in present][:cuts_per_round]
            new_rows += [realize_cut(c, partition) for c in fresh]
        if not new_rows:
            break
        rounds += 1
        model = model.with_constraints(new_rows)
    result.rounds = rounds
    result.model = model
    return result


def solve_relaxation(kind, n: int, strategy: str | None = None,
                     bit_cap: int = DEFAULT_BIT_CAP) -> SolveResult:
    """Solve one LP relaxation exactly.

    Clique models default to row generation with exact separation, which
    reaches the same optimum as the full cut family; pass
    ``strategy="exhaustive"`` to solve the fully enumerated model instead.
    """
    kind = as_relaxation(kind)
    if kind.is_sdp:
        raise Unavailable(f"{kind} is a semidefinite program; export it and use an SDP solver")
    if kind in (Relaxation.MTclique, Relaxation.MTbndClique) and strategy != "exhaustive":
        partition = partition_indices(n) if kind is Relaxation.MTbndClique else None
        mode = "greedy" if strategy == "greedy" else "exhaustive"
        base = build(kind, n, "row_generation")
        return solve_with_row_generation(base, n, mode=mode, partition=partition, bit_cap=bit_cap)
    return solve_exact(build(kind, n, strategy or "exhaustive"), bit_cap)
