"""Closed-form bounds and the certificates that pin them from both sides.

For each relaxation this module knows the closed-form optimal value, an
explicit feasible point reaching it (lower side) and nonnegative row
multipliers whose aggregation proves it is an upper bound (upper side).  It
also holds the exact LDL^T PSD test used for the SDP points, the analytic
reduction of SDP1 to a univariate problem, and the small integer program
showing the symmetric MTclique point satisfies every clique inequality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from itertools import combinations
from math import isqrt
from typing import Callable

from .errors import (
    BadParity,
    InstanceTooSmall,
    NegativeGamma,
    NoCertificateAvailable,
    NoPointAvailable,
    NotSymmetric,
    OutOfRange,
)
from .exact import GAMMA, FeasiblePoint, SdpModel, VarId, check_feasible, point_var, product_var
from .relaxations import (
    MIN_N,
    Relaxation,
    as_relaxation,
    build_sdp,
    partition_indices,
)

F = Fraction
HALF = F(1, 2)
QUARTER = F(1, 4)


class _Unavailable:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNAVAILABLE"

    def __bool__(self):
        return False


UNAVAILABLE = _Unavailable()


def _check_range(kind: Relaxation, n: int):
    if n < MIN_N[kind]:
        raise OutOfRange(f"{kind} is only covered for n >= {MIN_N[kind]}, got {n}")


# ------------------------------------------------------------ closed forms

def closed_form_bound(kind, n: int):
    """Optimal value of relaxation ``kind`` at size n, or UNAVAILABLE."""
    kind = as_relaxation(kind)
    _check_range(kind, n)
    part = partition_indices(n)
    if kind is Relaxation.TW:
        return F(2)
    if kind is Relaxation.TWbnd:
        return HALF
    if kind in (Relaxation.TWord, Relaxation.SDP1):
        return 1 + F(1, n - 1)
    if kind in (Relaxation.TWcomb, Relaxation.SDP2):
        return QUARTER * (1 + F(1, (n - 1) // 4))
    if kind is Relaxation.MTclique:
        return 1 + F(1, n if n % 2 else n - 1)
    if kind is Relaxation.MTbndClique:
        ny = part.n_y
        return QUARTER * (1 + F(1, ny if ny % 2 else ny - 1))
    if kind is Relaxation.MTordTri:
        return F(2, 3) * (1 + F(1, (n - 1) // 2))
    if kind is Relaxation.MTcombTri:
        if n <= 8:
            return HALF
        return F(1, 6) * (1 + F(1, (part.n_y - 1) // 2))
    return UNAVAILABLE


# ------------------------------------------------------------ proof points

def _assign(values: dict, block: str, n: int, point: Callable[[int], F],
            product: Callable[[int, int], F]):
    for i in range(1, n + 1):
        values[point_var(block, i)] = point(i)
        for j in range(i, n + 1):
            values[product_var(block, i, j)] = product(i, j)


def _moment_point(n: int, c: F) -> tuple[Callable, Callable]:
    """v_i = V_ii = c/2 and V_ij = c/4: the symmetric clique-tight point."""
    return (lambda i: c / 2), (lambda i, j: c / 2 if i == j else c / 4)


def _bnd_moment_point(n: int, cut: int, ny: int, c: F) -> tuple[Callable, Callable]:
    """Tightened-bound point: c/4 on the first n_y indices, 1/2 beyond."""
    def point(i):
        return c / 4 if i <= ny else HALF

    def product(i, j):
        if i == j:
            return point(i) / 2 if i <= cut else point(i)
        if j <= ny:
            return c / 16
        if i <= ny:
            return c / 8
        return QUARTER
    return point, product


def proof_point(kind, n: int) -> FeasiblePoint:
    """Explicit feasible point attaining the closed-form value.

    MTclique at odd n and MTbndClique at odd n_y use the symmetric clique-tight
    point.  At even n (resp. even n_y) that point scaled to 1 + 1/(n-1) breaks
    the full clique cut, so the SDP1 (resp. SDP2) point is used instead; it
    has the same objective value.  For MTordTri the off-diagonal Y is
    (x_j - x_i)/2, the value that makes every pair row tight.  MTcombTri uses
    a repaired construction (see :func:`mtcomb_point`).
    """
    kind = as_relaxation(kind)
    _check_range(kind, n)
    if kind in (Relaxation.SDPord, Relaxation.SDPcomb):
        raise NoPointAvailable(f"no explicit point is known for {kind}")
    part = partition_indices(n)
    nx, ny = part.n_x, part.n_y
    gamma = closed_form_bound(kind, n)
    values: dict[VarId, F] = {}
    idx = range(1, n + 1)

    if kind is Relaxation.TW:
        values.update({point_var(b, i): HALF for b in "xy" for i in idx})
    elif kind is Relaxation.TWbnd:
        values.update({point_var(b, i): QUARTER if i <= ny else HALF for b in "xy" for i in idx})
    elif kind is Relaxation.TWord:
        values.update({point_var("x", i): F(i - 1, n - 1) for i in idx})
        values.update({point_var("y", i): HALF for i in idx})
    elif kind is Relaxation.TWcomb:
        for i in idx:
            inside = i <= ny
            values[point_var("x", i)] = F(i - 1, 2 * (ny - 1)) if inside else HALF
            values[point_var("y", i)] = QUARTER if inside else HALF
    elif kind in (Relaxation.MTclique, Relaxation.SDP1):
        if kind is Relaxation.MTclique and n % 2:
            point, product = _moment_point(n, 1 + F(1, n))
        else:
            def point(i):
                return HALF

            def product(i, j):
                return HALF if i == j else F(n - 2, 4 * (n - 1))
        for b in "xy":
            _assign(values, b, n, point, product)
    elif kind in (Relaxation.MTbndClique, Relaxation.SDP2):
        if kind is Relaxation.MTbndClique and ny % 2:
            c = 1 + F(1, ny)
            for b in "xy":
                _assign(values, b, n, *_bnd_moment_point(n, part.cut(b), ny, c))
        else:
            for b in "xy":
                _assign(values, b, n, *point3_block(n, b))
    elif kind is Relaxation.MTordTri:
        delta = F(1, (n - 1) // 2)
        xs = {i: ((i - 1) // 2) * delta for i in idx}
        yv = (1 + delta) / 3
        values.update({point_var("x", i): xs[i] for i in idx})
        _assign(values, "y", n, lambda i: yv,
                lambda i, j: yv if i == j else (xs[j] - xs[i]) / 2)
    elif kind is Relaxation.MTcombTri:
        return mtcomb_point(n)
    values[GAMMA] = gamma
    return FeasiblePoint(values)


def point3_block(n: int, block: str) -> tuple[Callable, Callable]:
    """The SDP2 point: 1/4 on the first n_y indices, 1/2 beyond."""
    part = partition_indices(n)
    ny, cut = part.n_y, part.cut(block)

    def point(i):
        return QUARTER if i <= ny else HALF

    def product(i, j):
        if i == j:
            return point(i) / 2 if i <= cut else point(i)
        if j <= ny:
            return F(ny - 2, 16 * (ny - 1))
        if i <= ny:
            return F(1, 8)
        return QUARTER
    return point, product


def mtcomb_point(n: int) -> FeasiblePoint:
    """Feasible MTcombTri point with gamma equal to the closed form.

    n >= 9: on the first n_y indices the printed point with
    Y_ij = (x_j - x_i)/4, which makes every first-block pair row tight.
    Outside that block x = 1/2, y = Y_kk = 1, Y_kl = 1 - gamma/2, and the
    cross terms Y_ik = 5/8 - x_i/4 - gamma/4 keep the mixed pair rows and
    triangle cuts satisfied for every n_y >= 3.

    n <= 8 (n_y = 2): x = (0, 1/2), y = 1/4 on the first block, with
    Y_12 = 0, Y_1k = 3/16, Y_2k = 1/16 towards the rest, and the product
    point 1/2 elsewhere.
    """
    part = partition_indices(n)
    _check_range(Relaxation.MTcombTri, n)
    ny = part.n_y
    gamma = closed_form_bound(Relaxation.MTcombTri, n)
    values: dict[VarId, F] = {GAMMA: gamma}
    idx = range(1, n + 1)
    if n >= 9:
        delta = F(1, 2 * ((ny - 1) // 2))
        xs = {i: ((i - 1) // 2) * delta if i <= ny else HALF for i in idx}
        yin = (1 + 2 * delta) / 6

        def yv(i):
            return yin if i <= ny else F(1)

        def Yv(i, j):
            if i == j:
                return yin / 2 if i <= ny else F(1)
            if j <= ny:
                return (xs[j] - xs[i]) / 4
            if i <= ny:
                return F(5, 8) - xs[i] / 4 - gamma / 4
            return 1 - gamma / 2
    else:
        xs = {i: (F(0) if i == 1 else HALF) for i in idx}
        cross = {1: F(3, 16), 2: F(1, 16)}

        def yv(i):
            return QUARTER if i <= 2 else HALF

        def Yv(i, j):
            if i == j:
                return F(1, 8) if i <= 2 else HALF
            if j <= 2:
                return F(0)
            if i <= 2:
                return cross[i]
            return QUARTER
    values.update({point_var("x", i): xs[i] for i in idx})
    _assign(values, "y", n, yv, Yv)
    return FeasiblePoint(values)


def printed_point(kind, n: int) -> FeasiblePoint:
    """Published points that fail the model, kept for comparison.

    The even-n MTclique point violates the clique cut on all n indices.  The
    MTordTri and MTcombTri points use Y_ij = (j - i) * delta / 4 (resp. / 8) inside the ordered block,
    which differs from (x_j - x_i)/2 (resp. /4) whenever consecutive x
    coincide, so the first pair row is violated.
    """
    kind = as_relaxation(kind)
    idx = range(1, n + 1)
    values: dict[VarId, F] = {}
    if kind is Relaxation.MTclique and n % 2 == 0:
        for b in "xy":
            _assign(values, b, n, *_moment_point(n, 1 + F(1, n - 1)))
    elif kind is Relaxation.MTordTri:
        delta = F(1, (n - 1) // 2)
        yv = (1 + delta) / 3
        values.update({point_var("x", i): ((i - 1) // 2) * delta for i in idx})
        _assign(values, "y", n, lambda i: yv,
                lambda i, j: yv if i == j else F(j - i, 4) * delta)
    elif kind is Relaxation.MTcombTri and n >= 9:
        ny = partition_indices(n).n_y
        delta = F(1, 2 * ((ny - 1) // 2))
        yin = (1 + 2 * delta) / 6
        values.update({point_var("x", i): ((i - 1) // 2) * delta if i <= ny else HALF
                       for i in idx})

        def Yv(i, j):
            if i == j:
                return yin / 2 if i <= ny else HALF
            if j <= ny:
                return F(j - i, 8) * delta
            if i <= ny:
                return (1 + 2 * delta) / 12
            return QUARTER
        _assign(values, "y", n, lambda i: yin if i <= ny else HALF, Yv)
    else:
        raise NoPointAvailable(f"no printed point kept for {kind} at n={n}")
    values[GAMMA] = closed_form_bound(kind, n)
    return FeasiblePoint(values)


# ------------------------------------------------------ aggregation recipes

def _tw(i, j, k):
    return f"tw_pair_{i}_{j}_{k}"


def _mt(i, j, k=1):
    return f"mt_pair_{i}_{j}_{k}"


def _clique_tag(index_set, alpha, block):
    return f"clique_m{len(index_set)}_a{alpha}_{block}_{'_'.join(map(str, index_set))}"


def _add(recipe: dict, tag: str, weight: F):
    recipe[tag] = recipe.get(tag, F(0)) + weight


def _clique_recipe(m: int, hat_scale: bool) -> dict[str, F]:
    """Pair, diagonal and clique multipliers over I = {1..m}, m odd.

    Averaging the pair rows over I, bounding diagonals by the diagonal rows
    and the remaining x/X terms by the clique cut with alpha = (m-1)/2.
    With ``hat_scale`` the rows live in tightened-bound coordinates, where
    the realized clique row is four times weaker in X.
    """
    alpha = (m - 1) // 2
    pairs = F(m * (m - 1), 2)
    recipe: dict[str, F] = {}
    for i, j in combinations(range(1, m + 1), 2):
        _add(recipe, _mt(i, j), 1 / pairs)
    for block in "xy":
        for i in range(1, m + 1):
            _add(recipe, f"diag_{block}_{i}", (m - 1) / pairs)
        weight = (F(1, 2) if hat_scale else F(2)) / pairs
        _add(recipe, _clique_tag(tuple(range(1, m + 1)), alpha, block), weight)
    return recipe


def _triple_recipe(k: int, comb: bool) -> dict[str, F]:
    """Average the per-triple bounds over l = 1, 3, ..., 2k-1.

    Each triple (l, l+1, l+2) combines its three pair rows, its triangle cut
    and its three diagonal rows into gamma <= 2/3 (x_{l+2} - x_l + 1), or
    gamma <= 1/3 (x_{l+2} - x_l + 1/2) in tightened coordinates; the x terms
    telescope to x_{2k+1} - x_1, which the variable box bounds.
    """
    recipe: dict[str, F] = {}
    cut_weight = F(1, 6) if comb else F(2, 3)
    for t in range(k):
        l = 2 * t + 1
        tri = (l, l + 1, l + 2)
        for i, j in combinations(tri, 2):
            _add(recipe, _mt(i, j), F(1, 3) / k)
        for i in tri:
            _add(recipe, f"diag_y_{i}", F(2, 3) / k)
        _add(recipe, _clique_tag(tri, 1, "y"), cut_weight / k)
    return recipe


def aggregation_recipe(kind, n: int) -> dict[str, F]:
    """Row multipliers (by tag) certifying gamma <= closed_form_bound(kind, n)."""
    kind = as_relaxation(kind)
    _check_range(kind, n)
    if kind.is_sdp:
        raise NoCertificateAvailable("aggregation recipes exist only for the LP relaxations")
    part = partition_indices(n)
    ny = part.n_y
    if kind in (Relaxation.TW, Relaxation.TWbnd):
        return {_tw(1, 2, k): QUARTER for k in range(1, 5)}
    if kind is Relaxation.TWord:
        w = F(1, 2 * (n - 1))
        return {_tw(i, i + 1, k): w for i in range(1, n) for k in (1, 2)}
    if kind is Relaxation.TWcomb:
        w = F(1, 2 * (ny - 1))
        return {_tw(i, i + 1, k): w for i in range(1, ny) for k in (1, 2)}
    if kind is Relaxation.MTclique:
        return _clique_recipe(n if n % 2 else n - 1, hat_scale=False)
    if kind is Relaxation.MTbndClique:
        if ny < 3:
            raise NoCertificateAvailable(
                f"MTbndClique at n={n} (n_y={ny}) has LP value above the closed form; "
                "no aggregation can certify it")
        return _clique_recipe(ny if ny % 2 else ny - 1, hat_scale=True)
    if kind is Relaxation.MTordTri:
        return _triple_recipe((n - 1) // 2, comb=False)
    if n <= 8:
        raise NoCertificateAvailable(
            f"MTcombTri at n={n} has LP value above 1/2; no aggregation can certify it")
    return _triple_recipe((ny - 1) // 2, comb=True)


# -------------------------------------------------------- clique QP check

def clique_membership_qp(n: int) -> F:
    """Max over 3 <= m <= n, 1 <= alpha <= m-2 of the clique slack polynomial.

    The polynomial is the violation of the (m, alpha) clique cut at the
    symmetric point with c = 1 + 1/n; a maximum of 0 shows the point lies in
    the clique polytope with some cut tight.
    """
    if n < 3 or n % 2 == 0:
        raise BadParity(f"n must be odd and at least 3, got {n}")
    return max(clique_qp_value(n, m, alpha)
               for m in range(3, n + 1) for alpha in range(1, m - 1))


def clique_qp_value(n: int, m: int, alpha: int) -> F:
    c = 1 + F(1, n)
    return (-c * m * m / 8 + c * alpha * m / 2 - F(alpha * alpha, 2)
            + c * m / 8 - F(alpha, 2))


def clique_qp_argmax(n: int) -> list[tuple[int, int]]:
    best = clique_membership_qp(n)
    return [(m, a) for m in range(3, n + 1) for a in range(1, m - 1)
            if clique_qp_value(n, m, a) == best]


# ------------------------------------------------------------------- LDL

@dataclass(frozen=True)
class LdlFactors:
    """perm applied symmetrically: M[perm][:, perm] = L diag(d) L^T."""

    L: tuple[tuple[F, ...], ...]
    d: tuple[F, ...]
    perm: tuple[int, ...]

    @property
    def psd(self) -> bool:
        return all(v >= 0 for v in self.d)

    def reconstruct(self) -> list[list[F]]:
        size = len(self.d)
        return [[sum((self.L[i][k] * self.d[k] * self.L[j][k] for k in range(size)), F(0))
                 for j in range(size)] for i in range(size)]


@dataclass(frozen=True)
class NotPsdWitness:
    vector: tuple[F, ...]
    value: F

    @property
    def psd(self) -> bool:
        return False


def _quad(M, v) -> F:
    return sum((v[i] * M[i][j] * v[j] for i in range(len(v)) for j in range(len(v)) if v[i] and v[j]),
               F(0))


def _solve(A: list[list[F]], b: list[F]) -> list[F]:
    """Gaussian elimination for a nonsingular system."""
    size = len(b)
    aug = [row[:] + [b[i]] for i, row in enumerate(A)]
    for col in range(size):
        piv = next(r for r in range(col, size) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        for r in range(size):
            if r != col and aug[r][col] != 0:
                f = aug[r][col] / aug[col][col]
                aug[r] = [a - f * p for a, p in zip(aug[r], aug[col])]
    return [aug[i][size] / aug[i][i] for i in range(size)]


def ldl_verify(M) -> LdlFactors | NotPsdWitness:
    """Exact LDL^T with symmetric pivoting, or a negative-curvature vector.

    At each step the first remaining index with a nonzero diagonal is the
    pivot.  A zero diagonal with a nonzero off-diagonal in its remaining row,
    or a negative pivot, means M is not PSD; the witness v is lifted back to
    the original coordinates and satisfies v^T M v < 0 exactly.  Indices whose
    remaining rows vanish are eliminated last with d = 0.
    """
    M = [[F(v) for v in row] for row in M]
    size = len(M)
    if any(len(row) != size for row in M):
        raise NotSymmetric("matrix must be square")
    if any(M[i][j] != M[j][i] for i in range(size) for j in range(i)):
        raise NotSymmetric("matrix must be symmetric")
    S = [row[:] for row in M]
    remaining = list(range(size))
    order: list[int] = []
    cols: dict[int, dict[int, F]] = {}
    pivots: dict[int, F] = {}
    while True:
        for i in remaining:
            if S[i][i] == 0:
                j = next((j for j in remaining if j != i and S[i][j] != 0), None)
                if j is not None:
                    t = -(S[j][j] + 1) / (2 * S[i][j])
                    return _witness(M, order, remaining, {i: t, j: F(1)})
        pivot = next((i for i in remaining if S[i][i] != 0), None)
        if pivot is None:
            break
        if S[pivot][pivot] < 0:
            return _witness(M, order, remaining, {pivot: F(1)})
        dk = S[pivot][pivot]
        remaining.remove(pivot)
        order.append(pivot)
        pivots[pivot] = dk
        col = {i: S[i][pivot] / dk for i in remaining if S[i][pivot] != 0}
        cols[pivot] = col
        for i, li in col.items():
            for j, lj in col.items():
                S[i][j] -= li * dk * lj
    perm = order + remaining
    pos = {p: k for k, p in enumerate(perm)}
    L = [[F(0)] * size for _ in range(size)]
    for k in range(size):
        L[k][k] = F(1)
    for p, col in cols.items():
        for i, li in col.items():
            L[pos[i]][pos[p]] = li
    d = tuple(pivots.get(p, F(0)) for p in perm)
    return LdlFactors(tuple(map(tuple, L)), d, tuple(perm))


def _witness(M, eliminated: list[int], remaining: list[int], w: dict[int, F]) -> NotPsdWitness:
    """Extend w on the Schur complement to v with v^T M v = w^T S w < 0."""
    size = len(M)
    v = [F(0)] * size
    for i, val in w.items():
        v[i] = val
    if eliminated:
        A = [[M[p][q] for q in eliminated] for p in eliminated]
        rhs = [-sum((M[p][r] * v[r] for r in remaining), F(0)) for p in eliminated]
        for p, val in zip(eliminated, _solve(A, rhs)):
            v[p] = val
    value = _quad(M, v)
    assert value < 0, "witness construction failed"
    return NotPsdWitness(tuple(v), value)


def bordered_matrix(point, block: str, n: int) -> list[list[F]]:
    vec = [point[point_var(block, i)] for i in range(1, n + 1)]
    rows = [[F(1)] + vec]
    for i in range(1, n + 1):
        rows.append([vec[i - 1]] + [point[product_var(block, i, j)] for j in range(1, n + 1)])
    return rows


def point3_ldl_factors(n: int) -> tuple[tuple[F, ...], tuple[F, ...], tuple[tuple[F, ...], ...]]:
    """The closed-form LDL^T factors of the SDP2 point's bordered matrices.

    Returns (d_x, d_y, L) with L shared by both blocks; indices are 1-based
    in the formulas and 0-based in the tuples.
    """
    if n < 5:
        raise OutOfRange("the SDP2 point is defined for n >= 5")
    part = partition_indices(n)
    nx, ny = part.n_x, part.n_y
    size = n + 1

    def dx(j):
        if j == 1:
            return F(1)
        if j <= ny + 1:
            prod = F(1)
            for i in range(1, j - 1):
                prod *= 1 - F(1, (ny - i) ** 2)
            return prod / 16
        if j <= nx + 1:
            return F(0)
        return QUARTER

    def dy(j):
        return dx(j) if j <= ny + 1 else QUARTER

    xt = {i: QUARTER if i <= ny else HALF for i in range(1, n + 1)}
    L = [[F(0)] * size for _ in range(size)]
    for i in range(1, size + 1):
        L[i - 1][i - 1] = F(1)
        if i >= 2:
            L[i - 1][0] = xt[i - 1]
        for j in range(2, i):
            if i <= ny + 1:
                L[i - 1][j - 1] = -F(1, ny - j + 1)
    return (tuple(dx(j) for j in range(1, size + 1)),
            tuple(dy(j) for j in range(1, size + 1)),
            tuple(map(tuple, L)))


def ldl_product(L, d) -> list[list[F]]:
    size = len(d)
    return [[sum((L[i][k] * d[k] * L[j][k] for k in range(size)), F(0)) for j in range(size)]
            for i in range(size)]


# ----------------------------------------------------------- SDP1 chain

@dataclass
class ReductionTrace:
    """Steps reducing SDP1 at size n to a univariate maximization."""

    n: int
    z_star: Callable[[F], F]
    objective: Callable[[F], F]
    t_opt: F
    value: F
    checks: dict[str, bool] = field(default_factory=dict)

    @staticmethod
    def minor_value(m: int, t, z) -> F:
        t, z = F(t), F(z)
        return (t - z) ** (m - 1) * (t + (m - 1) * z - m * t * t)


def _det(A: list[list[F]]) -> F:
    A = [row[:] for row in A]
    size = len(A)
    det = F(1)
    for col in range(size):
        piv = next((r for r in range(col, size) if A[r][col] != 0), None)
        if piv is None:
            return F(0)
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
            det = -det
        det *= A[col][col]
        for r in range(col + 1, size):
            f = A[r][col] / A[col][col]
            if f:
                A[r] = [a - f * p for a, p in zip(A[r], A[col])]
    return det


def _symmetric_minor(m: int, t: F, z: F) -> list[list[F]]:
    """Leading m+1 principal block of ((1, t 1^T), (t 1, t I + z (J - I)))."""
    rows = [[F(1)] + [t] * m]
    for i in range(m):
        rows.append([t] + [t if i == j else z for j in range(m)])
    return rows


def sdp1_reduction(n: int) -> ReductionTrace:
    """Replay the SDP1 reduction with exact checks at every step.

    With x_i = X_ii = t and X_ij = z, the leading principal minors of the
    bordered matrix are (t - z)^(m-1) (t + (m-1) z - m t^2); the binding one
    (m = n) gives z*(t) = (n t^2 - t)/(n - 1).  Each pair row then reads
    gamma <= 4 (t - z*(t)) = 4n/(n-1) (t - t^2), maximized at t = 1/2.
    """
    if n < 2:
        raise InstanceTooSmall("n must be at least 2")

    def z_star(t):
        t = F(t)
        return (n * t * t - t) / (n - 1)

    def objective(t):
        t = F(t)
        return F(4 * n, n - 1) * (t - t * t)

    t_opt = HALF
    value = objective(t_opt)
    samples = [F(1, 3), F(1, 2), F(2, 5), F(3, 4), F(1, 7)]
    checks = {
        "minor_formula_matches_determinants": all(
            ReductionTrace.minor_value(m, t, z) == _det(_symmetric_minor(m, t, z))
            for m in range(1, n + 1) for t in samples for z in (F(0), F(1, 8), t * t)),
        "z_star_zeroes_top_minor": all(
            ReductionTrace.minor_value(n, t, z_star(t)) == 0 for t in samples),
        "objective_is_pair_row": all(objective(t) == 4 * (t - z_star(t)) for t in samples),
        "stationary_at_half": F(4 * n, n - 1) * (1 - 2 * t_opt) == 0,
        "maximum_at_half": all(objective(t) <= value for t in samples),
        "matches_closed_form": value == closed_form_bound(Relaxation.SDP1, n),
    }
    return ReductionTrace(n, z_star, objective, t_opt, value, checks)


# ------------------------------------------------------ RLT redundancy

def mccormick_violations(point, bounds, block: str, n: int) -> list[tuple[int, int, F]]:
    """First-level RLT (McCormick) products of the variable bounds.

    Returns (i, j, slack) for every violated product inequality, i <= j.
    """
    bad = []
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            vi, vj = point[point_var(block, i)], point[point_var(block, j)]
            V = point[product_var(block, i, j)]
            li, ui = bounds[point_var(block, i)]
            lj, uj = bounds[point_var(block, j)]
            slacks = (
                V - (lj * vi + li * vj - li * lj),
                V - (uj * vi + ui * vj - ui * uj),
                (uj * vi + li * vj - li * uj) - V,
                (lj * vi + ui * vj - ui * lj) - V,
            )
            worst = min(slacks)
            if worst < 0:
                bad.append((i, j, worst))
    return bad


def rlt_redundancy_check(kind, n: int) -> bool:
    """True iff the SDP proof point satisfies every first-level RLT cut."""
    kind = as_relaxation(kind)
    if kind not in (Relaxation.SDP1, Relaxation.SDP2):
        raise OutOfRange("RLT redundancy is claimed only for SDP1 and SDP2")
    _check_range(kind, n)
    model = build_sdp(kind, n)
    point = proof_point(kind, n)
    return not any(mccormick_violations(point, model.base.bounds, b, n) for b in "xy")


# ------------------------------------------------------------- radius

def gamma_to_radius(gamma, digits: int = 10) -> str:
    """r = sqrt(g) / (2 (1 + sqrt(g))) as a decimal string with ``digits`` places.

    sqrt(g) is bracketed with integer square roots at extra precision, so the
    result is correctly rounded except in ties closer than 10^-(digits+20).
    """
    gamma = F(gamma)
    if gamma < 0:
        raise NegativeGamma("gamma must be nonnegative")
    guard = digits + 20
    scale = 10 ** guard
    num, den = gamma.numerator, gamma.denominator
    root = F(isqrt(num * den * scale * scale), den * scale)
    radius = root / (2 * (1 + root))
    with localcontext() as ctx:
        ctx.prec = guard + 10
        value = Decimal(radius.numerator) / Decimal(radius.denominator)
        return str(value.quantize(Decimal(1).scaleb(-digits), rounding=ROUND_HALF_EVEN))


# -------------------------------------------------------------- bundle

@dataclass
class CertificateReport:
    kind: Relaxation
    n: int
    closed_form: object
    point_ok: bool | None = None
    point_detail: str = ""
    dual_ok: bool | None = None
    dual_detail: str = ""

    @property
    def ok(self) -> bool:
        return bool(self.point_ok) and bool(self.dual_ok)


def certify(kind, n: int, model=None) -> CertificateReport:
    """Check the proof point and the aggregation recipe against ``model``."""
    from .relaxations import build
    from .solver import dual_certificate_check, implied_bound

    kind = as_relaxation(kind)
    model = model if model is not None else build(kind, n)
    report = CertificateReport(kind, n, closed_form_bound(kind, n))
    try:
        point = proof_point(kind, n)
        feas = check_feasible(model, point)
        report.point_ok = feas.ok and point[GAMMA] == report.closed_form
        report.point_detail = feas.summary()
    except NoPointAvailable as exc:
        report.point_ok, report.point_detail = False, str(exc)
    if isinstance(model, SdpModel):
        report.dual_ok, report.dual_detail = None, "no dual certificate for SDP models"
        return report
    try:
        recipe = aggregation_recipe(kind, n)
        report.dual_ok = dual_certificate_check(model, recipe, report.closed_form)
        report.dual_detail = f"implied bound {implied_bound(model, recipe)}"
    except NoCertificateAvailable as exc:
        report.dual_ok, report.dual_detail = False, str(exc)
    return report
