import random
from fractions import Fraction as F

import pytest
from scipy.optimize import linprog

from cpbounds.errors import NumericBlowup, SignError, StrategyInfeasible, Unavailable
from cpbounds.exact import GAMMA, FeasiblePoint, LinExpr, LinearModel, VarDecl, X, check_feasible, ge, le, x
from cpbounds.relaxations import build, build_multi_row, build_single_row, partition_indices
from cpbounds.solver import (
    Status,
    dual_certificate_check,
    implied_bound,
    separate_clique,
    solve_exact,
    solve_relaxation,
    solve_with_row_generation,
)


def _box_model(rows, k=3, ub=5):
    decls = [VarDecl(x(i), 0, ub) for i in range(1, k + 1)] + [VarDecl(GAMMA, None, None)]
    return LinearModel(k, decls, rows)


def test_tw_two_points():
    assert solve_exact(build_single_row("TW", 2)).value == 2


def test_tword_three_points():
    assert solve_exact(build_single_row("TWord", 3)).value == F(3, 2)


def test_single_bound():
    model = LinearModel(1, [VarDecl(GAMMA, None, 1)], [])
    assert solve_exact(model).value == 1


def test_infeasible_and_unbounded():
    bad = _box_model([ge(LinExpr.of(x(1)), 7, "too_big"), le(LinExpr.of(GAMMA), 0, "cap")])
    assert solve_exact(bad).status is Status.INFEASIBLE
    loose = _box_model([ge(LinExpr.of(GAMMA) - LinExpr.of(x(1)), 0, "floor")])
    assert solve_exact(loose).status is Status.UNBOUNDED


def _random_lp(rng: random.Random):
    k = rng.randint(2, 4)
    rows = []
    for r in range(rng.randint(1, 4)):
        coeffs = {x(i): rng.randint(-3, 3) for i in range(1, k + 1)}
        rows.append(le(LinExpr(coeffs) + LinExpr.of(GAMMA), rng.randint(-2, 6), f"cap_{r}"))
    for r in range(rng.randint(0, 3)):
        coeffs = {x(i): rng.randint(-3, 3) for i in range(1, k + 1)}
        sense = rng.choice([le, ge])
        rows.append(sense(LinExpr(coeffs), rng.randint(-4, 6), f"side_{r}"))
    return _box_model(rows, k, rng.randint(1, 4))


def _scipy_value(model: LinearModel):
    ids = list(model.var_ids)
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for con in model.constraints:
        row = [float(con.expr.coef(v)) for v in ids]
        if con.sense == "<=":
            a_ub.append(row), b_ub.append(float(con.rhs))
        elif con.sense == ">=":
            a_ub.append([-c for c in row]), b_ub.append(-float(con.rhs))
        else:
            a_eq.append(row), b_eq.append(float(con.rhs))
    bounds = [(None if lo is None else float(lo), None if hi is None else float(hi))
              for _v, lo, hi in model.variables]
    c = [-float(model.objective.coef(v)) for v in ids]
    res = linprog(c, A_ub=a_ub or None, b_ub=b_ub or None, A_eq=a_eq or None, b_eq=b_eq or None,
                  bounds=bounds, method="highs")
    return res.status, (-res.fun if res.status == 0 else None)


@pytest.mark.parametrize("seed", range(60))
def test_random_lps_agree_with_floating_point_oracle(seed):
    model = _random_lp(random.Random(seed))
    ours = solve_exact(model)
    status, value = _scipy_value(model)
    expected = {0: Status.OPTIMAL, 2: Status.INFEASIBLE, 3: Status.UNBOUNDED}[status]
    assert ours.status is expected
    if ours.optimal:
        assert float(ours.value) == pytest.approx(value, abs=1e-9)
        assert check_feasible(model, ours.primal).ok
        assert dual_certificate_check(model, ours.duals, ours.value)
        assert all(lam >= 0 for r, lam in ours.duals.items() if model.constraints[r].sense != "=")


@pytest.mark.parametrize("kind,n", [("TW", 4), ("TWbnd", 6), ("TWord", 5), ("TWcomb", 7),
                                    ("MTclique", 5), ("MTbndClique", 5), ("MTordTri", 6),
                                    ("MTcombTri", 9)])
def test_strong_duality_replay(kind, n):
    model = build(kind, n, "exhaustive")
    result = solve_exact(model)
    assert result.optimal
    assert check_feasible(model, result.primal).ok
    assert implied_bound(model, result.duals) == result.value
    assert not dual_certificate_check(model, result.duals, result.value - F(1, 10**6))


def test_determinism():
    model = build("MTordTri", 6)
    a, b = solve_exact(model), solve_exact(model)
    assert a.trace == b.trace and a.primal == b.primal and a.value == b.value


def test_bit_cap():
    with pytest.raises(NumericBlowup):
        solve_exact(build("TWord", 6), bit_cap=1)


def test_dual_certificate_examples():
    tw = build_single_row("TW", 4)
    pair = {f"tw_pair_2_3_{k}": F(1, 4) for k in range(1, 5)}
    assert dual_certificate_check(tw, pair, 2)
    assert not dual_certificate_check(tw, pair, 1)
    twbnd = build_single_row("TWbnd", 5)
    assert dual_certificate_check(twbnd, {f"tw_pair_1_2_{k}": F(1, 4) for k in range(1, 5)}, F(1, 2))
    with pytest.raises(SignError):
        dual_certificate_check(tw, {"tw_pair_1_2_1": -1}, 2)
    with pytest.raises(KeyError):
        dual_certificate_check(tw, {"no_such_row": 1}, 2)


def _block_point(values, products):
    point = {x(i): F(v) for i, v in values.items()}
    point.update({X(i, j): F(v) for (i, j), v in products.items()})
    return FeasiblePoint(point)


def test_separation_examples():
    hot = _block_point({1: 1, 2: 1, 3: 1}, {(1, 2): 0, (1, 3): 0, (2, 3): 0})
    sep = separate_clique(hot, 3, "x")
    assert sep.cut.index_set == (1, 2, 3) and sep.cut.alpha == 1 and sep.violation == 2
    assert separate_clique(hot, 3, "x", "greedy").violation == 2
    tilde = _block_point({1: F(2, 3), 2: F(2, 3), 3: F(2, 3)},
                         {(1, 2): F(1, 3), (1, 3): F(1, 3), (2, 3): F(1, 3)})
    assert separate_clique(tilde, 3, "x").cut is None
    zero = _block_point({1: 0, 2: 0, 3: 0}, {(1, 2): 0, (1, 3): 0, (2, 3): 0})
    result = separate_clique(zero, 3, "x")
    assert result.cut is None and result.violation == 0


def test_separation_cap():
    point = _block_point({i: 0 for i in range(1, 14)},
                         {(i, j): 0 for i in range(1, 14) for j in range(i + 1, 14)})
    with pytest.raises(StrategyInfeasible):
        separate_clique(point, 13, "x")


def test_greedy_finds_violation_when_exhaustive_does():
    rng = random.Random(3)
    for _ in range(30):
        n = 6
        vals = {i: F(rng.randint(0, 4), 4) for i in range(1, n + 1)}
        prods = {(i, j): F(rng.randint(0, 2), 8) for i in range(1, n + 1) for j in range(i + 1, n + 1)}
        point = _block_point(vals, prods)
        best = separate_clique(point, n, "x")
        greedy = separate_clique(point, n, "x", "greedy")
        assert (greedy.cut is None) == (greedy.violation == 0)
        assert greedy.violation <= best.violation


@pytest.mark.parametrize("n,value", [(3, F(4, 3)), (4, F(4, 3))])
def test_row_generation_examples(n, value):
    result = solve_with_row_generation(build("MTclique", n, "row_generation"), n)
    assert result.value == value and result.rounds <= 2


def test_row_generation_idempotent():
    full = build("MTclique", 5, "exhaustive")
    result = solve_with_row_generation(full, 5)
    assert result.rounds == 0 and result.value == solve_exact(full).value


def _row_generation(kind, n):
    if kind in ("MTordTri", "MTcombTri"):
        part = partition_indices(n) if kind == "MTcombTri" else None
        return solve_with_row_generation(build(kind, n, "row_generation"), n, blocks=("y",),
                                         partition=part, max_m=3)
    return solve_relaxation(kind, n, "row_generation")


@pytest.mark.parametrize("kind", ["MTclique", "MTbndClique", "MTordTri", "MTcombTri"])
@pytest.mark.parametrize("n", [
    2, 3, 4, 5, 6,
    pytest.param(7, marks=pytest.mark.slow),
])
def test_row_generation_matches_full_model(kind, n):
    try:
        full = build(kind, n, "exhaustive")
    except Exception:
        pytest.skip("instance below the model's range")
    assert _row_generation(kind, n).value == solve_exact(full).value


def test_sdp_kinds_are_not_solved():
    with pytest.raises(Unavailable):
        solve_relaxation("SDP1", 3)


@pytest.mark.parametrize("n", range(5, 11))
def test_ordered_triangle_model_not_above_ordered_pair_model(n):
    assert solve_relaxation("MTordTri", n).value <= solve_relaxation("TWord", n).value


@pytest.mark.parametrize("n", range(5, 11))
def test_combined_triangle_model_not_above_combined_pair_model(n):
    # Fails for n <= 8: see the notes in the README on the small-n combined models.
    assert solve_relaxation("MTcombTri", n).value <= solve_relaxation("TWcomb", n).value
