from fractions import Fraction as F
from math import sqrt

import pytest

from cpbounds.certificates import (
    UNAVAILABLE,
    LdlFactors,
    NotPsdWitness,
    ReductionTrace,
    aggregation_recipe,
    bordered_matrix,
    certify,
    clique_membership_qp,
    clique_qp_argmax,
    closed_form_bound,
    gamma_to_radius,
    ldl_product,
    ldl_verify,
    mtcomb_point,
    point3_ldl_factors,
    printed_point,
    proof_point,
    rlt_redundancy_check,
    sdp1_reduction,
)
from cpbounds.errors import (
    BadParity,
    NegativeGamma,
    NoCertificateAvailable,
    NoPointAvailable,
    NotSymmetric,
    OutOfRange,
)
from cpbounds.exact import GAMMA, X, Y, check_feasible, x, y
from cpbounds.relaxations import LP_KINDS, MIN_N, build, partition_indices
from cpbounds.solver import dual_certificate_check, solve_relaxation


def test_closed_form_examples():
    assert closed_form_bound("TWcomb", 9) == F(3, 8)
    assert closed_form_bound("MTcombTri", 7) == F(1, 2)
    assert closed_form_bound("SDP2", 9) == F(3, 8)
    assert closed_form_bound("MTordTri", 5) == 1
    assert closed_form_bound("SDPord", 6) is UNAVAILABLE
    assert closed_form_bound("SDPcomb", 9) is UNAVAILABLE
    with pytest.raises(OutOfRange):
        closed_form_bound("TWbnd", 4)


@pytest.mark.parametrize("k", range(1, 8))
def test_mtclique_parity_branches(k):
    assert closed_form_bound("MTclique", 2 * k + 1) == 1 + F(1, 2 * k + 1)
    assert closed_form_bound("MTclique", 2 * k + 2) == 1 + F(1, 2 * k + 1)


@pytest.mark.parametrize("n", range(3, 8))
def test_mtclique_closed_form_matches_row_generation(n):
    assert solve_relaxation("MTclique", n).value == closed_form_bound("MTclique", n)


def test_mtbndclique_follows_parity_of_the_small_block():
    for n in range(9, 30):
        ny = partition_indices(n).n_y
        m = ny if ny % 2 else ny - 1
        assert closed_form_bound("MTbndClique", n) == F(1, 4) * (1 + F(1, m))


def test_proof_point_examples():
    p = proof_point("MTclique", 3)
    for blk_v, blk_V in ((x, X), (y, Y)):
        assert all(p[blk_v(i)] == F(2, 3) and p[blk_V(i, i)] == F(2, 3) for i in range(1, 4))
        assert p[blk_V(1, 2)] == p[blk_V(2, 3)] == F(1, 3)
    q = proof_point("TWord", 4)
    assert [q[x(i)] for i in range(1, 5)] == [0, F(1, 3), F(2, 3), 1]
    assert all(q[y(i)] == F(1, 2) for i in range(1, 5)) and q[GAMMA] == F(4, 3)
    s = proof_point("SDP1", 3)
    assert s[x(2)] == s[X(2, 2)] == F(1, 2) and s[X(1, 3)] == F(1, 8)
    with pytest.raises(NoPointAvailable):
        proof_point("SDPord", 5)


def test_recipe_examples():
    tw = aggregation_recipe("TW", 6)
    assert tw == {f"tw_pair_1_2_{k}": F(1, 4) for k in range(1, 5)}
    clique3 = aggregation_recipe("MTclique", 3)
    # One pair row per pair, so averaging over C(3, 2) pairs gives weight 1/3 each.
    assert clique3["mt_pair_1_2_1"] == F(1, 3)
    assert dual_certificate_check(build("MTclique", 3), clique3, F(4, 3))
    ordered = aggregation_recipe("MTordTri", 5)
    assert dual_certificate_check(build("MTordTri", 5), ordered, 1)
    assert any(tag.startswith("clique_m3") for tag in ordered)
    with pytest.raises(NoCertificateAvailable):
        aggregation_recipe("SDP1", 4)


def _lp_cases(max_n):
    for kind in LP_KINDS:
        for n in range(MIN_N[kind], max_n + 1):
            yield kind.value, n


def _no_small_certificate(kind, n):
    ny = partition_indices(n).n_y
    return (kind == "MTcombTri" and n <= 8) or (kind == "MTbndClique" and ny < 3)


@pytest.mark.parametrize("kind,n", list(_lp_cases(10)))
def test_proof_point_is_feasible_at_closed_form(kind, n):
    model = build(kind, n)
    point = proof_point(kind, n)
    assert point[GAMMA] == closed_form_bound(kind, n)
    report = check_feasible(model, point)
    assert report.ok, report.summary()


@pytest.mark.parametrize("kind,n", list(_lp_cases(10)))
def test_recipe_certifies_closed_form(kind, n):
    if _no_small_certificate(kind, n):
        with pytest.raises(NoCertificateAvailable):
            aggregation_recipe(kind, n)
        return
    model = build(kind, n)
    recipe = aggregation_recipe(kind, n)
    assert all(w > 0 for w in recipe.values())
    assert dual_certificate_check(model, recipe, closed_form_bound(kind, n))


@pytest.mark.parametrize("kind,n", [("MTordTri", 5), ("MTordTri", 7), ("MTcombTri", 9),
                                    ("MTcombTri", 13), ("MTclique", 6)])
def test_printed_points_violate_their_models(kind, n):
    assert not check_feasible(build(kind, n), printed_point(kind, n)).ok


def test_small_mtcomb_point():
    p = mtcomb_point(6)
    assert p[GAMMA] == F(1, 2)
    assert check_feasible(build("MTcombTri", 6), p).ok


def test_ldl_examples():
    eye = ldl_verify([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert isinstance(eye, LdlFactors) and eye.d == (1, 1, 1)
    assert eye.L == ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    ones = ldl_verify([[1, 1], [1, 1]])
    assert ones.psd and ones.d == (1, 0)
    with pytest.raises(NotSymmetric):
        ldl_verify([[1, 2], [3, 4]])


def test_ldl_witness():
    m = [[0, 1], [1, 0]]
    w = ldl_verify(m)
    assert isinstance(w, NotPsdWitness) and w.value < 0
    v = w.vector
    assert sum(v[i] * m[i][j] * v[j] for i in range(2) for j in range(2)) == w.value


def test_ldl_random_matrices():
    import random
    rng = random.Random(11)
    for trial in range(80):
        k = rng.randint(1, 5)
        r = rng.randint(1, k)
        factor = [[F(rng.randint(-2, 2)) for _ in range(r)] for _ in range(k)]
        sign = -1 if trial % 3 == 0 else 1
        m = [[sum(factor[i][t] * factor[j][t] * (sign if t == 0 else 1) for t in range(r))
              for j in range(k)] for i in range(k)]
        result = ldl_verify(m)
        if isinstance(result, LdlFactors):
            assert result.psd
            permuted = [[m[a][b] for b in result.perm] for a in result.perm]
            assert result.reconstruct() == permuted
        else:
            v = result.vector
            assert result.value < 0
            assert sum(v[i] * m[i][j] * v[j] for i in range(k) for j in range(k)) == result.value


@pytest.mark.parametrize("n", range(2, 13))
@pytest.mark.parametrize("kind", ["SDP1", "SDP2"])
def test_sdp_points(kind, n):
    if n < MIN_N[kind]:
        pytest.skip("below range")
    point = proof_point(kind, n)
    model = build(kind, n)
    assert point[GAMMA] == closed_form_bound(kind, n)
    assert check_feasible(model.base, point).ok
    for block in "xy":
        factors = ldl_verify(bordered_matrix(point, block, n))
        assert isinstance(factors, LdlFactors) and factors.psd
    assert check_feasible(model, point).ok


@pytest.mark.parametrize("n", range(2, 13))
def test_sdp1_point_is_on_the_psd_boundary(n):
    factors = ldl_verify(bordered_matrix(proof_point("SDP1", n), "x", n))
    assert 0 in factors.d


def test_point3_factors_at_five():
    dx, dy, L = point3_ldl_factors(5)
    assert dx == (1, F(1, 16), 0, 0, F(1, 4), F(1, 4))
    p = proof_point("SDP2", 5)
    assert [L[i][0] for i in range(1, 6)] == [p[x(i)] for i in range(1, 6)]


@pytest.mark.parametrize("n", range(5, 16))
def test_point3_reconstruction(n):
    dx, dy, L = point3_ldl_factors(n)
    p = proof_point("SDP2", n)
    assert ldl_product(L, dx) == bordered_matrix(p, "x", n)


def test_point3_factor_range():
    with pytest.raises(OutOfRange):
        point3_ldl_factors(4)


def test_reduction_examples():
    assert ReductionTrace.minor_value(3, F(1, 2), F(1, 8)) == 0
    trace = sdp1_reduction(3)
    assert trace.z_star(F(1, 2)) == F(1, 8)
    assert sdp1_reduction(10).value == F(10, 9)


@pytest.mark.parametrize("n", range(2, 13))
def test_reduction_checks(n):
    trace = sdp1_reduction(n)
    assert all(trace.checks.values()), trace.checks
    assert trace.value == 1 + F(1, n - 1)


@pytest.mark.parametrize("n", range(3, 17, 2))
def test_clique_qp(n):
    assert clique_membership_qp(n) == 0


def test_clique_qp_examples():
    assert clique_qp_argmax(3) == [(3, 1)]
    assert {(5, 2), (5, 3)} <= set(clique_qp_argmax(5))
    with pytest.raises(BadParity):
        clique_membership_qp(4)


@pytest.mark.parametrize("kind,n", [("SDP1", 2), ("SDP2", 5), ("SDP1", 10), ("SDP2", 12)])
def test_rlt_redundancy(kind, n):
    assert rlt_redundancy_check(kind, n)


def test_rlt_redundancy_needs_sdp_kind():
    with pytest.raises(OutOfRange):
        rlt_redundancy_check("TW", 4)


def test_radius():
    assert gamma_to_radius(0) == "0E-10" or F(gamma_to_radius(0)) == 0
    assert F(gamma_to_radius(1)) == F(1, 4)
    assert gamma_to_radius(2) == "0.2928932188"
    with pytest.raises(NegativeGamma):
        gamma_to_radius(-1)
    values = [F(gamma_to_radius(F(k, 7))) for k in range(0, 30)]
    assert values == sorted(values)
    assert abs(float(gamma_to_radius(F(1, 3))) - sqrt(1 / 3) / (2 * (1 + sqrt(1 / 3)))) < 1e-10


def test_certify_reports():
    assert certify("MTordTri", 7).ok
    bad = certify("MTcombTri", 6)
    assert bad.point_ok and not bad.dual_ok
    sdp = certify("SDP1", 4)
    assert sdp.point_ok and sdp.dual_ok is None


cvxpy = pytest.importorskip("cvxpy")


def _sdp_value(model):
    ids = list(model.base.var_ids)
    var = {v: cvxpy.Variable(name=v.name) for v in ids}
    cons = []
    for v, lo, hi in model.base.variables:
        if lo is not None:
            cons.append(var[v] >= float(lo))
        if hi is not None:
            cons.append(var[v] <= float(hi))
    for con in model.base.constraints:
        lhs = sum(float(c) * var[v] for v, c in con.expr.terms.items())
        rhs = float(con.rhs)
        cons.append({"<=": lhs <= rhs, ">=": lhs >= rhs, "=": lhs == rhs}[con.sense])
    for blk in model.psd_blocks:
        size = blk.size
        mat = cvxpy.Variable((size, size), symmetric=True)
        cons.append(mat >> 0)
        cons.append(mat[0, 0] == 1)
        for k, v in enumerate(blk.vector, 1):
            cons.append(mat[0, k] == var[v])
            for l, w in enumerate(blk.matrix[k - 1], 1):
                cons.append(mat[k, l] == var[w])
    prob = cvxpy.Problem(cvxpy.Maximize(var[model.base.var_ids[-1]]), cons)
    prob.solve(solver="CLARABEL")
    return prob.value


@pytest.mark.parametrize("kind,n", [("SDP1", 3), ("SDP1", 5), ("SDP2", 5), ("SDP2", 9)])
def test_sdp_closed_form_against_numerical_solver(kind, n):
    model = build(kind, n)
    assert model.base.var_ids[-1] == GAMMA
    assert _sdp_value(model) == pytest.approx(float(closed_form_bound(kind, n)), abs=1e-5)
