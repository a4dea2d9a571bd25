"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line (visible with ``pytest -v``
or ``-s``) listing what was checked and every case that missed, then asserts.
"""

import random
import time
from fractions import Fraction as F

import pytest

from cpbounds import io as cio
from cpbounds.certificates import (
    LdlFactors,
    aggregation_recipe,
    bordered_matrix,
    clique_membership_qp,
    closed_form_bound,
    ldl_product,
    ldl_verify,
    point3_ldl_factors,
    proof_point,
    rlt_redundancy_check,
    sdp1_reduction,
)
from cpbounds.envelopes import Polytope2, envelope_box, envelope_polytope, envelope_triangle, sqdiff
from cpbounds.errors import NoCertificateAvailable
from cpbounds.exact import GAMMA, check_feasible
from cpbounds.relaxations import LP_KINDS, MIN_N, build, partition_indices
from cpbounds.solver import dual_certificate_check, solve_exact, solve_relaxation

HALF = F(1, 2)


def report(capsys, criterion, misses, checked, started):
    status = "PASS" if not misses else "FAIL"
    detail = f"{checked} checks, {time.perf_counter() - started:.1f}s"
    if misses:
        shown = "; ".join(misses[:8]) + (" ..." if len(misses) > 8 else "")
        detail += f", {len(misses)} missed: {shown}"
    with capsys.disabled():
        print(f"\n{status} criterion {criterion}: {detail}")
    assert not misses, f"criterion {criterion}: {misses}"


class Tally:
    def __init__(self):
        self.misses, self.checked = [], 0

    def expect(self, ok, label):
        self.checked += 1
        if not ok:
            self.misses.append(label)


def test_criterion_1_single_row_values(capsys):
    t0, tally = time.perf_counter(), Tally()
    for n in range(2, 11):
        got = solve_exact(build("TW", n)).value
        tally.expect(got == 2, f"TW n={n} got {got}")
        got = solve_exact(build("TWord", n)).value
        tally.expect(got == 1 + F(1, n - 1), f"TWord n={n} got {got}")
    for n in range(5, 11):
        got = solve_exact(build("TWbnd", n)).value
        tally.expect(got == HALF, f"TWbnd n={n} got {got}")
        got = solve_exact(build("TWcomb", n)).value
        tally.expect(got == F(1, 4) * (1 + F(1, (n - 1) // 4)), f"TWcomb n={n} got {got}")
    report(capsys, "1 (single-row LP values)", tally.misses, tally.checked, t0)


def test_criterion_2a_mtclique(capsys):
    t0, tally = time.perf_counter(), Tally()
    for n in range(3, 8):
        got = solve_relaxation("MTclique", n, "row_generation").value
        want = 1 + F(1, n) if n % 2 else 1 + F(1, n - 1)
        tally.expect(got == want, f"n={n} got {got} want {want}")
    report(capsys, "2a (MTclique by row generation)", tally.misses, tally.checked, t0)


def test_criterion_2b_mtordtri(capsys):
    t0, tally = time.perf_counter(), Tally()
    for n in range(3, 10):
        got = solve_exact(build("MTordTri", n)).value
        want = F(2, 3) * (1 + F(1, (n - 1) // 2))
        tally.expect(got == want, f"n={n} got {got} want {want}")
    report(capsys, "2b (MTordTri)", tally.misses, tally.checked, t0)


def test_criterion_2c_mtcombtri(capsys):
    t0, tally = time.perf_counter(), Tally()
    for n in range(5, 11):
        got = solve_exact(build("MTcombTri", n)).value
        ny = partition_indices(n).n_y
        want = HALF if n <= 8 else F(1, 6) * (1 + F(1, (ny - 1) // 2))
        tally.expect(got == want, f"n={n} got {got} want {want}")
    report(capsys, "2c (MTcombTri)", tally.misses, tally.checked, t0)


def test_criterion_2d_mtbndclique(capsys):
    # Full exhaustive models up to n = 7; beyond that row generation with
    # exhaustive separation, which reaches the same optimum.
    t0, tally = time.perf_counter(), Tally()
    for n in range(5, 10):
        if n <= 7:
            got = solve_exact(build("MTbndClique", n, "exhaustive")).value
        else:
            got = solve_relaxation("MTbndClique", n, "row_generation").value
        ny = partition_indices(n).n_y
        m = ny if ny % 2 else ny - 1
        want = F(1, 4) * (1 + F(1, m))
        tally.expect(got == want, f"n={n} got {got} want {want}")
    report(capsys, "2d (MTbndClique)", tally.misses, tally.checked, t0)


def _lp_cases():
    for kind in LP_KINDS:
        for n in range(MIN_N[kind], 11):
            yield kind.value, n


def test_criterion_3a_proof_points(capsys):
    t0, tally = time.perf_counter(), Tally()
    for kind, n in _lp_cases():
        point = proof_point(kind, n)
        ok = point[GAMMA] == closed_form_bound(kind, n) and check_feasible(build(kind, n), point).ok
        tally.expect(ok, f"{kind} n={n}")
    report(capsys, "3a (proof points feasible at the closed form)", tally.misses, tally.checked, t0)


def test_criterion_3b_aggregations(capsys):
    t0, tally = time.perf_counter(), Tally()
    for kind, n in _lp_cases():
        try:
            recipe = aggregation_recipe(kind, n)
        except NoCertificateAvailable:
            tally.expect(False, f"{kind} n={n} (no certificate)")
            continue
        tally.expect(dual_certificate_check(build(kind, n), recipe, closed_form_bound(kind, n)),
                     f"{kind} n={n}")
    report(capsys, "3b (aggregations certify the closed form)", tally.misses, tally.checked, t0)


def test_criterion_4_sdp_certificates(capsys):
    t0, tally = time.perf_counter(), Tally()
    for kind in ("SDP1", "SDP2"):
        for n in range(max(2, MIN_N[kind]), 13):
            point = proof_point(kind, n)
            model = build(kind, n)
            tally.expect(point[GAMMA] == closed_form_bound(kind, n), f"{kind} n={n} gamma")
            tally.expect(check_feasible(model.base, point).ok, f"{kind} n={n} linear rows")
            for block in "xy":
                factors = ldl_verify(bordered_matrix(point, block, n))
                tally.expect(isinstance(factors, LdlFactors) and factors.psd, f"{kind} n={n} psd_{block}")
            tally.expect(rlt_redundancy_check(kind, n), f"{kind} n={n} rlt")
    for n in range(5, 13):
        dx, dy, L = point3_ldl_factors(n)
        point = proof_point("SDP2", n)
        tally.expect(ldl_product(L, dx) == bordered_matrix(point, "x", n), f"point3 x n={n}")
        tally.expect(ldl_product(L, dy) == bordered_matrix(point, "y", n), f"point3 y n={n}")
    for n in range(2, 13):
        trace = sdp1_reduction(n)
        tally.expect(trace.value == 1 + F(1, n - 1) and all(trace.checks.values()), f"reduction n={n}")
    report(capsys, "4 (SDP1/SDP2 certificates)", tally.misses, tally.checked, t0)


def test_criterion_5_clique_qp(capsys):
    t0, tally = time.perf_counter(), Tally()
    for n in range(3, 16, 2):
        value = clique_membership_qp(n)
        tally.expect(value == 0, f"n={n} got {value}")
    report(capsys, "5 (clique membership QP)", tally.misses, tally.checked, t0)


def _sample(domain, rng):
    weights = [F(rng.randint(0, 1000)) for _ in domain.vertices]
    if not any(weights):
        weights[0] = F(1)
    total = sum(weights)
    return (sum(w * v[0] for w, v in zip(weights, domain.vertices)) / total,
            sum(w * v[1] for w, v in zip(weights, domain.vertices)) / total)


def test_criterion_6_envelopes(capsys):
    t0, tally = time.perf_counter(), Tally()
    domains = {
        "box 1x1": Polytope2.box(1, 1), "box 1/2x1/2": Polytope2.box(HALF, HALF),
        "box 1/2x1": Polytope2.box(HALF, 1), "triangle 1": Polytope2.triangle(1),
        "triangle 1/2": Polytope2.triangle(HALF), "trapezoid": Polytope2.trapezoid(HALF, 1),
    }
    rng = random.Random(2024)
    for name, domain in domains.items():
        env = envelope_polytope(domain)
        over = all(env(p) >= sqdiff(p) for p in (_sample(domain, rng) for _ in range(1000)))
        tally.expect(over, f"{name} overestimation")
        tally.expect(all(env(v) == sqdiff(v) for v in domain.vertices), f"{name} vertex tightness")
    for u1, u2 in [(1, 1), (HALF, HALF), (HALF, 1)]:
        same = set(envelope_box(u1, u2).pieces) == set(envelope_polytope(Polytope2.box(u1, u2)).pieces)
        tally.expect(same, f"box {u1}x{u2} vs hull")
    for u in (1, HALF):
        same = set(envelope_triangle(u).pieces) == set(envelope_polytope(Polytope2.triangle(u)).pieces)
        tally.expect(same, f"triangle {u} vs hull")
    small, big = envelope_box(HALF, HALF), envelope_box(1, 1)
    inner = Polytope2.box(HALF, HALF)
    shrink = all(small(p) <= big(p) for p in (_sample(inner, rng) for _ in range(1000)))
    tally.expect(shrink, "domain shrink monotonicity")
    report(capsys, "6 (envelope properties)", tally.misses, tally.checked, t0)


def test_criterion_7_figure_table(capsys):
    t0, tally = time.perf_counter(), Tally()
    rows = cio.bound_table("5..50", ["TWcomb", "MTcombTri"], cio.bundled_exact_values())
    by = {(r.n, r.relaxation.value): r for r in rows}
    ratio49 = by[49, "MTcombTri"].bound / by[49, "TWcomb"].bound
    tally.expect(ratio49 <= F(72, 100), f"n=49 MTcombTri/TWcomb = {float(ratio49):.4f}")
    for kind in ("TWcomb", "MTcombTri"):
        for n in range(13, 50):
            a, b = by[n, kind].ratio_exact, by[n + 1, kind].ratio_exact
            tally.expect(b >= a, f"{kind} bound/exact drops from n={n} ({float(a):.4f}) "
                                 f"to n={n + 1} ({float(b):.4f})")
    report(capsys, "7 (figure table)", tally.misses, tally.checked, t0)


def test_criterion_8_round_trip_and_determinism(capsys, tmp_path):
    t0, tally = time.perf_counter(), Tally()
    for kind in LP_KINDS:
        for n in range(MIN_N[kind], 9):
            model = build(kind, n)
            tally.expect(cio.round_trip(model) == model, f"LP round trip {kind.value} n={n}")
    exact = cio.load_exact_values("n,gamma_exact\n5,0.5\n6,0.36\n7,0.28\n8,0.26\n9,0.25\n")
    rows = cio.bound_table("5..9", ["TWcomb", "MTcombTri"], exact)
    tally.expect(cio.table_csv(rows) == cio.table_csv(cio.bound_table("5..9", ["TWcomb", "MTcombTri"], exact)),
                 "CSV bytes")
    first = cio.emit_plot(rows, tmp_path / "a.svg")
    second = cio.emit_plot(cio.bound_table("5..9", ["TWcomb", "MTcombTri"], exact), tmp_path / "b.svg")
    tally.expect(first == second, "SVG bytes")
    report(capsys, "8 (LP round trip, CSV/SVG determinism)", tally.misses, tally.checked, t0)
