"""Regenerate src/cpbounds/data/exact_values.csv by local optimization.

Maximizes the minimum squared pairwise distance of n points in the unit
square with SLSQP.  Only pairs that are close at the start are constrained;
any pair that ends up closer than the optimized minimum is added and the
solve repeated, so the result is always checked against all pairs.  Starts
are perturbed square and hexagonal lattices, random points, the best
configuration for n - 1 plus a point in its largest hole, and the best
configuration for n + 1 minus one point.  The best start is then refined by
basin hopping (random perturbations followed by another polish).

Each stored value is the squared minimum distance of an actual
configuration, so it is a lower bound on the optimum.  A final pass enforces
gamma(n) >= gamma(n+1), since dropping a point keeps a configuration valid.

    python3 tools/compute_exact_values.py --starts 40 --hops 60
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from decimal import ROUND_HALF_EVEN, Decimal
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.spatial.distance import pdist

OUT = Path(__file__).resolve().parents[1] / "src" / "cpbounds" / "data" / "exact_values.csv"
PROVENANCE = "local multistart SLSQP (tools/compute_exact_values.py)"


def min_sqdist(pts: np.ndarray) -> float:
    return float(pdist(pts, "sqeuclidean").min())


def lattice_start(n: int, rng, hexagonal: bool) -> np.ndarray:
    rows = max(1, round(math.sqrt(n) * rng.uniform(0.85, 1.2)))
    cols = max(1, math.ceil(n / rows))
    pts = []
    for r in range(rows):
        shift = 0.5 if hexagonal and r % 2 else 0.0
        for c in range(cols + (1 if hexagonal else 0)):
            pts.append(((c + shift) / max(cols - (0 if hexagonal else 1), 1), r / max(rows - 1, 1)))
    pts = np.clip(np.array(pts), 0, 1)
    if len(pts) < n:
        pts = np.vstack([pts, rng.uniform(0, 1, (n - len(pts), 2))])
    pts = pts[rng.permutation(len(pts))[:n]]
    return np.clip(pts + rng.normal(0, 0.01, pts.shape), 0, 1)


def add_point(pts: np.ndarray) -> np.ndarray:
    """Insert a point where it is farthest from the existing ones."""
    grid = np.stack(np.meshgrid(np.linspace(0, 1, 61), np.linspace(0, 1, 61)), -1).reshape(-1, 2)
    d2 = ((grid[:, None, :] - pts[None, :, :]) ** 2).sum(-1).min(1)
    return np.vstack([pts, grid[int(d2.argmax())]])


def polish(pts: np.ndarray, rounds: int = 6) -> np.ndarray:
    n = len(pts)
    if n < 2:
        return pts
    iu, ju = np.triu_indices(n, 1)
    for _ in range(rounds):
        d2 = ((pts[iu] - pts[ju]) ** 2).sum(1)
        t0 = d2.min()
        keep = d2 <= max(4 * t0, np.partition(d2, min(len(d2) - 1, 6 * n))[min(len(d2) - 1, 6 * n)])
        I, J = iu[keep], ju[keep]
        rows = np.arange(len(I))

        def cons(z, I=I, J=J):
            p = z[:-1].reshape(n, 2)
            return ((p[I] - p[J]) ** 2).sum(1) - z[-1]

        def cons_jac(z, I=I, J=J, rows=rows):
            p = z[:-1].reshape(n, 2)
            d = p[I] - p[J]
            jac = np.zeros((len(I), 2 * n + 1))
            for k in range(2):
                jac[rows, 2 * I + k] = 2 * d[:, k]
                jac[rows, 2 * J + k] = -2 * d[:, k]
            jac[:, -1] = -1
            return jac

        grad = np.zeros(2 * n + 1)
        grad[-1] = -1
        res = minimize(lambda z: -z[-1], np.concatenate([pts.ravel(), [t0]]), jac=lambda z: grad,
                       method="SLSQP", constraints=[{"type": "ineq", "fun": cons, "jac": cons_jac}],
                       bounds=[(0, 1)] * (2 * n) + [(0, 2)], options={"maxiter": 500, "ftol": 1e-16})
        new = np.clip(res.x[:-1].reshape(n, 2), 0, 1)
        if min_sqdist(new) < min_sqdist(pts) * (1 - 1e-12):
            break
        done = min_sqdist(new) >= res.x[-1] * (1 - 1e-9)
        pts = new
        if done:
            break
    return pts


def best_of(starts, current=None):
    best, best_val = current, (min_sqdist(current) if current is not None else -1.0)
    for start in starts:
        pts = polish(start)
        val = min_sqdist(pts)
        if val > best_val:
            best, best_val = pts, val
    return best


def hop(pts: np.ndarray, rng, count: int) -> np.ndarray:
    """Basin hopping: perturb the best configuration and keep improvements."""
    best, best_val = pts, min_sqdist(pts)
    for k in range(count):
        scale = math.sqrt(best_val) * (0.35 if k % 3 else 0.8)
        trial = np.clip(best + rng.normal(0, scale, best.shape), 0, 1)
        if k % 4 == 3:
            idx = rng.integers(len(best))
            trial[idx] = rng.uniform(0, 1, 2)
        trial = polish(trial)
        val = min_sqdist(trial)
        if val > best_val * (1 + 1e-12):
            best, best_val = trial, val
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-max", type=int, default=50)
    parser.add_argument("--starts", type=int, default=40)
    parser.add_argument("--hops", type=int, default=60)
    parser.add_argument("--seed", type=int, default=20240101)
    parser.add_argument("--out", type=Path, default=OUT)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    best: dict[int, np.ndarray] = {}
    for n in range(2, args.n_max + 1):
        # Small instances polish in milliseconds, so they get more starts.
        count = max(args.starts, args.starts * 20 // n)
        starts = [lattice_start(n, rng, s % 2 == 1) for s in range(count)]
        starts += [rng.uniform(0, 1, (n, 2)) for _ in range(max(2, count // (1 if n < 16 else 4)))]
        if n - 1 in best:
            starts.append(add_point(best[n - 1]))
        best[n] = hop(best_of(starts), rng, max(args.hops, args.hops * 20 // n))
        print(f"n={n} gamma={min_sqdist(best[n]):.10f}", file=sys.stderr, flush=True)
    for n in range(args.n_max - 1, 1, -1):
        bigger = best[n + 1]
        tight = np.argsort(pdist(bigger, "sqeuclidean"))[:3 * n]
        iu, ju = np.triu_indices(n + 1, 1)
        drop = sorted(set(iu[tight]) | set(ju[tight]))[: max(6, n // 3)]
        starts = [np.delete(bigger, k, axis=0) for k in drop]
        before = min_sqdist(best[n])
        best[n] = best_of(starts, best[n])
        if min_sqdist(best[n]) > before:
            print(f"n={n} improved to {min_sqdist(best[n]):.10f}", file=sys.stderr, flush=True)

    gamma = {n: min_sqdist(p) for n, p in best.items()}
    for n in range(args.n_max - 1, 1, -1):
        gamma[n] = max(gamma[n], gamma[n + 1])

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "gamma_exact", "provenance"])
        for n in sorted(gamma):
            value = Decimal(repr(gamma[n])).quantize(Decimal("1e-10"), rounding=ROUND_HALF_EVEN)
            writer.writerow([n, f"{value}", PROVENANCE])


if __name__ == "__main__":
    main()
