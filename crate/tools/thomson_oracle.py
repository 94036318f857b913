#!/usr/bin/env python3
"""Multi-start projected-gradient oracle for minimal Coulomb energies on S^2.

Computes reference optima for N points on the unit sphere by minimizing
E(P) = sum_{i<j} 1/|p_i - p_j| directly over sphere configurations
(projected gradient descent with backtracking, many random restarts).
This is intentionally independent of the main library's stereographic
parameterization: values produced here are frozen into the benchmark
optimum table and used as oracles by its tests.

Usage: python3 tools/thomson_oracle.py [--n-min 2] [--n-max 12] [--starts 200]
"""

import argparse
import json
import sys

import numpy as np


def energy(p: np.ndarray) -> float:
    diff = p[:, None, :] - p[None, :, :]
    d = np.sqrt((diff**2).sum(-1))
    iu = np.triu_indices(len(p), k=1)
    return float((1.0 / d[iu]).sum())


def grad(p: np.ndarray) -> np.ndarray:
    diff = p[:, None, :] - p[None, :, :]
    d2 = (diff**2).sum(-1)
    np.fill_diagonal(d2, np.inf)
    w = d2 ** -1.5
    return -(w[:, :, None] * diff).sum(axis=1)


def project_tangent(p: np.ndarray, g: np.ndarray) -> np.ndarray:
    return g - (g * p).sum(-1, keepdims=True) * p


def normalize(p: np.ndarray) -> np.ndarray:
    return p / np.linalg.norm(p, axis=-1, keepdims=True)


def minimize_from(p0: np.ndarray, max_iter: int = 20000, tol: float = 1e-14) -> float:
    p = normalize(p0)
    e = energy(p)
    step = 0.1
    for _ in range(max_iter):
        g = project_tangent(p, grad(p))
        gnorm = np.linalg.norm(g)
        if gnorm < tol * max(1.0, abs(e)):
            break
        # backtracking on the retracted step
        while step > 1e-18:
            q = normalize(p - step * g)
            eq = energy(q)
            if eq < e - 0.5 * step * gnorm**2 * 1e-4:
                p, e = q, eq
                step *= 1.3
                break
            step *= 0.5
        else:
            break
    return e


def best_for(n: int, starts: int, rng: np.random.Generator) -> float:
    best = np.inf
    for _ in range(starts):
        p0 = rng.standard_normal((n, 3))
        e = minimize_from(p0)
        best = min(best, e)
    return best


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-min", type=int, default=2)
    ap.add_argument("--n-max", type=int, default=12)
    ap.add_argument("--starts", type=int, default=200)
    ap.add_argument("--seed", type=int, default=20260809)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    table = {}
    for n in range(args.n_min, args.n_max + 1):
        e = best_for(n, args.starts, rng)
        table[n] = e
        print(f"N={n:3d}  E_min={e:.12f}", flush=True)

    # analytic anchors: antipodal pair, equilateral triangle, regular tetrahedron
    checks = {2: 0.5, 3: np.sqrt(3.0), 4: 6.0 / np.sqrt(8.0 / 3.0)}
    ok = True
    for n, ref in checks.items():
        if n in table and abs(table[n] - ref) > 1e-9:
            print(f"MISMATCH N={n}: oracle {table[n]!r} vs analytic {ref!r}")
            ok = False
    print(json.dumps(table, indent=2))
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
