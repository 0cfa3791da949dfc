"""Independent reference implementations used only to check the package.

Nothing here may call into qrecsim's numerics: the value of these oracles is
that they reach the same quantities by different algorithms.
"""

from __future__ import annotations

import numpy as np


def jacobi_eigenvalues(sym: np.ndarray, sweeps: int = 100, tol: float = 1e-13) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Deliberately not LAPACK: plain Givens rotations zeroing one off-diagonal
    pair at a time until the off-diagonal mass is negligible.
    """
    a = np.array(sym, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n) or not np.allclose(a, a.T, atol=1e-12):
        raise ValueError("jacobi oracle needs a symmetric matrix")
    for _ in range(sweeps):
        off = np.sqrt(np.sum(a**2) - np.sum(np.diag(a) ** 2))
        if off < tol * max(1.0, np.max(np.abs(np.diag(a)))):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau)) if tau != 0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))[::-1]


def leaf_scan_weights(tree) -> dict[tuple[int, int], float]:
    """Recompute every internal weight by brute-force scans over the leaves.

    Sums each prefix's leaves with math.fsum-free plain accumulation in leaf
    order, which is an intentionally different summation order than the
    tree's pairwise child sums.
    """
    leaves = tree.levels[tree.depth]
    out: dict[tuple[int, int], float] = {}
    for t in range(tree.depth + 1):
        shift = tree.depth - t
        for prefix in range(1 << t):
            total = 0.0
            hit = False
            for j, w in sorted(leaves.items()):
                if j >> shift == prefix:
                    total += w
                    hit = True
            if hit:
                out[(t, prefix)] = total
    return out


def power_iteration_top_sigma(a: np.ndarray, iters: int = 2000) -> float:
    """Largest singular value via power iteration on A^T A."""
    rng = np.random.default_rng(12345)
    v = rng.normal(size=a.shape[1])
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = a.T @ (a @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
    return float(np.sqrt(v @ (a.T @ (a @ v))))


def dft_phase_distribution(theta: float, bits: int) -> np.ndarray:
    """Single-round estimate distribution straight from the definition.

    Builds the length-N vector e^{i a theta}/N explicitly and takes squared
    magnitudes of its discrete Fourier transform by direct O(N^2) summation.
    """
    n = 1 << bits
    amps = np.zeros(n, dtype=np.complex128)
    for b in range(n):
        acc = 0.0 + 0.0j
        for a in range(n):
            acc += np.exp(1j * a * theta - 2j * np.pi * a * b / n)
        amps[b] = acc / n
    probs = np.abs(amps) ** 2
    return probs / probs.sum()
