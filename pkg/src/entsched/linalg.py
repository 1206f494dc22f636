"""Dense symmetric eigen-solver (cyclic Jacobi, round-robin ordering).

Each step applies ``n // 2`` disjoint plane rotations at once; a sweep of
``n - 1`` steps visits every off-diagonal pair exactly once.
"""
from __future__ import annotations

import numpy as np

CONVERGENCE_TOL = 1e-12
MAX_SWEEPS = 100


class NotSymmetricError(ValueError):
    pass


def _round_robin(m: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Circle-method schedule for ``m`` (even) players: ``m - 1`` rounds of ``m / 2`` pairs."""
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        top, bottom = players[: m // 2], players[m // 2:][::-1]
        p = np.array([min(a, b) for a, b in zip(top, bottom)])
        q = np.array([max(a, b) for a, b in zip(top, bottom)])
        rounds.append((p, q))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _off_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.sqrt(np.sum(off * off)))


def jacobi_eigh(m: np.ndarray, tol: float = 1e-9, vectors: bool = False):
    """Eigenvalues (ascending) of a symmetric matrix, optionally with eigenvectors
    as columns. ``tol`` bounds the accepted asymmetry."""
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n and np.max(np.abs(a - a.T)) > tol:
        raise NotSymmetricError(f"matrix asymmetric beyond {tol}")
    a = (a + a.T) / 2.0
    v = np.eye(n)
    if n >= 2:
        padded = n + (n % 2)
        schedule = []
        for p, q in _round_robin(padded):
            keep = q < n
            schedule.append((p[keep], q[keep]))
        threshold = max(CONVERGENCE_TOL, 4 * np.finfo(float).eps * np.linalg.norm(a) * n)
        for _ in range(MAX_SWEEPS):
            if _off_norm(a) < threshold:
                break
            for p, q in schedule:
                apq = a[p, q]
                live = apq != 0.0
                if not live.any():
                    continue
                p, q, apq = p[live], q[live], apq[live]
                with np.errstate(over="ignore"):
                    tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                    t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                if vectors:
                    v = v @ rot
        else:
            raise RuntimeError(f"Jacobi did not converge in {MAX_SWEEPS} sweeps")
    vals = np.diag(a).copy()
    order = np.argsort(vals, kind="stable")
    if vectors:
        return vals[order], v[:, order]
    return vals[order]


def symmetric_eigenvalues(m: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    return jacobi_eigh(m, tol)


def largest_eigenvalue(m: np.ndarray, tol: float = 1e-9) -> float:
    return float(jacobi_eigh(m, tol)[-1])
