"""Mixing matrices ``W = I - alpha * L`` and the choice of ``alpha``.

The mixing weight is tuned against the expected contraction
``lambda_max(I - 2 alpha E[L] + alpha^2 E[L^T L] - J)``. Because ``E[L^T L]``
is PSD the semidefinite program over ``(s, alpha, beta)`` is tight at
``beta = alpha^2``, which leaves a convex scalar problem in ``alpha``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .linalg import largest_eigenvalue, symmetric_eigenvalues

SYMMETRY_TOL = 1e-9
ALPHA_TOL = 1e-6


@dataclass(frozen=True)
class MixingMatrix:
    W: np.ndarray
    alpha: float
    source: object = None


@dataclass(frozen=True)
class SpectralReport:
    alpha: float
    objective: float
    deviation: float
    spectral_gap: float
    convergent: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _consensus(n: int) -> np.ndarray:
    return np.full((n, n), 1.0 / n)


def mixing_matrix(lhat: np.ndarray, alpha: float, source: object = None) -> MixingMatrix:
    lhat = np.asarray(lhat, dtype=float)
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if np.max(np.abs(lhat - lhat.T), initial=0.0) > SYMMETRY_TOL:
        raise ValueError("Laplacian is not symmetric")
    if np.max(np.abs(lhat.sum(axis=1)), initial=0.0) > SYMMETRY_TOL:
        raise ValueError("Laplacian rows do not sum to zero")
    return MixingMatrix(np.eye(lhat.shape[0]) - alpha * lhat, float(alpha), source)


def deviation_norm(w: MixingMatrix | np.ndarray) -> float:
    """Spectral radius of ``W - J``."""
    w = w.W if isinstance(w, MixingMatrix) else np.asarray(w, dtype=float)
    vals = symmetric_eigenvalues(w - _consensus(w.shape[0]))
    return float(np.max(np.abs(vals)))


def objective_matrix(el: np.ndarray, egram: np.ndarray, alpha: float) -> np.ndarray:
    n = el.shape[0]
    return np.eye(n) - 2.0 * alpha * el + alpha * alpha * egram - _consensus(n)


def expected_objective(el: np.ndarray, egram: np.ndarray, alpha: float) -> float:
    el = np.asarray(el, dtype=float)
    egram = np.asarray(egram, dtype=float)
    if el.shape != egram.shape or el.ndim != 2 or el.shape[0] != el.shape[1]:
        raise ValueError(f"shape mismatch: {el.shape} vs {egram.shape}")
    return largest_eigenvalue(objective_matrix(el, egram, alpha))


def optimize_alpha(
    el: np.ndarray, egram: np.ndarray, alpha_max: float | None = None, tol: float = ALPHA_TOL
) -> SpectralReport:
    """Minimize ``expected_objective`` over ``alpha`` in ``(0, alpha_max]`` by
    golden-section search (the objective is convex in ``alpha``)."""
    el = np.asarray(el, dtype=float)
    egram = np.asarray(egram, dtype=float)
    top = largest_eigenvalue(el)
    if top <= 1e-12:
        raise ValueError("expected Laplacian is zero: no communication, no finite optimum")
    hi = 2.0 / top if alpha_max is None else float(alpha_max)
    lo = 0.0
    f = lambda a: expected_objective(el, egram, a)  # noqa: E731
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = f(x2)
    alpha = (lo + hi) / 2.0
    s = f(alpha)
    dev = deviation_norm(np.eye(el.shape[0]) - alpha * el)
    return SpectralReport(alpha, s, dev, 1.0 - dev, s < 1.0)
