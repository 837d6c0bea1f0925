"""Power iteration, Hotelling deflation and a small dense eigen-solver."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigInvalid, DegenerateDeflation, NonSquare, TooLarge, ZeroIterate

Matvec = Callable[[np.ndarray], np.ndarray]

DENSE_LIMIT = 64


@dataclass(frozen=True)
class PowerConfig:
    tol: float = 1e-5
    max_iter: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigInvalid("tol must be positive")
        if self.max_iter < 1:
            raise ConfigInvalid("max_iter must be at least 1")


@dataclass(frozen=True)
class SpectralResult:
    eigenvalue: float
    eigenvector: np.ndarray
    iterations: int
    converged: bool


def random_start(dim: int, seed: int) -> np.ndarray:
    """Seeded uniform[-1, 1] start vector, redrawn once if it is numerically zero."""
    rng = np.random.default_rng(seed)
    v = rng.uniform(-1.0, 1.0, size=dim)
    if np.linalg.norm(v) < 1e-12:
        v = rng.uniform(-1.0, 1.0, size=dim)
    return v


def sign_normalize(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its first nonzero entry is positive."""
    nz = np.flatnonzero(np.abs(v) > 1e-14 * max(np.abs(v).max(initial=0.0), 1e-300))
    if len(nz) and v[nz[0]] < 0:
        return -v
    return v


def power_iteration(
    matvec: Matvec,
    dim: int,
    config: PowerConfig = PowerConfig(),
    v0: np.ndarray | None = None,
    zero_tol: float = 1e-12,
) -> SpectralResult:
    """Dominant eigenpair of a linear operator given only its action.

    Iterates ``v <- A v / |A v|`` until the L2 change of the unit iterate drops
    below ``config.tol`` or ``config.max_iter`` steps have run.  The eigenvalue
    is the Rayleigh quotient of the last iterate.
    """
    if dim < 1:
        raise ValueError("dimension must be positive")
    v = random_start(dim, config.seed) if v0 is None else np.array(v0, dtype=np.float64)
    v = v / np.linalg.norm(v)
    converged = False
    eigenvalue = 0.0
    it = 0
    for it in range(1, config.max_iter + 1):
        w = matvec(v)
        norm = np.linalg.norm(w)
        if not np.isfinite(norm) or norm <= zero_tol:
            raise ZeroIterate(f"operator annihilated the iterate at step {it} (norm {norm:.3g})")
        eigenvalue = float(v @ w)
        w = w / norm
        change = np.linalg.norm(w - v)
        v = w
        if change < config.tol:
            converged = True
            break
    v = sign_normalize(v)
    return SpectralResult(eigenvalue=eigenvalue, eigenvector=v, iterations=it, converged=converged)


def second_eigvec_hotelling(
    right_matvec: Matvec,
    left_matvec: Matvec,
    dim: int,
    config: PowerConfig = PowerConfig(),
    known_right_dominant: np.ndarray | None = None,
    dominant_eigenvalue: float | None = None,
) -> SpectralResult:
    """Second-largest eigenpair of ``A`` by Hotelling deflation.

    ``left_matvec`` applies ``A^T``.  The left dominant eigenvector ``u1`` is
    found by power iteration; ``v1`` is either supplied or found the same way
    on ``A``.  Power iteration is then run on
    ``A' x = A x - lam1 v1 (u1 . x) / (u1 . v1)``.

    The returned ``iterations`` counts all three (or two) power runs.
    """
    total = 0
    left = power_iteration(left_matvec, dim, config)
    total += left.iterations
    u1 = left.eigenvector
    if known_right_dominant is None:
        right = power_iteration(right_matvec, dim, config)
        total += right.iterations
        v1 = right.eigenvector
        lam1 = right.eigenvalue if dominant_eigenvalue is None else dominant_eigenvalue
    else:
        v1 = np.asarray(known_right_dominant, dtype=np.float64)
        v1 = v1 / np.linalg.norm(v1)
        lam1 = float(v1 @ right_matvec(v1)) if dominant_eigenvalue is None else dominant_eigenvalue
    denom = float(u1 @ v1)
    if abs(denom) < 1e-12:
        raise DegenerateDeflation("left and right dominant eigenvectors are orthogonal")
    scale = lam1 / denom

    def deflated(x):
        return right_matvec(x) - scale * (u1 @ x) * v1

    # Start orthogonal to u1 so the dominant direction is absent from the outset.
    start = random_start(dim, config.seed + 1)
    start = start - (u1 @ start) / denom * v1
    if np.linalg.norm(start) < 1e-12:
        start = random_start(dim, config.seed + 2)
    res = power_iteration(deflated, dim, config, v0=start, zero_tol=1e-10 * max(abs(lam1), 1.0))
    total += res.iterations
    return SpectralResult(res.eigenvalue, res.eigenvector, total, res.converged)


def dense_eig_oracle(A) -> tuple[np.ndarray, np.ndarray]:
    """Full spectrum of a small dense matrix, eigenvalues sorted descending.

    Eigenvectors are returned as unit-norm, sign-normalized columns.  Symmetric
    input goes through ``eigh``; otherwise ``eig`` and real parts are kept
    (every operator we inspect has a real spectrum).
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] > DENSE_LIMIT:
        raise TooLarge(f"dense oracle limited to dimension {DENSE_LIMIT}")
    if np.allclose(A, A.T, atol=1e-13, rtol=0):
        vals, vecs = np.linalg.eigh((A + A.T) / 2)
    else:
        vals, vecs = np.linalg.eig(A)
        vals, vecs = vals.real, vecs.real
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    vecs = vecs / np.linalg.norm(vecs, axis=0, keepdims=True)
    for j in range(vecs.shape[1]):
        vecs[:, j] = sign_normalize(vecs[:, j])
    return vals, vecs
