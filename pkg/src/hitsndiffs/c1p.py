"""Consecutive-ones checks: P-matrix test, brute-force reconstruction, R-matrices."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import NoC1POrder, NonBinary, NonSquare, TooLarge
from .matrix import ResponseMatrix

BRUTE_FORCE_LIMIT = 8


@dataclass(frozen=True)
class PermutationCertificate:
    permutation: tuple[int, ...]
    verified: bool
    n_orders: int = 0

    @property
    def unique(self) -> bool:
        """An order and its reverse are the same ordering."""
        return self.n_orders <= 2


def _as_sparse(M) -> sp.csc_matrix:
    if isinstance(M, ResponseMatrix):
        M = M.C
    A = sp.csc_matrix(M, dtype=np.float64)
    A.eliminate_zeros()
    if A.nnz and not np.all(A.data == 1.0):
        raise NonBinary("matrix entries must be 0 or 1")
    return A


def _as_dense_bool(M) -> np.ndarray:
    return _as_sparse(M).toarray().astype(bool)


def is_p_matrix(M, order=None) -> bool:
    """True iff the 1s of every column are contiguous (rows taken in ``order`` if given)."""
    A = _as_sparse(M)
    if order is not None:
        A = sp.csc_matrix(A.tocsr()[np.asarray(order, dtype=np.int64)])
    A.sort_indices()
    counts = np.diff(A.indptr)
    nonempty = counts > 0
    if not nonempty.any():
        return True
    starts = A.indptr[:-1][nonempty]
    lo = np.minimum.reduceat(A.indices, starts)
    hi = np.maximum.reduceat(A.indices, starts)
    return bool(np.all(hi - lo + 1 == counts[nonempty]))


def _p_mask(B: np.ndarray, perms: np.ndarray) -> np.ndarray:
    P = B[perms]  # (p, m, c)
    rises = P[:, 0, :].astype(np.int16) + (P[:, 1:, :] & ~P[:, :-1, :]).sum(axis=1)
    return np.all(rises <= 1, axis=1)


def brute_force_c1p_order(M, max_users: int = BRUTE_FORCE_LIMIT) -> PermutationCertificate:
    """Try every row permutation; return the lexicographically first P-certifying one.

    ``n_orders`` on the certificate counts all certifying permutations, so an
    instance with a unique order (up to reversal) has ``n_orders == 2``
    (``1`` when m == 1).
    """
    B = _as_dense_bool(M)
    m = B.shape[0]
    if m > max_users:
        raise TooLarge(f"brute force limited to {max_users} rows, got {m}")
    first = None
    count = 0
    all_perms = np.array(list(permutations(range(m))), dtype=np.int64).reshape(-1, m)
    for chunk in np.array_split(all_perms, max(1, len(all_perms) // 5000)):
        ok = _p_mask(B, chunk)
        count += int(ok.sum())
        if first is None and ok.any():
            first = tuple(int(x) for x in chunk[np.argmax(ok)])
    if first is None:
        raise NoC1POrder("no row permutation yields a P-matrix")
    return PermutationCertificate(first, True, count)


def c1p_order_is_unique(M, order) -> bool:
    """Whether ``order`` (which must certify C1P) is the only C1P order up to reversal.

    Columns become intervals over the ordered rows.  The order is forced
    exactly when one connected component of the interval-overlap graph spans
    all rows and its interval endpoints separate every pair of neighbouring
    rows; any coarser block could be reversed on its own.
    """
    B = _as_dense_bool(M)[np.asarray(order, dtype=np.int64)]
    m = B.shape[0]
    if m <= 2:
        return True
    if not is_p_matrix(B):
        raise NoC1POrder("given order does not certify C1P")
    sizes = B.sum(axis=0)
    cols = np.flatnonzero((sizes >= 2) & (sizes < m))
    if len(cols) == 0:
        return False
    Bc = B[:, cols]
    lo = np.argmax(Bc, axis=0)
    hi = m - 1 - np.argmax(Bc[::-1], axis=0)
    # distinct intervals suffice for the overlap structure
    spans = np.unique(np.stack([lo, hi], axis=1), axis=0)
    lo, hi = spans[:, 0], spans[:, 1]
    a_lo, b_lo = lo[:, None], lo[None, :]
    a_hi, b_hi = hi[:, None], hi[None, :]
    overlap = (a_lo < b_lo) & (b_lo <= a_hi) & (a_hi < b_hi)
    overlap = overlap | overlap.T
    _, labels = connected_components(sp.csr_matrix(overlap), directed=False)
    for lab in np.unique(labels):
        members = labels == lab
        if lo[members].min() != 0 or hi[members].max() != m - 1:
            continue
        separated = np.zeros(m - 1, dtype=bool)
        separated[lo[members][lo[members] > 0] - 1] = True
        separated[hi[members][hi[members] < m - 1]] = True
        if separated.all():
            return True
    return False


def is_r_matrix(A, tol: float = 1e-12) -> bool:
    """Symmetric, and entries never increase moving away from the diagonal along a row."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {A.shape}")
    if not np.allclose(A, A.T, atol=tol, rtol=0):
        return False
    m = A.shape[0]
    for j in range(m):
        right = A[j, j + 1:]
        left = A[j, :j]
        # A[j,i] >= A[j,h] for j < i < h ; A[j,i] <= A[j,h] for i < h < j
        if np.any(np.diff(right) > tol) or np.any(np.diff(left) < -tol):
            return False
    return True
