"""Dense matrix forms used as independent oracles at small scale.

Nothing in the ranking path calls into this module.
"""

import numpy as np

from .matrix import ResponseMatrix


def diff_matrix(m: int) -> np.ndarray:
    """S, the (m-1 x m) adjacent-difference matrix."""
    S = np.zeros((m - 1, m))
    idx = np.arange(m - 1)
    S[idx, idx] = -1.0
    S[idx, idx + 1] = 1.0
    return S


def cumsum_matrix(m: int) -> np.ndarray:
    """T, the (m x m-1) prefix-sum matrix with a zero first row."""
    T = np.zeros((m, m - 1))
    T[1:, :] = np.tril(np.ones((m - 1, m - 1)))
    return T


def row_normalized(C: np.ndarray) -> np.ndarray:
    return C / C.sum(axis=1, keepdims=True)


def col_normalized(C: np.ndarray) -> np.ndarray:
    return C / C.sum(axis=0, keepdims=True)


def update_matrix(R) -> np.ndarray:
    """U = C_row C_col^T as a dense array."""
    C = R.toarray() if isinstance(R, ResponseMatrix) else np.asarray(R, dtype=float)
    C = C[:, C.sum(axis=0) > 0]
    return row_normalized(C) @ col_normalized(C).T


def udiff_matrix(R) -> np.ndarray:
    U = update_matrix(R)
    m = U.shape[0]
    return diff_matrix(m) @ U @ cumsum_matrix(m)


def laplacian(R) -> np.ndarray:
    """L = D - C C^T with D the row sums of C C^T."""
    C = R.toarray() if isinstance(R, ResponseMatrix) else np.asarray(R, dtype=float)
    A = C @ C.T
    return np.diag(A.sum(axis=1)) - A


def abh_difference_matrix(R) -> np.ndarray:
    """M = S L T."""
    L = laplacian(R)
    m = L.shape[0]
    return diff_matrix(m) @ L @ cumsum_matrix(m)
