"""Sparse one-hot response matrix and the matrix-free kernels built on it.

Users are rows, (item, option) pairs are columns.  Columns are laid out
item-major, option-minor.  Every kernel here costs O(nnz) or O(m); the
dense counterparts used as test oracles live in :mod:`hitsndiffs.dense`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from .errors import BetaTooSmall, DimensionMismatch, DuplicateAnswer, EmptyInput, EmptyRow

__all__ = [
    "ResponseMatrix",
    "load_responses",
    "read_responses_csv",
    "write_responses_csv",
    "drop_empty_columns",
    "pad_equal_row_sums",
    "connected_components",
    "restrict_users",
    "permute_users",
    "diff_apply",
    "cumsum_apply",
    "u_matvec",
    "ut_matvec",
    "udiff_matvec",
    "abh_default_beta",
    "abh_shifted_matvec",
]


@dataclass(frozen=True, eq=False)
class ResponseMatrix:
    """Immutable one-hot response matrix.

    ``C`` is the (m x n_cols) binary CSR matrix.  ``col_item`` holds the
    compact item index of each column (``-1`` for padding columns) and
    ``col_option`` the option id within that item.  ``user_ids`` and
    ``item_ids`` map compact indices back to the ids seen at load time.
    """

    C: sp.csr_matrix
    user_ids: np.ndarray
    item_ids: np.ndarray
    col_item: np.ndarray
    col_option: np.ndarray
    row_degree: np.ndarray = field(init=False, repr=False)
    col_degree: np.ndarray = field(init=False, repr=False)
    _CT: sp.csr_matrix = field(init=False, repr=False)
    _row_norm: sp.csr_matrix = field(init=False, repr=False)
    _col_norm_T: sp.csr_matrix = field(init=False, repr=False)

    def __post_init__(self):
        C = sp.csr_matrix(self.C, dtype=np.float64)
        C.sort_indices()
        C.eliminate_zeros()
        CT = C.T.tocsr()
        CT.sort_indices()
        row_deg = np.asarray(C.sum(axis=1)).ravel()
        col_deg = np.asarray(C.sum(axis=0)).ravel()
        with np.errstate(divide="ignore"):
            inv_r = np.where(row_deg > 0, 1.0 / row_deg, 0.0)
            inv_c = np.where(col_deg > 0, 1.0 / col_deg, 0.0)
        row_norm = sp.diags(inv_r) @ C
        col_norm_T = sp.diags(inv_c) @ CT
        for name, value in (
            ("C", C),
            ("_CT", CT),
            ("row_degree", row_deg),
            ("col_degree", col_deg),
            ("_row_norm", row_norm.tocsr()),
            ("_col_norm_T", col_norm_T.tocsr()),
        ):
            object.__setattr__(self, name, value)
        for arr in (self.user_ids, self.item_ids, self.col_item, self.col_option, row_deg, col_deg):
            arr.setflags(write=False)

    @property
    def m(self) -> int:
        return self.C.shape[0]

    @property
    def n(self) -> int:
        return len(self.item_ids)

    @property
    def n_cols(self) -> int:
        return self.C.shape[1]

    @property
    def nnz(self) -> int:
        return self.C.nnz

    @property
    def is_padding(self) -> np.ndarray:
        return self.col_item < 0

    @property
    def k(self) -> np.ndarray:
        """Number of (non-padding) columns per item."""
        real = self.col_item[self.col_item >= 0]
        return np.bincount(real, minlength=self.n)

    def entries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Compact (user, item, option) arrays of real answers, padding excluded."""
        coo = self.C.tocoo()
        keep = self.col_item[coo.col] >= 0
        users = coo.row[keep]
        cols = coo.col[keep]
        order = np.lexsort((self.col_item[cols], users))
        users, cols = users[order], cols[order]
        return users, self.col_item[cols], self.col_option[cols]

    def records(self) -> list[tuple[int, int, int]]:
        """Answers as (user-id, item-id, option-id) using the original ids."""
        users, items, options = self.entries()
        return [
            (int(self.user_ids[u]), int(self.item_ids[i]), int(o))
            for u, i, o in zip(users, items, options)
        ]

    def choice_table(self) -> np.ndarray:
        """(m x n) array of chosen option ids, ``-1`` where unanswered."""
        table = np.full((self.m, self.n), -1, dtype=np.int64)
        users, items, options = self.entries()
        table[users, items] = options
        return table

    def toarray(self) -> np.ndarray:
        return self.C.toarray()

    def check_rows(self):
        empty = np.flatnonzero(self.row_degree == 0)
        if len(empty):
            raise EmptyRow(int(self.user_ids[empty[0]]))


def _from_parts(users, cols, m, user_ids, item_ids, col_item, col_option) -> ResponseMatrix:
    data = np.ones(len(users), dtype=np.float64)
    C = sp.csr_matrix((data, (users, cols)), shape=(m, len(col_item)))
    return ResponseMatrix(
        C=C,
        user_ids=np.asarray(user_ids, dtype=np.int64).copy(),
        item_ids=np.asarray(item_ids, dtype=np.int64).copy(),
        col_item=np.asarray(col_item, dtype=np.int64).copy(),
        col_option=np.asarray(col_option, dtype=np.int64).copy(),
    )


def load_responses(
    records: Iterable[Sequence[int]], n_options: int | Sequence[int] | None = None
) -> ResponseMatrix:
    """Build a :class:`ResponseMatrix` from (user, item, option) triples.

    Users and items are re-indexed to 0..m-1 / 0..n-1 in ascending id order.
    Option ids are kept; item ``i`` gets ``max(option)+1`` columns, or
    ``n_options`` columns if that is larger (an int or one count per item
    in ascending item-id order).
    """
    arr = np.asarray(list(records), dtype=np.int64)
    if arr.size == 0:
        raise EmptyInput("no responses given")
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError("records must be (user, item, option) triples")
    if (arr < 0).any():
        raise ValueError("ids must be non-negative integers")

    user_ids, users = np.unique(arr[:, 0], return_inverse=True)
    item_ids, items = np.unique(arr[:, 1], return_inverse=True)
    options = arr[:, 2]

    pair = users * len(item_ids) + items
    order = np.argsort(pair, kind="stable")
    dup = np.flatnonzero(np.diff(pair[order]) == 0)
    if len(dup):
        row = arr[order[dup[0] + 1]]
        raise DuplicateAnswer(int(row[0]), int(row[1]))

    n = len(item_ids)
    k = np.zeros(n, dtype=np.int64)
    np.maximum.at(k, items, options + 1)
    if n_options is not None:
        declared = np.broadcast_to(np.asarray(n_options, dtype=np.int64), (n,))
        k = np.maximum(k, declared)
    offsets = np.concatenate([[0], np.cumsum(k)])
    col_item = np.repeat(np.arange(n), k)
    col_option = np.arange(offsets[-1]) - offsets[col_item]
    cols = offsets[items] + options
    return _from_parts(users, cols, len(user_ids), user_ids, item_ids, col_item, col_option)


def read_responses_csv(path, n_options=None) -> ResponseMatrix:
    """Read a ``user,item,option`` CSV file."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"user", "item", "option"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        records = [(int(r["user"]), int(r["item"]), int(r["option"])) for r in reader]
    return load_responses(records, n_options=n_options)


def write_responses_csv(R: ResponseMatrix, path) -> None:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["user", "item", "option"])
        writer.writerows(R.records())


def drop_empty_columns(R: ResponseMatrix) -> ResponseMatrix:
    """Remove columns nobody chose; column metadata keeps the original ids."""
    keep = np.flatnonzero(R.col_degree > 0)
    if len(keep) == R.n_cols:
        return R
    return ResponseMatrix(
        C=R.C[:, keep],
        user_ids=R.user_ids.copy(),
        item_ids=R.item_ids.copy(),
        col_item=R.col_item[keep],
        col_option=R.col_option[keep],
    )


def pad_equal_row_sums(R: ResponseMatrix) -> ResponseMatrix:
    """Append single-entry padding columns until every row has the max degree.

    Padding columns carry ``col_item == -1``.  Each one touches a single user,
    so the pre-P property is unaffected.
    """
    deg = R.row_degree.astype(np.int64)
    deficit = deg.max() - deg
    total = int(deficit.sum())
    if total == 0:
        return R
    pad_rows = np.repeat(np.arange(R.m), deficit)
    pad = sp.csr_matrix(
        (np.ones(total), (pad_rows, np.arange(total))), shape=(R.m, total)
    )
    return ResponseMatrix(
        C=sp.hstack([R.C, pad], format="csr"),
        user_ids=R.user_ids.copy(),
        item_ids=R.item_ids.copy(),
        col_item=np.concatenate([R.col_item, np.full(total, -1)]),
        col_option=np.concatenate([R.col_option, np.full(total, -1)]),
    )


def connected_components(R: ResponseMatrix) -> list[np.ndarray]:
    """User sets of the user-option bipartite graph, largest first.

    Ties in size are ordered by smallest member.  Users without answers form
    singleton components.
    """
    m = R.m
    adj = sp.bmat([[None, R.C], [R.C.T, None]], format="csr")
    _, labels = _cc(adj, directed=False)
    user_labels = labels[:m]
    groups: dict[int, list[int]] = {}
    for u, lab in enumerate(user_labels):
        groups.setdefault(int(lab), []).append(u)
    comps = [np.array(g, dtype=np.int64) for g in groups.values()]
    comps.sort(key=lambda c: (-len(c), int(c[0])))
    return comps


def restrict_users(R: ResponseMatrix, users) -> ResponseMatrix:
    """Sub-matrix on the given compact user indices (in that order), empty columns dropped."""
    users = np.asarray(users, dtype=np.int64)
    sub = ResponseMatrix(
        C=R.C[users],
        user_ids=R.user_ids[users],
        item_ids=R.item_ids.copy(),
        col_item=R.col_item.copy(),
        col_option=R.col_option.copy(),
    )
    return drop_empty_columns(sub)


def permute_users(R: ResponseMatrix, order) -> ResponseMatrix:
    """Reorder rows: row ``i`` of the result is row ``order[i]`` of ``R``."""
    order = np.asarray(order, dtype=np.int64)
    if sorted(order.tolist()) != list(range(R.m)):
        raise DimensionMismatch("order must be a permutation of the users")
    return ResponseMatrix(
        C=R.C[order],
        user_ids=R.user_ids[order],
        item_ids=R.item_ids.copy(),
        col_item=R.col_item.copy(),
        col_option=R.col_option.copy(),
    )


# ---------------------------------------------------------------------------
# difference / cumulative-sum operators


def diff_apply(v) -> np.ndarray:
    """Adjacent differences ``v[j+1] - v[j]`` (length m-1)."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or len(v) < 2:
        raise DimensionMismatch(f"need a vector of length >= 2, got shape {v.shape}")
    return v[1:] - v[:-1]


def cumsum_apply(w) -> np.ndarray:
    """Prefix sums with a leading zero (length m); left inverse of :func:`diff_apply`."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1:
        raise DimensionMismatch(f"need a vector, got shape {w.shape}")
    out = np.empty(len(w) + 1)
    out[0] = 0.0
    np.cumsum(w, out=out[1:])
    return out


# ---------------------------------------------------------------------------
# matrix-free kernels


def _check_len(v, size, what):
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (size,):
        raise DimensionMismatch(f"{what}: expected length {size}, got shape {v.shape}")
    return v


def u_matvec(R: ResponseMatrix, s) -> np.ndarray:
    """``U s`` with ``U = C_row C_col^T``, evaluated right to left."""
    s = _check_len(s, R.m, "u_matvec")
    R.check_rows()
    return R._row_norm @ (R._col_norm_T @ s)


def ut_matvec(R: ResponseMatrix, x) -> np.ndarray:
    """``U^T x = C_col C_row^T x``."""
    x = _check_len(x, R.m, "ut_matvec")
    R.check_rows()
    return R._col_norm_T.T @ (R._row_norm.T @ x)


def udiff_matvec(R: ResponseMatrix, d) -> np.ndarray:
    """``S U T d``: cumulative sum, one avgHITS step, then differences."""
    if R.m < 2:
        raise DimensionMismatch("difference operator needs at least two users")
    d = _check_len(d, R.m - 1, "udiff_matvec")
    return diff_apply(u_matvec(R, cumsum_apply(d)))


def _abh_degrees(R: ResponseMatrix) -> np.ndarray:
    # row sums of C C^T
    return R.C @ R.col_degree


def abh_default_beta(R: ResponseMatrix) -> float:
    """Largest entry of the degree matrix D of ``C C^T``."""
    return float(_abh_degrees(R).max())


def abh_shifted_matvec(R: ResponseMatrix, d, beta: float, degrees: np.ndarray | None = None) -> np.ndarray:
    """``(beta I - S L T) d`` with ``L = D - C C^T``, never materialising L."""
    if R.m < 2:
        raise DimensionMismatch("difference operator needs at least two users")
    d = _check_len(d, R.m - 1, "abh_shifted_matvec")
    D = _abh_degrees(R) if degrees is None else degrees
    if beta < D.max():
        raise BetaTooSmall(f"beta={beta} is below the largest degree {D.max()}")
    v = cumsum_apply(d)
    Lv = D * v - R.C @ (R._CT @ v)
    return beta * d - diff_apply(Lv)
