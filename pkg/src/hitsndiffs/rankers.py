"""User-ranking algorithms.

Every ranker takes a :class:`~hitsndiffs.matrix.ResponseMatrix` and returns a
:class:`ScoreVector` whose higher scores mean (claimed) higher ability.  The
spectral rankers (HnD, ABH) only fix a sign convention; use
:func:`orient_by_decile_entropy` to choose the direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from . import dense
from .errors import Disconnected, MissingKey, TooLarge, ZeroIterate
from .matrix import (
    ResponseMatrix,
    abh_shifted_matvec,
    connected_components,
    cumsum_apply,
    drop_empty_columns,
    restrict_users,
    udiff_matvec,
    u_matvec,
    ut_matvec,
)
from .spectral import (
    DENSE_LIMIT,
    PowerConfig,
    SpectralResult,
    dense_eig_oracle,
    power_iteration,
    second_eigvec_hotelling,
    sign_normalize,
)

INVESTMENT_EXPONENT = 1.2
POOLED_INVESTMENT_EXPONENT = 1.4
INVESTMENT_ITERATIONS = 10
TRUTHFINDER_PRIOR = 0.9


@dataclass(frozen=True, eq=False)
class ScoreVector:
    """Per-user scores and the ranking they induce.

    ``ranking[0]`` is the compact index of the best user.  Ties are broken by
    ascending user index.
    """

    scores: np.ndarray
    user_ids: np.ndarray
    ranking: np.ndarray = field(init=False)
    method: str = ""
    iterations: int = 1
    spectral: SpectralResult | None = None
    aux: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "user_ids", np.asarray(self.user_ids, dtype=np.int64))
        object.__setattr__(self, "ranking", _rank_order(scores))

    @property
    def m(self) -> int:
        return len(self.scores)

    def positions(self) -> np.ndarray:
        """1-based rank of each user (1 = best)."""
        pos = np.empty(self.m, dtype=np.int64)
        pos[self.ranking] = np.arange(1, self.m + 1)
        return pos

    def reversed(self) -> "ScoreVector":
        return replace(self, scores=0.0 - self.scores)

    def by_user_id(self) -> dict[int, float]:
        return {int(u): float(s) for u, s in zip(self.user_ids, self.scores)}


def _rank_order(scores: np.ndarray) -> np.ndarray:
    idx = np.arange(len(scores))
    return np.lexsort((idx, -scores))


AnswerKey = Mapping[int, int]


# ---------------------------------------------------------------------------
# input checks


def largest_component(R: ResponseMatrix) -> ResponseMatrix:
    """Restrict ``R`` to the users of its largest connected component."""
    comps = connected_components(R)
    if len(comps) == 1:
        return R
    return restrict_users(R, np.sort(comps[0]))


def _prepare(R: ResponseMatrix, need_connected: bool = True) -> ResponseMatrix:
    R = drop_empty_columns(R)
    R.check_rows()
    if need_connected and R.m > 1:
        comps = connected_components(R)
        if len(comps) > 1:
            raise Disconnected([R.user_ids[c] for c in comps])
    return R


def _all_rows_equal(R: ResponseMatrix) -> bool:
    first = R.C[0]
    return all((R.C[j] != first).nnz == 0 for j in range(1, R.m))


def _tied(R: ResponseMatrix, method: str) -> ScoreVector:
    # every user gave the same answers: the difference operator is exactly zero
    return ScoreVector(np.zeros(R.m), R.user_ids, method=method,
                       spectral=SpectralResult(0.0, np.zeros(max(R.m - 1, 1)), 0, True))


# ---------------------------------------------------------------------------
# spectral rankers


def rank_hnd_power(R: ResponseMatrix, config: PowerConfig = PowerConfig()) -> ScoreVector:
    """HITSnDIFFs: power iteration on the difference-space update ``S U T``.

    The converged unit difference vector is turned back into scores by a
    prefix sum (first user at 0).
    """
    R = _prepare(R)
    if R.m == 1:
        return ScoreVector(np.zeros(1), R.user_ids, method="hnd-power")
    if _all_rows_equal(R):
        return _tied(R, "hnd-power")
    res = power_iteration(lambda d: udiff_matvec(R, d), R.m - 1, config)
    return ScoreVector(
        cumsum_apply(res.eigenvector), R.user_ids,
        method="hnd-power", iterations=res.iterations, spectral=res,
    )


def rank_hnd_deflation(R: ResponseMatrix, config: PowerConfig = PowerConfig()) -> ScoreVector:
    """Second eigenvector of ``U`` via Hotelling deflation.

    ``U`` is row-stochastic, so its right dominant pair is ``(1, e/sqrt(m))``;
    the left dominant vector comes from power iteration on ``U^T``.
    """
    R = _prepare(R)
    if R.m == 1:
        return ScoreVector(np.zeros(1), R.user_ids, method="hnd-deflation")
    if _all_rows_equal(R):
        return _tied(R, "hnd-deflation")
    ones = np.full(R.m, 1.0 / math.sqrt(R.m))
    res = second_eigvec_hotelling(
        lambda x: u_matvec(R, x),
        lambda x: ut_matvec(R, x),
        R.m,
        config,
        known_right_dominant=ones,
        dominant_eigenvalue=1.0,
    )
    return ScoreVector(
        res.eigenvector, R.user_ids,
        method="hnd-deflation", iterations=res.iterations, spectral=res,
    )


def rank_abh_power(
    R: ResponseMatrix, config: PowerConfig = PowerConfig(), beta: float | None = None
) -> ScoreVector:
    """ABH through power iteration on the shifted operator ``beta I - S L T``.

    ``beta`` defaults to the largest degree of ``C C^T``.
    """
    R = _prepare(R)
    if R.m == 1:
        return ScoreVector(np.zeros(1), R.user_ids, method="abh-power")
    if _all_rows_equal(R):
        return _tied(R, "abh-power")
    degrees = R.C @ R.col_degree
    if beta is None:
        beta = float(degrees.max())
    # validates beta once before iterating
    abh_shifted_matvec(R, np.zeros(R.m - 1), beta, degrees)
    res = power_iteration(lambda d: abh_shifted_matvec(R, d, beta, degrees), R.m - 1, config)
    return ScoreVector(
        cumsum_apply(res.eigenvector), R.user_ids,
        method="abh-power", iterations=res.iterations, spectral=res,
        aux={"beta": beta},
    )


def rank_abh_fiedler_dense(R: ResponseMatrix, config: PowerConfig | None = None) -> ScoreVector:
    """ABH by a dense eigendecomposition of the Laplacian (small m only)."""
    R = _prepare(R, need_connected=False)
    if R.m > DENSE_LIMIT:
        raise TooLarge(f"dense ABH is limited to {DENSE_LIMIT} users, got {R.m}")
    if R.m == 1:
        return ScoreVector(np.zeros(1), R.user_ids, method="abh-dense")
    if _all_rows_equal(R):
        return _tied(R, "abh-dense")
    vals, vecs = dense_eig_oracle(dense.laplacian(R))
    # ascending: vals[-1] is 0, vals[-2] the Fiedler value
    if vals[-2] <= 1e-9 * max(1.0, abs(vals[0])):
        raise Disconnected([R.user_ids[c] for c in connected_components(R)])
    fiedler = sign_normalize(vecs[:, -2])
    res = SpectralResult(float(vals[-2]), fiedler, 1, True)
    return ScoreVector(fiedler, R.user_ids, method="abh-dense", spectral=res)


# ---------------------------------------------------------------------------
# HITS family baselines


def rank_hits(R: ResponseMatrix, config: PowerConfig = PowerConfig()) -> ScoreVector:
    """Classic HITS: dominant eigenvector of ``C C^T`` starting from all ones."""
    R = _prepare(R)
    C, CT = R.C, R._CT
    res = power_iteration(lambda s: C @ (CT @ s), R.m, config, v0=np.ones(R.m))
    return ScoreVector(res.eigenvector, R.user_ids, method="hits",
                       iterations=res.iterations, spectral=res)


def truthfinder_option_weights(R: ResponseMatrix, s) -> np.ndarray:
    """One option update ``w = 1 - exp(C^T log(1 - s))``."""
    s = np.asarray(s, dtype=np.float64)
    return -np.expm1(R._CT @ np.log1p(-s))


def _row_logmeanexp(R: ResponseMatrix, col_values: np.ndarray) -> np.ndarray:
    C = R.C
    vals = col_values[C.indices]
    starts = C.indptr[:-1]
    row_max = np.maximum.reduceat(vals, starts)
    counts = np.diff(C.indptr)
    shifted = np.exp(vals - np.repeat(row_max, counts))
    return row_max + np.log(np.add.reduceat(shifted, starts) / counts)


def rank_truthfinder(
    R: ResponseMatrix, config: PowerConfig = PowerConfig(), prior: float = TRUTHFINDER_PRIOR
) -> ScoreVector:
    """TruthFinder with averaged user scores.

    Iterates ``s <- C_row w`` and ``w <- 1 - exp(C^T log(1 - s))``.  The state
    is carried as ``tau = -log(1 - s)`` so that scores close to 1 remain
    distinguishable; the returned scores are ``tau`` (monotone in ``s``) and
    ``aux["probability"]`` holds ``s`` itself.  Stops when the L-inf change of
    ``s`` is below ``config.tol``.
    """
    R = _prepare(R, need_connected=False)
    tau = np.full(R.m, -math.log1p(-prior))
    s = -np.expm1(-tau)
    it = 0
    for it in range(1, config.max_iter + 1):
        sigma = R._CT @ tau  # -log(1 - w) per option
        tau = -_row_logmeanexp(R, -sigma)
        s_new = -np.expm1(-tau)
        change = np.max(np.abs(s_new - s))
        s = s_new
        if change < config.tol:
            break
    return ScoreVector(tau, R.user_ids, method="truthfinder", iterations=it,
                       aux={"probability": s})


def _option_groups(R: ResponseMatrix) -> np.ndarray:
    # padding columns form singleton groups after the real items
    groups = R.col_item.copy()
    pad = np.flatnonzero(groups < 0)
    groups[pad] = R.n + np.arange(len(pad))
    return groups


def _investment(R: ResponseMatrix, exponent: float, pooled: bool, iterations: int) -> np.ndarray:
    C = R.C
    deg = R.row_degree
    groups = _option_groups(R)
    s = np.ones(R.m)
    for _ in range(iterations):
        invest = s / deg
        credit = R._CT @ invest
        grown = credit ** exponent
        if pooled:
            group_total = np.bincount(groups, weights=grown)
            belief = credit * grown / group_total[groups]
        else:
            belief = grown
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(credit > 0, belief / credit, 0.0)
        s = invest * (C @ ratio)
        # returns are homogeneous in s, so rescaling leaves the ranking unchanged
        s = s / s.max()
    return s


def rank_investment(R: ResponseMatrix, config: PowerConfig | None = None,
                    exponent: float = INVESTMENT_EXPONENT,
                    iterations: int = INVESTMENT_ITERATIONS) -> ScoreVector:
    """Investment: users split their score over chosen options and collect
    ``G(credit) = credit**exponent`` back in proportion to their stake."""
    R = _prepare(R)
    s = _investment(R, exponent, pooled=False, iterations=iterations)
    return ScoreVector(s, R.user_ids, method="investment", iterations=iterations)


def rank_pooled_investment(R: ResponseMatrix, config: PowerConfig | None = None,
                           exponent: float = POOLED_INVESTMENT_EXPONENT,
                           iterations: int = INVESTMENT_ITERATIONS) -> ScoreVector:
    """PooledInvestment: option belief is ``H * G(H) / sum G(H')`` over the options of the same item."""
    R = _prepare(R)
    s = _investment(R, exponent, pooled=True, iterations=iterations)
    return ScoreVector(s, R.user_ids, method="pooledinv", iterations=iterations)


def rank_true_answer(R: ResponseMatrix, key: AnswerKey) -> ScoreVector:
    """Count of correctly answered items, given the correct option per item id."""
    correct = np.empty(R.n, dtype=np.int64)
    for i, item in enumerate(R.item_ids):
        if int(item) not in key:
            raise MissingKey(int(item))
        correct[i] = key[int(item)]
    table = R.choice_table()
    scores = (table == correct[None, :]).sum(axis=1).astype(np.float64)
    return ScoreVector(scores, R.user_ids, method="true-answer")


# ---------------------------------------------------------------------------
# orientation


def _mean_item_entropy(table: np.ndarray) -> float:
    entropies = []
    for col in table.T:
        chosen = col[col >= 0]
        if len(chosen) == 0:
            continue
        _, counts = np.unique(chosen, return_counts=True)
        p = counts / counts.sum()
        entropies.append(float(-(p * np.log(p)).sum()))
    return float(np.mean(entropies)) if entropies else 0.0


def decile_entropies(sv: ScoreVector, R: ResponseMatrix) -> tuple[float, float]:
    """Mean per-item answer entropy of the top and bottom ``ceil(m/10)`` users."""
    table = _align_table(sv, R)
    size = max(1, math.ceil(sv.m / 10))
    top = table[sv.ranking[:size]]
    bottom = table[sv.ranking[-size:]]
    return _mean_item_entropy(top), _mean_item_entropy(bottom)


def _align_table(sv: ScoreVector, R: ResponseMatrix) -> np.ndarray:
    table = R.choice_table()
    if np.array_equal(sv.user_ids, R.user_ids):
        return table
    where = {int(u): i for i, u in enumerate(R.user_ids)}
    return table[[where[int(u)] for u in sv.user_ids]]


def orient_by_decile_entropy(sv: ScoreVector, R: ResponseMatrix) -> ScoreVector:
    """Flip the scores if the bottom decile answers more uniformly than the top one.

    Lower entropy marks the able end; exact ties keep the current direction.
    """
    if sv.m < 2:
        return sv
    top, bottom = decile_entropies(sv, R)
    if bottom < top:
        return sv.reversed()
    return sv


# ---------------------------------------------------------------------------
# registry

SPECTRAL_METHODS = ("hnd-power", "hnd-deflation", "abh-power", "abh-dense")

_RANKERS: dict[str, Callable] = {
    "hnd-power": rank_hnd_power,
    "hnd-deflation": rank_hnd_deflation,
    "abh-power": rank_abh_power,
    "abh-dense": rank_abh_fiedler_dense,
    "hits": rank_hits,
    "truthfinder": rank_truthfinder,
    "investment": rank_investment,
    "pooledinv": rank_pooled_investment,
}

METHODS = tuple(_RANKERS) + ("true-answer",)


def run_method(
    method: str,
    R: ResponseMatrix,
    config: PowerConfig = PowerConfig(),
    key: AnswerKey | None = None,
    orient: bool | None = None,
) -> ScoreVector:
    """Dispatch by method name; spectral methods are entropy-oriented unless ``orient=False``."""
    if method == "true-answer":
        if key is None:
            raise MissingKey("<all>")
        sv = rank_true_answer(R, key)
    elif method in _RANKERS:
        sv = _RANKERS[method](R, config)
    else:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if orient is None:
        orient = method in SPECTRAL_METHODS
    if orient:
        sv = orient_by_decile_entropy(sv, R)
    return sv
