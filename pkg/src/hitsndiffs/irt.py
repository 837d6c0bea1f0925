"""Item response functions and seeded synthetic dataset generators."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit, softmax

from .errors import ConfigInvalid, ThresholdOrder
from .matrix import ResponseMatrix, load_responses, read_responses_csv, write_responses_csv

BINARY_MODELS = ("1pl", "2pl", "glad", "3pl")
POLYTOMOUS_MODELS = ("grm", "bock", "samejima")
MODELS = POLYTOMOUS_MODELS + BINARY_MODELS + ("c1p",)


@dataclass(frozen=True)
class BinaryItemParams:
    a: float = 1.0
    b: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("discrimination must be non-negative")
        if not 0 <= self.c < 1:
            raise ValueError("guessing must lie in [0, 1)")


def prob_binary(model: str, params: BinaryItemParams, theta):
    """Probability of a correct answer under 1PL, 2PL, GLAD or 3PL."""
    theta = np.asarray(theta, dtype=np.float64)
    model = model.lower()
    if model == "1pl":
        return expit(theta - params.b)
    if model == "2pl":
        return expit(params.a * (theta - params.b))
    if model == "glad":
        return expit(params.a * theta)
    if model == "3pl":
        return params.c + (1.0 - params.c) * expit(params.a * (theta - params.b))
    raise ValueError(f"unknown binary model {model!r}")


@dataclass(frozen=True)
class PolytomousItemParams:
    """Per-item parameters of a polytomous model.

    GRM uses ``a`` and the ``k-1`` increasing ``thresholds``.  Bock uses one
    ``slopes``/``intercepts`` entry per option.  Samejima prepends the
    don't-know option at index 0, so its arrays have ``k+1`` entries.
    """

    model: str
    a: float | None = None
    thresholds: tuple[float, ...] = ()
    slopes: tuple[float, ...] = ()
    intercepts: tuple[float, ...] = ()

    def __post_init__(self):
        model = self.model.lower()
        object.__setattr__(self, "model", model)
        if model == "grm":
            if self.a is None or self.a < 0:
                raise ValueError("GRM needs a non-negative discrimination a")
            if np.any(np.diff(self.thresholds) <= 0):
                raise ThresholdOrder(f"thresholds must increase strictly: {self.thresholds}")
        elif model in ("bock", "samejima"):
            if len(self.slopes) != len(self.intercepts) or len(self.slopes) < 2:
                raise ValueError("slopes and intercepts must have equal length >= 2")
        else:
            raise ValueError(f"unknown polytomous model {self.model!r}")

    @property
    def k(self) -> int:
        if self.model == "grm":
            return len(self.thresholds) + 1
        if self.model == "bock":
            return len(self.slopes)
        return len(self.slopes) - 1


def prob_polytomous(params: PolytomousItemParams, theta) -> np.ndarray:
    """Option probabilities, shape ``theta.shape + (k,)``."""
    theta = np.asarray(theta, dtype=np.float64)
    if params.model == "grm":
        if np.any(np.diff(params.thresholds) <= 0):
            raise ThresholdOrder(f"thresholds must increase strictly: {params.thresholds}")
        b = np.asarray(params.thresholds, dtype=np.float64)
        t = theta[..., None]
        with np.errstate(invalid="ignore"):
            inner = expit(params.a * (t - b))
        ones = np.ones(theta.shape + (1,))
        cum = np.concatenate([ones, inner, np.zeros_like(ones)], axis=-1)
        return cum[..., :-1] - cum[..., 1:]
    alpha = np.asarray(params.slopes, dtype=np.float64)
    beta = np.asarray(params.intercepts, dtype=np.float64)
    z = theta[..., None] * alpha + beta
    p = softmax(z, axis=-1)
    if params.model == "bock":
        return p
    k = params.k
    return p[..., 1:] + p[..., :1] / k


# ---------------------------------------------------------------------------
# generation


@dataclass(frozen=True)
class GenConfig:
    model: str = "samejima"
    m: int = 100
    n: int = 100
    k: int = 3
    ability_range: tuple[float, float] = (0.0, 1.0)
    difficulty_range: tuple[float, float] = (-0.5, 0.5)
    discrimination_range: tuple[float, float] = (0.0, 10.0)
    guessing_range: tuple[float, float] = (0.0, 0.5)
    p_answer: float = 1.0
    seed: int = 0
    # GRM discrimination drawn from [0, 2*a_max/(k+1)] to match Bock on average
    grm_comparable: bool = False
    # share of C1P users placed in the lower half of the ability range
    c1p_low_fraction: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "model", self.model.lower())
        for name in ("ability_range", "difficulty_range", "discrimination_range", "guessing_range"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        self.validate()

    def validate(self):
        if self.model not in MODELS:
            raise ConfigInvalid(f"unknown model {self.model!r}")
        if self.m < 1 or self.n < 1:
            raise ConfigInvalid("need at least one user and one item")
        if self.k < 2:
            raise ConfigInvalid("need at least two options per item")
        for name in ("ability_range", "difficulty_range", "discrimination_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ConfigInvalid(f"{name} must be a proper interval, got {(lo, hi)}")
        if self.discrimination_range[0] < 0:
            raise ConfigInvalid("discrimination must be non-negative")
        g_lo, g_hi = self.guessing_range
        if not 0 <= g_lo <= g_hi < 1:
            raise ConfigInvalid("guessing_range must lie inside [0, 1)")
        if not 0 < self.p_answer <= 1:
            raise ConfigInvalid("p_answer must lie in (0, 1]")
        if not 0 <= self.c1p_low_fraction <= 1:
            raise ConfigInvalid("c1p_low_fraction must lie in [0, 1]")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "GenConfig":
        return cls(**data)


@dataclass(frozen=True, eq=False)
class Dataset:
    responses: ResponseMatrix
    abilities: np.ndarray  # indexed by generated user id
    key: dict[int, int]
    config: GenConfig
    items: list = field(default_factory=list, repr=False)

    def abilities_for(self, user_ids) -> np.ndarray:
        return self.abilities[np.asarray(user_ids, dtype=np.int64)]


def _sample_options(rng, probs: np.ndarray) -> np.ndarray:
    # probs: (m, k) -> sampled option per row, inverse-CDF on one uniform each
    u = rng.random(probs.shape[0])
    cdf = np.cumsum(probs, axis=1)
    return np.minimum((cdf < u[:, None]).sum(axis=1), probs.shape[1] - 1)


def _polytomous_items(config: GenConfig, rng) -> list[PolytomousItemParams]:
    k = config.k
    d_lo, d_hi = config.difficulty_range
    a_lo, a_hi = config.discrimination_range
    items = []
    for _ in range(config.n):
        if config.model == "grm":
            if config.grm_comparable:
                a = rng.uniform(0.0, 2.0 * a_hi / (k + 1))
            else:
                a = rng.uniform(a_lo, a_hi)
            b = np.sort(rng.uniform(d_lo, d_hi, size=k - 1))
            while np.any(np.diff(b) <= 0):
                b = np.sort(rng.uniform(d_lo, d_hi, size=k - 1))
            items.append(PolytomousItemParams("grm", a=float(a), thresholds=tuple(b)))
        else:
            alpha = np.sort(rng.uniform(a_lo, a_hi, size=k))
            b = rng.uniform(d_lo, d_hi)
            beta = -alpha * b
            if config.model == "samejima":
                alpha = np.concatenate([[0.0], alpha])
                beta = np.concatenate([[0.0], beta])
            items.append(PolytomousItemParams(config.model, slopes=tuple(alpha), intercepts=tuple(beta)))
    return items


def _binary_items(config: GenConfig, rng) -> list[BinaryItemParams]:
    d_lo, d_hi = config.difficulty_range
    a_lo, a_hi = config.discrimination_range
    g_lo, g_hi = config.guessing_range
    items = []
    for _ in range(config.n):
        a = rng.uniform(a_lo, a_hi)
        b = rng.uniform(d_lo, d_hi)
        c = rng.uniform(g_lo, g_hi) if g_hi > g_lo else g_lo
        if config.model == "1pl":
            a = 1.0
        if config.model == "glad":
            b = 0.0
        if config.model != "3pl":
            c = 0.0
        items.append(BinaryItemParams(float(a), float(b), float(c)))
    return items


def _assemble(config: GenConfig, rng, theta, choices: np.ndarray, key, items) -> Dataset:
    m, n = choices.shape
    if config.p_answer < 1.0:
        answered = rng.random((m, n)) < config.p_answer
    else:
        answered = np.ones((m, n), dtype=bool)
    users, itms = np.nonzero(answered)
    if len(users) == 0:
        raise ConfigInvalid("no answers were generated; raise p_answer")
    records = np.stack([users, itms, choices[users, itms]], axis=1)
    k = 2 if config.model in BINARY_MODELS else config.k
    R = load_responses(records, n_options=k)
    return Dataset(R, np.asarray(theta, dtype=np.float64), key, config, items)


def sample_dataset(
    config: GenConfig, binary_params: Sequence[BinaryItemParams] | None = None
) -> Dataset:
    """Draw abilities, item parameters and responses from an IRT model.

    Binary models encode an answer as option 1 (correct) or 0.  Supplying
    ``binary_params`` fixes the items (its length overrides ``config.n``).
    """
    if config.model == "c1p":
        return generate_c1p(config)
    rng = np.random.default_rng(config.seed)
    theta = rng.uniform(*config.ability_range, size=config.m)
    if config.model in BINARY_MODELS:
        items = list(binary_params) if binary_params is not None else _binary_items(config, rng)
        choices = np.empty((config.m, len(items)), dtype=np.int64)
        for i, params in enumerate(items):
            p = prob_binary(config.model, params, theta)
            choices[:, i] = (rng.random(config.m) < p).astype(np.int64)
        key = {i: 1 for i in range(len(items))}
    else:
        items = _polytomous_items(config, rng)
        choices = np.empty((config.m, config.n), dtype=np.int64)
        for i, params in enumerate(items):
            choices[:, i] = _sample_options(rng, prob_polytomous(params, theta))
        # GRM: last option passes most steps; Bock/Samejima: largest slope (sorted last)
        key = {i: config.k - 1 for i in range(config.n)}
    return _assemble(config, rng, theta, choices, key, items)


def generate_c1p(config: GenConfig) -> Dataset:
    """Consistent responses: the infinite-discrimination limit of GRM.

    A share ``c1p_low_fraction`` of users gets abilities in the lower half of
    the ability range, the rest in the upper half, so the two ends of the
    ordering look different.  Thresholds are drawn from the ability range.
    Every user answers every item.
    """
    if config.k < 2:
        raise ConfigInvalid("need at least two options")
    rng = np.random.default_rng(config.seed)
    lo, hi = config.ability_range
    mid = (lo + hi) / 2
    n_low = int(round(config.c1p_low_fraction * config.m))
    theta = np.concatenate([
        rng.uniform(lo, mid, size=n_low),
        rng.uniform(mid, hi, size=config.m - n_low),
    ])
    theta = theta[rng.permutation(config.m)]
    items = []
    choices = np.empty((config.m, config.n), dtype=np.int64)
    for i in range(config.n):
        b = np.sort(rng.uniform(lo, hi, size=config.k - 1))
        while np.any(np.diff(b) <= 0):
            b = np.sort(rng.uniform(lo, hi, size=config.k - 1))
        items.append(PolytomousItemParams("grm", a=float("inf"), thresholds=tuple(b)))
        # option h such that b_h < theta <= b_{h+1}
        choices[:, i] = np.searchsorted(b, theta, side="left")
    key = {i: config.k - 1 for i in range(config.n)}
    full = GenConfig(**{**asdict(config), "p_answer": 1.0})
    return _assemble(full, rng, theta, choices, key, items)


def generate_equispaced(
    discrimination: float, m: int = 100, n: int = 100, k: int = 3, seed: int = 0
) -> Dataset:
    """Bock data with evenly spaced abilities in [0, 1] and difficulties in [-0.5, 0.5].

    All items share ``discrimination``; option slopes are evenly spaced on
    ``[0, discrimination]`` and every option of an item has the same
    difficulty.  Only the sampled responses depend on ``seed``.
    """
    rng = np.random.default_rng(seed)
    theta = np.linspace(0.0, 1.0, m)
    diffs = np.linspace(-0.5, 0.5, n)
    alpha = np.linspace(0.0, discrimination, k)
    items = []
    choices = np.empty((m, n), dtype=np.int64)
    for i, b in enumerate(diffs):
        params = PolytomousItemParams("bock", slopes=tuple(alpha), intercepts=tuple(-alpha * b))
        items.append(params)
        choices[:, i] = _sample_options(rng, prob_polytomous(params, theta))
    config = GenConfig(
        model="bock", m=m, n=n, k=k, seed=seed,
        discrimination_range=(0.0, float(discrimination)) if discrimination > 0 else (0.0, 1.0),
    )
    key = {i: k - 1 for i in range(n)}
    return _assemble(config, rng, theta, choices, key, items)


# ---------------------------------------------------------------------------
# dataset directory


def save_dataset(ds: Dataset, directory) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    write_responses_csv(ds.responses, out / "responses.csv")
    with open(out / "abilities.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user", "ability"])
        for u, a in enumerate(ds.abilities):
            w.writerow([u, repr(float(a))])
    write_key_csv(ds.key, out / "key.csv")
    with open(out / "config.json", "w", encoding="utf-8") as fh:
        json.dump(ds.config.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out


def write_key_csv(key: dict[int, int], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["item", "correct_option"])
        for item in sorted(key):
            w.writerow([item, key[item]])


def read_key_csv(path) -> dict[int, int]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {int(r["item"]): int(r["correct_option"]) for r in csv.DictReader(fh)}


def read_abilities_csv(path) -> dict[int, float]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {int(r["user"]): float(r["ability"]) for r in csv.DictReader(fh)}


def load_dataset(directory) -> Dataset:
    d = Path(directory)
    with open(d / "config.json", encoding="utf-8") as fh:
        config = GenConfig.from_json(json.load(fh))
    abilities = read_abilities_csv(d / "abilities.csv")
    theta = np.array([abilities[u] for u in sorted(abilities)])
    return Dataset(read_responses_csv(d / "responses.csv"), theta, read_key_csv(d / "key.csv"), config)


def read_binary_params_csv(path) -> list[BinaryItemParams]:
    """Item table with columns ``a,b,c`` (one row per item) for the binary generators."""
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            BinaryItemParams(float(r["a"]), float(r["b"]), float(r.get("c") or 0.0))
            for r in csv.DictReader(fh)
        ]
