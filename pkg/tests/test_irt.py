import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hitsndiffs.c1p import brute_force_c1p_order
from hitsndiffs.errors import ConfigInvalid, ThresholdOrder
from hitsndiffs.irt import (
    BinaryItemParams,
    GenConfig,
    PolytomousItemParams,
    generate_c1p,
    generate_equispaced,
    load_dataset,
    prob_binary,
    prob_polytomous,
    read_binary_params_csv,
    sample_dataset,
    save_dataset,
)

SIGMOID_MINUS_2 = 0.11920292202211755  # logistic(-2)
GRID = np.linspace(-3, 3, 101)


def test_prob_binary_examples():
    assert prob_binary("2pl", BinaryItemParams(a=1, b=0), 0.0) == 0.5
    assert prob_binary("3pl", BinaryItemParams(a=2, b=0.3, c=0.25), 0.3) == pytest.approx(0.625, abs=1e-15)
    assert prob_binary("glad", BinaryItemParams(a=7.5), 0.0) == 0.5


def test_prob_polytomous_examples():
    bock = PolytomousItemParams("bock", slopes=(1.5,) * 4, intercepts=(0.2,) * 4)
    np.testing.assert_allclose(prob_polytomous(bock, 0.7), [0.25] * 4, atol=1e-15)
    grm = PolytomousItemParams("grm", a=1.0, thresholds=(-1.0, 1.0))
    np.testing.assert_allclose(prob_polytomous(grm, -1.0),
                               [0.5, 0.5 - SIGMOID_MINUS_2, SIGMOID_MINUS_2], atol=1e-15)
    same = PolytomousItemParams("samejima", slopes=(0.0,) * 4, intercepts=(0.0,) * 4)
    np.testing.assert_allclose(prob_polytomous(same, 0.3), [1 / 3] * 3, atol=1e-15)


def test_threshold_order():
    with pytest.raises(ThresholdOrder):
        PolytomousItemParams("grm", a=1.0, thresholds=(0.5, 0.5))
    with pytest.raises(ThresholdOrder):
        PolytomousItemParams("grm", a=1.0, thresholds=(1.0, -1.0))


@st.composite
def polytomous_params(draw, model):
    k = draw(st.integers(2, 6))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    if model == "grm":
        b = np.sort(rng.uniform(-2, 2, k - 1))
        if np.any(np.diff(b) <= 0):
            b = np.linspace(-1, 1, k - 1)
        return PolytomousItemParams("grm", a=float(rng.uniform(0, 10)), thresholds=tuple(b))
    size = k + 1 if model == "samejima" else k
    alpha = np.sort(rng.uniform(0, 10, size))
    beta = rng.uniform(-10, 10, size)
    return PolytomousItemParams(model, slopes=tuple(alpha), intercepts=tuple(beta))


@pytest.mark.parametrize("model", ["grm", "bock", "samejima"])
def test_distributions_normalize_many_draws(model):
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(10_000):
        k = int(rng.integers(2, 7))
        if model == "grm":
            params = PolytomousItemParams("grm", a=rng.uniform(0, 10),
                                          thresholds=tuple(np.sort(rng.uniform(-1, 1, k - 1))))
        else:
            size = k + 1 if model == "samejima" else k
            params = PolytomousItemParams(model, slopes=tuple(np.sort(rng.uniform(0, 10, size))),
                                          intercepts=tuple(rng.uniform(-5, 5, size)))
        p = prob_polytomous(params, rng.uniform(-1, 2))
        assert np.all(p >= 0)
        worst = max(worst, abs(p.sum() - 1.0))
    assert worst <= 1e-12


@settings(max_examples=50, deadline=None)
@given(polytomous_params("grm"))
def test_grm_top_option_monotone(params):
    top = prob_polytomous(params, GRID)[:, -1]
    assert np.all(np.diff(top) >= -1e-15)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 10), st.floats(-2, 2), st.floats(0, 0.99))
def test_3pl_monotone_and_floor(a, b, c):
    p = prob_binary("3pl", BinaryItemParams(a, b, c), GRID)
    assert np.all(np.diff(p) >= -1e-15)
    assert np.all(p >= c - 1e-15)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 10), st.floats(-2, 2))
def test_specialization_chain(a, b):
    two = prob_binary("2pl", BinaryItemParams(1.0, b), GRID)
    np.testing.assert_allclose(two, prob_binary("1pl", BinaryItemParams(1.0, b), GRID), atol=1e-12, rtol=0)
    np.testing.assert_allclose(prob_binary("3pl", BinaryItemParams(a, b, 0.0), GRID),
                               prob_binary("2pl", BinaryItemParams(a, b), GRID), atol=1e-12, rtol=0)
    np.testing.assert_allclose(prob_binary("2pl", BinaryItemParams(a, 0.0), GRID),
                               prob_binary("glad", BinaryItemParams(a, b), GRID), atol=1e-12, rtol=0)
    bock = PolytomousItemParams("bock", slopes=(0.0, a), intercepts=(0.0, -a * b))
    np.testing.assert_allclose(prob_polytomous(bock, GRID)[:, 1],
                               prob_binary("2pl", BinaryItemParams(a, b), GRID), atol=1e-9, rtol=0)


def test_config_validation():
    with pytest.raises(ConfigInvalid):
        GenConfig(p_answer=0.0)
    with pytest.raises(ConfigInvalid):
        GenConfig(ability_range=(1.0, 1.0))
    with pytest.raises(ConfigInvalid):
        GenConfig(k=1)
    with pytest.raises(ConfigInvalid):
        GenConfig(model="rasch")
    with pytest.raises(ConfigInvalid):
        GenConfig(discrimination_range=(-1.0, 2.0))


@pytest.mark.parametrize("model", ["grm", "bock", "samejima", "1pl", "2pl", "glad", "3pl", "c1p"])
def test_sample_full_and_deterministic(model):
    cfg = GenConfig(model=model, m=30, n=20, seed=5)
    a, b = sample_dataset(cfg), sample_dataset(cfg)
    assert a.responses.nnz == 30 * 20
    assert a.responses.records() == b.responses.records()
    assert np.array_equal(a.abilities, b.abilities) and a.key == b.key
    assert a.responses.records() != sample_dataset(GenConfig(model=model, m=30, n=20, seed=6)).responses.records()


def test_sample_missing_answers_binomial():
    ds = sample_dataset(GenConfig(m=100, n=100, p_answer=0.5, seed=3))
    assert 4871 <= ds.responses.nnz <= 5129


def test_answer_key_conventions():
    ds = sample_dataset(GenConfig(model="bock", m=10, n=5, k=4, seed=1))
    for item, params in enumerate(ds.items):
        assert ds.key[item] == int(np.argmax(params.slopes)) == 3
    ds = sample_dataset(GenConfig(model="samejima", m=10, n=5, k=4, seed=1))
    assert all(p.slopes[0] == 0.0 and p.intercepts[0] == 0.0 for p in ds.items)
    assert all(ds.key[i] == int(np.argmax(p.slopes)) - 1 for i, p in enumerate(ds.items))
    assert set(sample_dataset(GenConfig(model="grm", m=5, n=3, seed=0)).key.values()) == {2}
    assert set(sample_dataset(GenConfig(model="2pl", m=5, n=3, seed=0)).key.values()) == {1}


def test_grm_comparable_range():
    ds = sample_dataset(GenConfig(model="grm", n=400, k=3, grm_comparable=True, seed=2))
    a = np.array([p.a for p in ds.items])
    assert a.max() <= 2 * 10 / 4 and a.max() > 4.5


def test_higher_ability_answers_better():
    ds = sample_dataset(GenConfig(model="samejima", m=200, n=100, seed=0))
    table = ds.responses.choice_table()
    correct = (table == 2).sum(axis=1)
    assert np.corrcoef(correct, ds.abilities)[0, 1] > 0.8


@pytest.mark.parametrize("seed", range(10))
def test_c1p_small_has_certificate(seed):
    ds = generate_c1p(GenConfig(model="c1p", m=7, n=6, k=3, seed=seed))
    assert brute_force_c1p_order(ds.responses).verified


def test_c1p_heaviside_cells():
    ds = generate_c1p(GenConfig(model="c1p", m=200, n=30, k=3, seed=4))
    table = ds.responses.choice_table()
    lowest = min(p.thresholds[0] for p in ds.items)
    for u in np.flatnonzero(ds.abilities <= lowest):
        assert np.all(table[u] == 0)
    cells = np.array([[np.searchsorted(p.thresholds, t) for p in ds.items] for t in ds.abilities])
    _, first = np.unique(cells, axis=0, return_index=True)
    for u in range(200):
        twin = first[np.flatnonzero((cells[first] == cells[u]).all(axis=1))[0]]
        assert np.array_equal(table[u], table[twin])


def test_c1p_ability_split():
    ds = generate_c1p(GenConfig(model="c1p", m=1000, n=5, seed=0))
    assert np.sum(ds.abilities < 0.5) == 100


@pytest.mark.parametrize("seed", range(10))
def test_c1p_matches_sharp_grm(seed):
    ds = generate_c1p(GenConfig(model="c1p", m=8, n=6, k=4, seed=seed))
    table = ds.responses.choice_table()
    for i, p in enumerate(ds.items):
        sharp = PolytomousItemParams("grm", a=1e6, thresholds=p.thresholds)
        np.testing.assert_array_equal(np.argmax(prob_polytomous(sharp, ds.abilities), axis=1), table[:, i])


def test_equispaced_generator():
    ds = generate_equispaced(10.0, m=50, n=40, k=3, seed=0)
    np.testing.assert_allclose(ds.abilities, np.linspace(0, 1, 50))
    assert ds.items[0].slopes == (0.0, 5.0, 10.0)
    assert ds.responses.nnz == 50 * 40
    assert generate_equispaced(10.0, m=50, n=40, seed=0).responses.records() == ds.responses.records()


def test_dataset_directory_roundtrip(tmp_path):
    ds = sample_dataset(GenConfig(model="grm", m=20, n=10, p_answer=0.8, seed=9))
    out = save_dataset(ds, tmp_path / "d")
    assert sorted(p.name for p in out.iterdir()) == ["abilities.csv", "config.json", "key.csv", "responses.csv"]
    back = load_dataset(out)
    assert back.responses.records() == ds.responses.records()
    np.testing.assert_array_equal(back.abilities, ds.abilities)
    assert back.key == ds.key and back.config == ds.config


def test_binary_params_file(tmp_path):
    path = tmp_path / "items.csv"
    path.write_text("a,b,c\n1.5,0.2,0.25\n0.8,-0.3,0.1\n")
    params = read_binary_params_csv(path)
    assert params[0] == BinaryItemParams(1.5, 0.2, 0.25)
    ds = sample_dataset(GenConfig(model="3pl", m=50, n=99, seed=0), binary_params=params)
    assert ds.responses.n == 2 and ds.items == params
