import numpy as np
import pytest
from hypothesis import assume, strategies as st

from hitsndiffs.matrix import connected_components, load_responses

EX1_RECORDS = [(0, 0, 0), (0, 1, 0), (1, 0, 0), (1, 1, 1), (2, 0, 1), (2, 1, 1)]


@pytest.fixture
def ex1():
    return load_responses(EX1_RECORDS)


def records_from_table(table):
    return [(u, i, int(o)) for (u, i), o in np.ndenumerate(np.asarray(table)) if o >= 0]


@st.composite
def choice_tables(draw, min_users=2, max_users=8, max_items=5, max_options=3, skips=True):
    """(m x n) option tables; -1 marks a skipped item, every user answers something."""
    m = draw(st.integers(min_users, max_users))
    n = draw(st.integers(1, max_items))
    k = draw(st.integers(2, max_options))
    lo = -1 if skips else 0
    rows = draw(st.lists(
        st.lists(st.integers(lo, k - 1), min_size=n, max_size=n).filter(lambda r: max(r) >= 0),
        min_size=m, max_size=m,
    ))
    return np.array(rows, dtype=np.int64)


@st.composite
def connected_matrices(draw, **kw):
    table = draw(choice_tables(**kw))
    R = load_responses(records_from_table(table))
    # keep only connected draws
    assume(R.m == table.shape[0] and len(connected_components(R)) == 1)
    return R


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
