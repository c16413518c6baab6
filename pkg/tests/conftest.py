import random

import pytest
from hypothesis import strategies as st

from optassign import Instance, School


def tied3_instance():
    # a: A B C / b: (A B) C / c: (B C) A, every school one seat
    return Instance(
        [School("A", 1), School("B", 1), School("C", 1)],
        {
            "a": [["A"], ["B"], ["C"]],
            "b": [["A", "B"], ["C"]],
            "c": [["B", "C"], ["A"]],
        },
    )


def strict3_instance():
    # strict version: a: A B C / b: A B C / c: B C A
    return Instance(
        [School("A", 1), School("B", 1), School("C", 1)],
        {
            "a": [["A"], ["B"], ["C"]],
            "b": [["A"], ["B"], ["C"]],
            "c": [["B"], ["C"], ["A"]],
        },
    )


@pytest.fixture
def tied3():
    return tied3_instance()


@pytest.fixture
def strict3():
    return strict3_instance()


def random_groups(rng: random.Random, schools, tie_prob=0.4):
    order = list(schools)
    rng.shuffle(order)
    groups = [[order[0]]]
    for h in order[1:]:
        if rng.random() < tie_prob:
            groups[-1].append(h)
        else:
            groups.append([h])
    return groups


def random_instance(rng: random.Random, max_seats=7, max_schools=4, tie_prob=0.4,
                    max_capacity=3, min_students=1):
    """Complete-list instance with at most ``max_seats`` seats."""
    while True:
        m = rng.randint(1, max_schools)
        caps = [rng.randint(1, max_capacity) for _ in range(m)]
        if sum(caps) <= max_seats:
            break
    n = rng.randint(min(min_students, sum(caps)), sum(caps))
    ids = [f"H{i}" for i in range(m)]
    prefs = {f"s{i}": random_groups(rng, ids, tie_prob) for i in range(n)}
    return Instance([School(h, c) for h, c in zip(ids, caps)], prefs)


@st.composite
def instances(draw, max_seats=7, max_schools=4, max_capacity=3):
    m = draw(st.integers(1, max_schools))
    caps = draw(st.lists(st.integers(1, max_capacity), min_size=m, max_size=m)
                .filter(lambda c: sum(c) <= max_seats))
    n = draw(st.integers(1, sum(caps)))
    ids = [f"H{i}" for i in range(m)]
    prefs = {}
    for i in range(n):
        order = draw(st.permutations(ids))
        cuts = draw(st.lists(st.booleans(), min_size=m - 1, max_size=m - 1))
        groups = [[order[0]]]
        for h, cut in zip(order[1:], cuts):
            if cut:
                groups.append([h])
            else:
                groups[-1].append(h)
        prefs[f"s{i}"] = groups
    return Instance([School(h, c) for h, c in zip(ids, caps)], prefs)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
