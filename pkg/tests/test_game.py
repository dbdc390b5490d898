import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brdlab.errors import TieDetected
from brdlab.game import (BestResponseTable, Game, GameShape, derive_best_response_table,
                         enumerate_pne, reach_classification)
from brdlab.sampling import sample_best_response_table

from conftest import EXAMPLE_EDGES

shapes = st.lists(st.integers(2, 4), min_size=2, max_size=4).map(lambda m: GameShape(tuple(m)))


def test_shape_validation():
    with pytest.raises(ValueError):
        GameShape((3,))
    with pytest.raises(ValueError):
        GameShape((2, 1))
    sh = GameShape.uniform(3, 4)
    assert sh.m == (4, 4, 4) and sh.mu == 64 and sh.q == 16 and str(sh) == "4x4x4"


def test_q_is_smallest_environment_count():
    sh = GameShape((2, 3, 5))
    assert sh.q == min(sh.n_envs(i) for i in range(sh.n)) == 6


@given(shapes, st.data())
def test_index_round_trip(sh, data):
    p = data.draw(st.integers(0, sh.mu - 1))
    prof = sh.profile(p)
    assert sh.index(prof) == p
    assert all(1 <= a <= mi for a, mi in zip(prof, sh.m))


@given(shapes, st.data())
def test_environment_index_ignores_own_action(sh, data):
    p = data.draw(st.integers(0, sh.mu - 1))
    i = data.draw(st.integers(0, sh.n - 1))
    e = sh.env_index(p, i)
    assert 0 <= e < sh.n_envs(i)
    for a in range(1, sh.m[i] + 1):
        q = sh.with_action(p, i, a)
        assert sh.env_index(q, i) == e
        assert sh.action(q, i) == a
    assert sh.environment(p, i).a_minus_i == sh.profile(p)[:i] + sh.profile(p)[i + 1:]


@given(shapes)
def test_environment_index_is_a_bijection_per_action(sh):
    for i in range(sh.n):
        envs = [sh.env_index(p, i) for p in range(sh.mu) if sh.action(p, i) == 1]
        assert sorted(envs) == list(range(sh.n_envs(i)))


def test_example_digraph_from_payoffs(example_game, example_table):
    derived = derive_best_response_table(example_game)
    # the printed payoffs tie in four environments; lowest-index tie breaking gives the drawn digraph
    assert derived.ties == 4
    assert derived == example_table
    sh = example_table.shape
    for src, dst in EXAMPLE_EDGES:
        (i,) = [j for j in range(3) if src[j] != dst[j]]
        assert example_table.move(src, i) == sh.index(dst)


def test_example_pne(example_table):
    assert enumerate_pne(example_table).profiles == {(1, 2, 1)}
    # player 3 facing (a1, a2) = (1, 2) must stay at action 1 for (1, 2, 1) to be a sink
    assert example_table.best_response(2, (1, 2, 2)) == 1


def test_strict_mode_raises_on_ties(example_game):
    with pytest.raises(TieDetected):
        derive_best_response_table(example_game, strict=True)


def test_strict_mode_accepts_generic_payoffs():
    sh = GameShape((3, 2))
    g = Game(sh, np.random.default_rng(0).random((2, 6)))
    t = derive_best_response_table(g, strict=True)
    assert t.ties == 0


def test_derived_table_is_argmax():
    sh = GameShape((3, 2, 2))
    g = Game(sh, np.random.default_rng(1).random((3, sh.mu)))
    t = derive_best_response_table(g)
    for i in range(sh.n):
        for p in range(sh.mu):
            options = [g.payoff(i, sh.with_action(p, i, a)) for a in range(1, sh.m[i] + 1)]
            assert t.best_response(i, p) == int(np.argmax(options)) + 1


@settings(max_examples=40)
@given(shapes, st.integers(0, 2**32))
def test_moves_match_single_moves(sh, seed):
    t = sample_best_response_table(sh, seed)
    for i in range(sh.n):
        for p in range(sh.mu):
            assert t.moves[i, p] == t.move(p, i)
    expected = [p for p in range(sh.mu) if all(t.moves[i, p] == p for i in range(sh.n))]
    assert list(enumerate_pne(t).indices) == expected


@settings(max_examples=40)
@given(shapes, st.integers(0, 2**32))
def test_text_round_trip(sh, seed):
    t = sample_best_response_table(sh, seed)
    assert BestResponseTable.from_text(t.to_text()) == t
    assert BestResponseTable.from_text(t.to_text(), sh) == t


def test_table_validation():
    sh = GameShape((2, 2))
    with pytest.raises(ValueError):
        BestResponseTable(sh, ([1, 2], [1, 3]))
    with pytest.raises(ValueError):
        BestResponseTable(sh, ([1, 2, 1], [1, 2]))
    with pytest.raises(ValueError):
        BestResponseTable.from_text("1 2\n1 2 3\n")


def test_reach_on_example(example_table):
    flags = reach_classification(example_table)
    assert flags.is_pne.sum() == 1
    assert flags.can_reach_pne.all()


def test_reach_detects_trap():
    # matching pennies in actions {1, 2} with a separate sink at (3, 3)
    sh = GameShape((3, 3))
    br0 = [1, 2, 1]   # player 0 given a2 = 1, 2, 3
    br1 = [2, 1, 1]   # player 1 given a1 = 1, 2, 3
    t = BestResponseTable(sh, (br0, br1))
    assert enumerate_pne(t).profiles == frozenset()
    br0, br1 = [2, 1, 3], [1, 2, 3]
    t = BestResponseTable(sh, (br0, br1))
    flags = reach_classification(t)
    assert enumerate_pne(t).profiles == {(3, 3)}
    trapped = {sh.profile(p) for p in np.flatnonzero(~flags.can_reach_pne)}
    assert trapped == {(1, 1), (2, 1), (1, 2), (2, 2)}


@settings(max_examples=30)
@given(shapes, st.integers(0, 2**32))
def test_reach_matches_forward_search(sh, seed):
    t = sample_best_response_table(sh, seed)
    flags = reach_classification(t)
    pne = set(enumerate_pne(t).indices)
    for p in range(sh.mu):
        seen, stack = {p}, [p]
        while stack:
            u = stack.pop()
            for i in range(sh.n):
                v = int(t.moves[i, u])
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        assert flags.can_reach_pne[p] == bool(seen & pne)
