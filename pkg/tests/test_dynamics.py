import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from brdlab.dynamics import (Outcome, OutcomeKind, PlayingSequence, SequenceKind, clockwork_player,
                             mean_duration, run_clockwork, run_random_sequence)
from brdlab.errors import EmptySample
from brdlab.game import BestResponseTable, GameShape, enumerate_pne
from brdlab.sampling import SeedSpec, sample_best_response_table

shapes = st.lists(st.integers(2, 5), min_size=2, max_size=4).map(lambda m: GameShape(tuple(m)))


def profiles(sh, traj):
    return [sh.profile(p) for p in traj.profiles()]


def test_example_path_reaching_the_equilibrium(example_table):
    sh = example_table.shape
    out, traj = run_clockwork(example_table, (1, 1, 2))
    assert out.kind is OutcomeKind.PNE
    assert (out.k, out.T, out.F, out.hit_time) == (1, 3, 6, 3)
    assert profiles(sh, traj)[:5] == [(1, 1, 2), (1, 1, 2), (1, 2, 2), (1, 2, 1), (1, 2, 1)]


def test_example_path_stuck_on_a_cycle(example_table):
    sh = example_table.shape
    out, traj = run_clockwork(example_table, (1, 1, 1))
    assert out.kind is OutcomeKind.CYCLE
    assert (out.k, out.T, out.F, out.hit_time) == (2, 1, 7, None)
    assert profiles(sh, traj)[:8] == [(1, 1, 1), (2, 1, 1), (2, 2, 1), (2, 2, 2), (2, 2, 2),
                                      (2, 1, 2), (2, 1, 1), (2, 1, 1)]


@pytest.mark.parametrize("seed", range(10))
def test_example_random_sequence_converges(example_table, seed):
    out, traj = run_random_sequence(example_table, (1, 1, 1), SeedSpec(seed, purpose="sequence"))
    assert out.kind is OutcomeKind.PNE
    assert example_table.shape.profile(traj.profiles()[-1]) == (1, 2, 1)
    assert out.hit_time == len(traj.steps)


def test_start_on_equilibrium_counts_as_hit_at_one(example_table):
    out, _ = run_clockwork(example_table, (1, 2, 1))
    assert (out.kind, out.T, out.hit_time) == (OutcomeKind.PNE, 1, 1)
    out, _ = run_random_sequence(example_table, (1, 2, 1), 0)
    assert out.kind is OutcomeKind.PNE and out.hit_time == 1


def test_random_sequence_traps():
    sh = GameShape((3, 3))
    t = BestResponseTable(sh, ([2, 1, 3], [1, 2, 3]))
    out, traj = run_random_sequence(t, (1, 1), 0)
    assert out.kind is OutcomeKind.TRAP and out.steps == 0 and not traj.steps
    kinds = {run_random_sequence(t, (3, 1), s, record=False)[0].kind for s in range(40)}
    assert kinds == {OutcomeKind.TRAP, OutcomeKind.PNE}


@settings(max_examples=150, deadline=None)
@given(shapes, st.integers(0, 2**32), st.data())
def test_clockwork_outcome_properties(sh, seed, data):
    t = sample_best_response_table(sh, seed)
    a0 = data.draw(st.integers(0, sh.mu - 1))
    out, traj = run_clockwork(t, a0)
    path = traj.profiles()
    n = sh.n
    assert 1 <= out.T < out.F <= n * (sh.q + 1) + n
    assert len(path) == out.F + 1
    assert (out.kind is OutcomeKind.PNE) == (out.k == 1)
    # the state (profile, phase) recurs nk steps later, from T or from the start when T = 1
    starts = [s for s in {0, out.T} if s + n * out.k < len(path) and (s == out.T or out.T == 1)]
    assert any(path[s] == path[s + n * out.k] for s in starts)
    if out.converged:
        assert out.hit_time == out.T and path[out.T] in enumerate_pne(t).indices
        assert path[out.T - 1] not in enumerate_pne(t).indices or out.T == 1
    if n == 2:
        assert out.F == out.T + 2 * out.k


@settings(max_examples=60, deadline=None)
@given(shapes, st.integers(0, 2**32), st.data())
def test_random_outcome_properties(sh, seed, data):
    t = sample_best_response_table(sh, seed)
    a0 = data.draw(st.integers(0, sh.mu - 1))
    out, traj = run_random_sequence(t, a0, seed + 1)
    pne = set(enumerate_pne(t).indices)
    path = traj.profiles()
    if out.converged:
        assert path[-1] in pne and not set(path[:-1]) & pne or (a0 in pne and out.hit_time == 1)
    else:
        assert out.kind is OutcomeKind.TRAP and not set(path) & pne
    for s in traj.steps:
        assert s.profile == t.moves[s.player, path[s.t - 1]]


def test_playing_sequences():
    assert PlayingSequence(3).players(7).tolist() == [0, 1, 2, 0, 1, 2, 0]
    assert [clockwork_player(t, 3) for t in range(1, 8)] == [0, 1, 2, 0, 1, 2, 0]
    draws = PlayingSequence(4, SequenceKind.RANDOM, SeedSpec(1, purpose="sequence")).players(8000)
    assert stats.chisquare(np.bincount(draws, minlength=4)).pvalue > 0.01


def test_mean_duration():
    done = [Outcome(OutcomeKind.PNE, k=1, T=2, hit_time=2), Outcome(OutcomeKind.PNE, k=1, T=5, hit_time=5)]
    assert mean_duration(done) == 3.5
    with pytest.raises(EmptySample):
        mean_duration([])
    with pytest.raises(ValueError):
        mean_duration(done + [Outcome(OutcomeKind.CYCLE, k=2, T=1)])
