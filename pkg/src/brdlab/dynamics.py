"""Best-response dynamics under clockwork and random playing sequences.

Times follow the hitting-time convention ``t >= 1``: ``a^0`` is the
initial profile, player ``s(t)`` moves at step ``t``, and a run that starts
on a PNE registers ``T = H = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

import numpy as np

from .errors import EmptySample, InvariantViolation
from .game import BestResponseTable, ProfileLike, _reach
from .sampling import SeedLike, as_generator


class OutcomeKind(str, Enum):
    PNE = "pne"
    CYCLE = "cycle"
    TRAP = "trap"


class SequenceKind(str, Enum):
    CLOCKWORK = "clockwork"
    RANDOM = "random"


@dataclass(frozen=True)
class PlayingSequence:
    """Who moves at each step ``t >= 1``; players are 0-based."""

    n: int
    kind: SequenceKind = SequenceKind.CLOCKWORK
    seed: SeedLike = None

    def players(self, horizon: int) -> np.ndarray:
        """``s(1), ..., s(horizon)`` as 0-based player indices."""
        if self.kind is SequenceKind.CLOCKWORK:
            return np.arange(horizon) % self.n
        return as_generator(self.seed, "sequence").integers(0, self.n, size=horizon)


def clockwork_player(t: int, n: int) -> int:
    """0-based player moving at step ``t``; the 1-based player is ``1 + (t-1) mod n``."""
    return (t - 1) % n


@dataclass(frozen=True)
class Step:
    t: int
    player: int
    profile: int


@dataclass(frozen=True)
class TrajectoryRecord:
    initial: int
    steps: tuple
    termination: OutcomeKind

    def profiles(self) -> list[int]:
        return [self.initial] + [s.profile for s in self.steps]


@dataclass(frozen=True)
class Outcome:
    """Classification of one run.

    ``k`` is the cycle parameter (the path hits an ``n*k``-cycle at time
    ``T``); ``F`` is the first time some player faces an environment seen
    before. Both are clockwork-only and ``None`` for random runs.
    ``hit_time`` is the PNE hitting time ``H`` when the run converged.
    """

    kind: OutcomeKind
    k: Optional[int] = None
    T: Optional[int] = None
    F: Optional[int] = None
    hit_time: Optional[int] = None
    steps: int = 0

    @property
    def converged(self) -> bool:
        return self.kind is OutcomeKind.PNE


def run_clockwork(table: BestResponseTable, a0: ProfileLike, record: bool = True):
    """Deterministic clockwork best-response dynamic from ``a0``.

    The eventually periodic regime is found by the first repeat of the
    state ``(profile, t mod n)``. If that state was first seen at time
    ``t1`` and recurs at ``t2`` then the path hits an ``n*k``-cycle with
    ``k = (t2 - t1) / n`` at ``T = max(t1, 1)``. Simulation stops at ``F``,
    the first environment repeat, which never precedes ``t2``.

    Returns ``(Outcome, TrajectoryRecord | None)``.
    """
    sh = table.shape
    n, m, strides = sh.n, sh.m, sh.strides
    br = table.br_lists
    p = sh.as_index(a0)
    path = [p]
    first_state = {p * n: 0}
    env_seen = [set() for _ in range(n)]
    t1 = t2 = F = None
    limit = n * (sh.q + 1) + n
    t = 0
    while F is None:
        t += 1
        if t > limit:
            raise InvariantViolation(f"no environment repeat within {limit} steps")
        i = (t - 1) % n
        s, mi = strides[i], m[i]
        e = p % s + (p // (s * mi)) * s
        seen = env_seen[i]
        if e in seen:
            F = t
        else:
            seen.add(e)
        p += (br[i][e] - 1 - (p // s) % mi) * s
        path.append(p)
        if t2 is None:
            key = p * n + t % n
            if key in first_state:
                t1, t2 = first_state[key], t
            else:
                first_state[key] = t
    if t2 is None:
        raise InvariantViolation("environment repeated before any state repeat")
    k, rem = divmod(t2 - t1, n)
    if rem:
        raise InvariantViolation("state period is not a multiple of n")
    T = max(t1, 1)
    if not T < F:
        raise InvariantViolation(f"T={T} is not smaller than F={F}")
    if k == 1:
        outcome = Outcome(OutcomeKind.PNE, k=1, T=T, F=F, hit_time=T, steps=t)
    else:
        outcome = Outcome(OutcomeKind.CYCLE, k=k, T=T, F=F, steps=t)
    traj = None
    if record:
        steps = tuple(Step(u, (u - 1) % n, path[u]) for u in range(1, len(path)))
        traj = TrajectoryRecord(path[0], steps, outcome.kind)
    return outcome, traj


def run_random_sequence(table: BestResponseTable, a0: ProfileLike, seed: SeedLike,
                        record: bool = True, chunk: int = 64):
    """Random-sequence best-response dynamic from ``a0``.

    Stops as soon as the path is on a PNE (``PNE`` with its hitting time) or
    on a profile from which no sequence of best-response moves reaches a
    PNE (``TRAP``). Both are absorbing with probability one, so no step
    cutoff is needed.
    """
    sh = table.shape
    n = sh.n
    flags = _reach(table)
    is_pne = flags.is_pne
    can_reach = flags.can_reach_pne
    rng = as_generator(seed, "sequence")
    p = sh.as_index(a0)
    steps = [] if record else None
    t = 0
    kind = OutcomeKind.TRAP
    if can_reach[p]:
        moves = table.moves
        draws = []
        pos = 0
        while True:
            if pos == len(draws):
                draws = rng.integers(0, n, size=chunk).tolist()
                pos = 0
            i = draws[pos]
            pos += 1
            t += 1
            p = int(moves[i, p])
            if record:
                steps.append(Step(t, i, p))
            if is_pne[p]:
                kind = OutcomeKind.PNE
                break
            if not can_reach[p]:
                break
    hit = t if kind is OutcomeKind.PNE else None
    outcome = Outcome(kind, hit_time=hit, steps=t)
    traj = TrajectoryRecord(sh.as_index(a0), tuple(steps), kind) if record else None
    return outcome, traj


def mean_duration(outcomes: Iterable[Outcome]) -> float:
    """Mean PNE hitting time over converged runs."""
    times = []
    for o in outcomes:
        if not o.converged:
            raise ValueError(f"mean_duration takes converged runs only, got {o.kind.value}")
        times.append(o.hit_time)
    if not times:
        raise EmptySample("no converged runs")
    return float(np.mean(times))
