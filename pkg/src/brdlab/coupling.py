"""The clockwork random walk and the best-response dynamics coupled to it.

The coupled dynamic ``Y`` replays the walk ``X`` but memoizes each player's
response to every environment on first encounter, so it has the path law of
the clockwork best-response dynamic on a uniformly random game while
agreeing with ``X`` up to the first environment repeat. Planting a sink at
``x`` gives the dynamic conditioned on ``x`` being a PNE.

The memo ``R`` uses ``0`` for "not yet set"; actions are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import Outcome, OutcomeKind
from .errors import InvariantViolation
from .game import GameShape, ProfileLike
from .sampling import SeedLike, as_generator


def _walk(shape: GameShape, rng: np.random.Generator, horizon: int) -> list[int]:
    n = shape.n
    x = int(rng.integers(0, shape.mu))
    highs = np.array(shape.m)[np.arange(horizon) % n]
    draws = rng.integers(1, highs + 1).tolist()
    path = [x]
    strides, m = shape.strides, shape.m
    for t in range(1, horizon + 1):
        i = (t - 1) % n
        s = strides[i]
        x += (draws[t - 1] - 1 - (x // s) % m[i]) * s
        path.append(x)
    return path


def run_clockwork_random_walk(shape: GameShape, seed: SeedLike, horizon: int) -> np.ndarray:
    """Profile indices ``X^0, ..., X^horizon`` of the clockwork random walk.

    ``X^0`` is uniform; at step ``t`` the coordinate of player ``s_c(t)`` is
    redrawn uniformly (staying put is allowed).
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    return np.array(_walk(shape, as_generator(seed, "walk"), horizon), dtype=np.int64)


def first_env_repeat(shape: GameShape, path) -> Optional[int]:
    """``F``: first step at which the mover faces an environment it saw before."""
    n = shape.n
    seen = [set() for _ in range(n)]
    for t in range(1, len(path)):
        i = (t - 1) % n
        e = shape.env_index(int(path[t - 1]), i)
        if e in seen[i]:
            return t
        seen[i].add(e)
    return None


def classify_clockwork_path(shape: GameShape, path) -> Optional[Outcome]:
    """Cycle parameter ``k`` and hitting time ``T`` of a deterministic clockwork path.

    Returns ``None`` if no ``(profile, t mod n)`` state repeats within ``path``.
    """
    n = shape.n
    first = {}
    for t, p in enumerate(path):
        key = (int(p), t % n)
        if key in first:
            t1 = first[key]
            k = (t - t1) // n
            T = max(t1, 1)
            if k == 1:
                return Outcome(OutcomeKind.PNE, k=1, T=T, hit_time=T)
            return Outcome(OutcomeKind.CYCLE, k=k, T=T)
        first[key] = t
    return None


@dataclass(frozen=True)
class CoupledRun:
    """One realization of the coupled system.

    ``Y`` is the coupled path (or the sink-planted path when ``sink`` is
    set). ``memo_writes`` lists ``(t, player, env, action)`` in write order.
    """

    shape: GameShape
    X: tuple
    Y: tuple
    F_X: int
    F_Y: int
    outcome: Outcome
    memo_writes: tuple
    sink: Optional[int] = None
    sink_hit_time: Optional[int] = None

    @property
    def Z(self) -> Optional[tuple]:
        return self.Y if self.sink is not None else None


def _coupled(shape: GameShape, rng: np.random.Generator, horizon: int, sink: Optional[int]) -> CoupledRun:
    n, m, strides = shape.n, shape.m, shape.strides
    length = max(n * (shape.q + 1) + n, horizon)
    X = _walk(shape, rng, length)
    R = [[0] * shape.n_envs(i) for i in range(n)]
    if sink is not None:
        for i in range(n):
            R[i][shape.env_index(sink, i)] = shape.action(sink, i)
    writes = []
    y = X[0]
    Y = [y]
    seen = [set() for _ in range(n)]
    F_Y = None
    for t in range(1, length + 1):
        i = (t - 1) % n
        s, mi = strides[i], m[i]
        e = y % s + (y // (s * mi)) * s
        if F_Y is None:
            if e in seen[i]:
                F_Y = t
            else:
                seen[i].add(e)
        r = R[i][e]
        if r == 0:
            r = (X[t] // s) % mi + 1
            R[i][e] = r
            writes.append((t, i, e, r))
        y += (r - 1 - (y // s) % mi) * s
        Y.append(y)
        if F_Y is not None and t >= horizon:
            break
    if F_Y is None:
        raise InvariantViolation(f"no environment repeat on the coupled path within {length} steps")
    F_X = first_env_repeat(shape, X)
    outcome = classify_clockwork_path(shape, Y)
    if outcome is None:
        raise InvariantViolation("coupled path has no state repeat by its first environment repeat")
    outcome = Outcome(outcome.kind, k=outcome.k, T=outcome.T, F=F_Y, hit_time=outcome.hit_time, steps=len(Y) - 1)
    hit = None
    if sink is not None:
        hit = next((t for t in range(1, len(Y)) if Y[t] == sink), None)
    return CoupledRun(shape, tuple(X[:len(Y)] if len(X) > len(Y) else X), tuple(Y), F_X, F_Y,
                      outcome, tuple(writes), sink, hit)


def check_coupling(run: CoupledRun) -> None:
    """Raise :class:`InvariantViolation` unless the run satisfies the coupling identities."""
    if run.sink is None:
        if run.F_X != run.F_Y:
            raise InvariantViolation(f"F_X={run.F_X} differs from F_Y={run.F_Y}")
        for t in range(run.F_X):
            if run.X[t] != run.Y[t]:
                raise InvariantViolation(f"X and Y disagree at t={t} < F_X={run.F_X}")
    slots = [(w[1], w[2]) for w in run.memo_writes]
    if len(slots) != len(set(slots)):
        raise InvariantViolation("a memo entry was written twice")
    if run.outcome.T is not None and not run.outcome.T < run.F_Y:
        raise InvariantViolation(f"T={run.outcome.T} is not smaller than F={run.F_Y}")


def run_coupled(shape: GameShape, seed: SeedLike, horizon: int = 0) -> CoupledRun:
    """Coupled dynamic driven by a clockwork random walk.

    Runs until the first environment repeat, which also classifies ``Y``'s
    outcome, and at least ``horizon`` steps.
    """
    return _coupled(shape, as_generator(seed, "walk"), horizon, None)


def run_coupled_with_sink(shape: GameShape, x: ProfileLike, seed: SeedLike, horizon: int = 0) -> CoupledRun:
    """Coupled dynamic with every player's response at ``x`` preset to ``x``."""
    return _coupled(shape, as_generator(seed, "walk"), horizon, shape.as_index(x))
