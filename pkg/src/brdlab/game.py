"""Games, action profiles, best-response tables and the best-response digraph.

Conventions
-----------
* Players are indexed ``0..n-1`` in the Python API. Human-facing output
  (trace rows, serialized tables) is unchanged by this since it never
  prints a player label other than in the trace, where it is 1-based.
* Actions are 1-based (``1..m_i``), as in the usual game-theory notation.
  This keeps ``0`` free as the "unset" sentinel used by the coupling memo.
* Profiles are numbered by a little-endian mixed-radix index in
  ``[0, mu)``: player 0 varies fastest. Player ``i`` has stride
  ``prod(m[:i])``.
* The environment of player ``i`` at profile ``p`` is numbered by the same
  mixed-radix rule applied to the other players, which works out to
  ``p % stride_i + (p // (stride_i * m_i)) * stride_i``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import TieDetected

log = logging.getLogger(__name__)

ActionProfile = tuple  # tuple[int, ...] of 1-based actions
ProfileLike = Union[int, Sequence[int]]


@dataclass(frozen=True)
class GameShape:
    """Player count and per-player action counts of a normal-form game."""

    m: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(x) for x in self.m)
        object.__setattr__(self, "m", m)
        if len(m) < 2:
            raise ValueError(f"need at least 2 players, got {len(m)}")
        if min(m) < 2:
            raise ValueError(f"every player needs at least 2 actions, got {m}")

    @classmethod
    def uniform(cls, n: int, m: int) -> "GameShape":
        return cls((m,) * n)

    @property
    def n(self) -> int:
        return len(self.m)

    @cached_property
    def mu(self) -> int:
        return math.prod(self.m)

    @property
    def m_star_max(self) -> int:
        return max(self.m)

    @property
    def m_star_min(self) -> int:
        return min(self.m)

    @property
    def q(self) -> int:
        """Minimal number of environments faced by any player."""
        return self.mu // self.m_star_max

    @cached_property
    def strides(self) -> tuple[int, ...]:
        out, s = [], 1
        for mi in self.m:
            out.append(s)
            s *= mi
        return tuple(out)

    def n_envs(self, i: int) -> int:
        return self.mu // self.m[i]

    def __str__(self):
        return "x".join(map(str, self.m))

    # -- profile indexing -------------------------------------------------

    def index(self, profile: Sequence[int]) -> int:
        """Mixed-radix index of a 1-based action profile."""
        if len(profile) != self.n:
            raise ValueError(f"profile {tuple(profile)} has wrong length for shape {self}")
        p = 0
        for a, mi, s in zip(profile, self.m, self.strides):
            if not 1 <= a <= mi:
                raise ValueError(f"action {a} out of range 1..{mi}")
            p += (a - 1) * s
        return p

    def profile(self, index: int) -> ActionProfile:
        if not 0 <= index < self.mu:
            raise ValueError(f"profile index {index} out of range [0, {self.mu})")
        out = []
        for mi in self.m:
            index, r = divmod(index, mi)
            out.append(r + 1)
        return tuple(out)

    def as_index(self, a: ProfileLike) -> int:
        if isinstance(a, (int, np.integer)):
            if not 0 <= a < self.mu:
                raise ValueError(f"profile index {a} out of range [0, {self.mu})")
            return int(a)
        return self.index(a)

    def env_index(self, p: int, i: int) -> int:
        s = self.strides[i]
        return p % s + (p // (s * self.m[i])) * s

    def action(self, p: int, i: int) -> int:
        return (p // self.strides[i]) % self.m[i] + 1

    def environment(self, a: ProfileLike, i: int) -> "Environment":
        prof = self.profile(self.as_index(a))
        return Environment(i, prof[:i] + prof[i + 1:])

    def with_action(self, p: int, i: int, action: int) -> int:
        """Index of the profile ``p`` with player ``i`` switched to ``action``."""
        return p + (action - self.action(p, i)) * self.strides[i]

    @cached_property
    def _env_act(self) -> tuple[np.ndarray, np.ndarray]:
        # env[i, p] and 1-based act[i, p] for every player and profile
        p = np.arange(self.mu)
        env = np.empty((self.n, self.mu), dtype=np.int64)
        act = np.empty((self.n, self.mu), dtype=np.int64)
        for i, (mi, s) in enumerate(zip(self.m, self.strides)):
            env[i] = p % s + (p // (s * mi)) * s
            act[i] = (p // s) % mi + 1
        return env, act

    def _split(self, i: int) -> tuple[int, int, int]:
        # (high, m_i, low) view of a flat profile axis for player i
        low = self.strides[i]
        return self.mu // (low * self.m[i]), self.m[i], low


class Environment(NamedTuple):
    player: int
    a_minus_i: tuple


@dataclass(frozen=True, eq=False)
class Game:
    """Payoff tensor ``payoffs[i, p]`` for player ``i`` at profile index ``p``."""

    shape: GameShape
    payoffs: np.ndarray

    def __post_init__(self):
        u = np.array(self.payoffs, dtype=float)
        if u.shape != (self.shape.n, self.shape.mu):
            u = u.reshape(self.shape.n, self.shape.mu)
        u.setflags(write=False)
        object.__setattr__(self, "payoffs", u)

    def payoff(self, i: int, a: ProfileLike) -> float:
        return float(self.payoffs[i, self.shape.as_index(a)])

    @classmethod
    def from_profiles(cls, shape: GameShape, payoffs: dict) -> "Game":
        """Build a game from ``{profile_tuple: (u_1, ..., u_n)}``."""
        u = np.zeros((shape.n, shape.mu))
        seen = set()
        for prof, vals in payoffs.items():
            p = shape.index(prof)
            u[:, p] = vals
            seen.add(p)
        if len(seen) != shape.mu:
            raise ValueError(f"payoffs given for {len(seen)} of {shape.mu} profiles")
        return cls(shape, u)


@dataclass(frozen=True, eq=False)
class BestResponseTable:
    """Unique best action of every player in every environment.

    ``br[i][e]`` is the 1-based best response of player ``i`` in environment
    index ``e``. The best-response digraph is never materialized as an edge
    list; ``moves`` gives the successor of every profile for every player.
    """

    shape: GameShape
    br: tuple
    ties: int = field(default=0, compare=False)

    def __post_init__(self):
        sh = self.shape
        if len(self.br) != sh.n:
            raise ValueError(f"expected {sh.n} best-response arrays, got {len(self.br)}")
        arrays = []
        for i, b in enumerate(self.br):
            b = np.array(b, dtype=np.int64).reshape(-1)
            if b.size != sh.n_envs(i):
                raise ValueError(f"player {i}: expected {sh.n_envs(i)} environments, got {b.size}")
            if b.size and (b.min() < 1 or b.max() > sh.m[i]):
                raise ValueError(f"player {i}: best responses must lie in 1..{sh.m[i]}")
            b.setflags(write=False)
            arrays.append(b)
        object.__setattr__(self, "br", tuple(arrays))

    @classmethod
    def _trusted(cls, shape: GameShape, br: tuple) -> "BestResponseTable":
        # skips validation; for freshly sampled in-range int64 arrays only
        obj = object.__new__(cls)
        object.__setattr__(obj, "shape", shape)
        object.__setattr__(obj, "br", br)
        object.__setattr__(obj, "ties", 0)
        return obj

    def __eq__(self, other):
        if not isinstance(other, BestResponseTable):
            return NotImplemented
        return self.shape == other.shape and all(
            np.array_equal(a, b) for a, b in zip(self.br, other.br))

    __hash__ = None

    def best_response(self, i: int, a: ProfileLike) -> int:
        """Best response of player ``i`` to the environment of profile ``a``."""
        p = self.shape.as_index(a)
        return int(self.br[i][self.shape.env_index(p, i)])

    def move(self, a: ProfileLike, i: int) -> int:
        """Profile index reached when player ``i`` best-responds at ``a``."""
        p = self.shape.as_index(a)
        return self.shape.with_action(p, i, self.best_response(i, p))

    @cached_property
    def br_lists(self) -> tuple:
        # plain lists are several times faster than numpy scalar indexing
        return tuple(b.tolist() for b in self.br)

    @cached_property
    def moves(self) -> np.ndarray:
        """``moves[i, p]``: successor of profile ``p`` along player ``i``'s edge.

        Equals ``p`` itself exactly when player ``i`` is already best-responding.
        """
        sh = self.shape
        out = np.empty((sh.n, sh.mu), dtype=np.int64)
        for i in range(sh.n):
            high, mi, low = sh._split(i)
            b = self.br[i].reshape(high, low) - 1
            base = (np.arange(high) * (mi * low))[:, None] + np.arange(low)[None, :]
            target = base + b * low
            out[i] = np.broadcast_to(target[:, None, :], (high, mi, low)).reshape(-1)
        out.setflags(write=False)
        return out

    @cached_property
    def pne_mask(self) -> np.ndarray:
        env, act = self.shape._env_act
        # player 0 has stride 1, so its best responses name one candidate per environment;
        # each further player keeps about 1/m_i of the survivors
        m0 = self.shape.m[0]
        cand = np.arange(self.br[0].size) * m0 + self.br[0] - 1
        for i in range(1, self.shape.n):
            cand = cand[self.br[i][env[i, cand]] == act[i, cand]]
            if not cand.size:
                break
        mask = np.zeros(self.shape.mu, dtype=bool)
        mask[cand] = True
        mask.setflags(write=False)
        return mask

    def to_text(self) -> str:
        """Canonical serialization: one line per player, environment order."""
        return "".join(" ".join(map(str, b.tolist())) + "\n" for b in self.br)

    @classmethod
    def from_text(cls, text: str, shape: GameShape | None = None) -> "BestResponseTable":
        """Parse :meth:`to_text` output.

        Without ``shape`` the action counts are recovered from the line
        lengths ``L_i = mu / m_i``, since ``prod(L_i) = mu ** (n - 1)``.
        """
        rows = [[int(x) for x in line.split()] for line in text.splitlines() if line.strip()]
        if shape is None:
            n = len(rows)
            if n < 2:
                raise ValueError("need at least two lines")
            lengths = [len(r) for r in rows]
            mu = round(math.prod(lengths) ** (1.0 / (n - 1)))
            # guard against float rounding on the root
            for cand in (mu - 1, mu, mu + 1):
                if cand > 0 and cand ** (n - 1) == math.prod(lengths):
                    mu = cand
                    break
            else:
                raise ValueError(f"line lengths {lengths} do not describe a game")
            if any(mu % L for L in lengths):
                raise ValueError(f"line lengths {lengths} do not describe a game")
            shape = GameShape(tuple(mu // L for L in lengths))
        return cls(shape, tuple(rows))


@dataclass(frozen=True, eq=False)
class PneSet:
    """Pure Nash equilibria of a best-response table, by profile index."""

    shape: GameShape
    indices: tuple

    @property
    def profiles(self) -> frozenset:
        return frozenset(self.shape.profile(p) for p in self.indices)

    def __len__(self):
        return len(self.indices)

    def __contains__(self, a):
        return self.shape.as_index(a) in self.indices

    def __iter__(self):
        return (self.shape.profile(p) for p in self.indices)


@dataclass(frozen=True, eq=False)
class ReachFlags:
    """Per-profile flags ``is_pne`` and ``can_reach_pne`` (boolean arrays)."""

    is_pne: np.ndarray
    can_reach_pne: np.ndarray


def derive_best_response_table(game: Game, strict: bool = False) -> BestResponseTable:
    """Argmax of every (player, environment) payoff slice.

    Exact payoff ties are broken toward the lowest action index and counted
    in ``table.ties``; with ``strict=True`` they raise :class:`TieDetected`.
    """
    sh = game.shape
    br = []
    ties = 0
    for i in range(sh.n):
        high, mi, low = sh._split(i)
        u = game.payoffs[i].reshape(high, mi, low)
        best = u.argmax(axis=1)
        n_tied = int(((u == u.max(axis=1, keepdims=True)).sum(axis=1) > 1).sum())
        if n_tied and strict:
            raise TieDetected(f"player {i}: {n_tied} environment(s) with tied maximal payoffs")
        ties += n_tied
        br.append(best.reshape(-1) + 1)
    if ties:
        log.info("broke %d payoff tie(s) toward the lowest action", ties)
    return BestResponseTable(sh, tuple(br), ties=ties)


def enumerate_pne(table: BestResponseTable) -> PneSet:
    """Profiles where every player already plays their best response."""
    idx = np.flatnonzero(table.pne_mask)
    return PneSet(table.shape, tuple(int(p) for p in idx))


def reach_classification(table: BestResponseTable) -> ReachFlags:
    """Which profiles can reach a PNE by single-player best-response moves.

    Level-synchronous reverse traversal from the PNE set: a profile joins
    the reachable set as soon as one of its ``n`` move targets is in it.
    """
    return _reach(table)


def _reach(table: BestResponseTable) -> ReachFlags:
    cached = table.__dict__.get("_reach_flags")
    if cached is not None:
        return cached
    is_pne = table.pne_mask
    reach = is_pne.copy()
    if reach.any():
        moves = table.moves
        while True:
            grown = reach | reach[moves].any(axis=0)
            if np.array_equal(grown, reach):
                break
            reach = grown
    reach.setflags(write=False)
    flags = ReachFlags(is_pne, reach)
    table.__dict__["_reach_flags"] = flags
    return flags
