"""Seeded random games, best-response tables and initial profiles.

Substream derivation
--------------------
Every stream is a Philox4x64-10 counter-based generator (numpy's
``np.random.Philox``), fully determined by a :class:`SeedSpec`:

* ``key = SeedSequence(entropy=master_seed, spawn_key=(PURPOSES[tag],)).generate_state(2, uint64)``
* ``counter = [0, game_id, batch_id, 0]`` (four uint64 words, word 0 is the block counter)

Distinct purposes get distinct keys; distinct ``(batch_id, game_id)`` pairs
under one key occupy disjoint ranges of ``2**64`` counter blocks, so
substreams never overlap and do not depend on scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .game import BestResponseTable, Game, GameShape

PURPOSES = {
    "game": 0,  # best-response table followed by the initial profile
    "table": 1,
    "payoffs": 2,
    "initial": 3,
    "sequence": 4,
    "walk": 5,
}

_MASK64 = (1 << 64) - 1


@lru_cache(maxsize=256)
def _philox_key(master_seed: int, purpose: str) -> tuple[int, int]:
    ss = np.random.SeedSequence(entropy=master_seed & _MASK64, spawn_key=(PURPOSES[purpose],))
    k = ss.generate_state(2, np.uint64)
    return int(k[0]), int(k[1])


@dataclass(frozen=True)
class SeedSpec:
    """Coordinates of one random substream."""

    master_seed: int
    batch_id: int = 0
    game_id: int = 0
    purpose: str = "game"

    def __post_init__(self):
        if self.purpose not in PURPOSES:
            raise ValueError(f"unknown purpose tag {self.purpose!r}; expected one of {sorted(PURPOSES)}")
        for name in ("batch_id", "game_id"):
            v = getattr(self, name)
            if not 0 <= v <= _MASK64:
                raise ValueError(f"{name} must fit in 64 bits, got {v}")

    def with_purpose(self, purpose: str) -> "SeedSpec":
        return SeedSpec(self.master_seed, self.batch_id, self.game_id, purpose)

    def counter(self) -> list[int]:
        return [0, self.game_id, self.batch_id, 0]

    def generator(self) -> np.random.Generator:
        key = _philox_key(self.master_seed, self.purpose)
        return np.random.Generator(np.random.Philox(key=np.array(key, dtype=np.uint64),
                                                    counter=np.array(self.counter(), dtype=np.uint64)))


class StreamPool:
    """Reusable Philox generators for a single sequential worker loop.

    Re-keying an existing bit generator is roughly ten times cheaper than
    constructing a new one. The generator returned by :meth:`get` is only
    valid until the next call with the same purpose.
    """

    def __init__(self):
        self._gens = {}

    def get(self, spec: SeedSpec) -> np.random.Generator:
        key = _philox_key(spec.master_seed, spec.purpose)
        slot = self._gens.get(spec.purpose)
        if slot is None:
            gen = spec.generator()
            self._gens[spec.purpose] = (gen, gen.bit_generator.state)
            return gen
        gen, template = slot
        state = {
            "bit_generator": "Philox",
            "state": {"counter": np.array(spec.counter(), dtype=np.uint64),
                      "key": np.array(key, dtype=np.uint64)},
            "buffer": template["buffer"],
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }
        gen.bit_generator.state = state
        return gen


SeedLike = Union[SeedSpec, np.random.Generator, int, None]


def as_generator(seed: SeedLike, purpose: str = "game") -> np.random.Generator:
    """Accept a :class:`SeedSpec`, an existing generator, or a master seed."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, SeedSpec):
        return seed.generator()
    if seed is None:
        return np.random.default_rng()
    return SeedSpec(int(seed), purpose=purpose).generator()


def sample_game_payoffs(shape: GameShape, seed: SeedLike) -> Game:
    """Independent uniform [0, 1) payoffs for every player and profile."""
    rng = as_generator(seed, "payoffs")
    return Game(shape, rng.random((shape.n, shape.mu)))


def sample_best_response_table(shape: GameShape, seed: SeedLike) -> BestResponseTable:
    """Every table entry independently uniform on ``1..m_i``.

    Induces the same digraph law as drawing i.i.d. atomless payoffs, with
    ``sum_i mu / m_i`` draws instead of ``n * mu``.
    """
    rng = as_generator(seed, "table")
    br = tuple(rng.integers(1, mi + 1, size=shape.n_envs(i)) for i, mi in enumerate(shape.m))
    return BestResponseTable(shape, br)


def sample_initial_profile(shape: GameShape, seed: SeedLike) -> tuple:
    """Uniform action profile (1-based tuple)."""
    return shape.profile(draw_profile_index(shape, as_generator(seed, "initial")))


def draw_profile_index(shape: GameShape, rng: np.random.Generator) -> int:
    return int(rng.integers(0, shape.mu))
