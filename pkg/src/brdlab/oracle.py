"""Exact clockwork convergence probabilities by exhaustive enumeration.

Every best-response table of the shape is equally likely under any
i.i.d. atomless payoff law, and so is every initial profile. Enumerating
all ``prod_i m_i ** (mu / m_i)`` tables times ``mu`` starting profiles and
running the clockwork dynamic therefore gives the exact outcome law as
rational numbers.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from .dynamics import run_clockwork
from .errors import BudgetExceeded
from .game import BestResponseTable, GameShape

DEFAULT_BUDGET = 10**7


@dataclass(frozen=True)
class OracleResult:
    shape: GameShape
    runs: int
    pne: Fraction
    cycles: dict  # k -> Fraction, k = 1 is PNE
    mean_hit_time: Fraction | None  # conditional on convergence

    def to_json(self) -> dict:
        return {
            "m": list(self.shape.m),
            "runs": self.runs,
            "pne": str(self.pne),
            "pne_float": float(self.pne),
            "cycles": {str(k): str(v) for k, v in sorted(self.cycles.items())},
            "mean_hit_time": None if self.mean_hit_time is None else str(self.mean_hit_time),
        }


def enumeration_size(shape: GameShape) -> int:
    return math.prod(mi ** shape.n_envs(i) for i, mi in enumerate(shape.m)) * shape.mu


def all_tables(shape: GameShape):
    per_player = [itertools.product(range(1, mi + 1), repeat=shape.n_envs(i))
                  for i, mi in enumerate(shape.m)]
    for combo in itertools.product(*(list(p) for p in per_player)):
        yield BestResponseTable(shape, combo)


def oracle(shape: GameShape, budget: int = DEFAULT_BUDGET) -> OracleResult:
    size = enumeration_size(shape)
    if size > budget:
        raise BudgetExceeded(f"shape {shape} needs {size} runs, budget is {budget}")
    counts = Counter()
    hit_total = 0
    for table in all_tables(shape):
        for p in range(shape.mu):
            out, _ = run_clockwork(table, p, record=False)
            counts[out.k] += 1
            if out.converged:
                hit_total += out.hit_time
    cycles = {k: Fraction(c, size) for k, c in counts.items()}
    n_conv = counts.get(1, 0)
    return OracleResult(shape, size, cycles.get(1, Fraction(0)), cycles,
                        Fraction(hit_total, n_conv) if n_conv else None)
