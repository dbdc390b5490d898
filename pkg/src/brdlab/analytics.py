"""Closed-form probabilities, bounds and asymptotics for clockwork dynamics.

Two-player formulas take ``m = (m1, m2)``; the clockwork sequence alternates
player 1 (odd steps) and player 2 (even steps), so ``m_{s_c(i)}`` is ``m1``
for odd ``i`` and ``m2`` for even ``i``.

Every function evaluates in float64 with left-to-right accumulation.
:func:`prob_2k_cycle_at_t`, :func:`prob_2k_cycle` and :func:`eta` also take
``exact=True`` and then return :class:`fractions.Fraction`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DomainError
from .game import GameShape


def q_value(shape: GameShape) -> int:
    return shape.mu // max(shape.m)


def _two(m) -> tuple[int, int]:
    if isinstance(m, int):
        return (m, m)
    m = tuple(int(x) for x in m)
    if len(m) != 2:
        raise DomainError(f"two-player formula needs two action counts, got {m}")
    if min(m) < 1:
        raise DomainError(f"action counts must be positive, got {m}")
    return m


def _m_at(i: int, m: tuple[int, int]) -> int:
    return m[0] if i % 2 == 1 else m[1]


def eta(t: int, m, exact: bool = False):
    """Probability that the 2-player clockwork walk closes no loop by step ``t``.

    ``prod_{i=1}^{t} (1 - floor(i/2) / m_{s_c(i)})``, clipped to zero once a
    factor reaches zero (the product is meaningless beyond that point).
    """
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    m = _two(m)
    one = Fraction(1) if exact else 1.0
    prod = one
    for i in range(1, t + 1):
        factor = one - Fraction(i // 2, _m_at(i, m)) if exact else 1.0 - (i // 2) / _m_at(i, m)
        if factor <= 0:
            return 0 * one
        prod *= factor
    return prod


def prob_2k_cycle_at_t(k: int, t: int, m, exact: bool = False):
    """Probability that the 2-player clockwork dynamic hits a ``2k``-cycle at ``t``."""
    m = _two(m)
    ms = min(m)
    if not 1 <= k <= ms:
        raise DomainError(f"k must lie in 1..{ms}, got {k}")
    if not 1 <= t <= 2 * (ms - k + 1):
        raise DomainError(f"t must lie in 1..{2 * (ms - k + 1)} for k={k}, got {t}")
    last = _m_at(t + 2 * k - 1, m)
    e = eta(t + 2 * k - 2, m, exact=exact)
    return e / last if not exact else e * Fraction(1, last)


@lru_cache(maxsize=512)
def _eta_prefix(m: tuple[int, int]) -> np.ndarray:
    """``eta(0..2*min(m))`` as floats; ``np.cumprod`` multiplies left to right like :func:`eta`."""
    i = np.arange(1, 2 * min(m) + 1)
    den = np.where(i % 2 == 1, m[0], m[1])
    factors = np.maximum(1.0 - (i // 2) / den, 0.0)
    out = np.concatenate(([1.0], np.cumprod(factors)))
    out.setflags(write=False)
    return out


def prob_2k_cycle(k: int, m, exact: bool = False):
    """Probability that the 2-player clockwork dynamic ends in a ``2k``-cycle.

    ``k = 1`` is convergence to a pure Nash equilibrium.
    """
    m = _two(m)
    ms = min(m)
    if not 1 <= k <= ms:
        raise DomainError(f"k must lie in 1..{ms}, got {k}")
    if not exact:
        t = np.arange(1, 2 * (ms - k + 1) + 1)
        last = np.where((t + 2 * k - 1) % 2 == 1, m[0], m[1])
        terms = _eta_prefix(m)[t + 2 * k - 2] / last
        # cumsum accumulates left to right, unlike the pairwise np.sum
        return float(np.cumsum(terms)[-1])
    total = Fraction(0)
    # running product instead of re-evaluating eta for every t
    prod = eta(2 * k - 1, m, exact=True)
    for t in range(1, 2 * (ms - k + 1) + 1):
        i = t + 2 * k - 2
        if t > 1:
            prod *= 1 - Fraction(i // 2, _m_at(i, m))
        total += prod * Fraction(1, _m_at(t + 2 * k - 1, m))
    return total


def phi(x: float) -> float:
    """Standard normal CDF, via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def pne_convergence_asymptotic(k: int, m: int) -> float:
    """Large-``m`` approximation of ``prob_2k_cycle(k, (m, m))``."""
    if m < 1 or k < 1:
        raise DomainError(f"need m >= 1 and k >= 1, got m={m}, k={k}")
    return 2.0 * math.sqrt(math.pi / m) * (1.0 - phi((2 * k - 1) / math.sqrt(2.0 * m)))


def no_cycle_survival_asymptotic(x: float, m: int | None = None) -> float:
    """Large-``m`` probability that no cycle closes before step ``x * sqrt(2m)``."""
    if x <= 0:
        raise DomainError(f"x must be positive, got {x}")
    return math.exp(-x * x / 2.0)


def survival_step(x: float, m: int) -> int:
    return math.ceil(x * math.sqrt(2.0 * m))


def no_cycle_survival_exact(x: float, m: int) -> float:
    """Finite-``m`` companion of :func:`no_cycle_survival_asymptotic`."""
    if x <= 0:
        raise DomainError(f"x must be positive, got {x}")
    return eta(survival_step(x, m), (m, m))


def convergence_bounds(shape: GameShape) -> tuple[float, float]:
    """Lower and upper bounds on the clockwork convergence probability.

    ``1 / (4 sqrt(n q))`` and ``6 n sqrt(ln q) / sqrt(q)``; the upper bound
    is often above one and is not clamped.
    """
    q = q_value(shape)
    n = shape.n
    if q < 2:
        raise DomainError(f"need q >= 2, got {q}")
    lower = 1.0 / (4.0 * math.sqrt(n)) / math.sqrt(q)
    upper = 6.0 * n * math.sqrt(math.log(q)) / math.sqrt(q)
    return lower, upper


def _rounds_before(t: int, n: int) -> int:
    # floor(t/n - 1) clamped at zero: the bounds are only valid for a non-negative term
    return max(t // n - 1, 0)


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def hit_after_t_bound(shape: GameShape, t: int) -> float:
    """Upper bound on P[clockwork path hits the PNE set after step ``t``]."""
    if t < 1:
        raise DomainError(f"t must be >= 1, got {t}")
    r = _rounds_before(t, shape.n)
    return math.exp(-r * r / (2.0 * q_value(shape)))


def hit_by_t_bounds(shape: GameShape, t: int) -> tuple[float, float]:
    """Bounds on P[clockwork path hits the PNE set by step ``t``], reported raw."""
    if t < 1:
        raise DomainError(f"t must be >= 1, got {t}")
    n, q = shape.n, q_value(shape)
    c = _ceil_div(t, n)
    lower = (t // n) / q * (1.0 - c * c * n / (2.0 * q))
    return lower, t / q


def k_star(player: int, t: int, n: int) -> int:
    """Number of turns of 0-based ``player`` among steps ``1..t``."""
    i = player + 1
    return 0 if t < i else 1 + (t - i) // n


def distinct_env_exact(shape: GameShape, player: int, t: int) -> float:
    """P[the environments a clockwork random walk shows ``player`` by ``t`` are distinct]."""
    mu, mi = shape.mu, shape.m[player]
    prod = 1.0
    for k in range(1, k_star(player, t, shape.n)):
        factor = 1.0 - mi * k / mu
        if factor <= 0:
            return 0.0
        prod *= factor
    return prod


def distinct_env_bounds(shape: GameShape, player: int, t: int) -> tuple[float, float]:
    """Bounds on :func:`distinct_env_exact`, reported raw."""
    if t < 1:
        raise DomainError(f"t must be >= 1, got {t}")
    if not 0 <= player < shape.n:
        raise DomainError(f"player must lie in 0..{shape.n - 1}, got {player}")
    n, mu, mi = shape.n, shape.mu, shape.m[player]
    c = _ceil_div(t, n)
    r = _rounds_before(t, n)
    return 1.0 - mi / mu * c * c / 2.0, math.exp(-mi * r * r / (2.0 * mu))


def pne_existence_asymptote() -> float:
    return 1.0 - math.exp(-1.0)


@dataclass(frozen=True)
class ExactResult:
    formula: str
    params: dict
    value: object
    flags: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        value = self.value
        if isinstance(value, tuple):
            value = list(value)
        return {"formula": self.formula, "params": self.params, "value": value, "flags": self.flags}


def _vacuous(lo=None, hi=None) -> dict:
    flags = {}
    if lo is not None and lo <= 0:
        flags["lower_vacuous"] = True
    if hi is not None and hi >= 1:
        flags["upper_vacuous"] = True
    return flags


FORMULAS = ("q", "eta", "eq1", "eq2", "eq2_asymptotic", "survival", "survival_exact",
            "bounds", "hit_after", "hit_by", "distinct_env", "phi", "pne_existence")


def evaluate(formula: str, m: Sequence[int] | None = None, k: int | None = None,
             t: int | None = None, x: float | None = None, player: int | None = None) -> ExactResult:
    """Evaluate one formula by id and wrap it with its parameters and flags."""

    def need(**kw):
        missing = [name for name, v in kw.items() if v is None]
        if missing:
            raise DomainError(f"formula {formula!r} needs {', '.join('--' + x for x in missing)}")

    params = {key: v for key, v in (("m", list(m) if m else None), ("k", k), ("t", t),
                                    ("x", x), ("player", player)) if v is not None}
    if formula == "q":
        need(m=m)
        return ExactResult(formula, params, q_value(GameShape(m)))
    if formula == "eta":
        need(m=m, t=t)
        return ExactResult(formula, params, eta(t, m))
    if formula == "eq1":
        need(m=m, k=k, t=t)
        return ExactResult(formula, params, prob_2k_cycle_at_t(k, t, m))
    if formula == "eq2":
        need(m=m, k=k)
        return ExactResult(formula, params, prob_2k_cycle(k, m))
    if formula == "eq2_asymptotic":
        need(m=m, k=k)
        mm = _two(m)
        if mm[0] != mm[1]:
            raise DomainError("the asymptotic form needs equal action counts")
        return ExactResult(formula, params, pne_convergence_asymptotic(k, mm[0]))
    if formula in ("survival", "survival_exact"):
        need(m=m, x=x)
        mm = _two(m)
        if mm[0] != mm[1]:
            raise DomainError("the survival asymptotic needs equal action counts")
        if formula == "survival":
            return ExactResult(formula, params, no_cycle_survival_asymptotic(x, mm[0]))
        return ExactResult(formula, params, no_cycle_survival_exact(x, mm[0]),
                           {"step": survival_step(x, mm[0])})
    if formula == "bounds":
        need(m=m)
        lo, hi = convergence_bounds(GameShape(m))
        return ExactResult(formula, params, (lo, hi), _vacuous(lo, hi))
    if formula == "hit_after":
        need(m=m, t=t)
        v = hit_after_t_bound(GameShape(m), t)
        return ExactResult(formula, params, v, _vacuous(hi=v))
    if formula == "hit_by":
        need(m=m, t=t)
        lo, hi = hit_by_t_bounds(GameShape(m), t)
        return ExactResult(formula, params, (lo, hi), _vacuous(lo, hi))
    if formula == "distinct_env":
        need(m=m, t=t, player=player)
        sh = GameShape(m)
        lo, hi = distinct_env_bounds(sh, player, t)
        return ExactResult(formula, params, (lo, hi),
                           {**_vacuous(lo, hi), "exact": distinct_env_exact(sh, player, t)})
    if formula == "phi":
        need(x=x)
        return ExactResult(formula, params, phi(x))
    if formula == "pne_existence":
        return ExactResult(formula, params, pne_existence_asymptote())
    raise DomainError(f"unknown formula {formula!r}; expected one of {', '.join(FORMULAS)}")
