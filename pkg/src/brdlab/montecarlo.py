"""Batched Monte Carlo ensembles of random games.

Each game ``g`` of batch ``b`` draws its best-response table and then its
initial profile from the ``"game"`` substream ``(master, b, g)``; a random
playing sequence uses the ``"sequence"`` substream of the same coordinates.
Clockwork and random runs on the same coordinates therefore see the same
game and the same starting profile, which is what paired comparisons need.

Estimands
---------
``converged``            P(run reaches a PNE)
``converged_given_pne``  P(run reaches a PNE | the game has a PNE)
``pne_exists``           P(the game has a PNE)
``pne_count``            E[number of PNE]
``cycle_length=k``       P(clockwork run ends in an ``n*k``-cycle), ``n = 2`` only
``hit_time``             E[H | converged]
``hit_by=t``             P(converged and H <= t)
``hit_after=t``          P(converged and H > t)
``survival=t``           P(F - 1 > t), clockwork only: no loop has closed by step t
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .dynamics import OutcomeKind, SequenceKind, run_clockwork, run_random_sequence
from .errors import ConfigError
from .game import BestResponseTable, GameShape
from .sampling import SeedSpec, StreamPool, draw_profile_index

SCHEMA_VERSION = 1
WORKERS_ENV = "BRDLAB_WORKERS"

PROBABILITY_ESTIMANDS = ("converged", "converged_given_pne", "pne_exists", "cycle_length",
                         "hit_by", "hit_after", "survival")
MEAN_ESTIMANDS = ("pne_count", "hit_time")
CLOCKWORK_ONLY = ("cycle_length", "survival")


@dataclass(frozen=True)
class Estimand:
    name: str
    arg: Optional[int] = None

    @classmethod
    def parse(cls, text: str) -> "Estimand":
        name, _, arg = text.partition("=")
        name = name.strip()
        if name not in PROBABILITY_ESTIMANDS + MEAN_ESTIMANDS:
            raise ConfigError(f"unknown estimand {text!r}")
        needs_arg = name in ("cycle_length", "hit_by", "hit_after", "survival")
        if needs_arg != bool(arg):
            raise ConfigError(f"estimand {name!r} {'needs' if needs_arg else 'takes no'} '=<int>' argument")
        if not arg:
            return cls(name)
        try:
            value = int(arg)
        except ValueError:
            raise ConfigError(f"estimand argument must be an integer, got {arg!r}") from None
        if value < (1 if name == "cycle_length" else 0):
            raise ConfigError(f"estimand argument out of range: {text!r}")
        return cls(name, value)

    @property
    def is_probability(self) -> bool:
        return self.name in PROBABILITY_ESTIMANDS

    def __str__(self):
        return self.name if self.arg is None else f"{self.name}={self.arg}"


@dataclass(frozen=True)
class ExperimentConfig:
    shape: GameShape
    sequence: SequenceKind = SequenceKind.CLOCKWORK
    estimand: str = "converged"
    batches: int = 10
    games_per_batch: int = 1000
    seed: int = 0
    group: str = ""

    def __post_init__(self):
        object.__setattr__(self, "sequence", SequenceKind(self.sequence))
        if self.batches < 1 or self.games_per_batch < 1:
            raise ConfigError("batches and games_per_batch must be >= 1")
        est = Estimand.parse(self.estimand)
        if est.name in CLOCKWORK_ONLY and self.sequence is not SequenceKind.CLOCKWORK:
            raise ConfigError(f"estimand {est.name!r} is defined for the clockwork sequence only")
        if est.name == "cycle_length" and self.shape.n != 2:
            raise ConfigError("cycle_length is only comparable with the exact law for n = 2")

    @property
    def parsed_estimand(self) -> Estimand:
        return Estimand.parse(self.estimand)

    def to_json(self) -> dict:
        return {"n": self.shape.n, "m": list(self.shape.m), "q": self.shape.q,
                "sequence": self.sequence.value, "estimand": self.estimand,
                "batches": self.batches, "games_per_batch": self.games_per_batch,
                "seed": self.seed, "group": self.group}

    @classmethod
    def from_json(cls, d: dict) -> "ExperimentConfig":
        try:
            m = d["m"]
            if isinstance(m, int):
                m = [m] * int(d["n"])
            if "n" in d and len(m) != int(d["n"]):
                raise ConfigError(f"n={d['n']} does not match m={m}")
            return cls(GameShape(tuple(int(x) for x in m)), d.get("sequence", "clockwork"),
                       d.get("estimand", "converged"), int(d.get("batches", 10)),
                       int(d.get("games_per_batch", 1000)), int(d.get("seed", 0)),
                       d.get("group", ""))
        except KeyError as exc:
            raise ConfigError(f"config is missing {exc}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


# per-game record columns; -1 marks "not applicable"
FIELDS = ("n_pne", "converged", "hit_time", "k", "T", "F", "trap")


def simulate_game(shape: GameShape, seed: int, batch_id: int, game_id: int,
                  sequence: SequenceKind | None, pool: StreamPool | None = None):
    """Table, initial profile and (optionally) one run for game ``(batch_id, game_id)``.

    Returns ``(table, a0, record)`` with ``record`` a tuple ordered as :data:`FIELDS`.
    """
    pool = pool or StreamPool()
    spec = SeedSpec(seed, batch_id, game_id, "game")
    rng = pool.get(spec)
    br = tuple(rng.integers(1, mi + 1, size=shape.n_envs(i)) for i, mi in enumerate(shape.m))
    table = BestResponseTable._trusted(shape, br)
    a0 = draw_profile_index(shape, rng)
    n_pne = int(np.count_nonzero(table.pne_mask))
    if sequence is None:
        return table, a0, (n_pne, -1, -1, -1, -1, -1, -1)
    if sequence is SequenceKind.CLOCKWORK:
        out, _ = run_clockwork(table, a0, record=False)
        return table, a0, (n_pne, int(out.converged), out.hit_time or -1, out.k, out.T, out.F, 0)
    return table, a0, _random_record(table, a0, spec.with_purpose("sequence"), pool, n_pne)


def simulate_batch(shape: GameShape, seed: int, batch_id: int, games: int,
                   sequences: Sequence[SequenceKind | None] = (SequenceKind.CLOCKWORK,)) -> dict:
    """Records for every game of one batch, one ``(games, len(FIELDS))`` array per sequence.

    Several sequences share the table and initial profile of each game.
    """
    pool = StreamPool()
    out = {s: np.empty((games, len(FIELDS)), dtype=np.int64) for s in sequences}
    for g in range(games):
        table = None
        for s in sequences:
            if table is None:
                table, a0, rec = simulate_game(shape, seed, batch_id, g, s, pool)
            elif s is SequenceKind.CLOCKWORK:
                o, _ = run_clockwork(table, a0, record=False)
                rec = (rec[0], int(o.converged), o.hit_time or -1, o.k, o.T, o.F, 0)
            else:
                rec = _random_record(table, a0, SeedSpec(seed, batch_id, g, "sequence"), pool, rec[0])
            out[s][g] = rec
    return out


def _random_record(table, a0, spec, pool, n_pne):
    if n_pne == 0:
        # nothing to reach: the start is already a trap
        return (0, 0, -1, -1, -1, -1, 1)
    o, _ = run_random_sequence(table, a0, pool.get(spec), record=False)
    return (n_pne, int(o.converged), o.hit_time or -1, -1, -1, -1, int(o.kind is OutcomeKind.TRAP))


def estimand_values(records: np.ndarray, estimand: Estimand | str) -> np.ndarray:
    """Per-game values of ``estimand``; ``nan`` marks games outside its denominator."""
    est = Estimand.parse(estimand) if isinstance(estimand, str) else estimand
    r = records
    n_pne, conv, hit, k, F = r[:, 0], r[:, 1], r[:, 2], r[:, 3], r[:, 5]
    name, arg = est.name, est.arg
    if name == "pne_exists":
        return (n_pne > 0).astype(float)
    if name == "pne_count":
        return n_pne.astype(float)
    if name == "converged":
        return conv.astype(float)
    if name == "converged_given_pne":
        return np.where(n_pne > 0, conv, np.nan).astype(float)
    if name == "cycle_length":
        return (k == arg).astype(float)
    if name == "hit_time":
        return np.where(conv == 1, hit, np.nan).astype(float)
    if name == "hit_by":
        return ((conv == 1) & (hit <= arg)).astype(float)
    if name == "hit_after":
        return ((conv == 1) & (hit > arg)).astype(float)
    if name == "survival":
        return (F - 1 > arg).astype(float)
    raise ConfigError(f"unhandled estimand {est}")


@dataclass(frozen=True)
class BatchStats:
    """Per-batch estimates and their spread.

    ``std`` is the sample standard deviation (``ddof=1``) of the batch
    values, ``se = std / sqrt(batches)``. ``counts`` holds the number of
    games in each batch's denominator.
    """

    config: Optional[ExperimentConfig]
    values: tuple
    counts: tuple
    mean: float
    std: float
    se: float

    @classmethod
    def from_values(cls, config, values: Sequence[float], counts: Sequence[int]) -> "BatchStats":
        v = np.asarray(values, dtype=float)
        ok = ~np.isnan(v)
        mean = float(np.mean(v[ok])) if ok.any() else math.nan
        std = float(np.std(v[ok], ddof=1)) if ok.sum() > 1 else 0.0
        se = std / math.sqrt(ok.sum()) if ok.any() else math.nan
        return cls(config, tuple(float(x) for x in v), tuple(int(c) for c in counts), mean, std, se)

    @property
    def batches(self) -> int:
        return len(self.values)


def batch_stats(config: ExperimentConfig | None, per_batch: Iterable[np.ndarray], estimand) -> BatchStats:
    values, counts = [], []
    for rec in per_batch:
        x = estimand_values(rec, estimand)
        ok = ~np.isnan(x)
        counts.append(int(ok.sum()))
        values.append(float(x[ok].mean()) if ok.any() else math.nan)
    return BatchStats.from_values(config, values, counts)


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def _batch_job(args):
    shape, seed, b, games, seqs = args
    return simulate_batch(shape, seed, b, games, seqs)


def run_batches(shape: GameShape, seed: int, batches: int, games: int,
                sequences: Sequence[SequenceKind | None], workers: int | None = None) -> list[dict]:
    """:func:`simulate_batch` for ``0..batches-1``, returned in batch order."""
    workers = default_workers() if workers is None else workers
    jobs = [(shape, seed, b, games, tuple(sequences)) for b in range(batches)]
    if workers <= 1 or batches == 1:
        return [_batch_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_batch_job, jobs))


def _needs_run(est: Estimand) -> bool:
    return est.name not in ("pne_exists", "pne_count")


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> BatchStats:
    """Estimate ``config.estimand`` over ``batches x games_per_batch`` games.

    The result depends only on the config (including its seed), never on
    ``workers``.
    """
    est = config.parsed_estimand
    seq = config.sequence if _needs_run(est) else None
    results = run_batches(config.shape, config.seed, config.batches, config.games_per_batch, (seq,), workers)
    return batch_stats(config, (r[seq] for r in results), est)


def run_paired(shape: GameShape, seed: int, batches: int, games: int, workers: int | None = None):
    """Clockwork and random records on identical games: ``(clockwork, random)`` lists of arrays."""
    results = run_batches(shape, seed, batches, games, (SequenceKind.CLOCKWORK, SequenceKind.RANDOM), workers)
    return ([r[SequenceKind.CLOCKWORK] for r in results], [r[SequenceKind.RANDOM] for r in results])


# --- experiment grids -----------------------------------------------------

FIG2_TOP_M = {2: (2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64), 3: (2, 3, 4, 5, 6, 7, 8), 4: (2, 3, 4, 5)}
FIG2_Q_TARGETS = (4, 8, 16, 32)
FIG3_N = (2, 3, 4, 5)
FIG3_M = (2, 3, 4, 5, 6)


def _nondecreasing_factorizations(q: int, parts: int, lo: int = 2):
    if parts == 1:
        if q >= lo:
            yield (q,)
        return
    f = lo
    while f ** parts <= q:
        if q % f == 0:
            for rest in _nondecreasing_factorizations(q // f, parts - 1, f):
                yield (f,) + rest
        f += 1


def q_matched_shapes(q: int) -> list[GameShape]:
    """Shapes with ``n >= 3`` whose minimal environment count equals ``q``.

    For each ``n``, every non-decreasing ``(m_1, ..., m_{n-1})`` with product
    ``q`` and factors ``>= 2``, completed with ``m_n = m_{n-1}`` so that the
    largest action count divides out exactly.
    """
    shapes = []
    n = 3
    while 2 ** (n - 1) <= q:
        for f in _nondecreasing_factorizations(q, n - 1):
            shapes.append(GameShape(f + (f[-1],)))
        n += 1
    return shapes


def figure2_grid(batches: int = 10, games_per_batch: int = 1000, seed: int = 0) -> list[ExperimentConfig]:
    """Clockwork convergence configs: equal-``m`` curves and q-matched shapes.

    Groups ``fig2-top`` (``n`` in 2..4 over :data:`FIG2_TOP_M`) and
    ``fig2-bottom`` (each q target in :data:`FIG2_Q_TARGETS` with the
    2-player baseline ``(q, q)`` and every :func:`q_matched_shapes` entry).
    """
    kw = dict(sequence=SequenceKind.CLOCKWORK, estimand="converged", batches=batches,
              games_per_batch=games_per_batch, seed=seed)
    out = [ExperimentConfig(GameShape.uniform(n, m), group="fig2-top", **kw)
           for n, ms in FIG2_TOP_M.items() for m in ms]
    for q in FIG2_Q_TARGETS:
        out.append(ExperimentConfig(GameShape((q, q)), group=f"fig2-bottom-q{q}", **kw))
        out += [ExperimentConfig(s, group=f"fig2-bottom-q{q}", **kw) for s in q_matched_shapes(q)]
    return out


def figure3_grid(batches: int = 10, games_per_batch: int = 1000, seed: int = 0) -> list[ExperimentConfig]:
    """Clockwork vs random over ``n`` in :data:`FIG3_N` and ``m`` in :data:`FIG3_M`.

    Each point contributes clockwork ``converged``, random ``converged``
    and random ``converged_given_pne``.
    """
    kw = dict(batches=batches, games_per_batch=games_per_batch, seed=seed)
    out = []
    for n in FIG3_N:
        for m in FIG3_M:
            sh = GameShape.uniform(n, m)
            g = f"fig3-n{n}-m{m}"
            out.append(ExperimentConfig(sh, SequenceKind.CLOCKWORK, "converged", group=g, **kw))
            out.append(ExperimentConfig(sh, SequenceKind.RANDOM, "converged", group=g, **kw))
            out.append(ExperimentConfig(sh, SequenceKind.RANDOM, "converged_given_pne", group=g, **kw))
    return out


# --- CSV output -------------------------------------------------------------

BATCH_COLUMNS = ("n", "m_list", "q", "sequence", "estimand", "batch_id", "count", "frequency")
SUMMARY_COLUMNS = ("n", "m_list", "q", "sequence", "estimand", "group", "batches", "mean", "std", "se")


def _m_list(shape: GameShape) -> str:
    return " ".join(str(x) for x in shape.m)


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else repr(float(x))


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def batch_rows(stats: BatchStats) -> list[tuple]:
    c = stats.config
    return [(c.shape.n, _m_list(c.shape), c.shape.q, c.sequence.value, c.estimand, b, cnt, _fmt(v))
            for b, (v, cnt) in enumerate(zip(stats.values, stats.counts))]


def summary_row(stats: BatchStats) -> tuple:
    c = stats.config
    return (c.shape.n, _m_list(c.shape), c.shape.q, c.sequence.value, c.estimand, c.group,
            stats.batches, _fmt(stats.mean), _fmt(stats.std), _fmt(stats.se))


def batches_csv(results: Sequence[BatchStats]) -> str:
    return _csv_text(BATCH_COLUMNS, [row for s in results for row in batch_rows(s)])


def summary_csv(results: Sequence[BatchStats]) -> str:
    return _csv_text(SUMMARY_COLUMNS, [summary_row(s) for s in results])


def read_csv(text: str) -> list[dict]:
    """Parse a CSV written by this module, converting numeric columns."""
    rows = list(csv.DictReader(io.StringIO(text)))
    ints = ("n", "q", "batch_id", "count", "batches")
    floats = ("frequency", "mean", "std", "se")
    for r in rows:
        for k in ints:
            if k in r:
                r[k] = int(r[k])
        for k in floats:
            if k in r:
                r[k] = float(r[k])
        r["m_list"] = tuple(int(x) for x in r["m_list"].split())
    return rows


def metadata(configs: Sequence[ExperimentConfig], **extra) -> dict:
    """Sidecar describing fully-resolved configs and the substream scheme."""
    return {
        "schema_version": SCHEMA_VERSION,
        "batch_columns": list(BATCH_COLUMNS),
        "summary_columns": list(SUMMARY_COLUMNS),
        "substreams": "Philox4x64; key from SeedSequence(master, spawn_key=(purpose,)); counter [0, game_id, batch_id, 0]",
        "configs": [c.to_json() for c in configs],
        **extra,
    }


def stats_to_json(stats: BatchStats) -> dict:
    return {"config": stats.config.to_json() if stats.config else None, "values": list(stats.values),
            "counts": list(stats.counts), "mean": stats.mean, "std": stats.std, "se": stats.se}
