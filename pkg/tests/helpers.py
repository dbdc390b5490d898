"""Shared statistics for the coupling and acceptance tests."""

import math
from collections import Counter

import numpy as np
from scipy import stats

from brdlab.coupling import check_coupling, run_coupled, run_coupled_with_sink
from brdlab.sampling import SeedSpec, StreamPool, draw_profile_index, sample_best_response_table


def two_sample_chi2(a: Counter, b: Counter) -> float:
    """p-value of the chi-square homogeneity test between two categorical samples."""
    cats = sorted(set(a) | set(b))
    table = np.array([[a.get(c, 0) for c in cats], [b.get(c, 0) for c in cats]])
    return float(stats.chi2_contingency(table).pvalue)


def clockwork_prefix(table, p, length):
    sh = table.shape
    out = [p]
    for t in range(1, length + 1):
        p = table.move(p, (t - 1) % sh.n)
        out.append(p)
    return tuple(out)


def coupled_prefixes(shape, runs, length, seed, sink=None):
    counts = Counter()
    for r in range(runs):
        spec = SeedSpec(seed, 0, r, "walk")
        run = (run_coupled(shape, spec, length) if sink is None
               else run_coupled_with_sink(shape, sink, spec, length))
        check_coupling(run)
        counts[run.Y[:length + 1]] += 1
    return counts


def dynamic_prefixes(shape, runs, length, seed, sink=None):
    """Prefixes of the clockwork dynamic on sampled games; with ``sink``, only games where it is a PNE."""
    counts = Counter()
    pool = StreamPool()
    x = None if sink is None else shape.index(sink)
    g = 0
    while sum(counts.values()) < runs:
        t = sample_best_response_table(shape, pool.get(SeedSpec(seed, 1, g, "table")))
        p = draw_profile_index(shape, pool.get(SeedSpec(seed, 1, g, "initial")))
        g += 1
        if x is not None and not t.pne_mask[x]:
            continue
        counts[clockwork_prefix(t, p, length)] += 1
    return counts


def within(value, lo, hi, sigma, k=3.0):
    return lo - k * sigma <= value <= hi + k * sigma


def binomial_se(p, n):
    return math.sqrt(max(p * (1 - p), 1e-12) / n)
