"""Independent brute-force oracles shared by the suite."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import settings

settings.register_profile("repro", derandomize=True)
settings.load_profile("repro")


def matchings_of(edges, n, size=None):
    """All matchings of positive-weight edges, as (edge list, weight product)."""
    live = [(min(u, v), max(u, v), w) for u, v, w in edges if w > 0]
    out = []
    for s in range(n // 2 + 1) if size is None else [size]:
        for combo in itertools.combinations(live, s):
            verts = [x for e in combo for x in e[:2]]
            if len(set(verts)) == len(verts):
                out.append(([e[:2] for e in combo], math.prod((e[2] for e in combo), start=1)))
    return out


def graph_matchings(g, size=None):
    return matchings_of(g.edges, g.n, size)


def monomer_set_weights(g, size=None, exact=False):
    """Map monomer set -> summed weight w(M) * prod lambda over unmatched vertices."""
    table = {}
    zero = Fraction(0) if exact else 0.0
    for M, w in graph_matchings(g, size):
        covered = {x for e in M for x in e}
        mono = tuple(v for v in range(g.n) if v not in covered)
        val = w * math.prod((g.lam[v] for v in mono), start=1)
        if not exact:
            val = float(val)
        table[mono] = table.get(mono, zero) + val
    return table


def perfect_matching_sum(g, exact=False):
    if g.n % 2:
        return 0
    total = sum((w for _, w in graph_matchings(g, g.n // 2)), start=Fraction(0) if exact else 0)
    return total if exact else float(total)


def tv(p, q):
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(s, 0.0) - q.get(s, 0.0)) for s in keys)


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)
