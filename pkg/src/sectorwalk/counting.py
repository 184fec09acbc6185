"""Counting by sampling: self-reducible partition-function estimates.

The partition function of a density is recovered from one reference set S*
as mu(S*) / P[S*], where P[S*] telescopes into conditional marginals
P[s_j | s_1..s_{j-1} pinned], each estimated from the final states of
independent down-up chains on the conditioned density.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import fkt
from .densities import (Density, DensityError, ExternalField, PartitionConstrained, PartitionConstraint, canon,
                        condition, decode_monomers, encode_monomers, k_matching_density, monomer_dimer_density)
from .graph import EmbeddedGraph, GraphError, Matching, find_matching_of_size, induce, max_weight_matching
from .walk import WalkConfig, default_gap, run_chains


class CountingError(RuntimeError):
    pass


@dataclass
class CountEstimate:
    estimate: float
    eps: float
    delta: float
    samples: int
    levels: int
    wall_clock: float
    exact: bool = False
    seed: int = 0
    log_estimate: float | None = None
    ratios: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.eps > 0 or not 0 < self.delta < 1:
            raise ValueError("need eps > 0 and delta in (0, 1)")
        if self.log_estimate is None:
            self.log_estimate = math.log(self.estimate) if self.estimate > 0 else -math.inf
        if self.estimate < 0:
            raise ValueError("estimate must be nonnegative")

    def to_json(self) -> dict:
        d = asdict(self)
        if d["log_estimate"] == -math.inf:
            d["log_estimate"] = None
        return d


def default_budget(k: int, eps: float, delta: float) -> int:
    """Chains per level: ceil(32 k^2 log(2k/delta) / eps^2)."""
    k = max(k, 1)
    return math.ceil(32 * k * k * math.log(2 * k / delta) / eps**2)


def default_steps(k: int, n: int, d: int) -> int:
    """One step when the walk resamples everything; else 2k log(4n)."""
    return 1 if d >= k else math.ceil(2 * k * math.log(4 * n))


def estimate_partition_function(mu: Density, S_star: Iterable[int], eps: float = 0.1, delta: float = 0.05, *,
                                samples: int | None = None, steps: int | None = None, gap: int | None = None,
                                seed: int = 0) -> CountEstimate:
    """Estimate sum_S mu(S) from a reference set S* with mu(S*) > 0."""
    t0 = time.perf_counter()
    S_star = canon(S_star)
    lw_star = mu.log_eval(S_star)
    if lw_star == -math.inf:
        raise CountingError("reference set has zero weight")
    if mu.k == 0 or mu.k == mu.n:
        return CountEstimate(math.exp(lw_star), eps, delta, 0, 0, time.perf_counter() - t0, True, seed, lw_star)
    N = samples if samples is not None else default_budget(mu.k, eps, delta)
    log_p, ratios, pinned = 0.0, [], []
    for j, s in enumerate(S_star):
        nu = condition(mu, pinned, witness=S_star)
        if nu.k == nu.n:
            break
        d = min(gap or default_gap(nu), nu.k)
        t = steps if steps is not None else default_steps(nu.k, nu.n, d)
        pos = {x: i for i, x in enumerate(getattr(nu, "labels", range(mu.n)))}
        start = [pos[x] for x in S_star if x not in pinned]
        cfg = WalkConfig(d, t, seed, N)
        final = run_chains(nu, start, cfg, chain_offset=j * N)
        frac = float(np.mean(np.any(final == pos[s], axis=1)))
        if frac == 0.0:
            raise CountingError("reference set unreachable: a conditional marginal was estimated as 0")
        ratios.append(frac)
        log_p += math.log(frac)
        pinned.append(s)
    lz = lw_star - log_p
    return CountEstimate(math.exp(lz) if lz < 700 else math.inf, eps, delta, N, len(ratios),
                         time.perf_counter() - t0, False, seed, lz, ratios)


def _exact(value: float, eps: float, delta: float, seed: int, t0: float) -> CountEstimate:
    return CountEstimate(value, eps, delta, 0, 0, time.perf_counter() - t0, True, seed)


def count_k_matchings(g: EmbeddedGraph, m: int, eps: float = 0.1, delta: float = 0.05, *,
                      samples: int | None = None, steps: int | None = None, gap: int | None = None,
                      seed: int = 0) -> CountEstimate:
    """Weighted count of m-matchings times monomer weights (the m-matching count for unit weights)."""
    t0 = time.perf_counter()
    M = find_matching_of_size(g, m)
    if M is None:
        return _exact(0.0, eps, delta, seed, t0)
    mu = k_matching_density(g, m)
    covered = {x for e in M for x in e}
    S_star = [v for v in range(g.n) if v not in covered]
    if mu.log_eval(S_star) == -math.inf:
        raise CountingError("reference monomer set has zero weight (a zero vertex weight blocks it)")
    return estimate_partition_function(mu, S_star, eps, delta, samples=samples, steps=steps, gap=gap, seed=seed)


# ----------------------------------------------------------------------------
# monomer-dimer sampling


def sample_perfect_matching(g: EmbeddedGraph, vertices: Iterable[int], rng: np.random.Generator,
                            cache: dict | None = None) -> Matching:
    """Exact weighted perfect matching on the subgraph induced by ``vertices``.

    The lowest remaining vertex is matched to neighbour u with probability
    proportional to w(vu) * PM(remainder without v, u), then recurse.
    """
    cache = {} if cache is None else cache

    def logpm(rest: tuple[int, ...]) -> float:
        if rest not in cache:
            cache[rest] = fkt.log_pm_partition_function(induce(g, rest)) if rest else 0.0
        return cache[rest]

    rest = tuple(sorted(vertices))
    if logpm(rest) == -math.inf:
        raise CountingError("no perfect matching on the requested vertex set")
    out = []
    while rest:
        v = rest[0]
        options, lw = [], []
        for u in g.neighbors(v):
            w = g.weight(v, u)
            if w > 0 and u in rest:
                sub = tuple(x for x in rest if x != v and x != u)
                val = logpm(sub)
                if val > -math.inf:
                    options.append((u, sub))
                    lw.append(math.log(w) + val)
        lw = np.array(lw)
        p = np.exp(lw - lw.max())
        i = int(rng.choice(len(options), p=p / p.sum()))
        u, rest = options[i]
        out.append((min(u, v), max(u, v)))
    return frozenset(out)


def monomer_dimer_start(g: EmbeddedGraph) -> tuple[int, ...]:
    """Encoded monomer set of a maximum-weight matching."""
    M = max_weight_matching(g)
    covered = {x for e in M for x in e}
    return encode_monomers(g.n, [v for v in range(g.n) if v not in covered])


def sample_monomer_dimers(g: EmbeddedGraph, cfg: WalkConfig) -> list[Matching]:
    """One matching per chain: walk on monomer sets, then an exact dimer cover of the rest."""
    mu = monomer_dimer_density(g)
    start = monomer_dimer_start(g)
    if mu.log_eval(start) == -math.inf:
        raise CountingError("graph has no matching of positive weight")
    final = run_chains(mu, start, cfg)
    cache: dict = {}
    out = []
    for c, row in enumerate(final.tolist()):
        monomers = set(decode_monomers(row))
        rng = np.random.default_rng([cfg.seed & (2**63 - 1), c])
        out.append(sample_perfect_matching(g, [v for v in range(g.n) if v not in monomers], rng, cache))
    return out


def sample_monomer_dimer(g: EmbeddedGraph, cfg: WalkConfig, eps_tv: float | None = None) -> Matching:
    """A single matching (chain 0 of ``cfg``)."""
    if eps_tv is not None and not 0 < eps_tv < 1:
        raise ValueError("eps_tv must lie in (0, 1)")
    one = WalkConfig(cfg.gap, cfg.steps, cfg.seed, 1)
    return sample_monomer_dimers(g, one)[0]


# ----------------------------------------------------------------------------
# mixed derivatives of multiaffine polynomials


@dataclass(frozen=True)
class MultiaffinePolynomial:
    n: int
    degree: int
    coeffs: Mapping[tuple[int, ...], float]

    def __post_init__(self):
        table = {}
        for key, c in self.coeffs.items():
            key = tuple(int(x) for x in key)
            if len(set(key)) != len(key):
                raise DensityError("only multiaffine polynomials are supported (repeated variable in a monomial)")
            key = tuple(sorted(key))
            if len(key) != self.degree:
                raise DensityError(f"monomial {list(key)} has degree {len(key)}, expected {self.degree}")
            if any(not 0 <= x < self.n for x in key):
                raise DensityError("variable index out of range")
            if not c >= 0:
                raise DensityError("coefficients must be nonnegative")
            if c > 0:
                table[key] = table.get(key, 0.0) + float(c)
        object.__setattr__(self, "coeffs", table)

    def __call__(self, x: Sequence[float]) -> float:
        return sum(c * math.prod(x[i] for i in key) for key, c in self.coeffs.items())

    def to_document(self) -> dict:
        return {"degree": self.degree, "n": self.n,
                "terms": [{"set": list(k), "coeff": c} for k, c in sorted(self.coeffs.items())]}


def parse_polynomial(document: str | dict) -> MultiaffinePolynomial:
    doc = json.loads(document) if isinstance(document, str) else document
    try:
        terms = {tuple(t["set"]): float(t["coeff"]) for t in doc["terms"]}
        deg = int(doc["degree"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DensityError(f"polynomial document needs 'degree' and 'terms' with 'set'/'coeff': {exc}") from exc
    n = int(doc.get("n", max((x for k in terms for x in k), default=-1) + 1))
    return MultiaffinePolynomial(n, deg, terms)


def elementary_symmetric(n: int, d: int) -> MultiaffinePolynomial:
    return MultiaffinePolynomial(n, d, {S: 1.0 for S in itertools.combinations(range(n), d)})


class SplitDensity(Density):
    """Coefficient density of f on copies (i, j): a set maps to its variables, which must be distinct."""

    def __init__(self, f: MultiaffinePolynomial, copies: Sequence[tuple[int, int]]):
        self.f, self.copies = f, tuple(copies)
        self.n, self.k = len(self.copies), f.degree

    def _log_eval(self, S):
        var = tuple(sorted(self.copies[x][0] for x in S))
        c = self.f.coeffs.get(var, 0.0)
        if c <= 0 or any(a == b for a, b in zip(var, var[1:])):
            return -math.inf
        return math.log(c)


def _reference_assignment(f, weights, counts):
    """A monomial and a copy per variable meeting the block counts, preferring heavy terms."""
    s1 = len(counts)

    def best_weight(key):
        return math.log(f.coeffs[key]) + sum(max((math.log(weights[j][i]) for j in range(s1) if weights[j][i] > 0),
                                                 default=-math.inf) for i in key)

    for key in sorted(f.coeffs, key=best_weight, reverse=True):
        left = list(counts)
        choice: list[int] = []

        def dfs(pos):
            if pos == len(key):
                return True
            i = key[pos]
            for j in sorted(range(s1), key=lambda j: -weights[j][i]):
                if left[j] > 0 and weights[j][i] > 0:
                    left[j] -= 1
                    choice.append(j)
                    if dfs(pos + 1):
                        return True
                    choice.pop()
                    left[j] += 1
            return False

        if dfs(0):
            return key, choice
    return None


def mixed_derivative_density(f: MultiaffinePolynomial, directions: Sequence[Sequence[float]], counts: Sequence[int],
                             x: Sequence[float]):
    """Partition-constrained, externally scaled split density whose total mass times prod c_j! is the derivative.

    Returns (density, reference set, factor) or None when the derivative vanishes.
    """
    s = len(directions)
    if len(counts) != s:
        raise DensityError("one count per direction required")
    if len(x) != f.n or any(len(v) != f.n for v in directions):
        raise DensityError("directions and point must have one entry per variable")
    vals = [list(map(float, x))] + [list(map(float, v)) for v in directions]
    if any(not w >= 0 for row in vals for w in row):
        raise DensityError("directions and point must be nonnegative")
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise DensityError("counts must be nonnegative")
    rem = f.degree - sum(counts)
    if rem < 0 or not f.coeffs:
        return None
    all_counts = [rem] + counts
    copies = [(i, j) for j in range(s + 1) for i in range(f.n) if vals[j][i] > 0]
    blocks = [tuple(e for e, (_, jj) in enumerate(copies) if jj == j) for j in range(s + 1)]
    if any(c > len(b) for b, c in zip(blocks, all_counts)):
        return None
    ref = _reference_assignment(f, vals, all_counts)
    if ref is None:
        return None
    key, choice = ref
    index = {c: e for e, c in enumerate(copies)}
    S_star = sorted(index[(i, j)] for i, j in zip(key, choice))
    keep = [(b, c) for b, c in zip(blocks, all_counts) if b]
    pc = PartitionConstraint(tuple(b for b, _ in keep), tuple(c for _, c in keep))
    h = ExternalField(PartitionConstrained(SplitDensity(f, copies), pc), [vals[j][i] for i, j in copies])
    return h, S_star, math.prod(math.factorial(c) for c in counts)


def estimate_mixed_derivative(f: MultiaffinePolynomial, directions: Sequence[Sequence[float]], counts: Sequence[int],
                              x: Sequence[float], eps: float = 0.1, delta: float = 0.05, *,
                              samples: int | None = None, steps: int | None = None, gap: int | None = None,
                              seed: int = 0) -> CountEstimate:
    """D_{v^1}^{c_1} ... D_{v^s}^{c_s} f at x, via the split partition-constrained density."""
    t0 = time.perf_counter()
    built = mixed_derivative_density(f, directions, counts, x)
    if built is None:
        return _exact(0.0, eps, delta, seed, t0)
    h, S_star, factor = built
    est = estimate_partition_function(h, S_star, eps, delta, samples=samples, steps=steps, gap=gap, seed=seed)
    est.estimate *= factor
    est.log_estimate += math.log(factor)
    est.wall_clock = time.perf_counter() - t0
    return est


def symbolic_mixed_derivative(f: MultiaffinePolynomial, directions, counts, x) -> float:
    """Exact value by expanding f(x + sum_j t_j v^j) and reading off the t-coefficient."""
    s = len(directions)
    vals = [list(x)] + [list(v) for v in directions]
    target = [f.degree - sum(counts)] + list(counts)
    if target[0] < 0:
        return 0.0
    total = 0.0
    for key, c in f.coeffs.items():
        for assign in itertools.product(range(s + 1), repeat=len(key)):
            if [assign.count(j) for j in range(s + 1)] == target:
                total += c * math.prod(vals[j][i] for i, j in zip(key, assign))
    return total * math.prod(math.factorial(c) for c in counts)
