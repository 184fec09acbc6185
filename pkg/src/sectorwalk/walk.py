"""The k <-> (k-d) down-up walk.

One step drops d uniformly random elements of S and then picks a superset of
the remainder T among all C(n-k+d, d) completions, with probability
proportional to the density. Each step of chain c consumes k+1 counter-based
uniforms: k drop keys (the d smallest are dropped) and one for the up move.

Two engines share that contract. Ground sets of at most 62 elements run
vectorized over chains with uint64 bitmasks and a sorted-array memo of log
weights; larger ground sets fall back to a per-chain loop. Both produce the
same trajectories.
"""

from __future__ import annotations

import itertools
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import rng as _rng
from .densities import Conditioned, Density, DensityError, ExternalField, PartitionConstrained, canon, normalized_table

MASK_LIMIT = 62
MATRIX_LIMIT = 5000
_BLOCK_CELLS = 1 << 22


class WalkError(ValueError):
    pass


@dataclass(frozen=True)
class WalkConfig:
    gap: int
    steps: int
    seed: int = 0
    chains: int = 1
    burnin: int = 0
    thin: int = 1

    def __post_init__(self):
        if self.gap < 1:
            raise WalkError("gap must be at least 1")
        if self.steps < 0 or self.burnin < 0:
            raise WalkError("steps and burnin must be nonnegative")
        if self.chains < 1 or self.thin < 1:
            raise WalkError("chains and thin must be positive")


def default_gap(mu: Density) -> int:
    """2 for matching-type and DPP densities, 2s for s partition blocks; capped at k."""
    base = mu
    while isinstance(base, (Conditioned, ExternalField)):
        base = base.base
    d = 2 * base.pc.s if isinstance(base, PartitionConstrained) else 2
    return max(1, min(d, mu.k))


def theoretical_gap(alpha: float) -> int:
    """ceil(4 (1/alpha - 1)) for an alpha-stable input."""
    if not 0 < alpha <= 1:
        raise WalkError("alpha must lie in (0, 1]")
    return max(1, math.ceil(4 * (1 / alpha - 1) - 1e-12))


def mixing_steps(gap: float, support_size: int, slack: float = 100.0) -> int:
    """ceil(log(support_size * slack) / gap)."""
    if gap <= 0:
        raise WalkError("chain with zero spectral gap does not mix")
    return math.ceil(math.log(support_size * slack) / gap)


def thread_count() -> int:
    env = os.environ.get("SECTORWALK_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), cap))
        except ValueError:
            pass
    return cap


# ----------------------------------------------------------------------------
# shared selection rule


def _select(lw: np.ndarray, u: float) -> int:
    """Index drawn with probability proportional to exp(lw)."""
    cum = np.cumsum(np.exp(lw - lw.max()))
    cum = cum / cum[-1]
    cum[-1] = 1.0
    return int(np.searchsorted(cum, u, side="right"))


def _drop_positions(keys: np.ndarray, d: int) -> np.ndarray:
    return np.sort(np.argsort(keys, kind="stable")[..., d:], axis=-1)


# ----------------------------------------------------------------------------
# generic engine (tuples)


class _TupleMemo:
    def __init__(self, mu: Density):
        self.mu, self.table, self.lock = mu, {}, threading.Lock()

    def get(self, S: tuple[int, ...]) -> float:
        v = self.table.get(S)
        if v is None:
            v = self.mu._log_eval(S)
            with self.lock:
                self.table[S] = v
        return v


def _generic_step(memo: _TupleMemo, n: int, S: tuple[int, ...], d: int, u: np.ndarray) -> tuple[int, ...]:
    k = len(S)
    keep = _drop_positions(u[:k], d)
    T = tuple(S[i] for i in keep)
    tset = set(T)
    comp = [x for x in range(n) if x not in tset]
    cands = [canon(T + c) for c in itertools.combinations(comp, d)]
    lw = np.array([memo.get(c) for c in cands])
    return cands[_select(lw, u[k])]


def down_up_step(mu: Density, S: Iterable[int], d: int, rng: np.random.Generator) -> tuple[int, ...]:
    """One down-up move from S using uniforms drawn from ``rng``."""
    S = canon(S)
    if not 1 <= d <= mu.k:
        raise WalkError(f"gap {d} outside [1, {mu.k}]")
    if mu.log_eval(S) == -math.inf:
        raise WalkError("start state outside support")
    return _generic_step(_TupleMemo(mu), mu.n, S, d, rng.random(mu.k + 1))


# ----------------------------------------------------------------------------
# vectorized engine (bitmasks)


class _MaskMemo:
    """Sorted uint64 keys -> log weight; unknown keys are evaluated on demand."""

    def __init__(self, mu: Density):
        self.mu = mu
        self.keys = np.empty(0, dtype=np.uint64)
        self.vals = np.empty(0, dtype=np.float64)
        self.lock = threading.Lock()

    def _find(self, q: np.ndarray):
        pos = np.searchsorted(self.keys, q)
        hit = np.zeros(len(q), dtype=bool)
        ok = pos < len(self.keys)
        hit[ok] = self.keys[pos[ok]] == q[ok]
        return pos, hit

    def lookup(self, masks: np.ndarray) -> np.ndarray:
        flat = masks.ravel()
        uq, inv = np.unique(flat, return_inverse=True)
        with self.lock:
            pos, hit = self._find(uq)
            if not hit.all():
                miss = uq[~hit]
                vals = np.array([self.mu._log_eval(_mask_tuple(int(m))) for m in miss])
                keys = np.concatenate([self.keys, miss])
                allv = np.concatenate([self.vals, vals])
                order = np.argsort(keys, kind="stable")
                self.keys, self.vals = keys[order], allv[order]
                pos, hit = self._find(uq)
            out = self.vals[pos]
        return out[inv].reshape(masks.shape)


def _mask_tuple(m: int) -> tuple[int, ...]:
    out = []
    i = 0
    while m:
        if m & 1:
            out.append(i)
        m >>= 1
        i += 1
    return tuple(out)


def _to_masks(elems: np.ndarray) -> np.ndarray:
    bits = np.left_shift(np.uint64(1), elems.astype(np.uint64))
    return np.bitwise_or.reduce(bits, axis=1) if elems.shape[1] else np.zeros(len(elems), dtype=np.uint64)


class _MaskEngine:
    def __init__(self, mu: Density, d: int, memo: _MaskMemo):
        self.mu, self.d, self.memo = mu, d, memo
        n, k = mu.n, mu.k
        self.width = n - k + d
        self.combos = np.array(list(itertools.combinations(range(self.width), d)), dtype=np.int64)

    def step(self, elems: np.ndarray, masks: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        n, k, d = self.mu.n, self.mu.k, self.d
        C = len(elems)
        rows_c = np.arange(C)
        # the d smallest drop keys, earliest position first on ties (a stable argsort)
        keys = u[:, :k].copy()
        drop = np.empty((C, d), dtype=np.int64)
        tmask = masks.copy()
        for i in range(d):
            drop[:, i] = np.argmin(keys, axis=1)
            keys[rows_c, drop[:, i]] = np.inf
            tmask ^= np.left_shift(np.uint64(1), elems[rows_c, drop[:, i]].astype(np.uint64))
        uT, inv = np.unique(tmask, return_inverse=True)
        added = np.empty((C, d), dtype=np.int64)
        new_masks = np.empty(C, dtype=np.uint64)
        M = len(self.combos)
        rows_per_block = max(1, _BLOCK_CELLS // M)
        order = np.argsort(inv, kind="stable")
        bounds = np.searchsorted(inv[order], np.arange(0, len(uT) + rows_per_block, rows_per_block))
        for b, lo in enumerate(range(0, len(uT), rows_per_block)):
            rows = uT[lo:lo + rows_per_block]
            free = ((rows[:, None] >> np.arange(n, dtype=np.uint64)[None, :]) & np.uint64(1)) == 0
            comp = np.nonzero(free)[1].reshape(len(rows), self.width)
            add = np.left_shift(np.uint64(1), comp[:, self.combos].astype(np.uint64))
            cand = rows[:, None] | np.bitwise_or.reduce(add, axis=2)
            lw = self.memo.lookup(cand)
            cum = np.cumsum(np.exp(lw - lw.max(axis=1, keepdims=True)), axis=1)
            cum = cum / cum[:, -1:]
            cum[:, -1] = 1.0
            members = order[bounds[b]:bounds[b + 1]]
            r = inv[members] - lo
            uu = u[members, k]
            flat = (cum + np.arange(len(rows))[:, None]).ravel()
            j = np.searchsorted(flat, r + uu, side="right") - r * M
            j = np.clip(j, 0, M - 1)
            prev = np.where(j > 0, cum[r, np.maximum(j - 1, 0)], -1.0)
            bad = np.nonzero(~((cum[r, j] > uu) & (prev <= uu)))[0]
            for t in bad:
                j[t] = np.searchsorted(cum[r[t]], uu[t], side="right")
            added[members] = np.take_along_axis(comp[r], self.combos[j], axis=1)
            new_masks[members] = cand[r, j]
        out = elems.copy()
        out[rows_c[:, None], drop] = added
        return np.sort(out, axis=1), new_masks


# ----------------------------------------------------------------------------
# chain drivers


def _start_states(mu: Density, S0, chains: int) -> np.ndarray:
    arr = np.asarray(S0, dtype=np.int64)
    if arr.ndim == 1:
        arr = np.broadcast_to(np.sort(arr), (chains, len(arr))).copy()
    elif arr.shape[0] != chains:
        raise WalkError("need one start state per chain")
    else:
        arr = np.sort(arr, axis=1)
    if arr.shape[1] != mu.k:
        raise WalkError(f"start state must have size {mu.k}")
    for S in map(tuple, np.unique(arr, axis=0).tolist()):
        if mu.log_eval(S) == -math.inf:
            raise WalkError("start state outside support")
    return arr


def _recorded(cfg: WalkConfig) -> list[int]:
    return [t for t in range(cfg.burnin, cfg.steps + 1) if (t - cfg.burnin) % cfg.thin == 0]


def _run_block(mu, d, memo, elems, chain_ids, cfg, record_times):
    keys = _rng.stream_keys(cfg.seed, chain_ids)
    recs = {}
    if 0 in record_times:
        recs[0] = elems.copy()
    if mu.n <= MASK_LIMIT:
        eng = _MaskEngine(mu, d, memo)
        masks = _to_masks(elems)
        for t in range(1, cfg.steps + 1):
            elems, masks = eng.step(elems, masks, _rng.uniforms(keys, t, mu.k + 1))
            if t in record_times:
                recs[t] = elems.copy()
    else:
        states = [tuple(r) for r in elems.tolist()]
        for t in range(1, cfg.steps + 1):
            u = _rng.uniforms(keys, t, mu.k + 1)
            states = [_generic_step(memo, mu.n, S, d, u[c]) for c, S in enumerate(states)]
            if t in record_times:
                recs[t] = np.array(states, dtype=np.int64).reshape(len(states), mu.k)
    return recs


def run_chains(mu: Density, S0, cfg: WalkConfig, *, record: str = "final",
               chain_offset: int = 0, threads: int | None = None):
    """Advance ``cfg.chains`` independent chains.

    ``record="final"`` returns an array (chains, k) of final states.
    ``record="samples"`` returns ``(times, states)`` with states shaped
    (len(times), chains, k), keeping t = burnin, burnin+thin, ... <= steps.
    """
    if mu.k == 0:
        raise WalkError("level-0 density has a single state; nothing to walk")
    if cfg.gap > mu.k:
        raise WalkError(f"gap {cfg.gap} exceeds level {mu.k}")
    elems = _start_states(mu, S0, cfg.chains)
    times = [cfg.steps] if record == "final" else _recorded(cfg)
    tset = set(times)
    memo = _MaskMemo(mu) if mu.n <= MASK_LIMIT else _TupleMemo(mu)
    ids = np.arange(chain_offset, chain_offset + cfg.chains, dtype=np.uint64)
    nthreads = min(threads or thread_count(), cfg.chains)
    if nthreads <= 1:
        parts = [_run_block(mu, cfg.gap, memo, elems, ids, cfg, tset)]
    else:
        splits = np.array_split(np.arange(cfg.chains), nthreads)
        with ThreadPoolExecutor(nthreads) as pool:
            parts = list(pool.map(lambda ix: _run_block(mu, cfg.gap, memo, elems[ix], ids[ix], cfg, tset), splits))
    stacked = {t: np.concatenate([p[t] for p in parts], axis=0) for t in times}
    if record == "final":
        return stacked[cfg.steps]
    return times, np.stack([stacked[t] for t in times]) if times else np.empty((0, cfg.chains, mu.k), dtype=np.int64)


def run_chain(mu: Density, S0: Iterable[int], cfg: WalkConfig) -> list[tuple[int, ...]]:
    """Full trajectory of chain 0: ``cfg.steps + 1`` states starting with S0."""
    S0 = canon(S0)
    if cfg.steps == 0:
        if mu.log_eval(S0) == -math.inf:
            raise WalkError("start state outside support")
        return [S0]
    one = WalkConfig(cfg.gap, cfg.steps, cfg.seed, 1, 0, 1)
    _, states = run_chains(mu, S0, one, record="samples", threads=1)
    return [tuple(int(x) for x in s[0]) for s in states]


# ----------------------------------------------------------------------------
# exact analysis


@dataclass
class TransitionMatrix:
    states: list[tuple[int, ...]]
    P: np.ndarray
    pi: np.ndarray
    d: int

    @property
    def index(self) -> dict[tuple[int, ...], int]:
        return {S: i for i, S in enumerate(self.states)}

    def eigenvalues(self) -> np.ndarray:
        """Real spectrum via the pi-symmetrized matrix, descending."""
        r = np.sqrt(self.pi)
        A = r[:, None] * self.P / r[None, :]
        return np.sort(np.linalg.eigvalsh((A + A.T) / 2))[::-1]


def exact_transition_matrix(mu: Density, d: int, limit: int = MATRIX_LIMIT) -> TransitionMatrix:
    """Dense P = D_{k->k-d} U_{k-d->k} over the positive-weight states."""
    if not 1 <= d <= mu.k:
        raise WalkError(f"gap {d} outside [1, {mu.k}]")
    states = []
    for S in mu.support():
        states.append(S)
        if len(states) > limit:
            raise WalkError(f"support exceeds {limit} states")
    if not states:
        raise WalkError("empty support")
    states.sort()
    idx = {S: i for i, S in enumerate(states)}
    lw = np.array([mu._log_eval(S) for S in states])
    pi = np.exp(lw - lw.max())
    pi /= pi.sum()
    N = len(states)
    P = np.zeros((N, N))
    ups: dict[tuple[int, ...], tuple[list[int], np.ndarray]] = {}
    drop_w = 1.0 / math.comb(mu.k, d)
    for i, S in enumerate(states):
        for T in itertools.combinations(S, mu.k - d):
            if T not in ups:
                tset = set(T)
                comp = [x for x in range(mu.n) if x not in tset]
                js = [idx[c] for c in (canon(T + c) for c in itertools.combinations(comp, d)) if c in idx]
                w = lw[js]
                p = np.exp(w - w.max())
                ups[T] = (js, p / p.sum())
            js, p = ups[T]
            P[i, js] += drop_w * p
    return TransitionMatrix(states, P, pi, d)


def spectral_gap(tm: TransitionMatrix, tol: float = 1e-10) -> float:
    """1 - lambda_2; 1 for a single state, 0 when eigenvalue 1 repeats."""
    if len(tm.states) == 1:
        return 1.0
    gap = 1.0 - float(tm.eigenvalues()[1])
    return 0.0 if gap < tol else min(gap, 1.0)


def tv_to_stationary(samples: Iterable[Iterable[int]], mu: Density | Mapping) -> float:
    """Half the l1 distance between the empirical law and the exact table."""
    table = mu if isinstance(mu, Mapping) else normalized_table(mu)
    counts: dict[tuple[int, ...], int] = {}
    total = 0
    for S in samples:
        key = canon(S)
        counts[key] = counts.get(key, 0) + 1
        total += 1
    if total == 0:
        raise DensityError("no samples")
    keys = set(table) | set(counts)
    return 0.5 * sum(abs(counts.get(S, 0) / total - table.get(S, 0.0)) for S in keys)
