"""Unnormalized densities on k-subsets of a ground set [n].

Every density exposes ``log_eval`` (``-inf`` for zero weight) and ``eval``.
Subclasses implement ``_log_eval`` on a sorted tuple; the public methods
canonicalize and validate the argument first.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import fkt
from .graph import EmbeddedGraph

ENUM_LIMIT = 10**6


class DensityError(ValueError):
    pass


class EnumerationError(DensityError):
    pass


def canon(S: Iterable[int]) -> tuple[int, ...]:
    return tuple(sorted(int(x) for x in S))


class Density:
    n: int
    k: int

    def _log_eval(self, S: tuple[int, ...]) -> float:
        raise NotImplementedError

    def log_eval(self, S: Iterable[int]) -> float:
        t = canon(S)
        if len(t) != self.k or len(set(t)) != self.k or (t and (t[0] < 0 or t[-1] >= self.n)):
            raise DensityError(f"expected a {self.k}-subset of [0, {self.n}), got {list(t)}")
        return self._log_eval(t)

    def eval(self, S: Iterable[int]) -> float:
        lv = self.log_eval(S)
        return 0.0 if lv == -math.inf else math.exp(lv)

    def support_hint(self) -> Iterable[tuple[int, ...]] | None:
        return None

    def descriptor(self) -> dict:
        return {"type": type(self).__name__, "n": self.n, "k": self.k}

    def support(self, limit: int = ENUM_LIMIT) -> Iterator[tuple[int, ...]]:
        """Positive-weight k-subsets, by the hint or by brute force."""
        hint = self.support_hint()
        if hint is None:
            if math.comb(self.n, self.k) > limit:
                raise EnumerationError(f"C({self.n},{self.k}) = {math.comb(self.n, self.k)} exceeds {limit}")
            hint = itertools.combinations(range(self.n), self.k)
        for S in hint:
            S = canon(S)
            if self._log_eval(S) > -math.inf:
                yield S


# ----------------------------------------------------------------------------
# monomer-dimer and k-matchings


class MonomerDimer(Density):
    """Level-n density on V x {0,1}; element 2v+b, with b = 1 meaning v is a monomer."""

    def __init__(self, g: EmbeddedGraph):
        self.g, self.n, self.k = g, 2 * g.n, g.n

    def _log_eval(self, S):
        monomers = []
        last = -1
        for x in S:
            v = x >> 1
            if v == last:
                return -math.inf
            last = v
            if x & 1:
                monomers.append(v)
        return fkt.log_monomer_weight(self.g, monomers)

    def support_hint(self):
        if self.g.n > 20:
            return None
        return (encode_monomers(self.g.n, M) for r in range(self.g.n + 1)
                for M in itertools.combinations(range(self.g.n), r))

    def descriptor(self):
        return {**super().descriptor(), "graph_n": self.g.n, "graph_m": self.g.m}


def encode_monomers(nv: int, monomers: Iterable[int]) -> tuple[int, ...]:
    mono = set(monomers)
    return tuple(2 * v + (v in mono) for v in range(nv))


def decode_monomers(S: Iterable[int]) -> tuple[int, ...]:
    return tuple(x >> 1 for x in sorted(S) if x & 1)


class KMatching(Density):
    """Monomer sets of weighted m-matchings: level n - 2m on [n]."""

    def __init__(self, g: EmbeddedGraph, m: int):
        if m < 0 or 2 * m > g.n:
            raise DensityError(f"matching size {m} outside [0, {g.n // 2}]")
        self.g, self.m, self.n, self.k = g, m, g.n, g.n - 2 * m

    def _log_eval(self, S):
        return fkt.log_monomer_weight(self.g, S)

    def descriptor(self):
        return {**super().descriptor(), "m": self.m, "graph_m": self.g.m}


def monomer_dimer_density(g: EmbeddedGraph) -> MonomerDimer:
    return MonomerDimer(g)


def k_matching_density(g: EmbeddedGraph, m: int) -> KMatching:
    return KMatching(g, m)


# ----------------------------------------------------------------------------
# nonsymmetric DPPs


@dataclass(frozen=True, eq=False)
class NdppKernel:
    L: np.ndarray

    def __post_init__(self):
        L = np.array(self.L, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise DensityError("kernel must be a square matrix")
        if not np.all(np.isfinite(L)):
            raise DensityError("kernel has non-finite entries")
        L.setflags(write=False)
        object.__setattr__(self, "L", L)
        sym = (L + L.T) / 2
        norm = float(np.linalg.norm(L, 2)) if L.size else 0.0
        lo = float(np.linalg.eigvalsh(sym).min()) if L.size else 0.0
        if lo < -1e-9 * norm:
            raise DensityError(f"symmetric part of kernel is not PSD (min eigenvalue {lo:.3g})")
        object.__setattr__(self, "sym", sym)
        object.__setattr__(self, "scale", float(np.abs(L).max()) if L.size else 0.0)

    @property
    def n(self) -> int:
        return self.L.shape[0]


class Ndpp(Density):
    """det(L_SS); minors within 1e-9 * max|L|^k of zero are treated as zero."""

    def __init__(self, kernel: NdppKernel, k: int):
        if not 0 <= k <= kernel.n:
            raise DensityError(f"k = {k} outside [0, {kernel.n}]")
        self.kernel, self.n, self.k = kernel, kernel.n, k
        self.tol = 1e-9 * kernel.scale ** k

    def _log_eval(self, S):
        if not S:
            return 0.0
        idx = list(S)
        det = float(np.linalg.det(self.kernel.L[np.ix_(idx, idx)]))
        if abs(det) <= self.tol:
            return -math.inf
        if det < 0:
            raise fkt.NumericError(f"negative principal minor {det:.3g} on {idx}")
        return math.log(det)

    def greedy_start(self) -> tuple[int, ...] | None:
        """Greedy determinant maximizer; the first support set if greedy lands on a zero minor."""
        S: list[int] = []
        L = self.kernel.L
        for _ in range(self.k):
            best, arg = -math.inf, None
            for x in range(self.n):
                if x not in S:
                    idx = S + [x]
                    det = float(np.linalg.det(L[np.ix_(idx, idx)]))
                    if det > best:
                        best, arg = det, x
            S.append(arg)
        S = canon(S)
        if self._log_eval(S) > -math.inf:
            return S
        return next(iter(self.support()), None)

    def descriptor(self):
        return {**super().descriptor(), "kernel_scale": self.kernel.scale}


def ndpp_density(L, k: int) -> Ndpp:
    return Ndpp(L if isinstance(L, NdppKernel) else NdppKernel(np.asarray(L, dtype=float)), k)


def read_kernel(text: str) -> NdppKernel:
    """CSV rows of floats, or JSON (a list of rows or {"L": rows})."""
    s = text.strip()
    if s.startswith("[") or s.startswith("{"):
        doc = json.loads(s)
        rows = doc["L"] if isinstance(doc, dict) else doc
    else:
        rows = [[float(x) for x in r] for r in csv.reader(io.StringIO(s)) if r]
    try:
        L = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DensityError(f"malformed kernel: {exc}") from exc
    return NdppKernel(L)


def load_kernel(path: str) -> NdppKernel:
    with open(path) as fh:
        return read_kernel(fh.read())


# ----------------------------------------------------------------------------
# transformations


class Conditioned(Density):
    """Pin ``pinned`` into every set; the rest of the ground set is relabeled in order."""

    def __init__(self, mu: Density, pinned: Iterable[int], witness: Iterable[int] | None = None):
        self.base = mu
        self.pinned = canon(pinned)
        if len(self.pinned) > mu.k or len(set(self.pinned)) != len(self.pinned):
            raise DensityError("pinned set must be a subset of size at most k")
        if any(not 0 <= x < mu.n for x in self.pinned):
            raise DensityError("pinned element outside ground set")
        pinset = set(self.pinned)
        self.labels = tuple(x for x in range(mu.n) if x not in pinset)
        self.n, self.k = len(self.labels), mu.k - len(self.pinned)
        if witness is not None:
            w = canon(witness)
            ok = pinset.issubset(w) and mu.log_eval(w) > -math.inf
        else:
            ok = self._has_support()
        if not ok:
            raise DensityError("conditioning outside support")

    def _has_support(self) -> bool:
        try:
            return next(iter(self.support()), None) is not None
        except EnumerationError:
            return True

    def lift(self, S: Iterable[int]) -> tuple[int, ...]:
        return tuple(sorted(self.pinned + tuple(self.labels[x] for x in S)))

    def _log_eval(self, S):
        return self.base._log_eval(self.lift(S))

    def support_hint(self):
        hint = self.base.support_hint()
        if hint is None:
            return None
        pos = {x: i for i, x in enumerate(self.labels)}
        pinset = set(self.pinned)
        return (tuple(pos[x] for x in S if x not in pinset) for S in map(canon, hint) if pinset.issubset(S))

    def descriptor(self):
        return {"type": "Conditioned", "n": self.n, "k": self.k, "pinned": list(self.pinned),
                "base": self.base.descriptor()}


def condition(mu: Density, pinned: Iterable[int], witness: Iterable[int] | None = None) -> Density:
    pinned = canon(pinned)
    return mu if not pinned else Conditioned(mu, pinned, witness)


class ExternalField(Density):
    def __init__(self, mu: Density, field: Sequence[float]):
        field = [float(x) for x in field]
        if len(field) != mu.n:
            raise DensityError("field needs one entry per ground element")
        if any(not x > 0 for x in field):
            raise DensityError("external field entries must be positive")
        self.base, self.field, self.n, self.k = mu, tuple(field), mu.n, mu.k
        self._logf = [math.log(x) for x in field]

    def _log_eval(self, S):
        lv = self.base._log_eval(S)
        return lv if lv == -math.inf else lv + sum(self._logf[i] for i in S)

    def support_hint(self):
        return self.base.support_hint()

    def descriptor(self):
        return {"type": "ExternalField", "n": self.n, "k": self.k, "base": self.base.descriptor()}


def apply_external_field(mu: Density, field: Sequence[float]) -> Density:
    return ExternalField(mu, field)


@dataclass(frozen=True)
class PartitionConstraint:
    blocks: tuple[tuple[int, ...], ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(canon(b) for b in self.blocks))
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if len(self.blocks) != len(self.counts):
            raise DensityError("one count per block required")
        if any(c < 0 for c in self.counts):
            raise DensityError("counts must be nonnegative")
        flat = [x for b in self.blocks for x in b]
        if len(flat) != len(set(flat)):
            raise DensityError("blocks overlap")

    @property
    def s(self) -> int:
        return len(self.blocks)

    def validate(self, n: int, k: int) -> None:
        if sorted(x for b in self.blocks for x in b) != list(range(n)):
            raise DensityError(f"blocks must partition [0, {n})")
        if sum(self.counts) != k:
            raise DensityError(f"counts sum to {sum(self.counts)}, density level is {k}")
        for b, c in zip(self.blocks, self.counts):
            if c > len(b):
                raise DensityError(f"infeasible constraint: block of size {len(b)} needs {c} elements")

    def block_of(self, n: int) -> list[int]:
        out = [0] * n
        for i, b in enumerate(self.blocks):
            for x in b:
                out[x] = i
        return out


class PartitionConstrained(Density):
    def __init__(self, mu: Density, pc: PartitionConstraint):
        pc.validate(mu.n, mu.k)
        self.base, self.pc, self.n, self.k = mu, pc, mu.n, mu.k
        self._block = pc.block_of(mu.n)

    def satisfies(self, S) -> bool:
        cnt = [0] * self.pc.s
        for x in S:
            cnt[self._block[x]] += 1
        return tuple(cnt) == self.pc.counts

    def _log_eval(self, S):
        return self.base._log_eval(S) if self.satisfies(S) else -math.inf

    def support_hint(self):
        hint = self.base.support_hint()
        if hint is not None:
            return (S for S in map(canon, hint) if self.satisfies(S))
        total = 1
        for b, c in zip(self.pc.blocks, self.pc.counts):
            total *= math.comb(len(b), c)
        if total > ENUM_LIMIT:
            return None
        per_block = [itertools.combinations(b, c) for b, c in zip(self.pc.blocks, self.pc.counts)]
        return (canon(x for part in combo for x in part) for combo in itertools.product(*per_block))

    def descriptor(self):
        return {"type": "PartitionConstrained", "n": self.n, "k": self.k,
                "blocks": [list(b) for b in self.pc.blocks], "counts": list(self.pc.counts),
                "base": self.base.descriptor()}


def partition_constrained(mu: Density, pc: PartitionConstraint) -> Density:
    return PartitionConstrained(mu, pc)


def parse_constraint(document: str | dict) -> PartitionConstraint:
    doc = json.loads(document) if isinstance(document, str) else document
    try:
        return PartitionConstraint(tuple(tuple(b) for b in doc["blocks"]), tuple(doc["counts"]))
    except (KeyError, TypeError) as exc:
        raise DensityError(f"constraint document needs 'blocks' and 'counts': {exc}") from exc


def load_constraint(path: str) -> PartitionConstraint:
    with open(path) as fh:
        return parse_constraint(fh.read())


# ----------------------------------------------------------------------------
# explicit tables


class Uniform(Density):
    def __init__(self, n: int, k: int):
        if not 0 <= k <= n:
            raise DensityError("need 0 <= k <= n")
        self.n, self.k = n, k

    def _log_eval(self, S):
        return 0.0


class Explicit(Density):
    def __init__(self, table: Mapping[Iterable[int], float], n: int | None = None, k: int | None = None):
        t: dict[tuple[int, ...], float] = {}
        for key, w in table.items():
            w = float(w)
            if not w >= 0:
                raise DensityError("weights must be nonnegative")
            t[canon(key)] = w
        sizes = {len(key) for key in t}
        if len(sizes) > 1:
            raise DensityError(f"inconsistent key sizes {sorted(sizes)}")
        if k is None:
            k = sizes.pop() if sizes else 0
        elif sizes and sizes != {k}:
            raise DensityError(f"keys must have size {k}")
        top = max((x for key in t for x in key), default=-1) + 1
        if n is None:
            n = top
        elif top > n:
            raise DensityError("key element outside ground set")
        self.table, self.n, self.k = t, n, k

    def _log_eval(self, S):
        w = self.table.get(S, 0.0)
        return math.log(w) if w > 0 else -math.inf

    def support_hint(self):
        return [S for S, w in self.table.items() if w > 0]


def explicit_density(table: Mapping[Iterable[int], float], n: int | None = None, k: int | None = None) -> Explicit:
    return Explicit(table, n, k)


def block_density(r: int, blocks: int) -> Explicit:
    """Sum over blocks of the product of that block's r variables."""
    return Explicit({tuple(range(b * r, (b + 1) * r)): 1.0 for b in range(blocks)}, n=r * blocks, k=r)


def homogenize(table: Mapping[Iterable[int], float], n: int) -> Explicit:
    """Density on 2^[n] -> level-n density on [2n]: 2i+1 marks i in S, 2i marks i not in S."""
    return Explicit({encode_monomers(n, S): w for S, w in table.items()}, n=2 * n, k=n)


def normalized_table(mu: Density, limit: int = ENUM_LIMIT) -> dict[tuple[int, ...], float]:
    """Exact probabilities of every positive-weight k-subset."""
    states = list(mu.support(limit))
    if not states:
        raise DensityError("empty support")
    lw = np.array([mu._log_eval(S) for S in states])
    p = np.exp(lw - lw.max())
    p /= p.sum()
    return dict(zip(states, p.tolist()))
