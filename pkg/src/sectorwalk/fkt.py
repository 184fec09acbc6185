"""Perfect-matching partition functions of planar graphs (Kasteleyn / FKT).

A Pfaffian orientation makes the signed adjacency matrix ``A`` satisfy
``det(A) = (sum over perfect matchings of prod w)^2``. The float path uses
``slogdet``; the exact path scales to an integer matrix and runs Bareiss
elimination.
"""

from __future__ import annotations

import math
from collections import deque
from fractions import Fraction
from typing import Iterable

import numpy as np

from .graph import EmbeddedGraph, GraphError, faces, has_perfect_matching, induce

LOG_RANGE = 600.0
COND_LIMIT = 1e12
EXACT_MAX_N = 30


class NumericError(ArithmeticError):
    pass


def pfaffian_orient(g: EmbeddedGraph) -> dict[int, tuple[int, int]]:
    """Map edge index -> (tail, head) with every inner face oddly oriented.

    Spanning-tree edges are oriented parent -> child. The remaining edges
    form a spanning tree of the dual; faces are peeled leaf-first and each
    face's last free edge is set so its co-directed count is odd.
    """
    if g.n and len(g.components()) > 1:
        raise GraphError("pfaffian_orient needs a connected graph; orient components separately")
    orient: dict[int, tuple[int, int]] = {}
    if g.m == 0:
        return orient
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for idx in g.rotation[v]:
            a, b, _ = g.edges[idx]
            u = b if a == v else a
            if u not in seen:
                seen.add(u)
                orient[idx] = (v, u)
                queue.append(u)

    fs = faces(g)
    face_edges = [[g.edge_index(a, b) for a, b in f] for f in fs.faces]
    free = [sum(1 for e in fe if e not in orient) for fe in face_edges]
    owners: dict[int, list[int]] = {}
    for fi, fe in enumerate(face_edges):
        for e in fe:
            if e not in orient:
                owners.setdefault(e, []).append(fi)

    stack = [fi for fi in range(len(fs.faces)) if fi != fs.outer_face_index and free[fi] == 1]
    while stack:
        fi = stack.pop()
        if free[fi] != 1:
            continue
        (e,) = [x for x in face_edges[fi] if x not in orient]
        dart = fs.faces[fi][face_edges[fi].index(e)]
        codirected = sum(1 for d, x in zip(fs.faces[fi], face_edges[fi]) if x in orient and orient[x] == d)
        orient[e] = dart if codirected % 2 == 0 else (dart[1], dart[0])
        for other in owners[e]:
            free[other] -= 1
            if other != fs.outer_face_index and free[other] == 1:
                stack.append(other)
    if len(orient) != g.m:
        raise GraphError("orientation incomplete: embedding is not a valid planar rotation system")
    if not is_kasteleyn(g, orient):
        raise GraphError("orientation failed the Kasteleyn face check")
    return orient


def is_kasteleyn(g: EmbeddedGraph, orient: dict[int, tuple[int, int]]) -> bool:
    fs = faces(g)
    for fi, f in enumerate(fs.faces):
        if fi == fs.outer_face_index:
            continue
        codirected = sum(1 for d in f if orient[g.edge_index(*d)] == d)
        if codirected % 2 == 0:
            return False
    return True


def skew_kernel(g: EmbeddedGraph, orient: dict[int, tuple[int, int]] | None = None) -> np.ndarray:
    orient = pfaffian_orient(g) if orient is None else orient
    a = np.zeros((g.n, g.n))
    for idx, (t, h) in orient.items():
        w = g.edges[idx][2]
        a[t, h] = w
        a[h, t] = -w
    return a


def _bareiss_det(m: list[list[int]]) -> int:
    m = [row[:] for row in m]
    n = len(m)
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1] if n else 1


def _exact_component_pm(g: EmbeddedGraph) -> Fraction:
    orient = pfaffian_orient(g)
    weights = [Fraction(w) for _, _, w in g.edges]
    scale = math.lcm(*(x.denominator for x in weights)) if weights else 1
    m = [[0] * g.n for _ in range(g.n)]
    for idx, (t, h) in orient.items():
        x = int(weights[idx] * scale)
        m[t][h], m[h][t] = x, -x
    det = _bareiss_det(m)
    root = math.isqrt(det) if det > 0 else 0
    if root * root != det:
        raise NumericError("exact determinant is not a perfect square; orientation is not Pfaffian")
    return Fraction(root, scale ** (g.n // 2))


def _float_component_logpm(g: EmbeddedGraph) -> float:
    a = skew_kernel(g)
    sign, logdet = np.linalg.slogdet(a)
    if sign <= 0:
        # a Pfaffian square cannot be negative; tiny negatives are roundoff
        scale = float(np.sum(np.log(np.maximum(np.linalg.norm(a, axis=1), 1e-300))))
        if sign < 0 and logdet - scale > math.log(1e-9):
            raise NumericError("negative determinant of skew kernel beyond tolerance")
        return -math.inf
    if np.linalg.cond(a) > COND_LIMIT:
        if g.n <= EXACT_MAX_N:
            val = _exact_component_pm(g)
            return math.log(val) if val > 0 else -math.inf
        raise NumericError(f"skew kernel ill-conditioned (cond > {COND_LIMIT:g})")
    return 0.5 * logdet


def _components(g: EmbeddedGraph) -> Iterable[EmbeddedGraph]:
    comps = g.components()
    if len(comps) == 1:
        yield g
    else:
        for comp in comps:
            yield induce(g, comp)


def log_pm_partition_function(g: EmbeddedGraph) -> float:
    """log of the weighted perfect-matching sum (-inf when there is none)."""
    total = 0.0
    for comp in _components(g):
        if comp.n % 2:
            return -math.inf
        if comp.n == 0:
            continue
        # exact zero detection: the float determinant is unreliable there
        if not has_perfect_matching(comp):
            return -math.inf
        total += _float_component_logpm(comp)
    return total


def pm_partition_function(g: EmbeddedGraph, exact: bool = False) -> float | Fraction:
    """Weighted perfect-matching sum of a planar embedded graph.

    With ``exact=True`` weights are read as rationals and the result is a
    ``Fraction`` (graphs with at most 30 vertices per component).
    """
    if exact:
        total = Fraction(1)
        for comp in _components(g):
            if comp.n % 2:
                return Fraction(0)
            if comp.n == 0:
                continue
            if comp.n > EXACT_MAX_N:
                raise NumericError(f"exact backend limited to {EXACT_MAX_N} vertices per component")
            total *= _exact_component_pm(comp)
        return total
    lv = log_pm_partition_function(g)
    if lv == -math.inf:
        return 0.0
    if abs(lv) > LOG_RANGE:
        raise NumericError(f"|log value| = {abs(lv):.1f} exceeds {LOG_RANGE}; use log_pm_partition_function")
    return math.exp(lv)


def log_monomer_weight(g: EmbeddedGraph, monomers: Iterable[int]) -> float:
    monomers = set(monomers)
    out = 0.0
    for v in monomers:
        if g.lam[v] <= 0:
            return -math.inf
        out += math.log(g.lam[v])
    if (g.n - len(monomers)) % 2:
        return -math.inf
    rest = [v for v in range(g.n) if v not in monomers]
    if not rest:
        return out
    return out + log_pm_partition_function(induce(g, rest))


def monomer_weight(g: EmbeddedGraph, monomers: Iterable[int], exact: bool = False) -> float | Fraction:
    """prod_{v in S} lambda(v) times the perfect-matching sum on the complement."""
    monomers = set(monomers)
    rest = [v for v in range(g.n) if v not in monomers]
    if exact:
        lam = Fraction(1)
        for v in monomers:
            lam *= Fraction(g.lam[v])
        return lam * pm_partition_function(induce(g, rest), exact=True) if lam else Fraction(0)
    lv = log_monomer_weight(g, monomers)
    return 0.0 if lv == -math.inf else math.exp(lv)


def brute_force_pm(g: EmbeddedGraph, exact: bool = False) -> float | Fraction:
    """Weighted perfect-matching sum by direct recursion (n <= 16)."""
    if g.n > 16:
        raise GraphError("brute_force_pm limited to 16 vertices")
    conv = Fraction if exact else float
    nbrs = [[(u, conv(g.weight(v, u))) for u in g.neighbors(v)] for v in range(g.n)]
    memo: dict[int, object] = {}

    def rec(free: int):
        if free == 0:
            return conv(1)
        if free in memo:
            return memo[free]
        v = (free & -free).bit_length() - 1
        total = conv(0)
        rest = free & ~(1 << v)
        for u, w in nbrs[v]:
            if w and rest >> u & 1:
                total += w * rec(rest & ~(1 << u))
        memo[free] = total
        return total

    return rec((1 << g.n) - 1)

