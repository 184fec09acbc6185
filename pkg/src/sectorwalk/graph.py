"""Planar graphs with a combinatorial embedding (rotation system).

Vertices are ``0..n-1``. Each vertex carries a clockwise cyclic list of
incident edge indices; faces are recovered by walking darts with the
rotation, and the embedding is validated with Euler's formula.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddedGraph:
    n: int
    edges: tuple[tuple[int, int, float], ...]
    lam: tuple[float, ...]
    rotation: tuple[tuple[int, ...], ...]
    _adj: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        adj: dict[tuple[int, int], int] = {}
        for idx, (u, v, w) in enumerate(self.edges):
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise GraphError(f"edge {idx} has endpoint outside [0, {self.n})")
            if u == v:
                raise GraphError(f"edge {idx} is a self-loop")
            key = (min(u, v), max(u, v))
            if key in adj:
                raise GraphError(f"parallel edge {key}")
            if not w >= 0:
                raise GraphError(f"negative weight on edge {idx}")
            adj[key] = idx
        if len(self.lam) != self.n:
            raise GraphError("lambda must have one entry per vertex")
        if any(not x >= 0 for x in self.lam):
            raise GraphError("negative weight in lambda")
        if len(self.rotation) != self.n:
            raise GraphError("rotation must have one list per vertex")
        for v, rot in enumerate(self.rotation):
            incident = sorted(i for i, (a, b, _) in enumerate(self.edges) if v in (a, b))
            if sorted(rot) != incident:
                raise GraphError(f"rotation at vertex {v} does not list its incident edges exactly once")
        object.__setattr__(self, "_adj", adj)
        check_euler(self)

    @property
    def m(self) -> int:
        return len(self.edges)

    def edge_index(self, u: int, v: int) -> int | None:
        return self._adj.get((min(u, v), max(u, v)))

    def weight(self, u: int, v: int) -> float:
        idx = self.edge_index(u, v)
        return 0.0 if idx is None else self.edges[idx][2]

    def neighbors(self, v: int) -> list[int]:
        out = []
        for idx in self.rotation[v]:
            a, b, _ = self.edges[idx]
            out.append(b if a == v else a)
        return out

    def components(self) -> list[list[int]]:
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            stack, comp = [s], []
            seen[s] = True
            while stack:
                v = stack.pop()
                comp.append(v)
                for u in self.neighbors(v):
                    if not seen[u]:
                        seen[u] = True
                        stack.append(u)
            comps.append(sorted(comp))
        return comps

    def with_weights(self, w: Sequence[float] | None = None, lam: Sequence[float] | None = None) -> "EmbeddedGraph":
        edges = self.edges
        if w is not None:
            edges = tuple((u, v, x) for (u, v, _), x in zip(self.edges, w, strict=True))
        return EmbeddedGraph(self.n, edges, tuple(lam) if lam is not None else self.lam, self.rotation)


@dataclass(frozen=True)
class FaceSet:
    faces: list[list[tuple[int, int]]]  # darts (u, v) in traversal order
    outer_face_index: int
    component: list[int]  # component id of each face


def _next_dart(g: EmbeddedGraph, pos: dict, u: int, v: int) -> tuple[int, int]:
    rot = g.rotation[v]
    i = pos[v][g.edge_index(u, v)]
    a, b, _ = g.edges[rot[(i + 1) % len(rot)]]
    return v, (b if a == v else a)


def _trace_faces(g: EmbeddedGraph) -> tuple[list[list[tuple[int, int]]], list[int], list[list[int]]]:
    pos = [{e: i for i, e in enumerate(rot)} for rot in g.rotation]
    comps = g.components()
    comp_of = [0] * g.n
    for c, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = c
    seen: set[tuple[int, int]] = set()
    faces, owner = [], []
    for u, v, _ in g.edges:
        for dart in ((u, v), (v, u)):
            if dart in seen:
                continue
            face = []
            d = dart
            while d not in seen:
                seen.add(d)
                face.append(d)
                d = _next_dart(g, pos, *d)
            faces.append(face)
            owner.append(comp_of[dart[0]])
    return faces, owner, comps


def check_euler(g: EmbeddedGraph) -> None:
    faces, owner, comps = _trace_faces(g)
    for c, comp in enumerate(comps):
        e = sum(1 for u, _, _ in g.edges if u in set(comp))
        f = max(1, sum(1 for o in owner if o == c))
        if len(comp) - e + f != 2:
            raise GraphError("not a planar embedding (Euler check failed)")


def faces(g: EmbeddedGraph) -> FaceSet:
    """Face cycles of the embedding; the longest face is designated outer."""
    fs, owner, _ = _trace_faces(g)
    outer = max(range(len(fs)), key=lambda i: len(fs[i])) if fs else -1
    return FaceSet(fs, outer, owner)


def induce(g: EmbeddedGraph, keep: Iterable[int]) -> EmbeddedGraph:
    """Induced subgraph on ``keep``; vertices are relabelled in increasing order."""
    keep = sorted(set(keep))
    new = {v: i for i, v in enumerate(keep)}
    kept_edges, remap = [], {}
    for idx, (u, v, w) in enumerate(g.edges):
        if u in new and v in new:
            remap[idx] = len(kept_edges)
            kept_edges.append((new[u], new[v], w))
    rotation = tuple(tuple(remap[e] for e in g.rotation[v] if e in remap) for v in keep)
    return EmbeddedGraph(len(keep), tuple(kept_edges), tuple(g.lam[v] for v in keep), rotation)


Matching = frozenset  # of edges (u, v) with u < v


def matching_weight(g: EmbeddedGraph, matching: Iterable[tuple[int, int]]) -> float:
    matched = set()
    weight = 1.0
    for u, v in matching:
        weight *= g.weight(u, v)
        matched.update((u, v))
    for v in range(g.n):
        if v not in matched:
            weight *= g.lam[v]
    return weight


def is_matching(g: EmbeddedGraph, matching: Iterable[tuple[int, int]]) -> bool:
    used = set()
    for u, v in matching:
        if g.edge_index(u, v) is None or u in used or v in used:
            return False
        used.update((u, v))
    return True


def _support_graph(g: EmbeddedGraph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from((u, v) for u, v, w in g.edges if w > 0)
    return h


def _as_matching(pairs) -> Matching:
    return frozenset((min(u, v), max(u, v)) for u, v in pairs)


def find_matching_of_size(g: EmbeddedGraph, m: int) -> Matching | None:
    """A matching with exactly ``m`` positive-weight edges, or None.

    A maximum-cardinality matching (blossom algorithm) is computed on the
    positive-weight support; any ``m`` of its edges form an ``m``-matching.
    The heaviest edges are kept.
    """
    if m < 0:
        raise GraphError(f"matching size {m} is negative")
    if 2 * m > g.n:
        return None
    if m == 0:
        return frozenset()
    best = nx.max_weight_matching(_support_graph(g), maxcardinality=True)
    if len(best) < m:
        return None
    ranked = sorted(_as_matching(best), key=lambda e: (-g.weight(*e), e))
    return frozenset(ranked[:m])


def max_weight_matching(g: EmbeddedGraph) -> Matching:
    """Matching maximising prod w(e) * prod_{unmatched} lambda(v).

    Works in log space: an edge is worth adding iff log w(uv) exceeds
    log lambda(u) + log lambda(v). Zero vertex weights get a large bonus so
    that those vertices are covered whenever possible.
    """
    big = 1e6
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    loglam = [math.log(x) if x > 0 else -big for x in g.lam]
    for u, v, w in g.edges:
        if w > 0:
            h.add_edge(u, v, weight=math.log(w) - loglam[u] - loglam[v])
    return _as_matching(nx.max_weight_matching(h))


def has_perfect_matching(g: EmbeddedGraph) -> bool:
    if g.n % 2:
        return False
    if g.n == 0:
        return True
    return 2 * len(nx.max_weight_matching(_support_graph(g), maxcardinality=True)) == g.n


def enumerate_matchings(g: EmbeddedGraph, size: int | None = None) -> list[Matching]:
    """Brute force over edge subsets; small graphs only."""
    live = [(min(u, v), max(u, v)) for u, v, w in g.edges if w > 0]
    sizes = range(g.n // 2 + 1) if size is None else [size]
    out = []
    for s in sizes:
        for combo in itertools.combinations(live, s):
            verts = [x for e in combo for x in e]
            if len(set(verts)) == len(verts):
                out.append(frozenset(combo))
    return out


# ----------------------------------------------------------------------------
# families

def from_coordinates(points: Sequence[tuple[float, float]], edge_list: Sequence[tuple[int, int]],
                     w: float | Sequence[float] = 1.0, lam: float | Sequence[float] = 1.0) -> EmbeddedGraph:
    """Build an embedding from a straight-line drawing (clockwise by angle)."""
    n = len(points)
    ws = [w] * len(edge_list) if isinstance(w, (int, float)) else list(w)
    lams = [lam] * n if isinstance(lam, (int, float)) else list(lam)
    edges = tuple((u, v, ws[i]) for i, (u, v) in enumerate(edge_list))
    rotation = []
    for v in range(n):
        inc = [i for i, (a, b) in enumerate(edge_list) if v in (a, b)]

        def angle(i, v=v):
            a, b = edge_list[i]
            o = b if a == v else a
            return math.atan2(points[o][1] - points[v][1], points[o][0] - points[v][0])

        rotation.append(tuple(sorted(inc, key=angle, reverse=True)))
    return EmbeddedGraph(n, edges, tuple(lams), tuple(rotation))


def path(n: int) -> EmbeddedGraph:
    if n < 1:
        raise GraphError("path needs n >= 1")
    return from_coordinates([(i, 0.0) for i in range(n)], [(i, i + 1) for i in range(n - 1)])


def cycle(n: int) -> EmbeddedGraph:
    if n < 3:
        raise GraphError("cycle needs n >= 3")
    pts = [(math.cos(2 * math.pi * i / n), math.sin(2 * math.pi * i / n)) for i in range(n)]
    return from_coordinates(pts, [(i, (i + 1) % n) for i in range(n)])


def grid(rows: int, cols: int) -> EmbeddedGraph:
    if rows < 1 or cols < 1:
        raise GraphError("grid needs positive dimensions")
    pts = [(c, -r) for r in range(rows) for c in range(cols)]
    idx = lambda r, c: r * cols + c  # noqa: E731
    edges = [(idx(r, c), idx(r, c + 1)) for r in range(rows) for c in range(cols - 1)]
    edges += [(idx(r, c), idx(r + 1, c)) for r in range(rows - 1) for c in range(cols)]
    return from_coordinates(pts, edges)


def triangulated_grid(rows: int, cols: int) -> EmbeddedGraph:
    """Grid with the down-right diagonal added in every unit square."""
    g = grid(rows, cols)
    pts = [(c, -r) for r in range(rows) for c in range(cols)]
    edges = [(u, v) for u, v, _ in g.edges]
    edges += [(r * cols + c, (r + 1) * cols + c + 1) for r in range(rows - 1) for c in range(cols - 1)]
    return from_coordinates(pts, edges)


def wheel(k: int) -> EmbeddedGraph:
    """Hub (vertex 0) joined to a k-cycle (vertices 1..k)."""
    if k < 3:
        raise GraphError("wheel needs a rim of at least 3 vertices")
    pts = [(0.0, 0.0)] + [(math.cos(2 * math.pi * i / k), math.sin(2 * math.pi * i / k)) for i in range(k)]
    edges = [(0, i + 1) for i in range(k)] + [(i + 1, (i + 1) % k + 1) for i in range(k)]
    return from_coordinates(pts, edges)


FAMILIES = {
    "path": path,
    "cycle": cycle,
    "grid": grid,
    "wheel": wheel,
    "triangulated_grid": triangulated_grid,
}


def generate(family: str, *params: int) -> EmbeddedGraph:
    try:
        builder = FAMILIES[family]
    except KeyError:
        raise GraphError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}") from None
    try:
        return builder(*params)
    except TypeError as exc:
        raise GraphError(f"invalid parameters for {family}: {params}") from exc


# ----------------------------------------------------------------------------
# JSON documents

def to_document(g: EmbeddedGraph) -> dict:
    return {
        "n": g.n,
        "lambda": [float(x) for x in g.lam],
        "edges": [{"u": u, "v": v, "w": float(w)} for u, v, w in g.edges],
        "rotation": [list(r) for r in g.rotation],
    }


def parse_graph(document: str | dict) -> EmbeddedGraph:
    doc = json.loads(document) if isinstance(document, str) else document
    try:
        n = doc["n"]
        if not isinstance(n, int) or n < 0:
            raise GraphError("'n' must be a nonnegative integer")
        lam = doc.get("lambda", [1.0] * n)
        edges = tuple((int(e["u"]), int(e["v"]), float(e["w"])) for e in doc["edges"])
        rotation = tuple(tuple(int(i) for i in r) for r in doc["rotation"])
    except (KeyError, TypeError) as exc:
        raise GraphError(f"graph document does not match schema: {exc}") from exc
    for u, v, w in edges:
        if w < 0:
            raise GraphError("negative weight")
    return EmbeddedGraph(n, edges, tuple(float(x) for x in lam), rotation)


def dumps(g: EmbeddedGraph) -> str:
    return json.dumps(to_document(g))


def load(path_: str) -> EmbeddedGraph:
    with open(path_) as fh:
        return parse_graph(fh.read())
