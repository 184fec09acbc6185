import json

import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from conftest import graph_matchings
from sectorwalk import graph as gr

SMALL_FAMILIES = [gr.path(n) for n in (1, 2, 3, 5, 8)] + [gr.cycle(n) for n in (3, 4, 7, 10)] + \
    [gr.grid(r, c) for r, c in ((2, 2), (2, 3), (3, 3), (2, 5))] + [gr.wheel(k) for k in (3, 4, 6, 9)] + \
    [gr.triangulated_grid(r, c) for r, c in ((2, 2), (2, 4), (3, 3))]


def cycle4_document(**overrides):
    doc = gr.to_document(gr.cycle(4))
    doc.update(overrides)
    return doc


def test_parse_cycle4_document():
    g = gr.parse_graph(json.dumps(cycle4_document()))
    assert (g.n, g.m) == (4, 4)


def test_negative_weight_rejected():
    doc = cycle4_document()
    doc["edges"][0]["w"] = -1.0
    with pytest.raises(gr.GraphError, match="negative weight"):
        gr.parse_graph(doc)


def test_grid_round_trip(tmp_path):
    g = gr.grid(2, 3)
    p = tmp_path / "g.json"
    p.write_text(gr.dumps(g))
    assert gr.load(str(p)) == g


@pytest.mark.parametrize("doc", [
    {"n": 2, "edges": [{"u": 0, "v": 0, "w": 1}], "rotation": [[0], []]},
    {"n": 2, "edges": [{"u": 0, "v": 1, "w": 1}], "rotation": [[0], []]},
    {"n": 2, "edges": [{"u": 0, "v": 2, "w": 1}], "rotation": [[0], [0]]},
    {"n": 2, "edges": [{"u": 0, "v": 1, "w": 1}, {"u": 1, "v": 0, "w": 1}], "rotation": [[0, 1], [0, 1]]},
    {"n": 2, "lambda": [1.0], "edges": [], "rotation": [[], []]},
    {"edges": [], "rotation": []},
])
def test_malformed_documents(doc):
    with pytest.raises(gr.GraphError):
        gr.parse_graph(doc)


def test_non_planar_rotation_fails_euler():
    # K4 as a wheel, with the rotation at one rim vertex reversed: genus > 0
    g = gr.wheel(3)
    rot = list(g.rotation)
    rot[1] = tuple(reversed(rot[1]))
    with pytest.raises(gr.GraphError):
        gr.EmbeddedGraph(g.n, g.edges, g.lam, tuple(rot))


@pytest.mark.parametrize("g, count", [(gr.cycle(4), 2), (gr.grid(2, 2), 2), (gr.grid(3, 3), 5)])
def test_face_counts(g, count):
    assert len(gr.faces(g).faces) == count


@pytest.mark.parametrize("g", SMALL_FAMILIES)
def test_faces_euler_and_darts(g):
    fs = gr.faces(g)
    darts = [d for f in fs.faces for d in f]
    assert sum(len(f) for f in fs.faces) == 2 * g.m
    assert len(set(darts)) == len(darts) == 2 * g.m
    if g.m:
        comps = len(g.components())
        assert g.n - g.m + len(fs.faces) == 1 + comps


def test_induce_examples():
    c4 = gr.cycle(4)
    assert gr.induce(c4, range(4)) == c4
    one = gr.induce(c4, [0, 1])
    assert (one.n, one.m) == (2, 1)
    # corners of a two-row grid pair up along the short sides
    g = gr.grid(2, 3)
    corners = [0, 2, 3, 5]
    expected = {(u, v) for u, v, _ in g.edges if u in corners and v in corners}
    assert len(expected) == 2
    assert gr.induce(g, corners).m == len(expected)


@given(st.sampled_from(SMALL_FAMILIES), st.data())
@settings(max_examples=60, deadline=None)
def test_induce_composes(g, data):
    keep = sorted(data.draw(st.sets(st.integers(0, g.n - 1))))
    smaller = sorted(data.draw(st.sets(st.sampled_from(range(len(keep))))) if keep else [])
    direct = gr.induce(g, [keep[i] for i in smaller])
    twice = gr.induce(gr.induce(g, keep), smaller)
    assert twice == direct


def test_find_matching_examples():
    assert gr.find_matching_of_size(gr.path(4), 2) == frozenset({(0, 1), (2, 3)})
    assert gr.find_matching_of_size(gr.path(3), 2) is None
    assert gr.find_matching_of_size(gr.grid(3, 3), 0) == frozenset()
    with pytest.raises(gr.GraphError):
        gr.find_matching_of_size(gr.path(3), -1)


@pytest.mark.parametrize("g", [g for g in SMALL_FAMILIES if g.n <= 10])
def test_find_matching_agrees_with_enumeration(g):
    for m in range(g.n // 2 + 2):
        found = gr.find_matching_of_size(g, m)
        exists = bool(graph_matchings(g, m)) if 2 * m <= g.n else False
        assert (found is not None) == exists
        if found is not None:
            assert len(found) == m and gr.is_matching(g, found)


def test_zero_weight_edges_ignored():
    g = gr.path(2).with_weights(w=[0.0])
    assert gr.find_matching_of_size(g, 1) is None
    assert not gr.has_perfect_matching(g)
    assert gr.enumerate_matchings(g, 1) == []


def test_family_shapes():
    assert gr.grid(2, 2).m == 4 and all(len(gr.grid(2, 2).neighbors(v)) == 2 for v in range(4))
    w5 = gr.wheel(5)
    assert (w5.n, w5.m) == (6, 10)
    p1 = gr.path(1)
    assert (p1.n, p1.m) == (1, 0)
    assert gr.generate("grid", 2, 3) == gr.grid(2, 3)
    with pytest.raises(gr.GraphError):
        gr.generate("petersen")


@pytest.mark.parametrize("g", SMALL_FAMILIES)
def test_families_are_planar(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from((u, v) for u, v, _ in g.edges)
    assert nx.check_planarity(h)[0]


@pytest.mark.parametrize("g", [gr.path(6), gr.cycle(5), gr.grid(2, 3), gr.wheel(4)])
def test_matching_enumeration_matches_oracle(g):
    mine = {frozenset(M) for M in gr.enumerate_matchings(g)}
    oracle = {frozenset(M) for M, _ in graph_matchings(g)}
    assert mine == oracle


def test_max_weight_matching_prefers_heavy_product():
    g = gr.path(4).with_weights(w=[1.0, 10.0, 1.0])
    assert gr.max_weight_matching(g) == frozenset({(1, 2)})
    # zero vertex weight forces coverage
    h = gr.path(2).with_weights(w=[0.01], lam=[0.0, 0.0])
    assert gr.max_weight_matching(h) == frozenset({(0, 1)})
