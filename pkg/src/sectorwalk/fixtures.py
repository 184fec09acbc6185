"""Deterministic instance corpora shared by tests and experiment scripts."""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Callable

import networkx as nx
import numpy as np

from . import graph as gr
from .counting import MultiaffinePolynomial, elementary_symmetric
from .densities import (Density, NdppKernel, block_density, explicit_density, homogenize, k_matching_density,
                        monomer_dimer_density, ndpp_density)

THIRD = Fraction(1, 3)
WEIGHT_CYCLE = (THIRD, Fraction(1), Fraction(2))


def cycled_weights(g: gr.EmbeddedGraph, offset: int = 0) -> gr.EmbeddedGraph:
    """Edge weights cycling through 1/3, 1, 2."""
    return g.with_weights(w=[WEIGHT_CYCLE[(i + offset) % 3] for i in range(g.m)])


def planar_corpus() -> list[tuple[str, gr.EmbeddedGraph]]:
    """Built-in families with n <= 12, unit and weighted (w in {1/3, 1, 2})."""
    base = []
    base += [(f"path({n})", gr.path(n)) for n in (2, 4, 5, 6, 8, 10, 12)]
    base += [(f"cycle({n})", gr.cycle(n)) for n in (3, 4, 6, 8, 10, 12)]
    base += [(f"grid({r},{c})", gr.grid(r, c)) for r, c in ((2, 2), (2, 3), (2, 4), (2, 5), (2, 6), (3, 3), (3, 4))]
    base += [(f"wheel({k})", gr.wheel(k)) for k in (3, 4, 5, 7, 9, 11)]
    base += [(f"triangulated_grid({r},{c})", gr.triangulated_grid(r, c))
             for r, c in ((2, 2), (2, 3), (2, 4), (2, 5), (2, 6), (3, 3), (3, 4))]
    out = list(base)
    for name, g in base:
        if g.m:
            out.append((f"{name}~w", cycled_weights(g)))
    for name, g in base[::3]:
        if g.m:
            out.append((f"{name}~2", g.with_weights(w=[Fraction(2)] * g.m)))
            out.append((f"{name}~1/3", g.with_weights(w=[THIRD] * g.m)))
    return out


def monomer_dimer_fixtures() -> list[tuple[str, gr.EmbeddedGraph]]:
    """Ten graphs with n <= 8 whose matching counts stay below 300."""
    return [
        ("path(4)", gr.path(4)),
        ("path(6)", gr.path(6)),
        ("cycle(5)", gr.cycle(5)),
        ("cycle(6)", gr.cycle(6)),
        ("grid(2,3)", gr.grid(2, 3)),
        ("wheel(4)", gr.wheel(4)),
        ("triangulated_grid(2,3)", gr.triangulated_grid(2, 3)),
        ("path(7)~w,lam", cycled_weights(gr.path(7)).with_weights(lam=[0.5, 1, 2, 1, 0.5, 1, 2])),
        ("grid(2,4)~w", cycled_weights(gr.grid(2, 4))),
        ("cycle(8)~lam", gr.cycle(8).with_weights(lam=[2, 0.5] * 4)),
    ]


def small_monomer_dimer_fixtures() -> list[tuple[str, gr.EmbeddedGraph]]:
    """Graphs with n <= 6, no isolated vertices and positive vertex weights."""
    gs = [("path(2)", gr.path(2)), ("path(3)", gr.path(3)), ("path(5)", gr.path(5)), ("path(6)", gr.path(6)),
          ("cycle(3)", gr.cycle(3)), ("cycle(4)", gr.cycle(4)), ("cycle(5)", gr.cycle(5)), ("cycle(6)", gr.cycle(6)),
          ("grid(2,3)", gr.grid(2, 3)), ("wheel(3)", gr.wheel(3)), ("wheel(5)", gr.wheel(5)),
          ("triangulated_grid(2,3)", gr.triangulated_grid(2, 3))]
    gs += [("grid(2,3)~w", cycled_weights(gr.grid(2, 3))),
           ("wheel(4)~w,lam", cycled_weights(gr.wheel(4), 1).with_weights(lam=[1, 0.5, 2, 0.5, 2])),
           ("cycle(5)~lam", gr.cycle(5).with_weights(lam=[0.3, 1, 3, 1, 0.3]))]
    return gs


def k_matching_fixtures() -> list[tuple[str, Density]]:
    """Monomer-set densities of m-matchings on planar graphs with n <= 10 and support of size >= 2."""
    cases = [
        ("path(4)", gr.path(4), 1), ("path(6)", gr.path(6), 2), ("path(7)", gr.path(7), 2),
        ("cycle(6)", gr.cycle(6), 2), ("cycle(7)", gr.cycle(7), 2), ("cycle(8)", gr.cycle(8), 3),
        ("grid(2,3)", gr.grid(2, 3), 1), ("grid(2,3)", gr.grid(2, 3), 2), ("grid(2,4)", gr.grid(2, 4), 2),
        ("grid(2,4)~w", cycled_weights(gr.grid(2, 4)), 3), ("grid(3,3)", gr.grid(3, 3), 3),
        ("wheel(5)", gr.wheel(5), 2), ("wheel(6)", gr.wheel(6), 3),
        ("triangulated_grid(2,3)", gr.triangulated_grid(2, 3), 1),
        ("triangulated_grid(2,4)~w", cycled_weights(gr.triangulated_grid(2, 4), 2), 3),
        ("grid(2,5)", gr.grid(2, 5), 4),
    ]
    return [(f"{name}, m={m}", k_matching_density(g, m)) for name, g, m in cases]


def random_ndpp_kernel(n: int, rng: np.random.Generator, rank: int | None = None, skew: float = 1.0) -> NdppKernel:
    """B B^T / rank plus a random skew part; the symmetric part is PSD by construction."""
    r = rank or n
    B = rng.normal(size=(n, r))
    A = rng.normal(size=(n, n))
    return NdppKernel(B @ B.T / r + skew * (A - A.T) / 2)


def ndpp_fixtures(seed: int = 2024) -> list[tuple[str, Density]]:
    """Ten kernels with n <= 8 and k in {2, 3, 4}; two of them low rank."""
    rng = np.random.default_rng(seed)
    specs = [(6, 2, None), (8, 2, None), (5, 3, None), (6, 3, None), (7, 3, 4), (8, 3, None),
             (6, 4, None), (7, 4, None), (8, 4, None), (8, 4, 3)]
    out = []
    for i, (n, k, rank) in enumerate(specs):
        L = random_ndpp_kernel(n, rng, rank, skew=0.5 + 0.5 * (i % 3))
        out.append((f"ndpp#{i}(n={n},k={k}{',rank=' + str(rank) if rank else ''})", ndpp_density(L, k)))
    return out


def block_fixture() -> Density:
    """z1 z2 + z3 z4."""
    return block_density(2, 2)


def linear_sum_homogenized() -> Density:
    """Homogenization of z1 + z2."""
    return homogenize({(0,): 1.0, (1,): 1.0}, 2)


def random_table(n: int, k: int, rng: np.random.Generator, density: float = 0.6) -> Density:
    """Random positive weights on a random subset of C([n], k); not stable in general."""
    table = {S: float(rng.exponential()) for S in itertools.combinations(range(n), k) if rng.random() < density}
    if not table:
        table = {tuple(range(k)): 1.0}
    return explicit_density(table, n=n, k=k)


def flc_fixtures(seed: int = 7) -> list[tuple[str, Density]]:
    """25 densities mixing stable classes with arbitrary tables."""
    rng = np.random.default_rng(seed)
    out: list[tuple[str, Density]] = [("block", block_fixture()), ("z1+z2 homogenized", linear_sum_homogenized())]
    out += k_matching_fixtures()[:6]
    out += ndpp_fixtures()[:6]
    out += [(f"monomer-dimer {name}", monomer_dimer_density(g)) for name, g in small_monomer_dimer_fixtures()[:5]]
    out += [(f"random({n},{k})#{i}", random_table(n, k, rng)) for i, (n, k) in enumerate(
        [(5, 2), (6, 3), (6, 2), (7, 3), (5, 3), (6, 4)])]
    return out[:25]


def mixed_derivative_fixtures() -> list[tuple[str, MultiaffinePolynomial, list, list, list]]:
    """(name, f, directions, counts, x) with n <= 8 and at most two directions."""
    rng = np.random.default_rng(99)

    def vec(n, lo=0.2, hi=1.5):
        return [float(round(v, 3)) for v in rng.uniform(lo, hi, n)]

    out = []
    e23 = elementary_symmetric(3, 2)
    out.append(("e2(3), v=1, c=1", e23, [[1.0] * 3], [1], [1.0] * 3))
    out.append(("e2(3), v=1, c=2", e23, [[1.0] * 3], [2], [1.0] * 3))
    out.append(("z1 z2, e1, c=1", MultiaffinePolynomial(2, 2, {(0, 1): 1.0}), [[1.0, 0.0]], [1], [1.0, 1.0]))
    out.append(("e3(6), one direction", elementary_symmetric(6, 3), [vec(6)], [1], vec(6)))
    out.append(("e4(8), two directions", elementary_symmetric(8, 4), [vec(8), vec(8)], [1, 1], vec(8)))
    out.append(("rank-one det(7,3)", _cauchy_binet(7, 3, rng), [vec(7)], [2], vec(7)))
    out.append(("rank-one det(8,4)", _cauchy_binet(8, 4, rng), [vec(8), vec(8)], [2, 1], vec(8)))
    out.append(("spanning trees wheel(4)", _spanning_tree_poly(gr.wheel(4)), [vec(8)], [1], vec(8)))
    out.append(("spanning trees grid(2,3)", _spanning_tree_poly(gr.grid(2, 3)), [vec(7), vec(7)], [1, 1], vec(7)))
    out.append(("e5(6), sparse direction", elementary_symmetric(6, 5), [[1.0, 0, 0.5, 0, 2.0, 0]], [1], vec(6)))
    return out


def _cauchy_binet(n: int, d: int, rng: np.random.Generator) -> MultiaffinePolynomial:
    """det(sum_i z_i v_i v_i^T) for random v_i in R^d: coefficients det(V_S)^2."""
    V = rng.normal(size=(n, d))
    return MultiaffinePolynomial(n, d, {S: float(np.linalg.det(V[list(S)]) ** 2)
                                        for S in itertools.combinations(range(n), d)})


def _spanning_tree_poly(g: gr.EmbeddedGraph) -> MultiaffinePolynomial:
    """Sum over spanning trees of the product of their edge variables."""
    import networkx as nx

    coeffs = {}
    for S in itertools.combinations(range(g.m), g.n - 1):
        h = nx.Graph()
        h.add_nodes_from(range(g.n))
        h.add_edges_from((g.edges[i][0], g.edges[i][1]) for i in S)
        if nx.is_tree(h):
            coeffs[S] = 1.0
    return MultiaffinePolynomial(g.m, g.n - 1, coeffs)


FIXTURE_SETS: dict[str, Callable] = {
    "planar": planar_corpus,
    "monomer_dimer": monomer_dimer_fixtures,
    "small_monomer_dimer": small_monomer_dimer_fixtures,
    "k_matching": k_matching_fixtures,
    "ndpp": ndpp_fixtures,
    "flc": flc_fixtures,
    "mixed_derivative": mixed_derivative_fixtures,
}
