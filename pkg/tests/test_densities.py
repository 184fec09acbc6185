import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import graph_matchings, monomer_set_weights
from sectorwalk import densities as dn, fkt, graph as gr
from sectorwalk.fixtures import cycled_weights, random_ndpp_kernel

SKEW = [[0.0, 1.0], [-1.0, 0.0]]


def pair(v, monomer):
    return 2 * v + int(monomer)


def test_monomer_dimer_single_edge():
    mu = dn.monomer_dimer_density(gr.path(2))
    assert (mu.n, mu.k) == (4, 2)
    assert mu.eval({pair(0, 1), pair(1, 1)}) == 1
    assert mu.eval({pair(0, 0), pair(1, 0)}) == 1
    assert mu.eval({pair(0, 0), pair(1, 1)}) == 0
    assert mu.eval({pair(0, 0), pair(0, 1)}) == 0


@pytest.mark.parametrize("g", [gr.path(5), gr.cycle(6), gr.grid(2, 3), cycled_weights(gr.wheel(4)),
                               cycled_weights(gr.grid(2, 4)).with_weights(lam=[0.5, 2, 1, 1, 3, 1, 0.25, 1])])
def test_monomer_dimer_total_is_partition_function(g):
    mu = dn.monomer_dimer_density(g)
    total = sum(mu.eval(S) for S in itertools.combinations(range(mu.n), mu.k))
    truth = sum(w * math.prod(g.lam[v] for v in range(g.n) if v not in {x for e in M for x in e})
                for M, w in graph_matchings(g))
    assert total == pytest.approx(float(truth), rel=1e-9)


def test_encoding_round_trip():
    S = dn.encode_monomers(5, [1, 4])
    assert S == (0, 3, 4, 6, 9)
    assert dn.decode_monomers(S) == (1, 4)


def test_k_matching_examples():
    mu = dn.k_matching_density(gr.path(3), 1)
    assert (mu.n, mu.k) == (3, 1)
    assert [mu.eval({v}) for v in range(3)] == [1, 0, 1]
    g = gr.grid(2, 3).with_weights(lam=[1, 2, 3, 4, 5, 6])
    assert dn.k_matching_density(g, 0).eval(range(6)) == pytest.approx(720)
    assert dn.k_matching_density(gr.cycle(4), 2).eval(()) == pytest.approx(2)
    with pytest.raises(dn.DensityError):
        dn.k_matching_density(gr.path(3), 2)


@pytest.mark.parametrize("g", [gr.path(7), gr.cycle(8), gr.grid(2, 5), gr.wheel(6),
                               cycled_weights(gr.triangulated_grid(2, 4)), cycled_weights(gr.grid(3, 3))])
def test_k_matching_against_enumeration(g):
    for m in range(g.n // 2 + 1):
        mu = dn.k_matching_density(g, m)
        truth = monomer_set_weights(g, m)
        for S in itertools.combinations(range(g.n), mu.k):
            assert mu.eval(S) == pytest.approx(truth.get(S, 0.0), rel=1e-9, abs=1e-12)


def test_ndpp_examples():
    mu = dn.ndpp_density(np.eye(3), 2)
    assert all(mu.eval(S) == pytest.approx(1) for S in itertools.combinations(range(3), 2))
    assert dn.ndpp_density(SKEW, 2).eval({0, 1}) == pytest.approx(1)
    one = dn.ndpp_density(SKEW, 1)
    assert one.eval({0}) == 0 and one.eval({1}) == 0


def test_ndpp_rejects_non_psd():
    with pytest.raises(dn.DensityError, match="PSD"):
        dn.NdppKernel(np.array([[1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(dn.DensityError):
        dn.NdppKernel(np.ones((2, 3)))


@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_symmetric_psd_ndpp_values(n, seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n))
    L = B @ B.T
    for k in range(n + 1):
        mu = dn.ndpp_density(L, k)
        for S in itertools.combinations(range(n), k):
            assert mu.eval(S) >= 0
    one = dn.ndpp_density(L, 1)
    for i in range(n):
        assert one.eval({i}) == pytest.approx(L[i, i])


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=20, deadline=None)
def test_nonsymmetric_minors_nonnegative(seed):
    rng = np.random.default_rng(seed)
    K = random_ndpp_kernel(5, rng, rank=2, skew=2.0)
    for k in range(6):
        mu = dn.ndpp_density(K, k)
        for S in itertools.combinations(range(5), k):
            assert mu.eval(S) >= 0


def test_read_kernel_formats(tmp_path):
    csv_path = tmp_path / "L.csv"
    csv_path.write_text("1,0.5\n-0.5,1\n")
    json_path = tmp_path / "L.json"
    json_path.write_text('{"L": [[1, 0.5], [-0.5, 1]]}')
    a, b = dn.load_kernel(str(csv_path)), dn.load_kernel(str(json_path))
    assert np.array_equal(a.L, b.L)
    assert dn.read_kernel("[[2]]").L[0, 0] == 2


def test_condition_examples():
    mu = dn.ndpp_density(np.eye(3), 2)
    assert dn.condition(mu, ()) is mu
    c = dn.condition(mu, {0})
    assert (c.n, c.k) == (2, 1)
    assert [c.eval({x}) for x in range(2)] == [pytest.approx(1), pytest.approx(1)]
    assert c.lift({1}) == (0, 2)
    with pytest.raises(dn.DensityError, match="conditioning outside support"):
        dn.condition(dn.k_matching_density(gr.path(3), 1), {1})


def test_external_field_examples():
    u = dn.Uniform(2, 1)
    f = dn.apply_external_field(u, (2, 1))
    assert (f.eval({0}), f.eval({1})) == (pytest.approx(2), pytest.approx(1))
    mu = dn.k_matching_density(gr.grid(2, 3), 1)
    same = dn.apply_external_field(mu, [1] * 6)
    scaled = dn.apply_external_field(mu, [3] * 6)
    for S in itertools.combinations(range(6), 4):
        assert same.eval(S) == pytest.approx(mu.eval(S))
        assert scaled.eval(S) == pytest.approx(mu.eval(S) * 3**4)
    with pytest.raises(dn.DensityError):
        dn.apply_external_field(u, (1, 0))


@given(st.integers(0, 2**32 - 1), st.data())
@settings(max_examples=40, deadline=None)
def test_condition_commutes_with_field(seed, data):
    rng = np.random.default_rng(seed)
    n, k = 6, 3
    table = {S: float(rng.exponential()) for S in itertools.combinations(range(n), k)}
    mu = dn.explicit_density(table, n=n, k=k)
    field = rng.uniform(0.2, 3.0, n)
    T = data.draw(st.sets(st.integers(0, n - 1), max_size=k))
    a = dn.condition(dn.apply_external_field(mu, field), T)
    c = dn.condition(mu, T)
    b = dn.apply_external_field(c, [field[x] for x in c.labels] if T else field)
    ratios = {a.eval(S) / b.eval(S) for S in itertools.combinations(range(a.n), a.k)}
    first = next(iter(ratios))
    assert all(r == pytest.approx(first, rel=1e-9) for r in ratios)


def test_partition_constraint_examples():
    mu = dn.Uniform(4, 2)
    whole = dn.partition_constrained(mu, dn.PartitionConstraint(((0, 1, 2, 3),), (2,)))
    assert all(whole.eval(S) == 1 for S in itertools.combinations(range(4), 2))
    cross = dn.partition_constrained(mu, dn.PartitionConstraint(((0, 1), (2, 3)), (1, 1)))
    support = sorted(cross.support())
    assert support == [(0, 2), (0, 3), (1, 2), (1, 3)]
    with pytest.raises(dn.DensityError):
        dn.partition_constrained(mu, dn.PartitionConstraint(((0, 1), (2, 3)), (2, 1)))
    with pytest.raises(dn.DensityError, match="infeasible"):
        dn.partition_constrained(mu, dn.PartitionConstraint(((0,), (1, 2, 3)), (2, 0)))
    with pytest.raises(dn.DensityError):
        dn.partition_constrained(mu, dn.PartitionConstraint(((0, 1), (1, 2, 3)), (1, 1)))


def test_parse_constraint():
    pc = dn.parse_constraint('{"blocks": [[2, 0], [1, 3]], "counts": [1, 1]}')
    assert pc.blocks == ((0, 2), (1, 3)) and pc.counts == (1, 1)
    with pytest.raises(dn.DensityError):
        dn.parse_constraint('{"blocks": [[0]]}')


def test_explicit_examples():
    pm = dn.explicit_density({(0, 1): 1.0})
    assert dn.normalized_table(pm) == {(0, 1): 1.0}
    empty = dn.explicit_density({}, n=3, k=2)
    with pytest.raises(dn.DensityError, match="empty support"):
        dn.normalized_table(empty)
    with pytest.raises(dn.DensityError):
        dn.explicit_density({(0,): 1.0, (0, 1): 1.0})
    block = dn.block_density(2, 2)
    assert dn.normalized_table(block) == {(0, 1): 0.5, (2, 3): 0.5}


def test_log_eval_validates_subsets():
    mu = dn.Uniform(4, 2)
    for bad in [(0,), (0, 0), (0, 4), (-1, 2)]:
        with pytest.raises(dn.DensityError):
            mu.log_eval(bad)


def test_homogenize_encoding():
    nu = dn.homogenize({(): 1.0, (1,): 2.0}, 2)
    assert (nu.n, nu.k) == (4, 2)
    assert nu.eval((0, 2)) == 1 and nu.eval((0, 3)) == 2


@pytest.mark.parametrize("g", [gr.grid(2, 3), cycled_weights(gr.cycle(6))])
def test_monomer_weight_matches_fkt(g):
    mu = dn.monomer_dimer_density(g)
    for r in range(g.n + 1):
        for M in itertools.combinations(range(g.n), r):
            assert mu.eval(dn.encode_monomers(g.n, M)) == pytest.approx(fkt.monomer_weight(g, M))
