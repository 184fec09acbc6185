import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sectorwalk import densities as dn, diagnostics as dg, graph as gr
from sectorwalk.fixtures import block_fixture, k_matching_fixtures, linear_sum_homogenized, ndpp_fixtures


def oracle_matrices(table, n):
    """Conditionals straight from the definition; undefined rows are zero."""
    Z = sum(table.values())
    prob = {S: w / Z for S, w in table.items()}

    def P(event):
        return sum(p for S, p in prob.items() if event(set(S)))

    cor, inf = np.zeros((n, n)), np.zeros((n, n))
    for i in range(n):
        pi = P(lambda S: i in S)
        never = not any(i in S for S in prob)
        always = all(i in S for S in prob)
        for j in range(n):
            pj = P(lambda S: j in S)
            if not never:
                given_i = P(lambda S: i in S and j in S) / pi
                cor[i, j] = 0.0 if always else given_i - pj
                if not always and i != j:
                    inf[i, j] = given_i - P(lambda S: i not in S and j in S) / (1 - pi)
    return cor, inf


def log_gen_hessian(table, n, alpha, h=1e-4):
    """Central differences of log g(z_1^alpha, ..., z_n^alpha) at z = 1."""
    def f(x):
        return math.log(sum(w * math.prod((1 + x[i]) ** alpha for i in S) for S, w in table.items()))

    H = np.zeros((n, n))
    e = np.eye(n) * h
    for i in range(n):
        for j in range(n):
            H[i, j] = (f(e[i] + e[j]) - f(e[i] - e[j]) - f(-e[i] + e[j]) + f(-e[i] - e[j])) / (4 * h * h)
    return H


def random_table(rng, n, k):
    return {S: float(rng.exponential()) for S in itertools.combinations(range(n), k) if rng.random() < 0.7} \
        or {tuple(range(k)): 1.0}


def test_uniform_correlations():
    cm = dg.correlation_matrices(dn.Uniform(4, 2))
    off = cm.psi_cor[~np.eye(4, dtype=bool)]
    assert np.allclose(off, -1 / 6)
    assert np.allclose(np.diag(cm.psi_cor), 0.5)
    assert np.allclose(np.diag(cm.psi_inf), 0)


def test_block_density_row_sums():
    cm = dg.correlation_matrices(block_fixture())
    rows, _ = dg.row_norm_and_spectrum(cm.psi_inf)
    assert rows == pytest.approx(3)
    _, lam = dg.row_norm_and_spectrum(cm.psi_cor)
    assert lam == pytest.approx(2)


def test_point_mass_matrices():
    cm = dg.correlation_matrices(dn.explicit_density({(0, 2): 1.0}, n=4, k=2))
    assert not cm.psi_inf.any()
    assert not np.diag(cm.psi_cor).any()
    assert not cm.psi_cor.any()


def test_zero_matrix_norms():
    assert dg.row_norm_and_spectrum(np.zeros((3, 3))) == (0.0, 0.0)
    with pytest.raises(dg.DiagnosticError):
        dg.row_norm_and_spectrum(np.array([[0.0, 1.0], [-1.0, 0.0]]))


@given(st.integers(0, 2**32 - 1), st.integers(3, 6), st.data())
@settings(max_examples=40, deadline=None)
def test_matrices_match_definition(seed, n, data):
    k = data.draw(st.integers(1, n - 1))
    table = random_table(np.random.default_rng(seed), n, k)
    cm = dg.correlation_matrices(table, n)
    cor, inf = oracle_matrices(table, n)
    assert np.allclose(cm.psi_cor, cor, atol=1e-12)
    assert np.allclose(cm.psi_inf, inf, atol=1e-12)
    for M, spectrum in ((cm.psi_cor, cm.spectrum_cor()), (cm.psi_inf, cm.spectrum_inf())):
        ev = np.linalg.eigvals(M)
        assert np.abs(ev.imag).max() < 1e-8
        assert np.allclose(np.sort(ev.real)[::-1], spectrum, atol=1e-8)
    inner = cm.interior
    assert np.allclose(np.diag(cm.psi_cor)[inner], 1 - cm.marginals[inner])


@given(st.integers(0, 2**32 - 1), st.sampled_from([0.125, 0.25, 0.5, 1.0]))
@settings(max_examples=30, deadline=None)
def test_hessian_matches_finite_differences(seed, alpha):
    table = random_table(np.random.default_rng(seed), 5, 2)
    cm = dg.correlation_matrices(table, 5)
    assert np.allclose(dg.flc_hessian(cm, alpha), log_gen_hessian(table, 5, alpha), atol=1e-6)


def test_flc_examples():
    e1 = dn.Uniform(5, 1)
    assert dg.flc_hessian_check(e1, 1.0).ok
    block = block_fixture()
    assert dg.flc_hessian_check(block, 0.5).ok
    r = dg.flc_hessian_check(block, 1.0)
    assert not r.ok and r.witness > 0 and r.lambda_max_cor == pytest.approx(2) and r.agree
    pm = dn.explicit_density({(1,): 1.0}, n=3, k=1)
    assert all(dg.flc_hessian_check(pm, a).ok for a in (0.125, 1.0))
    with pytest.raises(dg.DiagnosticError):
        dg.flc_hessian_check(pm, 0.0)


def test_homogenization_examples():
    r = dg.homogenization_spectrum_check(dn.homogenize({(): 1.0, (0,): 1.0}, 1))
    assert r.ok and np.allclose(r.spectrum, [1, 0])
    nu = linear_sum_homogenized()
    r = dg.homogenization_spectrum_check(nu)
    assert r.ok and r.spectrum[0] == pytest.approx(2)


def test_homogenization_point_mass_empty_set():
    # every marginal of mu is 0 or 1, so the zero convention removes the +1 shift
    r = dg.homogenization_spectrum_check(dn.homogenize({(): 1.0}, 2))
    assert np.allclose(r.spectrum, 0)
    assert np.allclose(r.expected, [1, 1, 0, 0])
    assert not r.ok


def test_homogenization_rejects_bad_encoding():
    with pytest.raises(dg.DiagnosticError):
        dg.homogenization_spectrum_check(dn.Uniform(4, 2))
    with pytest.raises(dg.DiagnosticError):
        dg.homogenization_spectrum_check(dn.Uniform(4, 3))


def test_entropy_examples():
    ok, slack = dg.entropy_bound_check(dn.Uniform(6, 1), 0.25)
    assert ok and slack == pytest.approx(0.75 * math.log(6))
    ok, slack = dg.entropy_bound_check(dn.explicit_density({(0, 1): 1.0}, n=3, k=2), 1.0)
    assert ok and slack == pytest.approx(0)
    for _, mu in k_matching_fixtures()[:6]:
        assert dg.entropy_bound_check(mu, 0.25)[0]


def test_entropy_bound_can_fail():
    # block density: H = log 2 while sum_i P[i] log(1/P[i]) = 2 log 2
    ok, slack = dg.entropy_bound_check(block_fixture(), 1.0)
    assert not ok and slack == pytest.approx(-math.log(2))
    ok, slack = dg.entropy_bound_check(block_fixture(), 0.5)
    assert ok and slack == pytest.approx(0, abs=1e-12)


def test_support_estimate_examples():
    one = dg.support_log_estimate([(0, 1)], 0.5, n=3)
    assert (one.lower, one.upper) == (0.0, 0.0) and one.contains(0.0)
    two = dg.support_log_estimate([(0,), (1,)], 1.0)
    assert two.beta == pytest.approx(math.log(2)) and two.beta_star == pytest.approx(math.log(2))
    assert two.contains(math.log(2))
    g = gr.grid(2, 4)
    F = list(dn.k_matching_density(g, 2).support())
    est = dg.support_log_estimate(F, 0.25)
    assert est.contains(math.log(len(F)))
    with pytest.raises(dg.DiagnosticError):
        dg.support_log_estimate([], 0.5)


def brute_entropy_max(F, n, grid=4001):
    """Best marginal entropy over segments between pairs: a lower bound on beta."""
    V = np.zeros((len(F), n))
    for r, S in enumerate(F):
        V[r, list(S)] = 1
    best = 0.0
    ts = np.linspace(0, 1, grid)[:, None]
    for a, b in itertools.combinations_with_replacement(range(len(F)), 2):
        x = ts * V[a] + (1 - ts) * V[b]
        with np.errstate(divide="ignore", invalid="ignore"):
            h = -np.where(x > 0, x * np.log(x), 0).sum(axis=1)
        best = max(best, h.max())
    return best


def test_frank_wolfe_beats_segment_search():
    F = [(0, 1), (1, 2), (2, 3), (0, 3)]
    est = dg.support_log_estimate(F, 0.5)
    assert est.beta >= brute_entropy_max(F, 4) - 1e-9
    assert est.beta == pytest.approx(4 * 0.5 * math.log(2), abs=1e-6)


def test_newton_edge_examples():
    assert dg.newton_polytope_max_edge([(0, 1), (2, 3)], 4)[0] == 4
    assert dg.newton_polytope_max_edge(list(itertools.combinations(range(3), 2)))[0] == 2
    assert dg.newton_polytope_max_edge([(0, 1)])[0] == 0


def test_newton_edge_skips_diagonals():
    # square {0,1},{2,3},{0,2},{1,3}: both long pairs are diagonals of a square face
    length, pair = dg.newton_polytope_max_edge([(0, 1), (2, 3), (0, 2), (1, 3)], 4)
    assert length == 2


@pytest.mark.parametrize("name, mu", k_matching_fixtures()[:8], ids=[f[0] for f in k_matching_fixtures()[:8]])
def test_matching_edges_bounded(name, mu):
    assert dg.newton_polytope_max_edge(list(mu.support()), mu.n)[0] <= 4


def test_enumerate_density_examples():
    assert dg.enumerate_density(dn.explicit_density({(0,): 2.0}, n=2, k=1)) == {(0,): 1.0}
    table = dg.enumerate_density(dn.monomer_dimer_density(gr.path(2)))
    assert table == {dn.encode_monomers(2, []): pytest.approx(0.5), dn.encode_monomers(2, [0, 1]): pytest.approx(0.5)}
    with pytest.raises(dn.DensityError, match="empty support"):
        dg.enumerate_density(dn.explicit_density({}, n=2, k=1))


def test_all_conditionings_cover_every_pin():
    mu = k_matching_fixtures()[0][1]
    pins = [T for T, _ in dg.all_conditionings(mu)]
    support = list(mu.support())
    expected = {T for S in support for r in range(mu.k) for T in itertools.combinations(S, r)}
    assert set(pins) == expected and len(pins) == len(expected)


def test_report_contents():
    rep = dg.report(block_fixture())
    assert rep["psi_inf"]["max_row_sum"] == pytest.approx(3)
    verdicts = {f["alpha"]: f["ok"] for f in rep["flc"]}
    assert verdicts == {0.125: True, 0.25: True, 0.5: True, 1.0: False}
    assert all(f["agrees_with_correlation"] for f in rep["flc"])
    md = dg.report(dn.monomer_dimer_density(gr.grid(2, 3)))
    walk = {w["gap_d"]: w for w in md["walk"]}
    assert walk[1]["spectral_gap"] == 0 and walk[1]["flag"] == "parity-reducible"
    assert walk[2]["spectral_gap"] > 0 and "flag" not in walk[2]
    assert md["support_log"]["contains"]


@pytest.mark.parametrize("name, mu", ndpp_fixtures()[:4], ids=[f[0] for f in ndpp_fixtures()[:4]])
def test_ndpp_row_sums(name, mu):
    cm = dg.correlation_matrices(mu)
    assert dg.row_norm_and_spectrum(cm.psi_inf)[0] <= 3 + 1e-8
    assert dg.row_norm_and_spectrum(cm.psi_cor)[0] <= 4 + 1e-8
