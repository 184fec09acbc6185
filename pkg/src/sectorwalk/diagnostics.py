"""Exhaustive checks on enumerable densities.

Everything here starts from the exact normalized table of a density:
correlation and influence matrices, the fractional log-concavity Hessian,
the spectrum of homogenized densities, entropy inequalities, a convex
bracket for the log support size and Newton polytope edge lengths.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import brentq, linprog

from .densities import (Conditioned, Density, DensityError, KMatching, MonomerDimer, canon, condition,
                        normalized_table)

IMAG_TOL = 1e-8
FLC_TOL = 1e-8
SPECTRUM_TOL = 1e-7
FW_ITERS = 500
FW_GAP = 1e-6


class DiagnosticError(ValueError):
    pass


def enumerate_density(mu: Density, limit: int = 10**6) -> dict[tuple[int, ...], float]:
    """Exact probability of each positive-weight k-subset."""
    return normalized_table(mu, limit)


# ----------------------------------------------------------------------------
# correlation matrices


@dataclass
class CorrelationMatrices:
    psi_cor: np.ndarray
    psi_inf: np.ndarray
    marginals: np.ndarray
    pairwise: np.ndarray

    @property
    def interior(self) -> np.ndarray:
        P = self.marginals
        return np.nonzero((P > 0) & (P < 1))[0]

    def _sym_spectrum(self, scale: np.ndarray, shift: float) -> np.ndarray:
        n = len(self.marginals)
        I = self.interior
        cov = self.pairwise - np.outer(self.marginals, self.marginals)
        r = 1 / np.sqrt(scale[I])
        block = r[:, None] * cov[np.ix_(I, I)] * r[None, :]
        inner = np.linalg.eigvalsh((block + block.T) / 2) - shift
        return np.sort(np.concatenate([inner, np.zeros(n - len(I))]))[::-1]

    def spectrum_cor(self) -> np.ndarray:
        """Eigenvalues of psi_cor, descending; real by the D^{-1} Cov similarity."""
        return self._sym_spectrum(self.marginals, 0.0)

    def spectrum_inf(self) -> np.ndarray:
        P = self.marginals
        return self._sym_spectrum(P * (1 - P), 1.0)


def _table_arrays(table: Mapping, n: int) -> tuple[np.ndarray, np.ndarray]:
    X = np.zeros((len(table), n))
    p = np.empty(len(table))
    for r, (S, w) in enumerate(table.items()):
        X[r, list(S)] = 1.0
        p[r] = w
    return X, p / p.sum()


def correlation_from_table(table: Mapping[Iterable[int], float], n: int) -> CorrelationMatrices:
    """Matrices for any distribution on subsets of [n] given as {set: weight}.

    Rows whose conditional is undefined are zero: P[i] = 0 zeroes row i of
    both matrices, P[i] = 1 zeroes row i of the influence matrix (and makes
    the correlation row vanish on its own).
    """
    table = {canon(S): w for S, w in table.items() if w > 0}
    if not table:
        raise DensityError("empty support")
    X, p = _table_arrays(table, n)
    P = X.T @ p
    P2 = X.T @ (X * p[:, None])
    P = np.clip(P, 0.0, 1.0)
    eps = 1e-15
    pos = P > eps
    inner = pos & (P < 1 - eps)
    P = np.where(pos, P, 0.0)
    P = np.where(P >= 1 - eps, 1.0, P)
    cor = np.zeros((n, n))
    inf = np.zeros((n, n))
    cor[pos] = P2[pos] / P[pos, None] - P[None, :]
    cov = P2 - np.outer(P, P)
    inf[inner] = cov[inner] / (P[inner] * (1 - P[inner]))[:, None]
    np.fill_diagonal(inf, 0.0)
    full = np.nonzero(P == 1.0)[0]
    cor[full] = 0.0
    return CorrelationMatrices(cor, inf, P, P2)


def correlation_matrices(mu: Density | Mapping, n: int | None = None) -> CorrelationMatrices:
    if isinstance(mu, Density):
        return correlation_from_table(enumerate_density(mu), mu.n)
    if n is None:
        raise DiagnosticError("ground set size required for a raw table")
    return correlation_from_table(mu, n)


def row_norm_and_spectrum(M: np.ndarray) -> tuple[float, float]:
    """(max l1 row sum, largest eigenvalue) of a matrix with real spectrum."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0, 0.0
    rows = float(np.abs(M).sum(axis=1).max())
    ev = np.linalg.eigvals(M)
    if np.abs(ev.imag).max() > IMAG_TOL:
        raise DiagnosticError(f"spectrum not real (max imaginary part {np.abs(ev.imag).max():.3g})")
    return rows, float(ev.real.max())


# ----------------------------------------------------------------------------
# fractional log-concavity


def flc_hessian(cm: CorrelationMatrices, alpha: float) -> np.ndarray:
    P, P2 = cm.marginals, cm.pairwise
    H = alpha**2 * (P2 - np.outer(P, P))
    np.fill_diagonal(H, alpha * (alpha - 1) * P - alpha**2 * P**2)
    return H


@dataclass
class FlcResult:
    ok: bool
    witness: float
    lambda_max_cor: float
    cor_ok: bool

    @property
    def agree(self) -> bool:
        return self.ok == self.cor_ok


def flc_hessian_check(mu: Density | CorrelationMatrices, alpha: float) -> FlcResult:
    """Negative semidefiniteness of the Hessian of log g(z^alpha) at the all-ones point."""
    if not 0 < alpha <= 1:
        raise DiagnosticError("alpha must lie in (0, 1]")
    cm = mu if isinstance(mu, CorrelationMatrices) else correlation_matrices(mu)
    H = flc_hessian(cm, alpha)
    top = float(np.linalg.eigvalsh((H + H.T) / 2).max())
    lam = float(cm.spectrum_cor()[0])
    return FlcResult(top <= FLC_TOL, top, lam, lam <= 1 / alpha + FLC_TOL)


# ----------------------------------------------------------------------------
# homogenization


@dataclass
class HomogenizationResult:
    ok: bool
    spectrum: np.ndarray
    expected: np.ndarray
    max_error: float


def dehomogenize(nu: Density) -> tuple[dict[tuple[int, ...], float], int]:
    """Recover the distribution on 2^[n] from a level-n density on pairs (2i, 2i+1)."""
    if nu.n != 2 * nu.k:
        raise DiagnosticError("encoding mismatch: expected ground set 2n at level n")
    out = {}
    for S, p in enumerate_density(nu).items():
        if [x >> 1 for x in S] != list(range(nu.k)):
            raise DiagnosticError(f"encoding mismatch: {list(S)} is not one element per pair")
        out[tuple(x >> 1 for x in S if x & 1)] = p
    return out, nu.k


def homogenization_spectrum_check(nu: Density) -> HomogenizationResult:
    """spectrum(psi_cor of nu) against {lambda_i(psi_inf of mu) + 1} plus n zeros."""
    mu_table, n = dehomogenize(nu)
    got = correlation_matrices(nu).spectrum_cor()
    inf = correlation_from_table(mu_table, n).spectrum_inf()
    want = np.sort(np.concatenate([inf + 1.0, np.zeros(n)]))[::-1]
    err = float(np.abs(got - want).max()) if n else 0.0
    return HomogenizationResult(err <= SPECTRUM_TOL, got, want, err)


# ----------------------------------------------------------------------------
# entropy and support size


def _xlogx(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    m = p > 0
    out[m] = p[m] * np.log(p[m])
    return out


def entropy_bound_check(mu: Density | Mapping, alpha: float, n: int | None = None) -> tuple[bool, float]:
    """H(mu) >= alpha * sum_i P[i] log(1/P[i]) up to 1e-9; returns (ok, slack)."""
    table = enumerate_density(mu) if isinstance(mu, Density) else dict(mu)
    n = mu.n if isinstance(mu, Density) else n
    X, p = _table_arrays(table, n)
    H = float(-_xlogx(p).sum())
    P = X.T @ p
    bound = alpha * float(-_xlogx(P).sum())
    slack = H - bound
    return slack >= -1e-9, slack


@dataclass
class SupportEstimate:
    lower: float
    upper: float
    beta: float
    beta_star: float
    gap: float
    gap_star: float
    iterations: int

    def contains(self, value: float, tol: float = 1e-9) -> bool:
        return self.lower - tol <= value <= self.upper + tol


def _max_entropy(V: np.ndarray, iters: int = FW_ITERS, tol: float = FW_GAP) -> tuple[float, float, int]:
    """max of sum_i -p_i log p_i over conv(rows of V) by Frank-Wolfe with exact line search.

    Returns (achieved value, final dual gap, iterations). Coordinates constant
    across V contribute nothing and are dropped.
    """
    V = V[:, V.min(axis=0) != V.max(axis=0)]
    if V.shape[1] == 0:
        return 0.0, 0.0, 0
    p = V.mean(axis=0)

    def phi(x):
        return float(-_xlogx(x).sum())

    gap, it = math.inf, 0
    for it in range(1, iters + 1):
        grad = -np.log(p) - 1.0
        s = V[int(np.argmax(V @ grad))]
        dirn = s - p
        gap = float(grad @ dirn)
        if gap <= tol:
            break

        def slope(t):
            x = p + t * dirn
            m = dirn != 0
            return float(dirn[m] @ (-np.log(np.maximum(x[m], 1e-300)) - 1.0))

        hi = 1.0
        if slope(hi) >= 0:
            t = hi
        else:
            t = brentq(slope, 0.0, hi, xtol=1e-14)
        p = p + t * dirn
        if t == 1.0:
            p = np.clip(p, 1e-300, None)
    return phi(p), max(gap, 0.0), it


def support_log_estimate(F: Iterable[Iterable[int]], alpha: float, n: int | None = None) -> SupportEstimate:
    """Bracket (alpha/2 (beta + beta*), beta + beta*) for log |F|.

    beta maximizes the marginal entropy over conv(F) and beta* over the
    hull of the complements. Lower ends use achieved values, upper ends add
    the Frank-Wolfe dual gap, so the bracket stays valid without convergence.
    """
    F = sorted({canon(S) for S in F})
    if not F:
        raise DiagnosticError("empty family")
    if len(F) > 10**5:
        raise DiagnosticError("family larger than 1e5 sets")
    n = n if n is not None else max((x for S in F for x in S), default=-1) + 1
    V = np.zeros((len(F), n))
    for r, S in enumerate(F):
        V[r, list(S)] = 1.0
    b, g, i1 = _max_entropy(V)
    bs, gs, i2 = _max_entropy(1.0 - V)
    return SupportEstimate(alpha / 2 * (b + bs), b + g + bs + gs, b, bs, g, gs, max(i1, i2))


def _is_edge(V: np.ndarray, i: int, j: int) -> bool:
    """LP separation: some w has <w,p> = <w,q> >= <w,x> + 1 for every other point x."""
    p, q = V[i], V[j]
    others = np.delete(V, [i, j], axis=0)
    if len(others) == 0:
        return True
    res = linprog(np.zeros(V.shape[1]), A_ub=others - p, b_ub=-np.ones(len(others)),
                  A_eq=(p - q)[None, :], b_eq=[0.0], bounds=[(None, None)] * V.shape[1], method="highs")
    if res.status == 0:
        return True
    if res.status == 2:
        return False
    raise DiagnosticError(f"edge LP failed: {res.message}")


def newton_polytope_max_edge(F: Iterable[Iterable[int]], n: int | None = None) -> tuple[int, tuple | None]:
    """Longest l1 edge of conv(F) over 0/1 points, with the certifying pair."""
    F = sorted({canon(S) for S in F})
    if len(F) > 2000:
        raise DiagnosticError("family larger than 2000 sets")
    if len(F) < 2:
        return 0, None
    n = n if n is not None else max((x for S in F for x in S), default=-1) + 1
    V = np.zeros((len(F), n))
    for r, S in enumerate(F):
        V[r, list(S)] = 1.0
    codes = [sum(3**x for x in S) for S in F]
    sums: dict[int, int] = {}
    pairs = list(itertools.combinations(range(len(F)), 2))
    for a, b in pairs:
        key = codes[a] + codes[b]
        sums[key] = sums.get(key, 0) + 1
    dist = {(a, b): int(np.abs(V[a] - V[b]).sum()) for a, b in pairs}
    for a, b in sorted(pairs, key=lambda ab: -dist[ab]):
        if sums[codes[a] + codes[b]] > 1:
            continue
        if _is_edge(V, a, b):
            return dist[(a, b)], (F[a], F[b])
    raise DiagnosticError("no edge certified")


# ----------------------------------------------------------------------------
# conditionings and reports


def all_conditionings(mu: Density, max_pinned: int | None = None) -> Iterable[tuple[tuple[int, ...], Density]]:
    """(T, mu conditioned on T) for every T inside some support set with |T| < k."""
    support = list(mu.support())
    top = mu.k - 1 if max_pinned is None else min(max_pinned, mu.k - 1)
    seen = set()
    for r in range(top + 1):
        for S in support:
            for T in itertools.combinations(S, r):
                if T not in seen:
                    seen.add(T)
                    yield T, condition(mu, T, witness=S)


def _matching_type(mu: Density) -> bool:
    base = mu
    while isinstance(base, Conditioned):
        base = base.base
    return isinstance(base, (MonomerDimer, KMatching))


def report(mu: Density, alphas: Sequence[float] = (0.125, 0.25, 0.5, 1.0), gaps: Sequence[int] | None = None,
           alpha_support: float = 0.25) -> dict:
    """JSON-ready summary of every diagnostic for one enumerable density."""
    from .walk import WalkError, default_gap, exact_transition_matrix, spectral_gap

    table = enumerate_density(mu)
    cm = correlation_from_table(table, mu.n)
    inf_rows, inf_max = row_norm_and_spectrum(cm.psi_inf)
    cor_rows, cor_max = row_norm_and_spectrum(cm.psi_cor)
    out: dict = {
        "density": mu.descriptor(),
        "support_size": len(table),
        "psi_inf": {"max_row_sum": inf_rows, "lambda_max": inf_max, "spectrum": cm.spectrum_inf().tolist()},
        "psi_cor": {"max_row_sum": cor_rows, "lambda_max": cor_max, "spectrum": cm.spectrum_cor().tolist()},
        "marginals": cm.marginals.tolist(),
        "flc": [],
        "entropy": [],
        "walk": [],
    }
    for a in alphas:
        r = flc_hessian_check(cm, a)
        out["flc"].append({"alpha": a, "ok": r.ok, "witness": r.witness, "agrees_with_correlation": r.agree})
        ok, slack = entropy_bound_check(table, a, mu.n)
        out["entropy"].append({"alpha": a, "ok": ok, "slack": slack})
    if mu.k >= 1:
        for d in gaps or sorted({1, default_gap(mu)}):
            if not 1 <= d <= mu.k:
                continue
            try:
                gap = spectral_gap(exact_transition_matrix(mu, d))
            except WalkError as exc:
                out["walk"].append({"gap_d": d, "error": str(exc)})
                continue
            rec = {"gap_d": d, "spectral_gap": gap}
            if gap == 0.0:
                rec["flag"] = "parity-reducible" if _matching_type(mu) and d % 2 else "reducible"
            out["walk"].append(rec)
    if len(table) <= 2000:
        edge, _ = newton_polytope_max_edge(table, mu.n)
        out["newton_max_edge"] = edge
    est = support_log_estimate(table, alpha_support, mu.n)
    out["support_log"] = {"log_size": math.log(len(table)), "lower": est.lower, "upper": est.upper,
                          "alpha": alpha_support, "contains": est.contains(math.log(len(table)))}
    return out
