"""Classical epsilon-hypothesis-testing divergence via the Neyman-Pearson test.

D_h^eps(rho||sigma) = -log2 min { sum sigma_i L_i : sum rho_i L_i >= 1 - eps, 0 <= L_i <= 1 }.

The optimal test accepts outcomes in decreasing order of the likelihood ratio
rho_i / sigma_i and takes a fractional acceptance on the boundary outcome.
Everything is done on log2 weights so that products of hundreds of
probabilities do not underflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import NEG_INF, FiniteDist, log_binomial_row, log_mul_count, log_sum

# relative tolerance (in log2 units) for treating two likelihood ratios as equal
RATIO_MERGE_TOL = 1e-12


def _check_eps(eps):
    eps = float(eps)
    if math.isnan(eps) or not 0.0 <= eps < 1.0:
        raise ValueError(f"eps must lie in [0, 1), got {eps!r}")
    return eps


@dataclass(frozen=True)
class HypothesisInstance:
    rho: FiniteDist
    sigma: FiniteDist
    eps: float

    def __post_init__(self):
        if not isinstance(self.rho, FiniteDist):
            object.__setattr__(self, "rho", FiniteDist.from_probs(self.rho))
        if not isinstance(self.sigma, FiniteDist):
            object.__setattr__(self, "sigma", FiniteDist.from_probs(self.sigma))
        if len(self.rho) != len(self.sigma):
            raise ValueError("rho and sigma must have the same number of outcomes")
        object.__setattr__(self, "eps", _check_eps(self.eps))


@dataclass(frozen=True)
class BernoulliProductInstance:
    """n-fold products of {1-p, p} (null) against {t, 1-t} (alternative)."""

    n: int
    p: float
    t: float
    eps: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        for name in ("p", "t"):
            v = float(getattr(self, name))
            if math.isnan(v) or not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "eps", _check_eps(self.eps))


def _log2_or_neginf(x):
    return NEG_INF if x == 0.0 else math.log2(x)


def _boundary(log_rho, eps):
    """Index of the boundary group and its acceptance fraction.

    ``log_rho`` holds the null masses of the groups in test order. Groups
    before the returned index are accepted fully.
    """
    m = len(log_rho)
    # suffix[i] = log2 sum_{j >= i} rho_j ; suffix[m] = -inf
    suffix = np.full(m + 1, NEG_INF)
    if m:
        suffix[:m] = np.logaddexp2.accumulate(np.asarray(log_rho)[::-1])[::-1]
    log_eps = _log2_or_neginf(eps)
    for g in range(m):
        if suffix[g + 1] <= log_eps:
            r_g = 2.0 ** log_rho[g]
            rest = 0.0 if suffix[g + 1] == NEG_INF else 2.0 ** suffix[g + 1]
            lam = 1.0 if eps == 0.0 else 1.0 - (eps - rest) / r_g
            return g, min(max(lam, 0.0), 1.0)
    raise ValueError("null distribution carries no mass")  # pragma: no cover


def _log_ratio(log_rho, log_sigma):
    lr = np.asarray(log_rho, dtype=float)
    ls = np.asarray(log_sigma, dtype=float)
    with np.errstate(invalid="ignore"):
        ratio = lr - ls
    ratio = np.where(ls == NEG_INF, np.inf, ratio)
    ratio = np.where(lr == NEG_INF, -np.inf, ratio)
    return ratio


def _np_groups(lr, ls):
    """Outcome groups in test order: (indices, log2 null mass, log2 alt mass).

    Outcomes with equal likelihood ratio share a group so the result does not
    depend on their order. Outcomes with zero weight under both are dropped.
    """
    idx = np.flatnonzero(~((lr == NEG_INF) & (ls == NEG_INF)))
    ratio = _log_ratio(lr[idx], ls[idx])
    order = np.argsort(-ratio, kind="mergesort")
    idx, ratio = idx[order], ratio[order]
    groups = []
    start = 0
    for i in range(1, len(ratio) + 1):
        if i < len(ratio):
            a, b = ratio[i - 1], ratio[i]
            if a == b or (math.isfinite(a) and math.isfinite(b)
                          and abs(a - b) <= RATIO_MERGE_TOL * max(1.0, abs(a))):
                continue
        members = idx[start:i]
        groups.append((members, log_sum(lr[members]), log_sum(ls[members])))
        start = i
    return groups


def _np_solve(log_rho, log_sigma, eps):
    eps = _check_eps(eps)
    lr = np.asarray(log_rho, dtype=float)
    ls = np.asarray(log_sigma, dtype=float)
    groups = _np_groups(lr, ls)
    g, lam = _boundary([gr[1] for gr in groups], eps)
    return groups, g, lam


def neyman_pearson_log_beta(log_rho, log_sigma, eps: float) -> float:
    """log2 of the optimal type-II error, from log2 weights of both hypotheses."""
    groups, g, lam = _np_solve(log_rho, log_sigma, eps)
    terms = [gr[2] for gr in groups[:g]]
    if lam > 0.0:
        terms.append(math.log2(lam) + groups[g][2])
    return log_sum(terms) if terms else NEG_INF


def neyman_pearson_test(log_rho, log_sigma, eps: float) -> np.ndarray:
    """Acceptance probability of the optimal test for each outcome.

    The test accepts the null with probability at least 1 - eps and attains
    the type-II error reported by ``neyman_pearson_log_beta``.
    """
    groups, g, lam = _np_solve(log_rho, log_sigma, eps)
    test = np.zeros(len(np.asarray(log_rho)))
    for members, _, _ in groups[:g]:
        test[members] = 1.0
    test[groups[g][0]] = lam
    return test


def _divergence_from_log_beta(log_beta):
    if log_beta == NEG_INF:
        return math.inf
    return max(-float(log_beta), 0.0)


def dh_eps_general(instance: HypothesisInstance) -> float:
    """epsilon-hypothesis-testing divergence between two finite distributions."""
    return _divergence_from_log_beta(neyman_pearson_log_beta(
        instance.rho.log_weights, instance.sigma.log_weights, instance.eps))


def dh_eps(rho, sigma, eps: float) -> float:
    """Convenience wrapper taking probability vectors (or FiniteDist)."""
    return dh_eps_general(HypothesisInstance(rho, sigma, eps))


def _type_class_logs(n, p, t):
    counts = np.arange(n + 1)
    logc = log_binomial_row(n)
    lrho = (logc + log_mul_count(n - counts, _log2_or_neginf(1.0 - p))
            + log_mul_count(counts, _log2_or_neginf(p)))
    lsig = (logc + log_mul_count(n - counts, _log2_or_neginf(t))
            + log_mul_count(counts, _log2_or_neginf(1.0 - t)))
    return lrho, lsig


def bernoulli_product_log_beta(instance: BernoulliProductInstance) -> float:
    lrho, lsig = _type_class_logs(instance.n, instance.p, instance.t)
    return neyman_pearson_log_beta(lrho, lsig, instance.eps)


def dh_eps_bernoulli_product(instance: BernoulliProductInstance) -> float:
    """D_h^eps({1-p,p}^n || {t,1-t}^n) over the n+1 type classes.

    Class l (number of second outcomes) has per-string likelihood ratio
    ((1-p)/t)^(n-l) (p/(1-t))^l, so the classes are the natural test groups.
    """
    return _divergence_from_log_beta(bernoulli_product_log_beta(instance))


def bernoulli_product_divergence_grid(n: int, p: float, ts, eps: float) -> np.ndarray:
    """dh_eps_bernoulli_product evaluated on many values of t at once.

    The null distribution does not depend on t, and the likelihood ratio is
    monotone in the class index with a direction set by the sign of
    log(p/(1-t)) - log((1-p)/t). So the boundary class is computed once per
    direction and only the alternative masses vary with t.
    """
    BernoulliProductInstance(n, p, 0.5, eps)  # validation
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(np.isnan(ts)) or np.any((ts < 0) | (ts > 1)):
        raise ValueError("t values must lie in [0, 1]")
    counts = np.arange(n + 1)
    logc = log_binomial_row(n)
    lrho = (logc + log_mul_count(n - counts, _log2_or_neginf(1.0 - p))
            + log_mul_count(counts, _log2_or_neginf(p)))
    with np.errstate(divide="ignore"):
        lt = np.log2(ts)
        l1t = np.log2(1.0 - ts)
    lsig = (logc[None, :] + log_mul_count(n - counts[None, :], lt[:, None])
            + log_mul_count(counts[None, :], l1t[:, None]))

    lp, l1p = _log2_or_neginf(p), _log2_or_neginf(1.0 - p)
    with np.errstate(invalid="ignore"):
        slope = (lp - l1t) - (l1p - lt)
    descending = slope > 0

    out = np.empty(len(ts))
    for desc in (False, True):
        sel = descending == desc
        if not np.any(sel):
            continue
        order = counts[::-1] if desc else counts
        g, lam = _boundary(lrho[order], eps)
        block = lsig[sel][:, order]
        terms = block[:, :g]
        if lam > 0.0:
            terms = np.concatenate([terms, math.log2(lam) + block[:, g:g + 1]], axis=1)
        if terms.shape[1] == 0:
            log_beta = np.full(block.shape[0], NEG_INF)
        else:
            log_beta = log_sum(terms, axis=1)
        out[sel] = np.where(log_beta == NEG_INF, np.inf, np.maximum(-log_beta, 0.0))
    return out
