"""Self-checks run by ``kextbounds check``.

``quick`` re-derives closed-form anchor values. ``full`` adds randomized
comparisons between independent routes to the same quantity.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import bounds, hyptest, lp, numerics, statefam
from .bounds import ChannelKind, ChannelParams
from .statefam import Family

SEED = 20240611


@dataclass
class CheckResult:
    module: str
    name: str
    inputs: str
    observed: object
    expected: object
    passed: bool

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"{tag} {self.module}.{self.name} [{self.inputs}] "
                f"observed={_fmt(self.observed)} expected={_fmt(self.expected)}")


@dataclass
class CheckReport:
    depth: str
    results: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list:
        return [r for r in self.results if not r.passed]

    def lines(self) -> list[str]:
        out = [r.line() for r in self.results]
        out += self.notes
        n_fail = len(self.failures)
        out.append(f"{self.depth}: {len(self.results) - n_fail}/{len(self.results)} "
                   f"checks passed in {self.seconds:.1f}s")
        return out


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, np.ndarray):
        return np.array2string(v, precision=12, separator=",").replace("\n", "")
    return str(v)


def _close(module, name, inputs, observed, expected, tol):
    if isinstance(expected, float) and math.isinf(expected):
        ok = observed == expected
    else:
        ok = observed is not None and abs(observed - expected) <= tol
    return CheckResult(module, name, inputs, observed, expected, bool(ok))


def _same(module, name, inputs, observed, expected):
    return CheckResult(module, name, inputs, observed, expected, observed == expected)


def _matrix(module, name, inputs, observed, expected, tol=0.0):
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    ok = observed.shape == expected.shape and bool(np.all(np.abs(observed - expected) <= tol))
    return CheckResult(module, name, inputs, observed, expected, ok)


def quick_checks() -> list[CheckResult]:
    kl, mx, ren = (numerics.binary_divergence(k, 0.85, 0.75, a)
                   for k, a in (("kl", None), ("max", None), ("renyi", 2.0)))
    r = [
        _close("numerics", "binary_kl", "0.85||0.75", kl, 0.0429415697, 1e-9),
        _close("numerics", "binary_max", "0.85||0.75", mx, 0.1805722456, 1e-9),
        _close("numerics", "binary_renyi", "alpha=2, 0.85||0.75", ren, 0.0749620577, 1e-9),
        _close("numerics", "log_binomial", "50,25", numerics.log_binomial(50, 25),
               46.8451108458, 1e-9),
        _close("statefam", "threshold", "isotropic d=2 k=2",
               statefam.extendibility_threshold(Family.ISOTROPIC, 2, 2), 0.75, 0.0),
        _close("statefam", "threshold", "werner d=2 k=2",
               statefam.extendibility_threshold(Family.WERNER, 2, 2), 0.75, 0.0),
        _close("statefam", "unextendible_kl", "werner p=0.9 k=2",
               statefam.unextendible_divergence(statefam.StateFamilyPoint(Family.WERNER, 2, 0.9),
                                                "kl", 2), 0.1045381558, 1e-9),
        _close("statefam", "max_divergence", "t=0.9 d=2 k=2",
               statefam.unextendible_max_divergence_isotropic(0.9, 2, 2), 0.2630344058, 1e-9),
        _close("hyptest", "identity", "rho=sigma eps=0.05",
               hyptest.dh_eps([0.3, 0.7], [0.3, 0.7], 0.05), -math.log2(0.95), 1e-12),
        _close("hyptest", "knapsack", "(0.8,0.2)||(0.5,0.5) eps=0.1",
               hyptest.dh_eps([0.8, 0.2], [0.5, 0.5], 0.1), -math.log2(0.75), 1e-12),
        _close("hyptest", "disjoint", "(1,0)||(0,1) eps=0",
               hyptest.dh_eps([1.0, 0.0], [0.0, 1.0], 0.0), math.inf, 0.0),
        _close("hyptest", "type_classes", "n=2 p=0.2 t=0.5 eps=0.1",
               hyptest.dh_eps_bernoulli_product(hyptest.BernoulliProductInstance(2, 0.2, 0.5, 0.1)),
               -math.log2(0.65625), 1e-12),
        _close("lp", "trivial", "max x, x<=1",
               lp.solve_lp(lp.LinearProgram(1, [1.0], [([1.0], "<=", 1.0)])).objective_value,
               1.0, 1e-12),
        _same("lp", "infeasible", "x<=1, x>=2",
              lp.solve_lp(lp.LinearProgram(1, [1.0], [([1.0], "<=", 1.0),
                                                      ([1.0], ">=", 2.0)])).status.value,
              "infeasible"),
        _close("lp", "erasure_program", "n=1 k=2 p=0 eps=0",
               lp.solve_lp(bounds.erasure_lp_build(
                   ChannelParams(ChannelKind.ERASURE, 0.0, 1, 0.0, 2))).objective_value,
               0.5, 1e-12),
    ]
    rd = bounds.rate_from_divergence
    r += [
        _close("bounds", "rate_from_divergence", "E=log2(4/3) k=2",
               rd(math.log2(4 / 3), 2)[1], 1.0, 1e-12),
        _same("bounds", "rate_from_divergence", "E=1 k=2", rd(1.0, 2)[0].value, "invalid"),
        _close("bounds", "depolarizing", "p=0 n=1 eps=0 k=2",
               bounds.depolarizing_bound(ChannelParams(ChannelKind.DEPOLARIZING, 0.0, 1, 0.0, 2))
               .log2M_total, 1.0, 1e-12),
        _close("bounds", "depolarizing", "p=0.25 n=5 eps=0.05 k=2",
               bounds.depolarizing_bound(ChannelParams(ChannelKind.DEPOLARIZING, 0.25, 5, 0.05, 2))
               .log2M_total, -math.log2(0.9), 1e-9),
        _close("bounds", "erasure", "p=0.5 n=1 eps=0 k=2",
               bounds.erasure_bound(ChannelParams(ChannelKind.ERASURE, 0.5, 1, 0.0, 2))
               .log2M_total, 0.0, 1e-12),
        _matrix("bounds", "erasure_matrix", "n=1 k=2", bounds.erasure_matrix(1, 2),
                [[0.5, 0.0], [0.5, 1.0]]),
        _matrix("bounds", "erasure_matrix", "n=2 k=2", bounds.erasure_matrix(2, 2),
                [[0.25, 0.0, 0.0], [0.25, 0.5, 0.0], [0.25, 1.0, 1.0]]),
        _close("bounds", "tbr_limit", "depolarizing p=0.25 n=1 eps=0.05",
               bounds.tbr_limit_bound(ChannelParams(ChannelKind.DEPOLARIZING, 0.25, 1, 0.05))
               .log2M_total, -math.log2(0.9), 1e-9),
        _close("bounds", "emax", "p=0.1 k=2", bounds.emax_k_depolarizing(0.1, 2),
               0.2630344058, 1e-9),
        _close("bounds", "adaptive", "p=0.25 k=2 n=10 eps=0.05",
               bounds.adaptive_depolarizing_bound(
                   ChannelParams(ChannelKind.DEPOLARIZING, 0.25, 10, 0.05, 2)).log2M_total,
               -math.log2(0.9), 1e-9),
        _same("bounds", "adaptive", "p=0 k=2 n=3 eps=0.05",
              bounds.adaptive_depolarizing_bound(
                  ChannelParams(ChannelKind.DEPOLARIZING, 0.0, 3, 0.05, 2)).status.value,
              "invalid"),
        _close("bounds", "pretty_strong_converse", "eps=0.05 n=2 k=4",
               bounds.pretty_strong_converse(0.05, 2, 4), 0.0497678368, 1e-9),
        _close("bounds", "continuity", "eps=0.5 d=2 k=4",
               bounds.continuity_bound(0.5, 2, 4), 1.8774437511, 1e-9),
        _same("bounds", "min_k", "one-shot I=1 eps=0.05",
              bounds.min_k_required("one_shot", 1.0, 0.05), 2),
        _same("bounds", "min_k", "adaptive I=1 eps=0.05 n=1",
              bounds.min_k_required("adaptive", 1.0, 0.05, 1), 2),
    ]
    return r


def _random_pair(rng, m):
    rho = rng.dirichlet(np.ones(m))
    sigma = rng.dirichlet(np.ones(m))
    # sprinkle exact zeros and repeated ratios
    if rng.random() < 0.3:
        sigma[rng.integers(m)] = 0.0
    if rng.random() < 0.3:
        rho[rng.integers(m)] = 0.0
    if m >= 2 and rng.random() < 0.3:
        i, j = rng.choice(m, 2, replace=False)
        sigma[j] = sigma[i]
        rho[j] = rho[i]
    if rho.sum() == 0 or sigma.sum() == 0:
        return _random_pair(rng, m)
    return rho / rho.sum(), sigma / sigma.sum()


def np_vs_lp(rng, count=500, max_outcomes=8) -> tuple[float, list]:
    """Largest |greedy - simplex| difference of D_h over random instances."""
    worst, bad = 0.0, []
    for _ in range(count):
        m = int(rng.integers(1, max_outcomes + 1))
        rho, sigma = _random_pair(rng, m)
        eps = float(rng.choice([0.0, rng.random() * 0.999]))
        greedy = hyptest.dh_eps(rho, sigma, eps)
        beta = lp.min_type2_error(rho, sigma, eps)
        via_lp = math.inf if beta <= 1e-15 else max(-math.log2(beta), 0.0)
        if math.isinf(greedy) or math.isinf(via_lp):
            d = 0.0 if greedy == via_lp else math.inf
        else:
            d = abs(greedy - via_lp)
        if d > worst:
            worst = d
        if d > 1e-8:
            bad.append((rho, sigma, eps, greedy, via_lp))
    return worst, bad


def expanded_bernoulli(n, p, t, eps) -> float:
    """D_h on all 2^n strings, without the type-class reduction."""
    rho, sigma = [], []
    for bits in itertools.product((0, 1), repeat=n):
        ones = sum(bits)
        rho.append((1 - p) ** (n - ones) * p ** ones)
        sigma.append(t ** (n - ones) * (1 - t) ** ones)
    return hyptest.dh_eps(np.array(rho) / sum(rho), np.array(sigma) / sum(sigma), eps)


def type_class_vs_expansion(rng, count=200, max_n=12) -> tuple[float, list]:
    worst, bad = 0.0, []
    for _ in range(count):
        n = int(rng.integers(1, max_n + 1))
        p, t = (float(x) for x in rng.random(2))
        eps = float(rng.random() * 0.99)
        fast = hyptest.dh_eps_bernoulli_product(hyptest.BernoulliProductInstance(n, p, t, eps))
        slow = expanded_bernoulli(n, p, t, eps)
        d = 0.0 if fast == slow else abs(fast - slow)
        worst = max(worst, d)
        if d > 1e-10:
            bad.append((n, p, t, eps, fast, slow))
    return worst, bad


def max_divergence_grid(t, d, k, points=100_000) -> float:
    """min over q in [0, threshold] of log2 max(t/q, (1-t)/(1-q)) on a grid
    that includes both endpoints."""
    thr = statefam.extendibility_threshold(Family.ISOTROPIC, d, k)
    q = np.linspace(0.0, thr, points)
    q = q[q > 0]
    with np.errstate(divide="ignore"):
        vals = np.log2(np.maximum(t / q, (1 - t) / (1 - q)))
    return max(float(vals.min()), 0.0)


def grid_tolerance(t, d, k, points=100_000) -> float:
    """1e-9 when the minimiser is the right endpoint (a grid point); otherwise
    the minimiser q = t is interior and the grid can miss it by one spacing,
    over which the objective moves by at most spacing / (ln 2 min(t, 1-t))."""
    thr = statefam.extendibility_threshold(Family.ISOTROPIC, d, k)
    if t >= thr:
        return 1e-9
    h = thr / (points - 1)
    return 1e-9 + h / (math.log(2) * max(min(t, 1 - t) - h, h))


def full_checks(seed: int = SEED) -> tuple[list[CheckResult], list[str]]:
    rng = np.random.default_rng(seed)
    results, notes = [], []

    worst, bad = np_vs_lp(rng)
    notes.append(f"NP-vs-LP max deviation {worst:.3g} over 500 instances")
    results.append(CheckResult("hyptest", "np_vs_lp", "500 random, <=8 outcomes",
                               worst, "<=1e-8", not bad))
    for rho, sigma, eps, g, v in bad[:5]:
        results.append(CheckResult("hyptest", "np_vs_lp",
                                   f"rho={_fmt(rho)} sigma={_fmt(sigma)} eps={eps:.6g}",
                                   g, v, False))

    worst, bad = type_class_vs_expansion(rng)
    notes.append(f"type-class vs expansion max deviation {worst:.3g} over 200 instances")
    results.append(CheckResult("hyptest", "type_class_expansion", "200 random, n<=12",
                               worst, "<=1e-10", not bad))
    for n, p, t, eps, fast, slow in bad[:5]:
        results.append(CheckResult("hyptest", "type_class_expansion",
                                   f"n={n} p={p:.6g} t={t:.6g} eps={eps:.6g}", fast, slow, False))

    for _ in range(20):
        t = float(rng.random())
        d = int(rng.integers(2, 6))
        k = int(rng.integers(2, 12))
        results.append(_close("statefam", "max_divergence_grid", f"t={t:.6g} d={d} k={k}",
                              statefam.unextendible_max_divergence_isotropic(t, d, k),
                              max_divergence_grid(t, d, k), grid_tolerance(t, d, k)))

    # the monolithic program and the minimax route must agree
    for n, k, p in ((1, 2, 0.35), (2, 3, 0.35), (4, 2, 0.5), (6, 5, 0.2), (10, 10, 0.35)):
        params = ChannelParams(ChannelKind.ERASURE, p, n, 0.05, k)
        beta_lp, _, _ = bounds.solve_erasure_lp(bounds.erasure_lp_build(params))
        beta = bounds.erasure_bound(params).extra["beta"]
        results.append(_close("bounds", "erasure_two_routes", f"n={n} k={k} p={p}",
                              beta, beta_lp, 1e-9 * max(beta_lp, 1e-300)))

    for n, k in ((2, 2), (3, 4)):
        m = bounds.erasure_matrix(n, k)
        results.append(_same("bounds", "erasure_matrix_lower_triangular", f"n={n} k={k}",
                             bool(np.all(np.triu(m, 1) == 0)), True))
        binom = np.array([math.comb(n, v) for v in range(n + 1)], dtype=float)
        results.append(_matrix("bounds", "erasure_matrix_class_form", f"n={n} k={k}",
                               bounds.erasure_class_matrix(n, k) * binom[None, :],
                               binom[:, None] * m, 1e-12))
    return results, notes


def cross_check(depth: str = "quick") -> CheckReport:
    if depth not in ("quick", "full"):
        raise ValueError(f"depth must be 'quick' or 'full', got {depth!r}")
    start = time.perf_counter()
    report = CheckReport(depth)
    report.results = quick_checks()
    if depth == "full":
        more, notes = full_checks()
        report.results += more
        report.notes += notes
    report.seconds = time.perf_counter() - start
    return report
