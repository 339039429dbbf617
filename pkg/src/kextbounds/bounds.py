"""Non-asymptotic rate bounds for depolarizing and erasure channels assisted
by k-extendible channels, plus the supporting closed-form bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .hyptest import (BernoulliProductInstance, bernoulli_product_divergence_grid,
                      dh_eps_bernoulli_product, neyman_pearson_log_beta,
                      neyman_pearson_test)
from .lp import LinearProgram, LpNumericalError, LpSolution, LpStatus, solve_lp
from .numerics import log_binomial_row, log_mul_count, log_sum
from .statefam import Family, extendibility_threshold, unextendible_max_divergence_isotropic

DEFAULT_T_GRID = 10_000
DEFAULT_K_SET = tuple(range(2, 11))
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ChannelKind(str, Enum):
    DEPOLARIZING = "depolarizing"
    ERASURE = "erasure"


class BoundStatus(str, Enum):
    VALID = "valid"
    INVALID = "invalid"


@dataclass(frozen=True)
class ChannelParams:
    """Depolarizing (p = Pauli-error probability) or erasure (p = erasure
    probability) channel used n times with error eps and extendibility k."""

    kind: ChannelKind
    p: float
    n: int
    eps: float
    k: int = 2

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        if math.isnan(self.p) or not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if math.isnan(self.eps) or not 0.0 <= self.eps < 1.0:
            raise ValueError(f"eps must lie in [0, 1), got {self.eps!r}")
        if int(self.k) != self.k or self.k < 2:
            raise ValueError(f"k must be an integer >= 2, got {self.k!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "k", int(self.k))

    def with_k(self, k: int) -> "ChannelParams":
        return ChannelParams(self.kind, self.p, self.n, self.eps, k)


@dataclass
class BoundResult:
    """One upper bound on log2 M for n channel uses.

    ``witness`` is the optimal isotropic weight t (depolarizing) or the
    per-string coefficient vector c (erasure). ``capped`` marks a divergence
    that was replaced by the universal cap log2 k + log2(1/(1-eps)).
    """

    status: BoundStatus
    log2M_total: float
    rate_per_use: float
    divergence_E: float
    witness: object
    k_used: int | None
    n: int = 1
    capped: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return self.status is BoundStatus.VALID


# ---------------------------------------------------------------------------
# rearranged converse

def rate_from_divergence(E_total: float, k: int) -> tuple[BoundStatus, float]:
    """log2((k-1)/k) - log2(2^-E - 1/k), or INVALID when 2^-E <= 1/k.

    Written as log2(k-1) - log2(expm1((log2 k - E) ln 2)) to avoid the
    cancellation in 2^-E - 1/k when E is close to log2 k.
    """
    if math.isnan(E_total) or E_total < 0:
        raise ValueError(f"E_total must be nonnegative, got {E_total!r}")
    if int(k) != k or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k!r}")
    margin = math.log2(k) - E_total
    if not margin > 0:
        return BoundStatus.INVALID, math.nan
    if E_total == 0:
        return BoundStatus.VALID, 0.0
    return BoundStatus.VALID, math.log2(k - 1) - math.log2(math.expm1(margin * math.log(2)))


def divergence_cap(k: int, eps: float) -> float:
    """Universal upper bound log2 k + log2(1/(1-eps)) on the unextendible
    hypothesis-testing divergence of any channel."""
    return math.log2(k) - math.log2(1.0 - eps)


def _finish(E, k, n, eps, witness, extra=None):
    cap = divergence_cap(k, eps)
    capped = E > cap
    if capped:
        E = cap
    status, total = rate_from_divergence(E, k)
    rate = total / n if status is BoundStatus.VALID else math.nan
    return BoundResult(status, total, rate, E, witness, k, n, capped, extra or {})


# ---------------------------------------------------------------------------
# one-dimensional minimisation: dense grid, then golden section in the best cell

def minimize_on_interval(f: Callable[[float], float], f_grid, lo: float, hi: float,
                         grid_size: int = DEFAULT_T_GRID, candidates: Sequence[float] = (),
                         xtol: float = 1e-13) -> tuple[float, float]:
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    grid = np.linspace(lo, hi, grid_size)
    vals = np.asarray(f_grid(grid), dtype=float)
    i = int(np.argmin(vals))
    best_x, best_v = float(grid[i]), float(vals[i])

    a = float(grid[max(i - 1, 0)])
    b = float(grid[min(i + 1, grid_size - 1)])
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > xtol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
    for x in (x1, x2, *[c for c in candidates if lo <= c <= hi]):
        v = f(x)
        if v < best_v:
            best_x, best_v = float(x), v
    return best_x, best_v


def _depolarizing_divergence(p, n, eps, t_max, grid_size):
    f = lambda t: dh_eps_bernoulli_product(BernoulliProductInstance(n, p, t, eps))
    f_grid = lambda ts: bernoulli_product_divergence_grid(n, p, ts, eps)
    # t = 1 - p makes the two hypotheses equal, the global minimum when reachable
    return minimize_on_interval(f, f_grid, 0.0, t_max, grid_size, candidates=(1.0 - p,))


def depolarizing_bound(params: ChannelParams, t_grid_size: int = DEFAULT_T_GRID) -> BoundResult:
    """Bound from tensor powers of k-extendible two-qubit isotropic states.

    The Choi state of the channel has weight 1-p on the maximally entangled
    state, so the divergence is D_h^eps({1-p,p}^n || {t,1-t}^n) minimised over
    t up to the isotropic k-extendibility threshold.
    """
    _require(params, ChannelKind.DEPOLARIZING)
    t_max = extendibility_threshold(Family.ISOTROPIC, 2, params.k)
    t_star, E = _depolarizing_divergence(params.p, params.n, params.eps, t_max, t_grid_size)
    return _finish(E, params.k, params.n, params.eps, t_star)


# ---------------------------------------------------------------------------
# erasure channel

def erasure_class_distribution(n: int, p: float) -> np.ndarray:
    """Probability of u erasures among n uses, u = 0..n."""
    u = np.arange(n + 1)
    logc = log_binomial_row(n)
    with np.errstate(divide="ignore"):
        lp_, l1p = np.log2(p), np.log2(1.0 - p)
    return np.exp2(logc + log_mul_count(n - u, l1p) + log_mul_count(u, lp_))


def _erasure_log_matrix(n, k, per_string):
    u = np.arange(n + 1)[:, None]
    v = np.arange(n + 1)[None, :]
    low = u >= v
    rows = [log_binomial_row(m) for m in range(n + 1)]
    out = np.full((n + 1, n + 1), -np.inf)
    for uu in range(n + 1):
        for vv in range(uu + 1):
            if per_string:
                lb = rows[uu][vv]  # C(u, v)
            else:
                lb = rows[n - vv][uu - vv]  # C(n-v, u-v)
            out[uu, vv] = (lb + (uu - vv) * math.log2(1.0 - 1.0 / k)
                           - (n - uu) * math.log2(k))
    assert np.all(np.isneginf(out[~low]))
    return out


def erasure_matrix(n: int, k: int) -> np.ndarray:
    """Per-string replacement matrix.

    Entry (u, v) is the weight that one string with v erasures contributes to
    one fixed string with u >= v erasures, when every unerased pair is
    replaced by the k-extendible mixture (1/k) Phi + (1 - 1/k) pi (x) |e><e|:
    C(u, v) (1 - 1/k)^(u-v) (1/k)^(n-u).
    """
    return np.exp2(_erasure_log_matrix(n, k, per_string=True))


def erasure_class_matrix(n: int, k: int) -> np.ndarray:
    """Class-aggregated form C(n-v, u-v) (1 - 1/k)^(u-v) (1/k)^(n-u).

    Maps class masses C(n, v) c_v to class masses b_u. Related to
    ``erasure_matrix`` by class[u, v] C(n, v) = C(n, u) string[u, v].
    """
    return np.exp2(_erasure_log_matrix(n, k, per_string=False))


def separable_class_matrix(n: int) -> np.ndarray:
    """k -> infinity replacement: each unerased pair becomes the separable
    isotropic state of weight 1/2, so only a 2^-(n-u) overlap survives and
    erasure patterns are not mixed."""
    return np.diag(0.5 ** (n - np.arange(n + 1)))


def _separable_log_matrix(n):
    out = np.full((n + 1, n + 1), -np.inf)
    u = np.arange(n + 1)
    out[u, u] = -(n - u).astype(float)
    return out


@dataclass
class ErasureLP(LinearProgram):
    """Erasure-channel program with its data attached.

    Variables are ordered (c_0..c_n, alpha_0..alpha_n, y).
    """

    n: int = 0
    k: int | None = None
    eps: float = 0.0
    a: np.ndarray | None = None
    matrix: np.ndarray | None = None
    class_matrix: np.ndarray | None = None

    @property
    def c_slice(self) -> slice:
        return slice(0, self.n + 1)

    @property
    def alpha_slice(self) -> slice:
        return slice(self.n + 1, 2 * self.n + 2)

    @property
    def y_index(self) -> int:
        return 2 * self.n + 2


def _erasure_program(n, p, eps, class_matrix, matrix, k):
    N = n + 1
    a = erasure_class_distribution(n, p)
    binom = np.exp2(log_binomial_row(n))
    B = class_matrix * binom[None, :]
    nv = 2 * N + 1
    obj = np.zeros(nv)
    obj[N:2 * N] = -1.0
    obj[-1] = 1.0 - eps
    cons = []
    for u in range(N):
        row = np.zeros(nv)
        row[:N] = B[u]
        row[N + u] = 1.0
        row[-1] = -a[u]
        cons.append((row, ">=", 0.0))
    row = np.zeros(nv)
    row[:N] = binom
    cons.append((row, "=", 1.0))
    upper = np.full(nv, np.inf)
    upper[:N] = 1.0
    return ErasureLP(nv, obj, cons, np.zeros(nv), upper, n=n, k=k, eps=eps, a=a,
                     matrix=matrix, class_matrix=class_matrix)


def erasure_lp_build(params: ChannelParams) -> ErasureLP:
    """Maximise y(1-eps) - sum alpha subject to alpha_u - y a_u + b_u >= 0,
    b = class_matrix (C(n,v) c_v), sum_v C(n,v) c_v = 1, 0 <= c <= 1.

    The optimum is the largest type-II error over the family, so the
    divergence is -log2 of the objective value.
    """
    _require(params, ChannelKind.ERASURE)
    return _erasure_program(params.n, params.p, params.eps,
                            erasure_class_matrix(params.n, params.k),
                            erasure_matrix(params.n, params.k), params.k)


def solve_erasure_lp(lp: ErasureLP) -> tuple[float, np.ndarray, LpSolution]:
    """Solve the full program directly; returns (beta, c, solution).

    Well conditioned only for moderate n; ``erasure_bound`` uses
    ``max_type2_error`` instead and this serves as an independent check.
    """
    sol = solve_lp(lp)
    if sol.status is not LpStatus.OPTIMAL:
        raise RuntimeError(f"erasure program not solved: {sol.status.value}")
    return sol.objective_value, np.clip(sol.primal[lp.c_slice], 0.0, 1.0), sol


@dataclass
class TypeTwoOptimum:
    beta: float  # optimal type-II error against the mixture M w
    upper: float  # certified upper bound on the maximum over all mixtures
    class_weights: np.ndarray  # w
    lp: LpSolution | None = None  # minimax program, when it was needed


def _mixture_log_b(logM, w):
    with np.errstate(divide="ignore"):
        return log_sum(logM + np.log2(w)[None, :], axis=1)


def _certify(log_a, logM, w, eps):
    """(log2 beta at w, log2 of an upper bound on the maximum over mixtures).

    The optimal test Lambda at w is feasible for every mixture, so
    beta(w') <= (Lambda M) . w' <= max_v (Lambda M)_v for all w'.
    """
    log_b = _mixture_log_b(logM, w)
    log_beta = neyman_pearson_log_beta(log_a, log_b, eps)
    lam = neyman_pearson_test(log_a, log_b, eps)
    with np.errstate(divide="ignore"):
        accept = log_sum(np.log2(lam)[:, None] + logM, axis=0)
    # the constant test 1 - eps is feasible too
    return log_beta, min(float(np.max(accept)), math.log2(1.0 - eps))


# relative size below which null masses and matrix entries are trimmed
TRIM_REL = 1e-13


def _minimax_program(a, M, eps, scale):
    # variables (Lambda_0..Lambda_{U-1}, s / scale)
    U, V = M.shape
    nv = U + 1
    obj = np.zeros(nv)
    obj[-1] = -scale
    cons = []
    for v in range(V):
        row = np.zeros(nv)
        row[:U] = M[:, v]
        row[-1] = -scale
        cons.append((row, "<=", 0.0))
    row = np.zeros(nv)
    row[:U] = a
    cons.append((row, ">=", 1.0 - eps))
    upper = np.ones(nv)
    upper[-1] = np.inf
    return solve_lp(LinearProgram(nv, obj, cons, None, upper))


def max_type2_error(log_a, log_class_matrix, eps: float, rtol: float = 1e-10) -> TypeTwoOptimum:
    """Largest optimal type-II error over mixtures b = M w of the columns of M.

    Both ends are certified in the log domain: ``beta`` is attained by the
    returned mixture and ``upper`` comes from a feasible test. The best single
    column is tried first. When its own test does not prove it optimal, the
    minimax program (smallest s with (Lambda M)_v <= s for a feasible test
    Lambda) supplies a better mixture through its duals. Any attained value is
    a sound input to the converse bound; a gap only makes it looser.
    """
    log_a = np.asarray(log_a, dtype=float)
    logM = np.asarray(log_class_matrix, dtype=float)
    V = logM.shape[1]
    eye = np.eye(V)
    singles = [neyman_pearson_log_beta(log_a, _mixture_log_b(logM, eye[v]), eps)
               for v in range(V)]
    v_best = int(np.argmax(singles))
    w = eye[v_best]
    lo, hi = _certify(log_a, logM, w, eps)
    best = TypeTwoOptimum(float(np.exp2(lo)), float(np.exp2(hi)), w)
    if best.upper - best.beta <= rtol * best.upper:
        return best

    # The program only proposes a mixture, which is then certified exactly, so
    # it may be trimmed: classes with negligible null mass get no test weight,
    # and entries far below the scale of beta cannot move (Lambda M)_v.
    scale = best.beta if best.beta > 0 else 1.0
    keep = log_a >= np.max(log_a) + math.log2(TRIM_REL)
    M = np.exp2(logM[keep])
    M[M < TRIM_REL * scale] = 0.0
    try:
        sol = _minimax_program(np.exp2(log_a[keep]), M, eps, scale)
    except (LpNumericalError, RuntimeError):
        return best
    if sol.status is not LpStatus.OPTIMAL:
        return best
    w = np.clip(sol.dual[:V], 0.0, None)
    if not w.sum() > 0:
        return best
    w = w / w.sum()
    lo, hi = _certify(log_a, logM, w, eps)
    beta, upper = float(np.exp2(lo)), min(best.upper, float(np.exp2(hi)))
    if beta > best.beta:
        return TypeTwoOptimum(beta, upper, w, sol)
    best.upper = upper
    return best


def _erasure_optimum(n, p, eps, log_class_matrix):
    with np.errstate(divide="ignore"):
        log_a = np.log2(erasure_class_distribution(n, p))
    opt = max_type2_error(log_a, log_class_matrix, eps)
    E = math.inf if opt.beta <= 0 else max(-math.log2(opt.beta), 0.0)
    c = opt.class_weights / np.exp2(log_binomial_row(n))
    return E, np.clip(c, 0.0, 1.0), opt


def erasure_bound(params: ChannelParams) -> BoundResult:
    _require(params, ChannelKind.ERASURE)
    E, c, opt = _erasure_optimum(params.n, params.p, params.eps,
                                 _erasure_log_matrix(params.n, params.k, per_string=False))
    return _finish(E, params.k, params.n, params.eps, c,
                   extra={"beta": opt.beta, "beta_upper": opt.upper})


# ---------------------------------------------------------------------------
# k -> infinity

def tbr_limit_bound(params: ChannelParams, t_grid_size: int = DEFAULT_T_GRID) -> BoundResult:
    """Separable-state (k -> infinity) limit: log2 M <= E."""
    n, p, eps = params.n, params.p, params.eps
    if params.kind is ChannelKind.DEPOLARIZING:
        t_star, E = _depolarizing_divergence(p, n, eps, 0.5, t_grid_size)
        witness = t_star
    else:
        E, witness, _ = _erasure_optimum(n, p, eps, _separable_log_matrix(n))
    return BoundResult(BoundStatus.VALID, E, E / n, E, witness, None, n)


# ---------------------------------------------------------------------------
# adaptive protocols

def emax_k_depolarizing(p: float, k: int) -> float:
    """k-unextendible max-relative entropy of the qubit depolarizing channel."""
    if math.isnan(p) or not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    return unextendible_max_divergence_isotropic(1.0 - p, 2, k)


def adaptive_depolarizing_bound(params: ChannelParams) -> BoundResult:
    """Bound for protocols interleaved with k-extendible channels:
    log2((k-1)/k) - log2(2^(-n E_max)(1-eps) - 1/k).

    ``divergence_E`` holds the per-use E_max; the bound equals
    ``rate_from_divergence(n * E_max + log2(1/(1-eps)), k)``.
    """
    _require(params, ChannelKind.DEPOLARIZING)
    E = emax_k_depolarizing(params.p, params.k)
    eff = params.n * E - math.log2(1.0 - params.eps)
    status, total = rate_from_divergence(eff, params.k)
    rate = total / params.n if status is BoundStatus.VALID else math.nan
    return BoundResult(status, total, rate, E, None, params.k, params.n,
                       extra={"effective_divergence": eff})


def pretty_strong_converse(eps: float, n: int, k: int) -> float:
    """(1/n) log2(1/(1 - k eps/(k-1))) for k-extendible channels, eps < 1 - 1/k."""
    if int(k) != k or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k!r}")
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    if math.isnan(eps) or eps < 0 or eps >= 1.0 - 1.0 / k:
        raise ValueError(f"eps must lie in [0, 1 - 1/k), got {eps!r}")
    return -math.log2(1.0 - k * eps / (k - 1)) / n


# ---------------------------------------------------------------------------
# how large k must be

def min_k_one_shot(I_h: float, eps: float) -> int:
    """Smallest integer k >= 2 with k > 2^I_h eps + 1."""
    _check_info(I_h, eps)
    return max(2, math.floor(2.0 ** I_h * eps + 1.0) + 1)


def min_k_adaptive(I_max: float, eps: float, n: int) -> int:
    """Smallest integer k >= 2 with
    k > 2^I [k^(1-1/n) / (1-eps)^(1/n) - (1 - 2^-I)]."""
    _check_info(I_max, eps)
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    A = 2.0 ** I_max / (1.0 - eps) ** (1.0 / n)
    C = 2.0 ** I_max - 1.0
    a = 1.0 - 1.0 / n

    def ok(k):
        return k - A * k ** a + C > 0

    if ok(2):
        return 2
    if n == 1:
        # condition is k > A - C, independent of k on the right
        return max(2, math.floor(A - C) + 1)
    # k - A k^a + C is convex in k, decreasing up to (a A)^(1/(1-a))
    lo = max(2, math.ceil((a * A) ** (1.0 / (1.0 - a))))
    if ok(lo):
        # the satisfied region begins before the minimum; scan back down
        hi = lo
        lo = 2
    else:
        hi = lo * 2
        while not ok(hi):
            lo, hi = hi, hi * 2
    # ok(hi) holds and ok is monotone on [lo, hi]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def min_k_required(mode: str, info: float, eps: float, n: int = 1) -> int:
    mode = mode.lower().replace("-", "_")
    if mode in ("one_shot", "oneshot"):
        return min_k_one_shot(info, eps)
    if mode == "adaptive":
        return min_k_adaptive(info, eps, n)
    raise ValueError(f"unknown mode {mode!r}")


def _check_info(info, eps):
    if math.isnan(info) or info < 0:
        raise ValueError(f"information quantity must be nonnegative, got {info!r}")
    if math.isnan(eps) or not 0.0 <= eps < 1.0:
        raise ValueError(f"eps must lie in [0, 1), got {eps!r}")


# ---------------------------------------------------------------------------

def continuity_bound(eps: float, d: int, k: int) -> float:
    """eps log2 min(d, k) + g(eps), g(eps) = (eps+1) log2(eps+1) - eps log2 eps."""
    if math.isnan(eps) or not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps!r}")
    if int(d) != d or d < 2 or int(k) != k or k < 2:
        raise ValueError("d and k must be integers >= 2")
    g = (eps + 1.0) * math.log2(eps + 1.0) - (eps * math.log2(eps) if eps > 0 else 0.0)
    return eps * math.log2(min(d, k)) + g


def channel_bound(params: ChannelParams, t_grid_size: int = DEFAULT_T_GRID) -> BoundResult:
    if params.kind is ChannelKind.DEPOLARIZING:
        return depolarizing_bound(params, t_grid_size)
    return erasure_bound(params)


def best_over_k(params: ChannelParams, k_set: Sequence[int] = DEFAULT_K_SET,
                t_grid_size: int = DEFAULT_T_GRID) -> BoundResult:
    """Tightest valid bound over ``k_set``; INVALID if no k gives a valid one."""
    ks = list(k_set)
    if not ks:
        raise ValueError("k_set must not be empty")
    results = [channel_bound(params.with_k(k), t_grid_size) for k in ks]
    per_k = dict(zip(ks, results))
    valid = [r for r in results if r.valid]
    if not valid:
        closest = min(results, key=lambda r: r.divergence_E)
        return BoundResult(BoundStatus.INVALID, math.nan, math.nan, closest.divergence_E,
                           closest.witness, None, params.n, closest.capped,
                           {"per_k": per_k})
    best = min(valid, key=lambda r: (r.log2M_total, r.k_used))
    return replace(best, extra={**best.extra, "per_k": per_k})


def _require(params, kind):
    if params.kind is not kind:
        raise ValueError(f"expected a {kind.value} channel, got {params.kind.value}")
