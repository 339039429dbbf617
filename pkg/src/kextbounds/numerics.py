"""Log-domain probability arithmetic and binary classical divergences.

Probabilities are carried as base-2 logarithms. Exact zero is ``-inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

NEG_INF = -math.inf

LogProb = float
"""log2 of a nonnegative number; ``-inf`` encodes exact zero."""

# exact integer arithmetic up to these sizes, lgamma beyond
_EXACT_BINOMIAL_MAX_N = 10_000
_EXACT_ROW_MAX_N = 100_000


def _check_prob(name, x):
    if x is None or isinstance(x, bool):
        raise ValueError(f"{name} must be a real number, got {x!r}")
    x = float(x)
    if math.isnan(x) or not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {x!r}")
    return x


def to_log(p: float) -> LogProb:
    """Convert a nonnegative number to log2 form."""
    p = float(p)
    if math.isnan(p) or p < 0:
        raise ValueError(f"cannot take log of {p!r}")
    return NEG_INF if p == 0.0 else math.log2(p)


def from_log(lp: LogProb) -> float:
    return 0.0 if lp == NEG_INF else 2.0 ** lp


def log_add(a: LogProb, b: LogProb) -> LogProb:
    """log2(2**a + 2**b), commutative and safe when either side is -inf."""
    if a < b:
        a, b = b, a
    if b == NEG_INF:
        return a
    return a + math.log2(1.0 + 2.0 ** (b - a))


def log_sum(values, axis=None):
    """log2 of the sum of 2**values with max subtraction.

    Works on arrays; slices that are entirely ``-inf`` give ``-inf``.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return NEG_INF if axis is None else np.full(np.delete(v.shape, axis), NEG_INF)
    m = np.max(v, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        s = np.log2(np.sum(np.exp2(v - safe), axis=axis, keepdims=True)) + safe
    s = np.where(m == NEG_INF, NEG_INF, s)
    if axis is None:
        return float(s.reshape(()))
    return np.squeeze(s, axis=axis)


def log_mul_count(count, logv):
    """count * logv with the convention 0 * (-inf) = 0."""
    count = np.asarray(count, dtype=float)
    with np.errstate(invalid="ignore"):
        out = count * logv
    return np.where(count == 0, 0.0, out)


@dataclass(frozen=True)
class FiniteDist:
    """Finite probability vector stored as log2 weights."""

    log_weights: tuple

    def __post_init__(self):
        lw = tuple(float(x) for x in self.log_weights)
        if not lw:
            raise ValueError("distribution needs at least one outcome")
        if any(math.isnan(x) or x > 1e-12 for x in lw):
            raise ValueError("log weights must be <= 0 and not NaN")
        object.__setattr__(self, "log_weights", lw)
        total = float(np.sum(np.exp2(lw)))
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total!r}, not 1")

    @classmethod
    def from_probs(cls, probs: Sequence[float]) -> "FiniteDist":
        return cls(tuple(to_log(p) for p in probs))

    @property
    def probs(self) -> np.ndarray:
        return np.exp2(np.asarray(self.log_weights))

    def __len__(self):
        return len(self.log_weights)


def _parse_kind(kind, alpha):
    kind = str(kind).lower()
    if kind in ("kl", "relative", "relative_entropy"):
        return "kl", None
    if kind == "max":
        return "max", None
    if kind in ("renyi", "rényi"):
        if alpha is None:
            raise ValueError("Renyi divergence needs alpha")
        alpha = float(alpha)
        if math.isnan(alpha) or alpha <= 0 or alpha == 1.0 or math.isinf(alpha):
            raise ValueError(f"alpha must be in (0,1) or (1,inf), got {alpha!r}")
        return "renyi", alpha
    raise ValueError(f"unknown divergence kind {kind!r}")


def binary_divergence(kind: str, p: float, q: float, alpha: float | None = None) -> float:
    """Divergence between the two-point distributions {p, 1-p} and {q, 1-q}.

    ``kind`` is ``"kl"``, ``"renyi"`` (needs ``alpha``) or ``"max"``. Returns
    ``inf`` when the support of the first distribution is not contained in
    that of the second (for Renyi orders below one, only when the supports are
    disjoint).
    """
    kind, alpha = _parse_kind(kind, alpha)
    p = _check_prob("p", p)
    q = _check_prob("q", q)
    pairs = [(p, q), (1.0 - p, 1.0 - q)]

    if kind == "kl":
        total = 0.0
        for a, b in pairs:
            if a == 0.0:
                continue
            if b == 0.0:
                return math.inf
            total += a * math.log2(a / b)
        return max(total, 0.0)

    if kind == "max":
        worst = NEG_INF
        for a, b in pairs:
            if a == 0.0:
                continue
            if b == 0.0:
                return math.inf
            worst = max(worst, math.log2(a / b))
        return max(worst, 0.0)

    # Renyi: 1/(alpha-1) log2 sum a^alpha b^(1-alpha)
    if alpha > 1.0:
        for a, b in pairs:
            if a > 0.0 and b == 0.0:
                return math.inf
    terms = []
    for a, b in pairs:
        if a == 0.0 or b == 0.0:
            continue
        terms.append(alpha * math.log2(a) + (1.0 - alpha) * math.log2(b))
    if not terms:
        return math.inf
    value = log_sum(terms) / (alpha - 1.0)
    return max(value, 0.0)


def log_binomial(n: int, k: int) -> float:
    """log2 C(n, k)."""
    if int(n) != n or int(k) != k or n < 0 or k < 0:
        raise ValueError("n and k must be nonnegative integers")
    n, k = int(n), int(k)
    if k > n:
        raise ValueError(f"k={k} exceeds n={n}")
    if k == 0 or k == n:
        return 0.0
    if n <= _EXACT_BINOMIAL_MAX_N:
        return math.log2(math.comb(n, k))
    k = min(k, n - k)
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)) / math.log(2)


def log_binomial_row(n: int) -> np.ndarray:
    """Array of log2 C(n, l) for l = 0..n."""
    if int(n) != n or n < 0:
        raise ValueError("n must be a nonnegative integer")
    n = int(n)
    if n > _EXACT_ROW_MAX_N:
        ks = np.arange(n + 1)
        lg = np.vectorize(math.lgamma)
        return (math.lgamma(n + 1) - lg(ks + 1) - lg(n - ks + 1)) / math.log(2)
    out = np.empty(n + 1)
    c = 1
    for k in range(n + 1):
        out[k] = math.log2(c)
        c = c * (n - k) // (k + 1)
    return out
