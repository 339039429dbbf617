import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kextbounds.checks import _random_pair, expanded_bernoulli
from kextbounds.hyptest import (BernoulliProductInstance, HypothesisInstance,
                                bernoulli_product_divergence_grid, dh_eps,
                                dh_eps_bernoulli_product, dh_eps_general,
                                neyman_pearson_log_beta, neyman_pearson_test)
from kextbounds.lp import min_type2_error


def as_dh(beta):
    return math.inf if beta <= 1e-15 else max(-math.log2(beta), 0.0)


def test_identity_anchor():
    rng = np.random.default_rng(3)
    for eps in (0.0, 0.05, 0.5, 0.9):
        rho = rng.dirichlet(np.ones(5))
        assert dh_eps(rho, rho, eps) == pytest.approx(-math.log2(1 - eps), abs=1e-12)


def test_hand_knapsack():
    # accept outcome 0 fully, then half of outcome 1: beta = 0.5 + 0.25
    assert dh_eps([0.8, 0.2], [0.5, 0.5], 0.1) == pytest.approx(-math.log2(0.75), abs=1e-12)


def test_disjoint_supports():
    assert dh_eps([1.0, 0.0], [0.0, 1.0], 0.0) == math.inf


def test_rejects_eps_one_and_mismatch():
    with pytest.raises(ValueError):
        dh_eps([0.5, 0.5], [0.5, 0.5], 1.0)
    with pytest.raises(ValueError):
        HypothesisInstance([0.5, 0.5], [1.0], 0.1)
    with pytest.raises(ValueError):
        BernoulliProductInstance(0, 0.5, 0.5, 0.1)


def test_matches_lp_oracle_on_random_instances():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(500):
        m = int(rng.integers(1, 9))
        rho, sigma = _random_pair(rng, m)
        eps = float(rng.choice([0.0, rng.random() * 0.999]))
        a = dh_eps(rho, sigma, eps)
        b = as_dh(min_type2_error(rho, sigma, eps))
        if math.isinf(a) or math.isinf(b):
            assert a == b
        else:
            worst = max(worst, abs(a - b))
    assert worst <= 1e-8


def test_test_attains_beta():
    rng = np.random.default_rng(5)
    for _ in range(100):
        rho, sigma = _random_pair(rng, int(rng.integers(1, 9)))
        eps = float(rng.random() * 0.99)
        with np.errstate(divide="ignore"):
            lr, ls = np.log2(rho), np.log2(sigma)
        lam = neyman_pearson_test(lr, ls, eps)
        assert np.all((lam >= 0) & (lam <= 1))
        assert lam @ rho >= 1 - eps - 1e-12
        assert lam @ sigma == pytest.approx(2.0 ** neyman_pearson_log_beta(lr, ls, eps),
                                            abs=1e-12)


@given(st.integers(1, 6), st.floats(0.0, 0.99), st.floats(0.0, 0.99), st.randoms())
def test_nondecreasing_in_eps(m, e1, e2, r):
    rng = np.random.default_rng(r.randint(0, 2**32 - 1))
    rho, sigma = _random_pair(rng, m)
    lo, hi = sorted((e1, e2))
    assert dh_eps(rho, sigma, lo) <= dh_eps(rho, sigma, hi) + 1e-12
    assert dh_eps(rho, sigma, lo) >= 0.0


def test_equal_ratio_permutations():
    rng = np.random.default_rng(8)
    for _ in range(50):
        base_r = rng.dirichlet(np.ones(3))
        base_s = rng.dirichlet(np.ones(3))
        # split outcome 0 into three pieces sharing its likelihood ratio
        w = rng.dirichlet(np.ones(3))
        rho = np.concatenate([base_r[0] * w, base_r[1:]])
        sigma = np.concatenate([base_s[0] * w, base_s[1:]])
        eps = float(rng.random() * 0.9)
        ref = dh_eps(rho, sigma, eps)
        for _ in range(5):
            perm = rng.permutation(len(rho))
            assert dh_eps(rho[perm], sigma[perm], eps) == pytest.approx(ref, abs=1e-12)
        assert ref == pytest.approx(dh_eps(base_r, base_s, eps), abs=1e-12)


def test_type_classes_match_expansion():
    rng = np.random.default_rng(12)
    for _ in range(200):
        n = int(rng.integers(1, 13))
        p, t = rng.random(2)
        eps = float(rng.random() * 0.99)
        fast = dh_eps_bernoulli_product(BernoulliProductInstance(n, float(p), float(t), eps))
        slow = expanded_bernoulli(n, float(p), float(t), eps)
        assert fast == slow or abs(fast - slow) <= 1e-10


def test_type_class_anchors():
    inst = BernoulliProductInstance(2, 0.2, 0.5, 0.1)
    assert dh_eps_bernoulli_product(inst) == pytest.approx(-math.log2(0.65625), abs=1e-12)
    for n in (1, 7, 300):
        same = BernoulliProductInstance(n, 0.3, 0.7, 0.05)
        assert dh_eps_bernoulli_product(same) == pytest.approx(-math.log2(0.95), abs=1e-10)
    one = BernoulliProductInstance(1, 0.3, 0.6, 0.2)
    assert dh_eps_bernoulli_product(one) == pytest.approx(
        dh_eps_general(HypothesisInstance([0.7, 0.3], [0.6, 0.4], 0.2)), abs=1e-14)


def test_large_n_stays_finite():
    # linear-domain weights would underflow here
    v = dh_eps_bernoulli_product(BernoulliProductInstance(5000, 0.15, 0.5, 0.05))
    assert math.isfinite(v) and v > 0


@pytest.mark.parametrize("n,p", [(1, 0.2), (9, 0.15), (40, 0.3), (200, 0.05)])
def test_grid_path_matches_scalar(n, p):
    ts = np.linspace(0.0, 1.0, 37)
    grid = bernoulli_product_divergence_grid(n, p, ts, 0.05)
    for t, g in zip(ts, grid):
        ref = dh_eps_bernoulli_product(BernoulliProductInstance(n, p, float(t), 0.05))
        assert g == ref or abs(g - ref) <= 1e-10
