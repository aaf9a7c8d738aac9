import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from awest.bounds import (
    RateSpec,
    bdd_bound,
    concentration_bound_compact,
    concentration_bound_general,
    mcdiarmid_bound,
    moment_bound_compact,
    moment_bound_general,
    rate_inf,
    rate_p,
)
from awest.errors import PreconditionError, ValidationError
from awest.mixing import eta_bound_memory_chain, eta_sums
from awest.path_measure import grid_resolution


def log_rate_inf(N, d, T):
    ln = math.log(N)
    if d == 1:
        return math.exp(-ln / (T + 1))
    if d == 2:
        return math.exp(-ln / (2 * T) + math.log(math.log1p(N)))
    return math.exp(-ln / (d * T))


def log_rate_p(N, d, T, p):
    ln = math.log(N)
    frac = 1.0 if math.isinf(p) else 1.0 - 1.0 / p
    k = d + 1 if d <= 2 else d
    return math.exp(-frac * ln / T) + math.exp(-ln / (k * T))


def test_rate_inf_examples():
    assert rate_inf(1, 1, 2) == 1.0
    assert rate_inf(1000, 1, 2) == pytest.approx(0.1, rel=1e-15)
    assert rate_inf(100, 2, 2) == pytest.approx(100**-0.25 * math.log(101), rel=1e-15)
    assert rate_inf(2**12, 3, 2) == pytest.approx(0.25, rel=1e-15)


def test_rate_p_examples():
    assert rate_p(2**12, 1, 2, 2) == pytest.approx(0.25, rel=1e-15)
    assert rate_p(500, 1, 2, 1) == pytest.approx(1 + 500 ** (-1 / 4), rel=1e-15)
    # p = inf: the grid term dominates, matching the d >= 3 branch of rate_inf
    for N in (1e6, 1e12, 1e24):
        assert rate_p(N, 3, 2, math.inf) / rate_inf(N, 3, 2) == pytest.approx(1 + N ** (-1 / 3), rel=1e-12)
    assert rate_p(1e30, 3, 2, math.inf) / rate_inf(1e30, 3, 2) == pytest.approx(1.0, abs=1e-9)


def test_rates_match_log_space_evaluation():
    r = np.random.default_rng(0)
    for _ in range(20):
        N = float(r.integers(1, 10**6))
        d, T = int(r.integers(1, 5)), int(r.integers(2, 5))
        p = math.inf if r.random() < 0.2 else float(1 + r.random() * 5)
        assert rate_inf(N, d, T) == pytest.approx(log_rate_inf(N, d, T), rel=1e-12, abs=1e-12)
        assert rate_p(N, d, T, p) == pytest.approx(log_rate_p(N, d, T, p), rel=1e-12, abs=1e-12)


def test_rate_validation():
    with pytest.raises(ValidationError):
        rate_inf(0.5, 1, 2)
    with pytest.raises(ValidationError):
        rate_p(10, 1, 2, 0.5)
    with pytest.raises(ValidationError):
        RateSpec(d=1, T=1)
    with pytest.raises(ValidationError):
        RateSpec(d=1, T=2, eta_sum=0.5)


def test_moment_bounds():
    base = RateSpec(d=1, T=2, C=2.0)
    assert moment_bound_compact(1000, base) == pytest.approx(0.2, rel=1e-14)
    doubled = RateSpec(d=1, T=2, C=2.0, eta_sum=2.0)
    assert moment_bound_compact(1000, doubled) / moment_bound_compact(1000, base) == pytest.approx(math.sqrt(2))
    g = RateSpec(d=1, T=2, p=2, C=1.5)
    assert moment_bound_general(2**12, g) == pytest.approx(1.5 * 0.25, rel=1e-14)


def test_moment_bound_for_memory_configuration():
    eta_sum, _ = eta_sums(lambda s: eta_bound_memory_chain(0.99, 10, s), 2000)
    v = moment_bound_compact(2000, RateSpec(d=1, T=2, eta_sum=eta_sum))
    assert math.isfinite(v) and v > rate_inf(2000, 1, 2)


def test_concentration_compact():
    assert concentration_bound_compact(100, 1e-9, 1.0, 2, 1.0, 1.0) == 1.0
    assert concentration_bound_compact(10**9, 0.5, 1.0, 2, 1.0, 1.0) == 0.0
    a = concentration_bound_compact(2000, 0.4, 2.0, 2, 1.5, 0.3)
    b = concentration_bound_compact(2000, 0.4, 2.0, 2, 3.0, 0.3)
    # doubling eta_bar_sum quarters the exponent
    assert math.log(b / 2) == pytest.approx(math.log(a / 2) / 4, rel=1e-12)
    with pytest.raises(PreconditionError):
        concentration_bound_compact(10, 0.0, 1.0, 2, 1.0, 1.0)


def test_concentration_general():
    N = 1000
    delta = grid_resolution(N, 1, 2)
    v = concentration_bound_general(N, delta, 2.0, 1.0, 1.0, 1.0)
    assert 0.0 <= v <= 1.0
    with pytest.raises(PreconditionError):
        concentration_bound_general(N, delta * 0.99, 2.0, 1.0, 1.0, 1.0)
    assert 0.0 <= concentration_bound_general(1, 1.0, 2.0, 1.0, 1.0, 1.0) <= 1.0
    # large alpha: exponent tends to N eps^2
    eps = 0.2
    big = concentration_bound_general(N, eps, 1e9, 1.0, 0.0, 1.0)
    assert -math.log(big / 2) == pytest.approx(N * eps * eps, rel=1e-6)


def test_bdd_and_mcdiarmid():
    N, eps = 100, 0.3
    assert bdd_bound(N, 1 / N, eps, 1.0) == pytest.approx(2 * math.exp(-N * eps * eps / 2), rel=1e-12)
    assert bdd_bound(N, 1.0, 0.0, 2.0) == 1.0
    # same exponent up to a factor 4 in the independent case
    assert -math.log(mcdiarmid_bound(N, 1.0, 30.0) / 2) == pytest.approx(-4 * math.log(bdd_bound(N, 1.0, 30.0, 1.0) / 2))
    with pytest.raises(ValidationError):
        bdd_bound(N, 0.0, 1.0, 1.0)


pos = st.floats(0.05, 5.0)


@given(st.integers(1, 10**5), pos, pos, st.floats(1.0, 5.0), st.floats(0.1, 3.0))
def test_probability_bounds_monotone(N, eps, diam, eta_bar, c):
    up = 1.3
    f = lambda N, e, s: concentration_bound_compact(N, e, diam, 2, s, c)
    v = f(N, eps, eta_bar)
    assert 0.0 <= v <= 1.0
    assert f(N + 7, eps, eta_bar) <= v
    assert f(N, eps * up, eta_bar) <= v
    assert f(N, eps, eta_bar * up) >= v
    g = lambda N, e, s: bdd_bound(N, 1.0 / N, e, s)
    assert g(N, eps * up, eta_bar) <= g(N, eps, eta_bar) <= g(N, eps, eta_bar * up)
    assert g(N + 7, eps, eta_bar) <= g(N, eps, eta_bar)


@given(st.integers(2, 10**4), st.floats(0.5, 5.0), st.floats(1.0, 4.0), st.floats(0.0, 3.0))
def test_general_concentration_monotone(N, eps, eta_bar, E):
    eps = max(eps, grid_resolution(N, 1, 2))
    f = lambda N, e, s: concentration_bound_general(N, e, 2.0, s, E, 1.0)
    v = f(N, eps, eta_bar)
    assert f(N, eps * 1.3, eta_bar) <= v <= f(N, eps, eta_bar * 1.3)


@pytest.mark.parametrize("d,T", [(1, 2), (2, 2), (3, 3), (1, 4)])
def test_rates_nonincreasing_in_N(d, T):
    # the log factor for d = 2 makes rate_inf increase until N is about e^(2T)
    lo = math.exp(2 * T) if d == 2 else 3
    grid = np.geomspace(lo, 1e8, 60)
    vals = [rate_inf(N, d, T) for N in grid]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    grid = np.geomspace(3, 1e8, 60)
    vals = [rate_p(N, d, T, 3.0) for N in grid]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
    spec = lambda s: RateSpec(d=d, T=T, eta_sum=s)
    assert moment_bound_compact(100, spec(2.0)) >= moment_bound_compact(100, spec(1.0))


def test_rate_inf_d2_increases_for_small_N():
    assert rate_inf(20, 2, 2) > rate_inf(3, 2, 2)
