import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from tempest.diagnostics import ks_two_sample
from tempest.heavy_tails import (
    BaseMeasure,
    NormingSequence,
    norming_a,
    sample_base,
    sample_tempered,
    temper,
)
from tempest.numerics import DomainError, RngStream
from tempest.tempering import TemperingFunction as Q

PARETO = BaseMeasure.pareto(0.5)
DPARETO = BaseMeasure.discrete_pareto(0.5)
LOGP = BaseMeasure.log_pareto(0.5, 1.0)


def test_pareto_tail_and_density():
    b = BaseMeasure.pareto(0.5, 2.0)
    assert b.tail(8.0) == pytest.approx(0.5)
    assert b.tail(1.0) == 1.0
    total = integrate.quad(lambda x: float(b.density(x)), 2.0, np.inf)[0]
    assert total == pytest.approx(1.0, rel=1e-8)


def test_discrete_pareto_masses():
    assert DPARETO.tail(0.0) == pytest.approx(1.0)
    assert DPARETO.tail(1.0) == pytest.approx(2**-0.5)
    # P(X = 1) = 1 - 2^{-1/2}; no mass at zero
    assert float(DPARETO.density(1.0)) == pytest.approx(1 - 2**-0.5, rel=1e-14)
    assert float(DPARETO.density(0.0)) == 0.0
    k = np.arange(1, 2000)
    assert DPARETO.density(k).sum() == pytest.approx(1 - 2000**-0.5, rel=1e-12)


def test_log_pareto_density_integrates_to_one():
    total = integrate.quad(lambda x: float(LOGP.density(x)), 1.0, np.inf, limit=200)[0]
    assert total == pytest.approx(1.0, rel=1e-7)


def test_log_pareto_monotonicity_check():
    with pytest.raises(DomainError):
        BaseMeasure.log_pareto(0.1, 5.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(10.0, 1e8))
def test_slowly_varying_ratio(t):
    # L(2t)/L(t) = log(e+2t)/log(e+t) -> 1, at rate log 2 / log t
    ratio = LOGP.slowly_varying(2 * t) / LOGP.slowly_varying(t)
    assert 1.0 < ratio <= 1.0 + math.log(2) / math.log(t)
    assert PARETO.slowly_varying(2 * t) / PARETO.slowly_varying(t) == pytest.approx(1.0, rel=1e-12)


def test_base_json():
    for b in (PARETO, DPARETO, LOGP):
        assert BaseMeasure.from_json(json.loads(json.dumps(b.to_json()))) == b
    with pytest.raises(DomainError):
        BaseMeasure.from_json({"kind": "pareto", "params": {"alpha": 0.5, "scale": 2}})


def test_sampling_matches_tails():
    rng = RngStream(31)
    x = sample_base(PARETO, rng, 100_000)
    assert abs(np.mean(x > 4.0) - 0.5) < 0.005
    k = sample_base(DPARETO, rng, 100_000)
    assert k.dtype == np.int64 and k.min() >= 1
    assert abs(np.mean(k == 1) - (1 - 2**-0.5)) < 0.005
    y = sample_base(LOGP, rng, 100_000)
    for t in (3.0, 30.0, 300.0):
        assert abs(np.mean(y > t) - LOGP.tail(t)) < 0.005


def test_norming_pareto_and_discrete():
    for n in (1, 10, 1234, 10**4):
        assert norming_a(NormingSequence(PARETO), n) == pytest.approx(n**-2.0, rel=1e-14)
        assert norming_a(NormingSequence(DPARETO), n) == pytest.approx(n**-2.0, rel=1e-14)
    with pytest.raises(DomainError):
        norming_a(NormingSequence(PARETO), 0.5)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.5, 1e9))
def test_norming_log_pareto_inverse(n):
    seq = NormingSequence(LOGP)
    s = seq.V_inverse(n)
    assert seq.V(s) >= n * (1 - 1e-10)
    assert seq.V(s * (1 - 1e-9)) <= n * (1 + 1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 10**6))
def test_discrete_norming_is_generalized_inverse(n):
    seq = NormingSequence(DPARETO)
    k = seq.V_inverse(n)
    assert seq.V(k) > n and not seq.V(k - 1) > n


@pytest.mark.parametrize("ell", [0.5, 10.0, 1e4])
def test_c_ell_pareto_exponential(ell):
    # int_1^inf e^{-x/l} alpha x^{-1-alpha} dx = alpha l^-alpha Gamma(-alpha, 1/l)
    a = 0.5
    g = float(special.gammaincc(1 - a, 1 / ell) * special.gamma(1 - a))  # Gamma(1-a, 1/l)
    upper = (g - (1 / ell) ** -a * math.exp(-1 / ell)) / -a  # Gamma(-a, 1/l)
    mass = a * ell**-a * upper
    assert temper(PARETO, Q.exponential(1.0), ell).c_ell == pytest.approx(1 / mass, rel=1e-9)


@pytest.mark.parametrize("ell", [3.7, 100.0, 2.5e5])
def test_c_ell_discrete_truncation(ell):
    # q_l = 1 on [0, l): mass = P(X < l) = 1 - (1 + ceil(l) - 1)^-alpha
    kmax = math.ceil(ell) - 1
    mass = 1 - (1 + kmax) ** -0.5
    assert temper(DPARETO, Q.truncation(1.0), ell).c_ell == pytest.approx(1 / mass, rel=1e-12)


def test_c_ell_discrete_exponential_exact_sum():
    ell = 50.0
    k = np.arange(1, 200_001, dtype=float)
    mass = np.sum(np.exp(-k / ell) * ((k) ** -0.5 - (k + 1) ** -0.5))
    assert temper(DPARETO, Q.exponential(1.0), ell).c_ell == pytest.approx(1 / mass, rel=1e-10)


def test_identity_tempering_is_base():
    tm = temper(PARETO, Q.identity(), 7.0)
    assert tm.c_ell == 1.0 and tm.tail(9.0) == pytest.approx(1 / 3)


def test_tempered_tail_and_mean_pareto_truncation():
    tm = temper(PARETO, Q.truncation(1.0), 100.0)
    c = 1 / (1 - 0.1)
    assert tm.c_ell == pytest.approx(c, rel=1e-12)
    # mu_l((t, inf)) = c (t^-1/2 - 100^-1/2) for 1 <= t < 100
    assert tm.tail(25.0) == pytest.approx(c * (0.2 - 0.1), rel=1e-9)
    # int_1^eps x * 0.5 x^-1.5 = eps^0.5 - 1
    assert tm.truncated_mean(49.0) == pytest.approx(c * 6.0, rel=1e-9)


def test_tempered_sampling():
    tm = temper(PARETO, Q.truncation(1.0), 100.0)
    x = sample_tempered(tm, RngStream(5), 50_000)
    assert x.max() < 100.0
    assert abs(np.mean(x > 25.0) - tm.tail(25.0)) < 0.006
    k = sample_tempered(temper(DPARETO, Q.exponential(1.0), 20.0), RngStream(6), 1000)
    assert k.dtype == np.int64


def test_degenerate_and_invalid():
    with pytest.raises(DomainError):
        temper(PARETO, Q.exponential(1.0), 0.0)
