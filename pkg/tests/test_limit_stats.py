import numpy as np
import pytest

from swlab.errors import DomainError
from swlab.limit_stats import (MIN_SAMPLES, ks_against, last_zero_cdf_ratio, law_cdf, local_time_mgf,
                               local_time_scale, mgf_lemma_property_test, mgf_target,
                               oscillation_stat, path_marginal_report, sample_law,
                               standard_local_time_scale)
from swlab.partition import renewal_tables
from swlab.rw_core import RngStream, critical_beta
from swlab.sampler import PathSample, sample_contacts_renewal


def test_law_cdfs():
    assert law_cdf("arcsine", 0.5) == pytest.approx(0.5, abs=1e-15)
    assert law_cdf("arcsine", 0.0) == 0 and law_cdf("arcsine", 1.0) == 1
    assert law_cdf("half_normal", 1.0) == pytest.approx(0.682689492137, rel=1e-10)
    with pytest.raises(DomainError):
        law_cdf("cauchy", 0.3)


@pytest.mark.parametrize("law,sigma", [("arcsine", 1.0), ("half_normal", 1.0), ("half_normal", 2.0),
                                       ("uniform", 1.0)])
def test_reference_samplers_pass_own_ks(law, sigma):
    x = sample_law(law, 20000, np.random.default_rng(0), sigma)
    r = ks_against(x, law, sigma)
    assert r.passed and r.pvalue > 1e-3


def test_ks_detects_wrong_scale():
    x = sample_law("half_normal", 20000, np.random.default_rng(1), np.sqrt(2))
    assert not ks_against(x, "half_normal", 1.0, threshold=0.05).passed


def test_min_samples():
    with pytest.raises(DomainError):
        ks_against(np.zeros(MIN_SAMPLES - 1), "uniform")
    with pytest.raises(DomainError):
        last_zero_cdf_ratio(np.full(10, 0.5))


def test_scales():
    bc = critical_beta()
    assert local_time_scale() == pytest.approx(np.sqrt(2) * np.exp(bc), rel=1e-14)
    assert standard_local_time_scale() == pytest.approx(np.exp(bc), rel=1e-14)


def test_mgf_basics():
    assert mgf_target(0.0) == 1.0
    assert mgf_target(1.0) == pytest.approx(2.77428596, abs=1e-8)
    N = 512
    R = renewal_tables(critical_beta(), N)
    b = sample_contacts_renewal(critical_beta(), N, "f", R, RngStream(0), size=500)
    assert local_time_mgf(b, 0.0) == 1.0
    c = standard_local_time_scale()
    assert local_time_mgf(b, 0.3, scale=c) == pytest.approx(np.mean(np.exp(0.3 * c * b.sizes / np.sqrt(N))))
    assert local_time_mgf(list(b)[:50], 0.1) == pytest.approx(local_time_mgf((b.sizes[:50], N), 0.1))
    bc_ = sample_contacts_renewal(critical_beta(), N, "c", renewal_tables(critical_beta(), N), RngStream(0), size=5)
    with pytest.raises(DomainError):
        local_time_mgf(bc_, 0.5)


def test_mgf_lemma():
    r = mgf_lemma_property_test()
    assert r.passed


def test_last_zero_ratio_small_for_arcsine():
    x = sample_law("arcsine", 200000, np.random.default_rng(3))
    assert last_zero_cdf_ratio(x) < 0.03


def test_oscillation_examples():
    flat = PathSample(16, np.full(17, 0.05), "f")
    G, Gt = oscillation_stat([flat], 0.25, 0.1)
    assert G[0] == 0 and Gt[0] == 0
    v = np.array([0.0, 1.0, 3.0, 2.0, 0.5])
    p = PathSample(4, v, "f")
    G, _ = oscillation_stat([p], 1.0, 0.0)
    assert G[0] == pytest.approx((v.max() - v.min()) / 2)
    G, Gt = oscillation_stat([p], 0.25, 0.0)
    assert G[0] == pytest.approx(2.0 / 2)
    with pytest.raises(DomainError):
        oscillation_stat([p], 0.0, 0.0)


def test_path_marginal_domain():
    p = PathSample(4, np.zeros(5), "c")
    with pytest.raises(DomainError):
        path_marginal_report([p], 1.0, "c")
    with pytest.raises(DomainError):
        path_marginal_report([p, PathSample(4, np.zeros(5), "f")], 0.5, "c")
