"""Local-time normalisation and near-critical trend diagnostics.

The contact count of the critical renewal with gap law e^{beta_c} f_n
satisfies e^{beta_c} |A_N| / sqrt(N) -> |N(0, 1)|; these tests check that
scale on the acceptance-suite samples.
"""

import numpy as np

from swlab.limit_stats import local_time_scale, standard_local_time_scale
from swlab.rw_core import critical_beta
from swlab.verification import run_criterion


def test_scale_relation():
    bc = critical_beta()
    assert np.isclose(local_time_scale(bc), np.sqrt(2) * standard_local_time_scale(bc), rtol=1e-14)


def test_count_normalization(suite):
    r = run_criterion(suite, "d7_count_normalization")
    print(r.checks)
    assert r.passed, r.detail


def test_mgf_normalization(suite):
    r = run_criterion(suite, "d9_mgf_normalization")
    print(r.checks)
    assert r.passed, r.detail


def test_density_sandwich_trend(suite):
    # trend report only: Monte Carlo noise is comparable to the shrinkage
    r = run_criterion(suite, "d_density_sandwich_trend")
    devs = suite._cache["density_sandwich"]
    print(devs, r.detail)
    assert all(np.isfinite(v) and v < 0.2 for v in devs.values())
