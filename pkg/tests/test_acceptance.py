"""Acceptance criteria at the documented sizes; one test per criterion.

Each test prints its sub-checks; the criterion passes only if all do.
"""

import pytest

from swlab.verification import run_criterion

BUDGET = {  # wall-clock limits in seconds
    "1_closed_form": 30, "2_kernel_lemmas": 120, "4_critical_bounds": 300, "7_contact_scaling": 1200,
}


def _run(suite, name):
    r = run_criterion(suite, name)
    for c in r.checks:
        print(f"  {c['check']:40s} value={c['value']:.6g} bound={c['bound']:.6g} {'pass' if c['pass'] else 'FAIL'}")
    print(f"{r.test}: statistic={r.statistic:.6g} threshold={r.threshold:.6g} N={r.N} M={r.M} "
          f"{r.seconds:.1f}s {'PASS' if r.passed else 'FAIL'}")
    if name in BUDGET:
        assert r.seconds < BUDGET[name], f"runtime {r.seconds:.1f}s over {BUDGET[name]}s"
    failed = [c for c in r.checks if not c["pass"]]
    assert not failed, "failed checks: " + "; ".join(
        f"{c['check']} value={c['value']:.6g} bound={c['bound']:.6g}" for c in failed)


@pytest.mark.parametrize("name", [
    "1_closed_form",
    "2_kernel_lemmas",
    "3_ratio_fit",
    "4_critical_bounds",
    "5_partition_sandwich",
    "6_oracle_equivalence",
    "7_contact_scaling",
    "8_path_scaling",
    "9_near_critical_mgf",
    "10_mgf_lemma",
    "11_negative_control",
])
def test_criterion(suite, name):
    _run(suite, name)
