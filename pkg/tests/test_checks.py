import re

import numpy as np
import pytest

from kextbounds import bounds, checks
from kextbounds.checks import cross_check, grid_tolerance, max_divergence_grid
from kextbounds.cli import main
from kextbounds.statefam import unextendible_max_divergence_isotropic


def test_quick_passes_fast():
    report = cross_check("quick")
    assert report.passed, report.lines()
    assert report.seconds < 10
    assert report.lines()[-1].startswith("quick: ")


def test_full_passes_and_reports_deviation():
    report = cross_check("full")
    assert report.passed, [r.line() for r in report.failures]
    note = next(x for x in report.notes if x.startswith("NP-vs-LP max deviation"))
    worst = float(re.search(r"deviation (\S+)", note).group(1))
    assert worst <= 1e-8


def test_bad_depth():
    with pytest.raises(ValueError):
        cross_check("deep")


def test_injected_sign_flip_is_reported(monkeypatch, capsys):
    real = bounds.erasure_matrix

    def flipped(n, k):
        m = real(n, k).copy()
        m[1, 0] = -m[1, 0]
        return m

    monkeypatch.setattr(bounds, "erasure_matrix", flipped)
    code = main(["check", "--depth", "full"])
    out = capsys.readouterr().out
    assert code == 1
    failed = [line for line in out.splitlines() if line.startswith("FAIL")]
    assert any("bounds.erasure_matrix [n=2 k=2]" in line for line in failed)
    # the failing line carries both matrices
    line = next(x for x in failed if "erasure_matrix [n=2 k=2]" in x)
    assert "observed=" in line and "expected=" in line


def test_failure_line_format():
    r = checks.CheckResult("statefam", "threshold", "d=2 k=2", 0.5, 0.75, False)
    assert r.line() == "FAIL statefam.threshold [d=2 k=2] observed=0.5 expected=0.75"


@pytest.mark.parametrize("t,d,k", [(0.3, 2, 2), (0.9, 3, 5), (0.99, 2, 10), (0.05, 4, 3)])
def test_grid_oracle_within_tolerance(t, d, k):
    closed = unextendible_max_divergence_isotropic(t, d, k)
    assert abs(closed - max_divergence_grid(t, d, k)) <= grid_tolerance(t, d, k)


def test_np_vs_lp_reports_worst():
    worst, bad = checks.np_vs_lp(np.random.default_rng(1), 50, 6)
    assert worst <= 1e-8 and not bad
