"""Smoke test for the ppvt extension module.

Builds the module with cargo (unless PPVT_SKIP_BUILD is set), copies it next
to this script as ppvt.so and exercises the main entry points.
"""

import math
import os
import shutil
import subprocess
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
ROOT = HERE.parent


def build():
    subprocess.run(
        ["cargo", "build", "--release", "-p", "ppvt-python", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    shutil.copy(ROOT / "target" / "release" / "libppvt.so", HERE / "ppvt.so")


def main():
    if not os.environ.get("PPVT_SKIP_BUILD"):
        build()
    sys.path.insert(0, str(HERE))
    import ppvt

    pts = ppvt.sample_ppp(1.0, 5.0, 7)
    assert pts == ppvt.sample_ppp(1.0, 5.0, 7)
    assert all(x * x + y * y <= 25.0 for x, y in pts)

    sites = [(0.0, 0.0), (1.0, 0.0)]
    assert ppvt.is_in_cell_product((0.5, 0.0), sites, 0)
    assert not ppvt.is_in_cell_direct((0.9, 0.0), sites, 0)
    checked, ties, mismatches = ppvt.check_membership_equivalence(10000, 1)
    assert mismatches == 0 and checked + ties == 10000

    assert abs(ppvt.coverage_closed_form(1.0) - 1.0 / (1.0 + math.pi / 4.0)) < 1e-12
    assert abs(ppvt.t_function(1.0) - (1.0 + math.pi / 4.0)) < 1e-12
    wth = ppvt.w_threshold(1e4, 1.0)
    assert abs(ppvt.eta(wth, 1e4) - 1.0) < 1e-12

    s = ppvt.Scenario(lambda_u=10.0, lambda_b=1.0, rate=1e4, gamma=1.0)
    w = ppvt.w_closed_form(s)
    assert w > ppvt.w_closed_form(s.with_gamma(10.0)) > 0.0
    assert ppvt.w_approx(s) > 0.0

    est = ppvt.estimate_mean_ues(s, 2000, 3)
    assert est.within(10.0, 4.0), est
    lo, hi = est.interval()
    assert lo < est.mean < hi

    cov = ppvt.estimate_coverage_mc(ppvt.Scenario(window_radius_factor=12.0), 4000, 3)
    assert cov.within(ppvt.coverage_closed_form(1.0), 4.0), cov

    mc = ppvt.estimate_w_mc(s, 1000, 3)
    print(f"W closed form {w:.2f}, served-count form {ppvt.w_served_count(s):.2f}, MC {mc.mean:.2f} +/- {mc.stderr:.2f}")

    row = ppvt.verify_identity("remark-sum", "constant", 2000, 1)
    assert abs(row["closed_form"] - 10.0) < 1e-9 and row["pass"]

    try:
        ppvt.Scenario(path_loss_exp=2.0)
    except ValueError as e:
        assert "path_loss_exp" in str(e)
    else:
        raise AssertionError("expected ValueError")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
