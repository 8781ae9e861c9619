"""Smoke test for the hcbound_py extension module.

Build and run from the workspace root:

    cargo build --release -p hcbound-py --features extension-module
    cp target/release/libhcbound_py.so /tmp/hcbound_py.so
    PYTHONPATH=/tmp python3 python/smoke_test.py
"""

import math

import hcbound_py as hb


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    hinge = hb.Loss("hinge")
    assert close(hinge(-1.0), 2.0)
    assert hinge.is_convex

    linear = hb.HypothesisClass.linear(1.0, 0.8)
    forward = hb.transform(hinge, linear)
    assert close(forward(1.0), 0.8)
    inverse = hb.transform_inverse(hinge, linear)
    assert close(inverse(0.4), 0.5)

    quadratic = hb.transform(hb.Loss("quadratic"), hb.HypothesisClass.all())
    assert close(quadratic(0.5), 0.25)

    risk = hb.min_conditional_risk(hinge, linear, 0.5, 0.8)
    grid = hb.grid_min_conditional_risk(hinge, linear, 0.5, 0.8, grid_n=4001)
    assert abs(risk - grid) < 2e-3

    adv = hb.HypothesisClass.linear(5.0, 1.0, gamma=0.1)
    lo, hi = hb.min_conditional_risk_adversarial(hb.Loss("rho-margin"), adv, 0.5, 0.7)
    assert lo <= hi

    try:
        hb.transform(hinge, adv)
    except ValueError as err:
        assert "no non-trivial bound" in str(err)
    else:
        raise AssertionError("hinge without a noise margin must be rejected")

    unbounded = hb.HypothesisClass.linear(1.0, math.inf)
    assert unbounded.score_reach(0.5) == math.inf

    dist = hb.Distribution.from_json('{"atoms": [{"x": 0.5, "weight": 1, "eta": 0.8}]}')
    report = hb.assemble_bound(hinge, linear, dist, h_w=-1.0)
    assert close(report["lhs"], 0.6) and report["holds"]

    noisy = hb.Distribution.adversarial_example(0.05)
    assert len(noisy.sample(1000, 7)) == 1000
    mc = hb.assemble_bound(hb.Loss("rho-margin"), adv, noisy, monte_carlo=20000, seed=3)
    assert mc["holds"]

    sweep = hb.run_sweep(True, n=20000, sigmas=[0.2, 0.05])
    assert len(sweep["rows"]) == 6
    assert all(row["holds"] for row in sweep["rows"])

    curves = hb.transform_curves(grid_n=101)
    assert {row["loss"] for row in curves} >= {"hinge", "logistic", "rho-margin(rho=1)"}

    print("hcbound_py smoke test passed")


if __name__ == "__main__":
    main()
