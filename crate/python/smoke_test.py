"""Smoke test for the pyholocrit extension module."""

import json
from fractions import Fraction

import pyholocrit as hc


def as_fraction(r):
    return Fraction(r.numerator, r.denominator)


def main():
    r = hc.Rational(6, 4)
    assert str(r) == "3/2" and float(r) == 1.5
    assert hc.Rational("16/7") + 1 == hc.Rational(23, 7)
    assert hc.Rational(1, 3) * 3 == 1

    assert str(hc.cpm_exact_count(1, 3, 1)) == "16/7"
    assert str(hc.cpm_exact_count(1, 3, 2)) == "9/7"
    assert str(hc.signed_count(1, 3)) == "1"
    for m in range(1, 5):
        assert as_fraction(hc.leading_coeff(m, m)) == Fraction(2 * (m + 1), m + 2)
    assert str(hc.leading_total(1)) == "5/3"
    assert str(hc.chamber_integral(2, 2, "1/3")) == "3/4"

    value, exact = hc.selberg(2, 2, "1/2")
    assert exact == "3/2" and abs(value - 1.5) < 1e-15
    _, exact = hc.selberg(1, "7/3", 0, beta=1)
    assert exact is None

    report = hc.count_report(1, 3)
    assert report.N == 3 and str(report.per_q[1]) == "16/7"
    assert json.loads(report.to_json())["signed"] == "1"
    assert str(hc.leading_report(1).n_total) == "5/3"

    points = hc.find_critical_points([1, 0])
    assert len(points) == 1 and points[0].morse_index == 2 and abs(points[0].z) < 1e-12

    estimates = hc.estimate_b0q(1, samples=20000, seed=7)
    for est in estimates:
        view, err = est.leading_coeff_view
        target = float(hc.leading_coeff(1, est.q))
        assert abs(view - target) <= 4 * err, (est, target)

    stats = hc.run_trials(3, trials=200, seed=1)
    assert not stats.unreliable
    assert all(q1 - q2 == 1 for _, q1, q2, ok in stats.per_trial if ok)
    assert json.loads(stats.to_json())["N"] == 3

    rows = hc.verify("exact")
    assert len(rows) == 6 and all(passed for _, _, passed, _ in rows)

    try:
        hc.cpm_exact_count(0, 3, 0)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    print("pyholocrit smoke test passed")


if __name__ == "__main__":
    main()
