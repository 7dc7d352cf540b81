"""Smoke test for the toric_lg extension module."""

import cmath
import json
import math

import toric_lg


def close(a, b, tol=1e-8):
    return abs(a - b) <= tol * max(abs(a), abs(b), 1.0)


def main():
    a = toric_lg.NovikovSeries.parse("1 + 2*T^(1/2)")
    one = a * a.inv()
    assert close(one.coefficient("0"), 1.0)
    assert one.valuation() == "0/1"
    assert close(a.eval(0.25), 2.0)

    cp2 = toric_lg.ToricModel.builtin("cpn(2)")
    assert cp2.betti_rank() == 3
    qsr, linear = cp2.qsr_relations()
    assert len(qsr) == 1 and len(linear) == 2

    po = cp2.potential()
    t = 0.1
    points = [p for p in po.critical_points() if p.interior]
    assert len(points) == 3
    for p in points:
        y = p.y(t)[0]
        k = round(cmath.phase(y) * 3 / (2 * math.pi)) % 3
        assert close(y, t ** (1 / 3) * cmath.exp(2j * math.pi * k / 3))
        simplified, z_based = po.residue_pairing(p, t)
        assert close(simplified, z_based)
    assert po.qsr_residual() < 1e-12

    f2 = toric_lg.Potential.load("f2(1/4)")
    values = sorted(p.critical_value(0.05).real for p in f2.critical_points())
    s, r = 2 * 0.05 ** 0.375, 0.05 ** 0.25
    expected = sorted([s * (1 + r), s * (1 - r), -s * (1 + r), -s * (1 - r)])
    assert all(close(u, v) for u, v in zip(values, expected))

    z = toric_lg.clifford_trace([1.5, 2j, -0.5])
    assert close(z, 8 * 1.5 * 2j * -0.5)

    eig, crit, residual = toric_lg.ToricModel.builtin("blowup_cp2").c1_check(0.1)
    assert len(eig) == len(crit) == 4 and residual < 1e-8

    report = json.loads(toric_lg.run("verify", "s2xs2(1/3)", seed=3))
    assert report["schema"] == 1
    assert all(v["pass"] for v in report["verdicts"])

    print("smoke test passed")


if __name__ == "__main__":
    main()
