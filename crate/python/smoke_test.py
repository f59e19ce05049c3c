"""Smoke test for the vandconv extension module.

Build and install first:  pip install --no-build-isolation -e crates/python
"""

from fractions import Fraction

import vandconv


def main():
    f = vandconv.formula("D1 V1' V1", 4, phases={"V1": "uniform"})
    assert f[0] == "D_{1}", f
    assert f[3].startswith("D_{4} + \\frac{8}{3}D_{2}^{2}"), f

    assert vandconv.classify("V1' V1") == "SpectraOnly"
    assert vandconv.classify("V1' V2 V2' V1").startswith("PhaseDependent")

    d = ["1", "7/6", "3/2", "2"]
    m = vandconv.convolve("multiplicative", 4, d=d)
    back = vandconv.deconvolve("multiplicative", m, d_normalization="raw")
    assert [Fraction(x) for x in back] == [Fraction(x) for x in d], (m, back)

    assert vandconv.ensemble_moments("toeplitz", 3) == ["1", "8/3", "11"]
    assert vandconv.partition_stats(8)["partitions"] == 4140

    r = vandconv.simulate_moments("V1' V1", {"V1": (128, 128)}, orders=2, trials=4, seed=3)
    assert abs(r["mean"][0] - 1.0) < 1e-12 and abs(r["mean"][1] - 2.0) < 0.2, r

    try:
        vandconv.ensemble_moments("hankel", 20)
    except vandconv.CapacityError:
        pass
    else:
        raise AssertionError("capacity error expected")

    print("smoke test passed")


if __name__ == "__main__":
    main()
