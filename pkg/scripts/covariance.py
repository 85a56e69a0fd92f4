#!/usr/bin/env python3
"""Bounds on the covariance of two variables with known means and variances, primal and moment routes."""

import argparse

from sosg.cones import SemiAlgebraicSet
from sosg.poly import Polynomial
from sosg.prevision import AssessmentSet, dual_lower_prevision, dual_upper_prevision, lower_prevision, upper_prevision


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--cases", default="0,0,1,1;1,-2,0.5,3", help="semicolon-separated m1,m2,s1,s2")
    args = p.parse_args()
    x1, x2 = Polynomial.variables(2)
    print("m1,m2,s1,s2,lower,upper,dual_lower,dual_upper")
    for case in args.cases.split(";"):
        m1, m2, s1, s2 = (float(v) for v in case.split(","))
        u, v = x1 - m1, x2 - m2
        G = []
        for g in (u, v, u * u - s1**2, v * v - s2**2):
            G += [g, -g]
        a = AssessmentSet(SemiAlgebraicSet.whole(2), G, 1)
        f = u * v
        vals = [lower_prevision(a, f).value, upper_prevision(a, f).value,
                dual_lower_prevision(a, f).value, dual_upper_prevision(a, f).value]
        print(",".join(f"{t:g}" for t in (m1, m2, s1, s2)) + "," + ",".join(f"{t:.6f}" for t in vals))


if __name__ == "__main__":
    main()
