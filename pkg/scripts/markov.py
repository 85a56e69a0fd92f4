#!/usr/bin/env python3
"""Upper probability of X >= u given only the mean m on [0, x_max], across relaxation degrees.

Prints c,d,upper,closed_form as CSV.
"""

import argparse

import numpy as np

from sosg.piecewise import indicator_at_least, pw_upper_prevision
from sosg.poly import Polynomial


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--mean", type=float, default=2.0)
    p.add_argument("--xmax", type=float, default=10.0)
    p.add_argument("--degrees", default="1,2,3,4")
    args = p.parse_args()
    x = Polynomial.variable(1, 0)
    G = [x - args.mean, args.mean - x]
    print("u,d,upper,closed_form")
    for u in np.linspace(0.5, args.xmax - 0.5, 10):
        for d in (int(v) for v in args.degrees.split(",")):
            res = pw_upper_prevision((0, args.xmax), G, indicator_at_least(u), d)
            print(f"{u:.3f},{d},{res.value:.6f},{min(1.0, args.mean / u):.6f}")


if __name__ == "__main__":
    main()
