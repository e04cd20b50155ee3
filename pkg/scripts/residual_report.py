"""Residuals of every verified equation at three resolutions on a phase window.

Usage: python3 scripts/residual_report.py --n 101
"""

import argparse
import math

from slowlight.model import PhysicalParams
from slowlight.modulation import Exponential
from slowlight.soliton import SolitonSolution
from slowlight.verify import full_residual_report, phi_window_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=101)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--phi-span", type=float, default=10.0)
    args = ap.parse_args()
    sol = SolitonSolution(PhysicalParams.from_amplitude(4.5, 3.0), Exponential(args.alpha))
    sizes = [(args.n - 1) * 2 ** i + 1 for i in range(3)]
    reports = [full_residual_report(sol, phi_window_grid(sol, -2.0, 2.0, args.phi_span, n, n)) for n in sizes]
    print(f"{'equation':<20}" + "".join(f"{n:>12d}" for n in sizes) + f"{'order':>8}")
    for e in reports[0].entries:
        r = [rep[e.equation].max_abs for rep in reports]
        order = math.log2(r[1] / r[2]) if r[2] > 0 and r[1] > 1e-13 else float("nan")
        print(f"{e.equation:<20}" + "".join(f"{v:12.3e}" for v in r) + f"{order:8.3f}")


if __name__ == "__main__":
    main()
