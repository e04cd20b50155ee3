"""Maxwell + Schroedinger residuals of every sign/background variant of the exact family.

Only one variant shrinks at second order; the rest stall at O(1).
Usage: python3 scripts/adjudication_demo.py --alpha 1.0
"""

import argparse

from slowlight.errors import ConventionError
from slowlight.model import PhysicalParams, SimulationGrid
from slowlight.modulation import Exponential
from slowlight.verify import adjudicate_conventions


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--eps0", type=float, default=3.0)
    ap.add_argument("--nu0", type=float, default=4.5)
    args = ap.parse_args()
    params = PhysicalParams.from_amplitude(args.nu0, args.eps0)
    probe = SimulationGrid(-3.0, 3.0, 101, 3.0, 101, zeta_min=-3.0)
    try:
        adj = adjudicate_conventions(params, Exponential(args.alpha), probe)
    except ConventionError as exc:
        print("adjudication failed:", exc)
        return
    print(f"{'variant':<28} {'residual(h)':>12} {'residual(h/2)':>14} {'ratio':>7}")
    for label, (r_h, r_h2) in sorted(adj.scores.items()):
        mark = "  <- selected" if label == adj.variant.label else ""
        print(f"{label:<28} {r_h:12.4e} {r_h2:14.4e} {r_h / r_h2:7.2f}{mark}")


if __name__ == "__main__":
    main()
