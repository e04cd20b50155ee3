"""Grid-refinement table for the solver on the constant-background soliton.

Usage: python3 scripts/convergence_table.py --levels 4 --scheme heun
"""

import argparse

from slowlight.model import PhysicalParams, SimulationGrid
from slowlight.modulation import Constant
from slowlight.soliton import SolitonSolution
from slowlight.solver import Scenario
from slowlight.verify import convergence_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--scheme", choices=["heun", "euler"], default="heun")
    ap.add_argument("--n-tau", type=int, default=401)
    ap.add_argument("--n-zeta", type=int, default=121)
    args = ap.parse_args()
    sol = SolitonSolution(PhysicalParams.from_amplitude(4.5, 3.0), Constant(-1.0))
    base = SimulationGrid(-14.0, 6.0, args.n_tau, 6.0, args.n_zeta)
    rep = convergence_study(Scenario.from_soliton(sol, base, field_scheme=args.scheme), args.levels)
    print(f"{'level':>5} {'h_tau':>10} {'h_zeta':>10} {'error':>12} {'order':>7}")
    for i, err in enumerate(rep.errors):
        order = f"{rep.orders[i - 1]:7.3f}" if i else " " * 7
        print(f"{i:5d} {base.h_tau / 2 ** i:10.5f} {base.h_zeta / 2 ** i:10.5f} {err:12.4e} {order}")
    print("self-convergence orders:", ", ".join(f"{p:.3f}" for p in rep.self_orders))
    if rep.flagged:
        print("flagged:", rep.reason)


if __name__ == "__main__":
    main()
