"""Measured stopping distance against ln2/(8 alpha k) for a range of decay rates.

Usage: python3 scripts/stopping_scan.py --alphas 0.5 1 2 4
"""

import argparse
import math

from slowlight.config import parse_config
from slowlight.soliton import stopping_distance
from slowlight.solver import Scenario, simulate
from slowlight.verify import measure_trajectory

TEMPLATE = """
mode = "stopping"
[profile]
kind = "exponential"
alpha = {alpha!r}
phi0 = 4.5
[grid]
tau_min = {tau_min!r}
tau_max = {tau_max!r}
zeta_max = 9.0
"""


def run(alpha: float):
    # keep the lead-in and the decay window fixed in units of 1/alpha where that widens them
    tau_min, tau_max = -9.0, max(12.0, 12.0 / alpha)
    cfg = parse_config(TEMPLATE.format(alpha=alpha, tau_min=tau_min, tau_max=tau_max))
    sol = cfg.solution()
    grid, stride = cfg.simulation_grid(sol)
    res = simulate(Scenario.from_soliton(sol, grid, stride=stride))
    tr = measure_trajectory(res, 0.0, tau_max)
    return tr, stopping_distance(sol.profile, sol.params.k)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.5, 1.0, 2.0, 4.0])
    args = ap.parse_args()
    print(f"{'alpha':>6} {'measured':>12} {'exact':>12} {'ln2/(8ak)':>12} {'rel.err':>9} faded")
    for alpha in args.alphas:
        tr, exact = run(alpha)
        closed = math.log(2.0) / (8 * alpha * 0.0625)
        print(f"{alpha:6.2f} {tr.travel_distance:12.8f} {exact:12.8f} {closed:12.8f} "
              f"{abs(tr.travel_distance - closed) / closed:9.2e} {tr.faded}")


if __name__ == "__main__":
    main()
