"""TV distance to the exact law as a function of walk length, per fixture."""

import argparse
import json
import math

from sectorwalk import densities as dn, walk as wk
from sectorwalk import fixtures as fx
from sectorwalk.counting import monomer_dimer_start


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", choices=["monomer_dimer", "k_matching", "ndpp"], default="monomer_dimer")
    ap.add_argument("--chains", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--fractions", type=float, nargs="+", default=[0.1, 0.25, 0.5, 1.0, 2.0])
    args = ap.parse_args()

    if args.family == "monomer_dimer":
        cases = [(name, dn.monomer_dimer_density(g), monomer_dimer_start(g)) for name, g in fx.monomer_dimer_fixtures()]
    else:
        src = fx.k_matching_fixtures() if args.family == "k_matching" else fx.ndpp_fixtures()
        cases = [(name, mu, next(iter(mu.support()))) for name, mu in src]
    for name, mu, start in cases:
        d = wk.default_gap(mu)
        tm = wk.exact_transition_matrix(mu, d)
        gap = wk.spectral_gap(tm)
        target = dict(zip(tm.states, tm.pi))
        full = math.ceil(math.log(300 * 100) / gap)
        row = {"fixture": name, "support": len(tm.states), "d": d, "gap": gap, "steps": full, "tv": {}}
        for f in args.fractions:
            steps = max(1, round(f * full))
            final = wk.run_chains(mu, start, wk.WalkConfig(d, steps, seed=args.seed, chains=args.chains))
            row["tv"][steps] = wk.tv_to_stationary(map(tuple, final.tolist()), target)
        print(json.dumps(row))


if __name__ == "__main__":
    main()
