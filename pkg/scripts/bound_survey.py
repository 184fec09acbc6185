"""Row norms, FLC thresholds and Newton edge lengths across every fixture set."""

import argparse
import json

import numpy as np

from sectorwalk import densities as dn, diagnostics as dg
from sectorwalk import fixtures as fx


def largest_flc_alpha(cm):
    lam = cm.spectrum_cor()[0]
    return 1.0 if lam <= 1 else 1.0 / lam


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--conditionings", action="store_true", help="also scan every conditioning")
    args = ap.parse_args()

    sets = {"k_matching": fx.k_matching_fixtures(), "ndpp": fx.ndpp_fixtures(), "flc": fx.flc_fixtures(),
            "monomer_dimer": [(n, dn.monomer_dimer_density(g)) for n, g in fx.monomer_dimer_fixtures()]}
    for family, cases in sets.items():
        for name, mu in cases:
            dens = [mu] + ([nu for _, nu in dg.all_conditionings(mu) if nu.k] if args.conditionings else [])
            inf_rows = cor_rows = 0.0
            for nu in dens:
                cm = dg.correlation_matrices(nu)
                inf_rows = max(inf_rows, dg.row_norm_and_spectrum(cm.psi_inf)[0])
                cor_rows = max(cor_rows, dg.row_norm_and_spectrum(cm.psi_cor)[0])
            cm = dg.correlation_matrices(mu)
            support = list(mu.support())
            edge = dg.newton_polytope_max_edge(support, mu.n)[0] if len(support) <= 2000 else None
            print(json.dumps({"family": family, "fixture": name, "densities": len(dens),
                              "max_inf_row": inf_rows, "max_cor_row": cor_rows,
                              "lambda_max_cor": float(np.max(cm.spectrum_cor())),
                              "largest_flc_alpha": largest_flc_alpha(cm), "newton_max_edge": edge}))


if __name__ == "__main__":
    main()
