"""Write sample input files (graphs, a kernel, a constraint, a polynomial) for the CLI."""

import argparse
import json
import pathlib

import numpy as np

from sectorwalk import graph as gr
from sectorwalk.counting import elementary_symmetric
from sectorwalk.fixtures import random_ndpp_kernel


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("outdir", nargs="?", default="example_inputs")
    args = ap.parse_args()
    out = pathlib.Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name, g in {"path4": gr.path(4), "grid23": gr.grid(2, 3), "grid24": gr.grid(2, 4),
                    "wheel5": gr.wheel(5), "trigrid34": gr.triangulated_grid(3, 4)}.items():
        (out / f"{name}.json").write_text(gr.dumps(g) + "\n")
    L = random_ndpp_kernel(6, np.random.default_rng(0))
    np.savetxt(out / "kernel6.csv", L.L, delimiter=",", fmt="%.12g")
    (out / "blocks6.json").write_text(json.dumps({"blocks": [[0, 1, 2], [3, 4, 5]], "counts": [1, 2]}) + "\n")
    block = {"degree": 2, "terms": [{"set": [0, 1], "coeff": 1.0}, {"set": [2, 3], "coeff": 1.0}]}
    (out / "block.json").write_text(json.dumps(block) + "\n")
    (out / "e2_4.json").write_text(json.dumps(elementary_symmetric(4, 2).to_document()) + "\n")
    print(f"wrote inputs to {out}/")


if __name__ == "__main__":
    main()
