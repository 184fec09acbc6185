"""Relative error of the k-matching counter against enumeration over repeated seeds."""

import argparse
import json

from sectorwalk import counting as ct, graph as gr


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", default="grid")
    ap.add_argument("--params", type=int, nargs="+", default=[2, 4])
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--delta", type=float, default=0.05)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()

    g = gr.generate(args.family, *args.params)
    for m in range(1, g.n // 2 + 1):
        truth = len(gr.enumerate_matchings(g, m))
        for seed in range(args.seeds):
            est = ct.count_k_matchings(g, m, args.eps, args.delta, seed=seed)
            print(json.dumps({"m": m, "seed": seed, "truth": truth, "estimate": est.estimate,
                              "relative_error": abs(est.estimate - truth) / truth if truth else None,
                              "exact": est.exact, "seconds": round(est.wall_clock, 3)}))


if __name__ == "__main__":
    main()
