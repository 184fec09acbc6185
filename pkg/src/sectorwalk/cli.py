"""Command-line front end: ``sectorwalk {sample,count,diagnose}``.

Exit codes: 2 input error, 3 infeasible instance, 4 numeric failure,
5 enumeration guard (C(n,k) > 1e6 without --force).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from . import counting, diagnostics, fkt, walk
from . import densities as dens
from . import graph as gr

EXIT_INPUT, EXIT_INFEASIBLE, EXIT_NUMERIC, EXIT_GUARD = 2, 3, 4, 5
GUARD = 10**6


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _digest(path: str | None) -> str | None:
    if not path:
        return None
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _need(args, name: str):
    if getattr(args, name, None) is None:
        raise CliError(EXIT_INPUT, f"--{name.replace('_', '-')} is required")
    return getattr(args, name)


# ----------------------------------------------------------------------------
# building densities and start states


def _first_support(mu: dens.Density, force: bool = False) -> tuple[int, ...] | None:
    try:
        return next(iter(mu.support(limit=10**12 if force else GUARD)), None)
    except dens.EnumerationError as exc:
        raise CliError(EXIT_GUARD, f"{exc}; pass --force to search anyway") from exc


def _build(args, kind: str):
    """(density, start state, graph or None) for a sample subcommand."""
    if kind == "matchings":
        g = gr.load(_need(args, "graph"))
        mu = dens.monomer_dimer_density(g)
        start = counting.monomer_dimer_start(g)
        if mu.log_eval(start) == -math.inf:
            raise CliError(EXIT_INFEASIBLE, "graph has no matching of positive weight")
        return mu, start, g
    if kind == "k-matchings":
        g = gr.load(_need(args, "graph"))
        m = _need(args, "size")
        M = gr.find_matching_of_size(g, m)
        if M is None:
            raise CliError(EXIT_INFEASIBLE, f"no matching with {m} edges")
        covered = {x for e in M for x in e}
        mu = dens.k_matching_density(g, m)
        start = tuple(v for v in range(g.n) if v not in covered)
        if mu.log_eval(start) == -math.inf:
            raise CliError(EXIT_INFEASIBLE, "reference monomer set has zero weight")
        return mu, start, g
    if kind == "ndpp":
        mu = dens.ndpp_density(dens.load_kernel(_need(args, "kernel")), _need(args, "size"))
        start = mu.greedy_start()
        if start is None:
            raise CliError(EXIT_INFEASIBLE, "kernel has no positive principal minor of that size")
        return mu, start, None
    if kind == "partition":
        pc = dens.load_constraint(_need(args, "constraints"))
        k = sum(pc.counts)
        if args.kernel:
            base = dens.ndpp_density(dens.load_kernel(args.kernel), k)
        elif args.graph:
            g = gr.load(args.graph)
            if (g.n - k) % 2:
                raise CliError(EXIT_INFEASIBLE, "monomer count must have the parity of the vertex count")
            base = dens.k_matching_density(g, (g.n - k) // 2)
        else:
            raise CliError(EXIT_INPUT, "partition sampling needs --kernel or --graph")
        mu = dens.partition_constrained(base, pc)
        start = _first_support(mu, args.force)
        if start is None:
            raise CliError(EXIT_INFEASIBLE, "no set satisfies the partition constraint")
        return mu, start, None
    raise CliError(EXIT_INPUT, f"unknown sample kind {kind}")


# ----------------------------------------------------------------------------
# manifest and output


def _manifest(args, command: str, extra: dict, started: float) -> dict:
    params = {k: v for k, v in vars(args).items() if k not in ("func",) and not callable(v)}
    return {
        "command": command,
        "parameters": params,
        "seed": getattr(args, "seed", None),
        "inputs": {name: {"path": getattr(args, name, None), "sha256": _digest(getattr(args, name, None))}
                   for name in ("graph", "kernel", "constraints", "polynomial") if getattr(args, name, None)},
        "version": __version__,
        "started": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "finished": datetime.now(timezone.utc).isoformat(),
        **extra,
    }


def _emit_manifest(args, manifest: dict) -> None:
    text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out + ".manifest.json", "w") as fh:
            fh.write(text)
    else:
        sys.stderr.write(text)


def _open_out(args):
    return open(args.out, "w", newline="") if args.out else sys.stdout


# ----------------------------------------------------------------------------
# commands


def cmd_sample(args) -> int:
    started = time.time()
    mu, start, g = _build(args, args.kind)
    if mu.k == 0:
        raise CliError(EXIT_INPUT, "level-0 density has a single state; nothing to sample")
    d = args.gap if args.gap is not None else walk.default_gap(mu)
    steps = args.steps if args.steps is not None else 1000
    cfg = walk.WalkConfig(d, steps, args.seed, args.chains, args.burnin, args.thin)
    times, states = walk.run_chains(mu, start, cfg, record="samples")
    meta = {"seed": cfg.seed, "gap": d, "steps": steps, "burnin": cfg.burnin, "thin": cfg.thin,
            "chains": cfg.chains, "start": list(start), "density": mu.descriptor()}
    cache: dict = {}
    out = _open_out(args)
    try:
        writer = None
        if args.format == "csv":
            writer = csv.writer(out)
            writer.writerow(["t", "chain", "set"] + (["matching"] if args.kind == "matchings" else []))
        else:
            out.write(json.dumps({"meta": meta}, sort_keys=True) + "\n")
        for ti, t in enumerate(times):
            for c in range(cfg.chains):
                S = [int(x) for x in states[ti, c]]
                rec = {"t": t, "set": S, "chain": c}
                if args.kind == "matchings":
                    mono = set(dens.decode_monomers(S))
                    rng = np.random.default_rng([cfg.seed & (2**63 - 1), c, t])
                    M = counting.sample_perfect_matching(g, [v for v in range(g.n) if v not in mono], rng, cache)
                    rec["set"] = sorted(mono)
                    rec["matching"] = sorted([list(e) for e in M])
                if writer is not None:
                    row = [t, c, " ".join(map(str, rec["set"]))]
                    if "matching" in rec:
                        row.append(" ".join(f"{u}-{v}" for u, v in rec["matching"]))
                    writer.writerow(row)
                else:
                    out.write(json.dumps(rec) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    _emit_manifest(args, _manifest(args, f"sample {args.kind}", {"walk": meta}, started))
    return 0


def cmd_count(args) -> int:
    started = time.time()
    if args.kind == "pm":
        g = gr.load(_need(args, "graph"))
        exact = g.n <= fkt.EXACT_MAX_N
        try:
            value = fkt.pm_partition_function(g, exact=True) if exact else None
        except fkt.NumericError:
            value, exact = None, False
        log_value = fkt.log_pm_partition_function(g)
        if value is not None:
            number = int(value) if value.denominator == 1 else float(value)
            rational = str(value)
        else:
            number = math.exp(log_value) if log_value < 700 else None
            rational = None
        result = {"estimate": number, "exact": True, "log_estimate": None if log_value == -math.inf else log_value,
                  "rational": rational, "backend": "rational" if exact else "float"}
    elif args.kind == "k-matchings":
        g = gr.load(_need(args, "graph"))
        eps, delta = _need(args, "eps"), _need(args, "delta")
        m = _need(args, "size")
        if 2 * m > g.n or gr.find_matching_of_size(g, m) is None:
            result = {"estimate": 0, "exact": True, "eps": eps, "delta": delta}
        else:
            est = counting.count_k_matchings(g, m, eps, delta, samples=args.chains, steps=args.steps,
                                             gap=args.gap, seed=args.seed)
            result = est.to_json()
    else:
        raise CliError(EXIT_INPUT, f"unknown count kind {args.kind}")
    text = json.dumps(result, sort_keys=True)
    out = _open_out(args)
    try:
        out.write(text + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    _emit_manifest(args, _manifest(args, f"count {args.kind}", {}, started))
    return 0


def _diagnose_density(args) -> dens.Density:
    if args.polynomial:
        poly = counting.parse_polynomial(open(args.polynomial).read())
        mu: dens.Density = dens.explicit_density(poly.coeffs, n=poly.n, k=poly.degree)
    elif args.kernel:
        mu = dens.ndpp_density(dens.load_kernel(args.kernel), _need(args, "size"))
    elif args.graph:
        g = gr.load(args.graph)
        mu = dens.k_matching_density(g, args.size) if args.size is not None else dens.monomer_dimer_density(g)
    else:
        raise CliError(EXIT_INPUT, "diagnose needs --graph, --kernel or --polynomial")
    if args.constraints:
        mu = dens.partition_constrained(mu, dens.load_constraint(args.constraints))
    return mu


def cmd_diagnose(args) -> int:
    started = time.time()
    mu = _diagnose_density(args)
    size = math.comb(mu.n, mu.k)
    if size > GUARD and not args.force and mu.support_hint() is None:
        raise CliError(EXIT_GUARD, f"C({mu.n},{mu.k}) = {size} exceeds {GUARD}; pass --force")
    try:
        rep = diagnostics.report(mu, gaps=[args.gap] if args.gap else None)
    except dens.EnumerationError as exc:
        raise CliError(EXIT_GUARD, str(exc)) from exc
    except dens.DensityError as exc:
        if "empty support" in str(exc):
            raise CliError(EXIT_INFEASIBLE, str(exc)) from exc
        raise
    out = _open_out(args)
    try:
        out.write(json.dumps(rep, sort_keys=True) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    _emit_manifest(args, _manifest(args, "diagnose", {}, started))
    return 0


# ----------------------------------------------------------------------------
# argument parsing


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", help="graph JSON document")
    p.add_argument("--kernel", help="NDPP kernel (CSV or JSON)")
    p.add_argument("--constraints", help="partition constraint JSON")
    p.add_argument("--size", "--k", dest="size", type=int, help="matching size m, or set size k for kernels")
    p.add_argument("--gap", type=int, help="walk gap d (k <-> k-d)")
    p.add_argument("--steps", type=int, help="walk steps per chain")
    p.add_argument("--burnin", type=int, default=0)
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--chains", type=int, help="independent chains (per-level budget for count)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")
    p.add_argument("--force", action="store_true", help="bypass the enumeration guard")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sectorwalk", description="Down-up walk sampling, counting and diagnostics.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    ps = sub.add_parser("sample", help="draw samples with the down-up walk")
    ps.add_argument("kind", choices=["matchings", "k-matchings", "ndpp", "partition"])
    _common(ps)
    ps.set_defaults(func=cmd_sample)
    pc = sub.add_parser("count", help="estimate or compute a partition function")
    pc.add_argument("kind", choices=["k-matchings", "pm"])
    _common(pc)
    pc.set_defaults(func=cmd_count)
    pd = sub.add_parser("diagnose", help="exhaustive diagnostics report")
    _common(pd)
    pd.add_argument("--polynomial", help="coefficient table JSON")
    pd.set_defaults(func=cmd_diagnose)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.chains is None and args.command == "sample":
        args.chains = 1
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except fkt.NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (gr.GraphError, dens.DensityError, walk.WalkError, diagnostics.DiagnosticError, ValueError,
            OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except counting.CountingError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
