"""Command-line entry point (``netobs``)."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import harness
from .errors import NetObsError
from .graph import lsb_monitor_sets, read_edge_list, write_edge_list
from .netgen import GenSpec, generate
from .scenarios import chem_graph, example1_graph

BUILTIN_GRAPHS = {"example1": example1_graph, "chem": chem_graph}


def _batch_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--realizations", type=int, help="Monte Carlo realizations (preset default if omitted)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--workers", type=int, default=1)


def _overrides(args) -> dict:
    o = {"master_seed": args.seed, "output_dir": args.out, "workers": args.workers}
    if args.realizations is not None:
        o["realizations"] = args.realizations
    return o


def _execute(cfg: harness.ExperimentConfig) -> int:
    records = harness.run_monte_carlo(cfg)
    out = harness.write_outputs(cfg, records)
    crashed = sum(r.crashed for r in records)
    print(f"realizations: {len(records)}  crashed: {crashed}  output: {out}")
    top = sorted(harness.aggregate_histogram(records), key=lambda h: (-h["count"], h["action_id"]))[:5]
    for h in top:
        nodes = " ".join(str(v) for v in h["nodes"])
        print(f"  action {h['action_id']:>4}  nodes [{nodes}]  frequency {h['frequency']:.4f}")
    return 0


def cmd_lsb(args) -> int:
    g = BUILTIN_GRAPHS[args.graphfile]() if args.graphfile in BUILTIN_GRAPHS else read_edge_list(args.graphfile)
    for root in lsb_monitor_sets(g):
        print(" ".join(str(v) for v in root))
    return 0


def cmd_gen(args) -> int:
    spec = GenSpec(topology=args.topology, n=args.n, p=args.p, alpha=args.alpha, beta=args.beta, gamma=args.gamma,
                   spectral_target=args.spectral_target, seed=args.seed)
    g = generate(spec)
    if args.out:
        write_edge_list(g, args.out)
    else:
        from .graph import format_edge_list
        sys.stdout.write(format_edge_list(g))
    return 0


def cmd_example1(args) -> int:
    return _execute(harness.example1_config(q=args.q, controller=not args.no_controller, **_overrides(args)))


def cmd_example2(args) -> int:
    return _execute(harness.example2_config(args.topology, args.density, **_overrides(args)))


def cmd_example3(args) -> int:
    return _execute(harness.example3_config(dismiss=args.dismiss, fixed_lsb=args.fixed_lsb, **_overrides(args)))


def cmd_run(args) -> int:
    return _execute(harness.ExperimentConfig.from_file(args.configfile))


def cmd_table1(args) -> int:
    rng = np.random.default_rng(args.seed)
    rows = harness.lsb_density_study(args.n, harness.table1_grid(), args.realizations, rng)
    print("topology   parameters            mean_edges  mean_monitors  monitors")
    for r in rows:
        param = f"p={r['param']}" if r["topology"] == "er" else "a,b,g=" + ",".join(str(v) for v in r["param"])
        print(f"{r['topology']:<10} {param:<21} {r['mean_edges']:>10.1f}  {r['mean_monitors']:>13.2f}  {r['monitors']:>8}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netobs", description="Cognitive monitor selection on stochastic networks")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lsb", help="print root monitor sets of a graph")
    p.add_argument("graphfile", help="edge-list file, or a built-in name: " + ", ".join(BUILTIN_GRAPHS))
    p.set_defaults(func=cmd_lsb)

    p = sub.add_parser("gen", help="generate a random weighted digraph")
    d = GenSpec()
    p.add_argument("--topology", choices=("er", "scalefree"), default=d.topology)
    p.add_argument("--n", type=int, default=d.n)
    p.add_argument("--p", type=float, default=d.p)
    p.add_argument("--alpha", type=float, default=d.alpha)
    p.add_argument("--beta", type=float, default=d.beta)
    p.add_argument("--gamma", type=float, default=d.gamma)
    p.add_argument("--spectral-target", type=float, default=d.spectral_target)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--out", help="edge-list output file (stdout if omitted)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("example1", help="seven-node linear network")
    p.add_argument("--q", type=int, choices=(1, 2), default=1, help="monitors per cycle")
    p.add_argument("--no-controller", action="store_true", help="fixed random monitor per run")
    _batch_options(p)
    p.set_defaults(func=cmd_example1)

    p = sub.add_parser("example2", help="100-node random network, one monitor")
    p.add_argument("topology", choices=("er", "scalefree"))
    p.add_argument("density", type=float, help="edge probability (er) or benchmark edge count 210/370/600/1620 (scalefree)")
    _batch_options(p)
    p.set_defaults(func=cmd_example2)

    p = sub.add_parser("example3", help="chemical reaction network with dismissal control")
    p.add_argument("--dismiss", type=int, choices=(1, 2), default=1)
    p.add_argument("--fixed-lsb", action="store_true", help="monitor the root-set nodes 4, 6, 7 without control")
    _batch_options(p)
    p.set_defaults(func=cmd_example3)

    p = sub.add_parser("run", help="run an experiment from a YAML or JSON config file")
    p.add_argument("configfile")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("table1", help="LSB monitor counts over the density grid")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--realizations", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_table1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (NetObsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
