"""Command-line front end: solve, generate, compare, inspect, convert.

Reports are machine-readable JSON in the same document style as the native
instance format, and are byte-stable for identical flags and seed: wall-clock
times are excluded unless ``--times`` is given.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from typing import Dict, List, Optional, Sequence

from .bnp import Solution, SolverConfig, solve
from .graphs import ORDERINGS, build_chain_copies, build_digraph, find_fvs
from .instances import (Instance, InstanceFormatError, generate_random,
                        import_preflib, make_instance, parse_native,
                        write_native)
from .mdd import (MddBuildConfig, build_chain_mdd, build_cycle_mdd,
                  plan_cycle_lengths, stats_table)
from .oracle import (OracleGuardError, enumerate_chains, enumerate_cycles,
                     ieef_solve, optimal_by_enumeration)

REPORT_VERSION = 1


def instance_digest(inst: Instance) -> str:
    text = write_native(inst)
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


def build_report(inst: Instance, config_echo: Dict[str, object],
                 sol: Solution, include_times: bool = False
                 ) -> Dict[str, object]:
    stats = dict(sol.stats)
    root = stats.get("root", {})
    inf_b = stats.get("infinite_relaxation_bound", 0.0)
    doc: Dict[str, object] = {
        "version": REPORT_VERSION,
        "kind": "run_report",
        "instance_digest": instance_digest(inst),
        "config": config_echo,
        "solution": {
            "status": sol.status,
            "objective": sol.objective,
            "bound": sol.bound,
            "cycles": [list(c) for c in sol.cycles],
            "chains": [list(c) for c in sol.chains],
        },
        "bounds": {
            "lp": root.get("lp_bound", inf_b),
            "lagrangian": root.get("lagrangian_bound", inf_b),
            "infinite_relaxation": inf_b,
        },
        "columns_by_phase": stats.get("columns_by_phase", {}),
        "diagrams": stats.get("diagrams", []),
        "search": {k: stats.get(k)
                   for k in ("nodes", "nodes_pruned", "lp_solves",
                             "mip_solves", "pricing_rounds", "cuts",
                             "hit_limit")},
    }
    if include_times:
        doc["times"] = stats.get("times", {})
    return doc


def write_report(doc: Dict[str, object]) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def parse_report(text: str) -> Dict[str, object]:
    doc = json.loads(text)
    if (not isinstance(doc, dict) or doc.get("kind") != "run_report"
            or doc.get("version") != REPORT_VERSION):
        raise InstanceFormatError("not a run report document")
    return doc


# ---------------------------------------------------------------------------
# Shared flag plumbing
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--instance", help="path to an instance document")
    p.add_argument("--K", type=int, default=None,
                   help="cycle length cap (overrides the instance's)")
    p.add_argument("--L", default=None, metavar="INT|inf",
                   help="chain length cap (overrides the instance's)")
    p.add_argument("--time-limit", dest="time_limit", type=float,
                   default=1800.0, metavar="SECS")
    p.add_argument("--te", type=float, default=20.0, metavar="SECS",
                   help="per-node exhaustive-search budget")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ordering", choices=ORDERINGS, default="max-in",
                   help="feedback-vertex scoring rule")
    p.add_argument("--output", default=None, metavar="PATH")
    p.add_argument("--threads", type=int, default=1,
                   help="reserved; evaluation is single-threaded")
    p.add_argument("--times", action="store_true",
                   help="include wall-clock times in the report "
                        "(breaks byte-for-byte determinism)")


def _parse_L(raw: Optional[str]) -> object:
    """None = no override; otherwise the new cap (None inside = unbounded)."""
    if raw is None:
        return "keep"
    if raw.strip().lower() in ("inf", "none", "unbounded"):
        return None
    return int(raw)


def _load_instance(args: argparse.Namespace) -> Instance:
    if not args.instance:
        args.parser.error("--instance is required")
    with open(args.instance, "r", encoding="utf-8") as fh:
        inst = parse_native(fh.read())
    return _apply_overrides(inst, args)


def _apply_overrides(inst: Instance, args: argparse.Namespace) -> Instance:
    new_L = _parse_L(args.L)
    if args.K is None and new_L == "keep":
        return inst
    return make_instance(inst.pdps, inst.ndds, inst.arcs,
                         K=inst.K if args.K is None else args.K,
                         L=inst.L if new_L == "keep" else new_L)


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _solver_config(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(time_limit_s=args.time_limit, t_e=args.te,
                        seed=args.seed, fvs_ordering=args.ordering)


def _config_echo(args: argparse.Namespace, inst: Instance,
                 command: str) -> Dict[str, object]:
    return {
        "command": command,
        "K": inst.K,
        "L": inst.L,
        "time_limit_s": args.time_limit,
        "t_e": args.te,
        "eps": 1e-6,
        "seed": args.seed,
        "ordering": args.ordering,
        "threads": args.threads,
    }


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_solve(args: argparse.Namespace) -> int:
    inst = _load_instance(args)
    sol = solve(inst, _solver_config(args))
    doc = build_report(inst, _config_echo(args, inst, "solve"), sol,
                       include_times=args.times)
    _emit(write_report(doc), args.output)
    return 0


def cmd_gen(args: argparse.Namespace) -> int:
    new_L = _parse_L(args.L)
    inst = generate_random(args.pdps, args.ndds, args.density,
                           weight_mode=args.weights, seed=args.seed,
                           K=3 if args.K is None else args.K,
                           L=3 if new_L == "keep" else new_L)
    _emit(write_native(inst), args.output)
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    inst = _load_instance(args)
    g = build_digraph(inst)
    opt, matching = optimal_by_enumeration(inst)
    ieef_value, _ = ieef_solve(inst)
    doc = {
        "version": REPORT_VERSION,
        "kind": "oracle_report",
        "instance_digest": instance_digest(inst),
        "optimal": opt,
        "ieef": ieef_value,
        "n_cycles": len(enumerate_cycles(g, inst.K)),
        "n_chains": len(enumerate_chains(g, inst.L)),
        "matching": {kind: [list(seq) for seq in seqs]
                     for kind, seqs in sorted(matching.items())},
    }
    _emit(json.dumps(doc, indent=1, sort_keys=True) + "\n", args.output)
    return 0


def cmd_mdd_stats(args: argparse.Namespace) -> int:
    inst = _load_instance(args)
    g = build_digraph(inst)
    cfg = MddBuildConfig()
    mdds = []
    if inst.K >= 2 and g.pdps:
        _, copies = find_fvs(g, inst.K, ordering=args.ordering)
        caps = plan_cycle_lengths(len(copies), inst.K, len(g.pdps), cfg)
        mdds += [build_cycle_mdd(g, c, k, K_full=inst.K)
                 for c, k in zip(copies, caps)]
    cap = inst.chain_cap()
    if cap >= 1:
        l_eff = (min(cap, cfg.restricted_chain_len)
                 if cfg.chains_truncated(len(g.pdps)) else cap)
        mdds += [build_chain_mdd(g, c, l_eff, cfg, cap_full=cap)
                 for c in build_chain_copies(g)]
    _emit(stats_table(mdds) + "\n", args.output)
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    header = (f"{'idx':>4} {'seed':>6} {'solver':>8} {'oracle':>8} "
              f"{'lp':>8} {'lagr':>8} {'inf':>8}  flag")
    lines = [header, "-" * len(header)]
    failures = 0
    new_L = _parse_L(args.L)
    for i in range(args.n):
        seed_i = args.seed + i
        inst = generate_random(args.pdps, args.ndds, args.density,
                               weight_mode=args.weights, seed=seed_i,
                               K=3 if args.K is None else args.K,
                               L=3 if new_L == "keep" else new_L)
        opt, _ = optimal_by_enumeration(inst)
        sol = solve(inst, _solver_config(args))
        root = sol.stats.get("root", {})
        inf_b = sol.stats.get("infinite_relaxation_bound", 0.0)
        ok = sol.status == "optimal" and abs(sol.objective - opt) <= 1e-9
        failures += 0 if ok else 1
        lines.append(f"{i:>4} {seed_i:>6} {sol.objective:>8.2f} {opt:>8.2f} "
                     f"{root.get('lp_bound', inf_b):>8.2f} "
                     f"{root.get('lagrangian_bound', inf_b):>8.2f} "
                     f"{inf_b:>8.2f}  {'PASS' if ok else 'FAIL'}")
    _emit("\n".join(lines) + "\n", args.output)
    return 1 if failures else 0


def cmd_convert(args: argparse.Namespace) -> int:
    if not args.instance:
        args.parser.error("--instance is required")
    with open(args.instance, "r", encoding="utf-8") as fh:
        text = fh.read()
    ndd_ids = ([int(tok) for tok in args.ndd_ids.split(",") if tok.strip()]
               if args.ndd_ids else None)
    new_L = _parse_L(args.L)
    inst = import_preflib(text, ndd_ids=ndd_ids,
                          K=3 if args.K is None else args.K,
                          L=0 if new_L == "keep" else new_L)
    _emit(write_native(inst), args.output)
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kepsolver",
        description="Branch-and-price solver for kidney exchange "
                    "with cycles and chains.")
    subs = parser.add_subparsers(dest="command", required=True)

    p_solve = subs.add_parser("solve", help="solve one instance")
    _add_common(p_solve)
    p_solve.set_defaults(func=cmd_solve, parser=p_solve)

    p_gen = subs.add_parser("gen", help="generate a random instance")
    _add_common(p_gen)
    p_gen.add_argument("--pdps", type=int, required=True)
    p_gen.add_argument("--ndds", type=int, default=0)
    p_gen.add_argument("--density", type=float, default=0.35)
    p_gen.add_argument("--weights", default="unit",
                       help='"unit" or "uniform-int(lo,hi)"')
    p_gen.set_defaults(func=cmd_gen, parser=p_gen)

    p_cmp = subs.add_parser("compare",
                            help="solve generated instances against the oracle")
    _add_common(p_cmp)
    p_cmp.add_argument("--n", type=int, default=20)
    p_cmp.add_argument("--pdps", type=int, required=True)
    p_cmp.add_argument("--ndds", type=int, default=0)
    p_cmp.add_argument("--density", type=float, default=0.35)
    p_cmp.add_argument("--weights", default="uniform-int(1,10)",
                       help='"unit" or "uniform-int(lo,hi)"')
    p_cmp.set_defaults(func=cmd_compare, parser=p_cmp)

    p_orc = subs.add_parser("oracle", help="brute-force reference values")
    _add_common(p_orc)
    p_orc.set_defaults(func=cmd_oracle, parser=p_orc)

    p_mdd = subs.add_parser("mdd-stats", help="decision-diagram size table")
    _add_common(p_mdd)
    p_mdd.set_defaults(func=cmd_mdd_stats, parser=p_mdd)

    p_cvt = subs.add_parser("convert",
                            help="convert a weighted edge list to native")
    _add_common(p_cvt)
    p_cvt.add_argument("--ndd-ids", default=None, metavar="IDS",
                       help="comma-separated non-directed donor ids "
                            "(default: infer from zero in-degree)")
    p_cvt.set_defaults(func=cmd_convert, parser=p_cvt)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InstanceFormatError, OracleGuardError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
