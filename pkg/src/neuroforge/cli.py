"""Headless command-line surface: compile, verify, evaluate, evolve, serve, audit."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .compiler import (
    anet_from_data,
    compile_network,
    report_from_data,
    report_to_data,
    roundtrip_errors,
)
from .cppn import cppn_from_data, cppn_to_data
from .decode import decode, substrate_from_phenotype
from .evolve import run_evolution
from .maze import evaluate as evaluate_phenotype
from .maze import resolve_maze
from .seeds import seed_brain
from .store import WorkbenchStore, individual_to_data, _archive_to_data, _substrate_to_data


def _load_json(path: str) -> dict:
    with open(path) as f:
        return json.load(f)


def _cmd_compile(args) -> int:
    anet = anet_from_data(_load_json(args.anet))
    cppn, report = compile_network(anet)
    out = {"cppn": cppn_to_data(cppn), "report": report_to_data(report)}
    with open(args.out, "w") as f:
        json.dump(out, f, sort_keys=True, indent=None, separators=(",", ":"))
        f.write("\n")
    print(
        f"compiled {len(anet.phenotype.connections)} connections -> "
        f"{len(cppn.nodes)} nodes, {len(cppn.connections)} links, "
        f"sharpness {report.sharpness!r}"
    )
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def _cmd_roundtrip(args) -> int:
    anet = anet_from_data(_load_json(args.anet))
    cppn, _report = compile_network(anet)
    errs = roundtrip_errors(anet, cppn)
    if errs:
        for e in errs:
            print(e, file=sys.stderr)
        print(f"round-trip FAILED: {len(errs)} mismatches")
        return 1
    print("round-trip ok")
    return 0


def _cmd_eval(args) -> int:
    data = _load_json(args.brain)
    maze = resolve_maze(args.maze)
    if isinstance(data, dict) and data.get("schema") == "anet/1":
        anet = anet_from_data(data)
        cppn, report = compile_network(anet)
        substrate = report.substrate
    elif isinstance(data, dict) and "cppn" in data and "anet" in data:
        # a stored brain record: run the genotype it carries
        anet = anet_from_data(data["anet"])
        cppn = cppn_from_data(data["cppn"])
        if data.get("report") is not None:
            substrate = report_from_data(data["report"]).substrate
        else:
            from .compiler import expand_annotations

            substrate = substrate_from_phenotype(expand_annotations(anet)[0])
    else:
        print("brain file must be an anet/1 document or a brain record", file=sys.stderr)
        return 2
    net = decode(cppn, substrate)
    result = evaluate_phenotype(net, maze)
    print(f"fitness {result.fitness!r}")
    print(f"goal_reached {result.goal_reached}")
    print(f"steps_used {result.steps_used}")
    print(f"behavior {result.behavior[0]!r} {result.behavior[1]!r}")
    return 0


def _cmd_evolve(args) -> int:
    maze = resolve_maze(args.maze)
    anet = seed_brain()
    log_f = sys.stdout if args.log in (None, "-") else open(args.log, "w")
    try:
        population, archive = run_evolution(
            anet,
            maze,
            mode=args.mode,
            generations=args.generations,
            seed=args.seed,
            pop_size=args.pop,
            log=log_f,
        )
    finally:
        if log_f is not sys.stdout:
            log_f.close()
    if args.out:
        doc = {
            "substrate": _substrate_to_data(population[0].substrate),
            "population": [individual_to_data(ind) for ind in population],
            "archive": _archive_to_data(archive),
        }
        with open(args.out, "w") as f:
            json.dump(doc, f, sort_keys=True, separators=(",", ":"))
            f.write("\n")
    best = max(population, key=lambda ind: ind.eval.fitness)
    print(
        f"done: best fitness {best.eval.fitness!r} "
        f"(goal {best.eval.goal_reached}) id {best.id}",
        file=sys.stderr,
    )
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    store = WorkbenchStore(args.store)
    uvicorn.run(create_app(store), host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_audit(args) -> int:
    store = WorkbenchStore(args.store)
    problems = store.audit()
    for p in problems:
        print(p)
    if problems:
        print(f"audit FAILED: {len(problems)} problems")
        return 1
    print(f"audit ok: {len(store.brain_ids())} brains consistent")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="neuroforge",
        description="Hand-built neural controllers, compiled to evolvable genotypes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile an annotated network to a genotype")
    p.add_argument("--anet", required=True, help="anet/1 JSON file")
    p.add_argument("--out", required=True, help="output file for genotype + report")
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("roundtrip", help="verify compile/decode round-trip")
    p.add_argument("--anet", required=True, help="anet/1 JSON file")
    p.set_defaults(func=_cmd_roundtrip)

    p = sub.add_parser("eval", help="evaluate a brain on a maze")
    p.add_argument("--brain", required=True, help="anet/1 file or brain record JSON")
    p.add_argument("--maze", required=True, help="builtin maze name or file path")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("evolve", help="headless evolution from the starter brain")
    p.add_argument("--maze", required=True)
    p.add_argument("--mode", choices=("objective", "novelty"), default="objective")
    p.add_argument("--generations", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pop", type=int, default=64)
    p.add_argument("--log", default=None, help="run log path ('-' for stdout)")
    p.add_argument("--out", default=None, help="write final population JSON here")
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("serve", help="run the collaboration service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--store", required=True, help="store directory")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("audit", help="re-verify every stored round-trip")
    p.add_argument("--store", required=True, help="store directory")
    p.set_defaults(func=_cmd_audit)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
