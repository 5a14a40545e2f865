"""Command-line interface.

Exit codes: 0 success, 1 infeasible (or a failed check), 2 invalid input,
3 time limit reached.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from . import io as nsio
from .formulation import DEFAULT_PATHS, DEFAULT_SIGMA, BuildError
from .generator import PRESET_NAMES, GenerationError, preset_instance, preset_note
from .harness import (
    BUILDERS,
    COMPARE_COLUMNS,
    INSTANCE_COLUMNS,
    LIMIT_STATUSES,
    POINT_COLUMNS,
    compare_rows,
    experiment_rows,
    solve_instance,
    warn_sigma,
    write_csv,
)
from .milp import export_lp
from .milp.bnb import DEFAULT_GAP, DEFAULT_TIME_LIMIT
from .model import as_fraction, validate_instance
from .semantics import verify_domain
from .virtual import build_virtual_network

EXIT_OK, EXIT_INFEASIBLE, EXIT_INVALID, EXIT_LIMIT = 0, 1, 2, 3

log = logging.getLogger("netslice")


class InputError(Exception):
    pass


def _int_list(text: str) -> List[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _seeds(text: str) -> List[int]:
    """``N`` means seeds 0..N-1; ``a-b`` or ``a,b,c`` list them."""
    if text.isdigit():
        return list(range(int(text)))
    return _int_list(text)


def _load(path: str):
    try:
        instance, _ = nsio.read_instance(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read instance {path}: {exc}") from exc
    problems = validate_instance(instance)
    if problems:
        raise InputError(f"invalid instance {path}: " + "; ".join(str(p) for p in problems))
    return instance


def _model_opts(p: argparse.ArgumentParser, formulation: bool = True) -> None:
    if formulation:
        p.add_argument("--formulation", choices=sorted(BUILDERS), default="ns2")
    p.add_argument("--paths", "-P", type=int, default=DEFAULT_PATHS, help="paths per segment")
    p.add_argument("--sigma", type=as_fraction, default=DEFAULT_SIGMA, help="delay weight")
    p.add_argument("--no-latency", action="store_true", help="drop the end-to-end latency constraints")


def _solve_opts(p: argparse.ArgumentParser, gap: float = DEFAULT_GAP) -> None:
    p.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT, help="seconds per solve")
    p.add_argument("--gap", type=float, default=gap, help=f"relative optimality gap (default {gap})")
    p.add_argument("--solver", default="builtin", help="builtin or external:<path to cbc>")


def cmd_generate(args) -> int:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    if args.preset.startswith("fig1"):
        jobs = [(None, None)]
    else:
        jobs = [(n, seed) for n in _int_list(args.services) for seed in _seeds(args.seeds)]
    for n, seed in jobs:
        inst = preset_instance(args.preset, n, seed or 0)
        meta = {"preset": args.preset}
        if n is not None:
            meta.update(services=n, seed=seed)
        if preset_note(args.preset):
            meta["note"] = preset_note(args.preset)
        name = args.preset if n is None else f"{args.preset}-k{n}-s{seed}"
        nsio.write_instance(out / f"{name}.json", inst, meta=meta)
        print(out / f"{name}.json")
    return EXIT_OK


def cmd_build(args) -> int:
    inst = _load(args.instance)
    vnet = build_virtual_network(inst)
    model, _ = BUILDERS[args.formulation](inst, vnet, P=args.paths, sigma=args.sigma,
                                          latency=not args.no_latency)
    text = export_lp(model)
    if args.out:
        Path(args.out).write_text(text, encoding="ascii")
    else:
        sys.stdout.write(text)
    print(f"{args.formulation}: {model.n_vars} variables, {model.n_constraints} constraints", file=sys.stderr)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    warn_sigma(inst, args.sigma)
    rep = solve_instance(inst, args.formulation, args.paths, args.sigma, not args.no_latency,
                         time_limit=args.time_limit, gap=args.gap, solver=args.solver)
    summary = {"status": rep.status, "objective": rep.objective if rep.solved else None,
               "variables": rep.n_vars, "constraints": rep.n_cons,
               "violations": [v.label for v in rep.violations],
               "latency_violations": [v.label for v in rep.latency_violations]}
    if rep.solved:
        summary["activated"] = rep.solution.n_activated()
        summary["e2e_delay"] = {k.id: float(rep.solution.e2e_delay(k.id)) for k in inst.services}
        if args.out:
            nsio.write_solution(args.out, rep.solution, inst, extra={"status": rep.status})
    print(json.dumps(summary, indent=2, sort_keys=True))
    if rep.status in LIMIT_STATUSES:
        return EXIT_LIMIT
    if not rep.solved:
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_validate(args) -> int:
    inst = _load(args.instance)
    try:
        sol = nsio.read_solution(args.solution)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read solution {args.solution}: {exc}") from exc
    vnet = build_virtual_network(inst)
    problems = verify_domain(sol, inst, vnet, args.paths, latency=not args.no_latency)
    for v in problems:
        print(v.label)
    if problems:
        return EXIT_INFEASIBLE
    print("ok")
    return EXIT_OK


def cmd_compare(args) -> int:
    named = [(Path(p).stem, _load(p)) for p in args.instances]
    for _, inst in named:
        warn_sigma(inst, args.sigma)
    rows = compare_rows(named, workers=args.workers, P=args.paths, sigma=args.sigma,
                        latency=not args.no_latency, time_limit=args.time_limit, gap=args.gap,
                        solver=args.solver)
    text = write_csv(rows, COMPARE_COLUMNS, args.out)
    if not args.out:
        sys.stdout.write(text)
    if any(r.get("equal") is False for r in rows):
        print("optimal values of the two formulations differ", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_experiment(args) -> int:
    modes = {"on": (True,), "off": (False,), "both": (True, False)}[args.latency]
    if args.no_latency:
        modes = (False,)
    seeds = _seeds(args.seeds)
    for n in _int_list(args.services)[:1]:
        for seed in seeds[:1]:
            warn_sigma(preset_instance(args.preset, n, seed), args.sigma)
    inst_rows, summary = experiment_rows(
        args.preset, _int_list(args.services), seeds, _int_list(args.paths), modes,
        workers=args.workers, warm_start=not args.no_warm_start, sigma=args.sigma, time_limit=args.time_limit, gap=args.gap,
        solver=args.solver)
    text = write_csv(summary, POINT_COLUMNS, args.out)
    if not args.out:
        sys.stdout.write(text)
    if args.instances_out:
        write_csv(inst_rows, INSTANCE_COLUMNS, args.instances_out)
    if preset_note(args.preset):
        print(f"note: {preset_note(args.preset)}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="netslice", description="Network slicing MILP toolkit")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write random or fixed instances as JSON")
    p.add_argument("--preset", choices=PRESET_NAMES, required=True)
    p.add_argument("--services", default="1", help="service counts, e.g. 1,2,3 or 1-4")
    p.add_argument("--seeds", default="1", help="N for seeds 0..N-1, or a list/range")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("build", help="write the LP file of a formulation")
    p.add_argument("instance")
    _model_opts(p)
    p.add_argument("--out", help="LP file (default stdout)")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("solve", help="solve an instance and check the result")
    p.add_argument("instance")
    _model_opts(p)
    _solve_opts(p)
    p.add_argument("--out", help="solution report (JSON)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("validate", help="check a solution report against an instance")
    p.add_argument("instance")
    p.add_argument("solution")
    p.add_argument("--paths", "-P", type=int, default=DEFAULT_PATHS)
    p.add_argument("--no-latency", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compare", help="solve both formulations and compare")
    p.add_argument("instances", nargs="*")
    _model_opts(p, formulation=False)
    _solve_opts(p, gap=0.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="CSV file (default stdout)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("experiment", help="sweep a preset over service counts, seeds and path counts")
    p.add_argument("--preset", choices=[n for n in PRESET_NAMES if not n.startswith("fig1")], required=True)
    p.add_argument("--services", default="1,2,3")
    p.add_argument("--seeds", default="10")
    p.add_argument("--paths", default=str(DEFAULT_PATHS), help="path counts, e.g. 1,2,3")
    p.add_argument("--sigma", type=as_fraction, default=DEFAULT_SIGMA)
    p.add_argument("--no-latency", action="store_true", help="only run without latency constraints")
    p.add_argument("--latency", choices=["on", "off", "both"], default="on")
    p.add_argument("--no-warm-start", action="store_true",
                   help="solve every path count from scratch instead of starting from the previous one")
    _solve_opts(p)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="per-point CSV (default stdout)")
    p.add_argument("--instances-out", help="per-instance CSV")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, BuildError, GenerationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
