"""Command-line entry point.

Exit codes: 0 success / property verified; 1 verification failure (with a
counterexample); 2 usage, parse, or input errors.  `--json` switches every
command to machine-readable output.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod
from .btypes import btype_to_json, btype_to_text, gt_map, lt_map, oplus_leq
from .equivalence import cc_equiv_bounded, swap_equiv, weak_bisim
from .medium import (
    MediumConfig, annotated_medium, finite_medium, recursive_medium,
)
from .opcorr import (
    STRATEGIES, build_system, check_correspondence, check_progress,
)
from .parser import ParseError, parse_global, parse_process
from .process import canonical_hash, proc_to_json, proc_to_text
from .projection import ProjectError, project, project_simple, wf_report
from .semantics import label_to_json, lts_step
from .syntax import (
    SpecError, global_to_json, global_to_text, local_to_json, local_to_text,
    participants,
)
from .typecheck import typecheck_compositional


class _Usage(Exception):
    pass


def _read(path: str) -> str:
    p = Path(path)
    if not p.exists():
        raise _Usage(f"no such file: {path}")
    return p.read_text()


def _load_global(path: str):
    return parse_global(_read(path))


def _load_process(path: str):
    return parse_process(_read(path))


def _emit(args, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(human)


def _cmd_parse(args) -> int:
    g = _load_global(args.file)
    _emit(args, global_to_json(g), global_to_text(g))
    return 0


def _cmd_project(args) -> int:
    g = _load_global(args.file)
    fn = project_simple if args.simple else project
    try:
        t = fn(g, args.participant)
    except ProjectError as e:
        _emit(args, {"error": str(e)}, f"error: {e}")
        return 1
    _emit(args, local_to_json(t), local_to_text(t))
    return 0


def _cmd_check_wf(args) -> int:
    g = _load_global(args.file)
    report = wf_report(g)
    human = "well-formed" if report.ok else "not well-formed:\n" + "\n".join(
        f"  {p}: {e}" for p, e in sorted(report.errors.items()))
    _emit(args, report.to_json(), human)
    return 0 if report.ok else 1


def _cmd_medium(args) -> int:
    g = _load_global(args.file)
    cfg = MediumConfig.for_type(g)
    builder = {"finite": finite_medium, "rec": recursive_medium,
               "annotated": annotated_medium}[args.kind]
    m = builder(g, cfg)
    _emit(args, {"process": proc_to_json(m), "text": proc_to_text(m)},
          proc_to_text(m))
    return 0


def _cmd_typecheck_medium(args) -> int:
    g = _load_global(args.file)
    cfg = MediumConfig.for_type(g)
    builder = {"finite": finite_medium, "rec": recursive_medium,
               "annotated": annotated_medium}[args.kind]
    try:
        m = builder(g, cfg)
    except SpecError as e:
        raise _Usage(str(e))
    delta = {cfg.channel(p): lt_map(project(g, p)) for p in participants(g)}
    report = typecheck_compositional(g, m, delta)
    if report.ok:
        human = (f"{report.kind}: offer "
                 f"{report.offer_name}:{btype_to_text(report.offer_type)}")
    else:
        human = f"failed: {report.error}"
    _emit(args, report.to_json(), human)
    return 0 if report.ok else 1


def _cmd_swap_equiv(args) -> int:
    g1 = _load_global(args.file1)
    g2 = _load_global(args.file2)
    witness = swap_equiv(g1, g2, args.bound)
    if witness is None:
        _emit(args, {"equivalent": False}, "not found within bound")
        return 1
    _emit(args, {"equivalent": True, **witness.to_json()},
          f"equivalent in {len(witness.steps)} step(s)")
    return 0


def _cmd_cc_equiv(args) -> int:
    p1 = _load_process(args.file1)
    p2 = _load_process(args.file2)
    trace = cc_equiv_bounded(p1, p2, args.bound)
    if trace is None:
        _emit(args, {"equivalent": False}, "not found within bound")
        return 1
    _emit(args, {"equivalent": True, **trace.to_json()},
          f"convertible in {len(trace.steps)} step(s)")
    return 0


def _cmd_simulate(args) -> int:
    p = _load_process(args.file)
    state = p
    from .process import canonical

    state = canonical(state)
    for _ in range(args.steps):
        steps = sorted(lts_step(state), key=repr)
        if not steps:
            break
        lab, target = steps[0]
        line = {"label": label_to_json(lab), "state": canonical_hash(target)}
        print(json.dumps(line, sort_keys=True))
        state = target
    return 0


def _cmd_check_correspondence(args) -> int:
    g = _load_global(args.file)
    strategies = tuple(args.strategies.split(","))
    for s in strategies:
        if s not in STRATEGIES:
            raise _Usage(f"unknown strategy {s!r}")
    report = check_correspondence(g, args.depth, strategies)
    human = "correspondence verified" if report.ok \
        else f"counterexample: {report.counterexample}"
    _emit(args, report.to_json(), human)
    return 0 if report.ok else 1


def _cmd_check_progress(args) -> int:
    g = _load_global(args.file)
    system = build_system(g)
    report = check_progress(system, state_bound=args.state_bound,
                            check_types=args.types)
    human = (f"explored {report.states} state(s), "
             f"{report.terminated_states} terminated"
             + ("" if report.ok else f"; FAILED: {report.to_json()}"))
    _emit(args, report.to_json(), human)
    return 0 if report.ok else 1


def _cmd_gen_corpus(args) -> int:
    params = corpus_mod.CorpusParams(kind=args.kind, max_depth=args.depth)
    entries = corpus_mod.gen_corpus(args.seed, args.count, params)
    payload = [{"wf": e.wf, "type": global_to_json(e.g),
                "text": global_to_text(e.g)} for e in entries]
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        for e in entries:
            tag = "WF " if e.wf else "¬WF"
            print(f"{tag} {global_to_text(e.g)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mpstlab",
        description="multiparty session workbench: projection, mediums, "
                    "binary typing, equivalences, correspondence checking")
    ap.add_argument("--json", action="store_true", help="machine output")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("parse", help="parse a global type")
    p.add_argument("file")
    p.set_defaults(fn=_cmd_parse)

    p = sub.add_parser("project", help="project a global type")
    p.add_argument("file")
    p.add_argument("--participant", required=True)
    p.add_argument("--simple", action="store_true")
    p.set_defaults(fn=_cmd_project)

    p = sub.add_parser("check-wf", help="projectability for all participants")
    p.add_argument("file")
    p.set_defaults(fn=_cmd_check_wf)

    p = sub.add_parser("medium", help="synthesize a medium process")
    p.add_argument("file")
    p.add_argument("--kind", choices=("finite", "rec", "annotated"),
                   default="finite")
    p.set_defaults(fn=_cmd_medium)

    p = sub.add_parser("typecheck-medium",
                       help="check a medium against the projected types")
    p.add_argument("file")
    p.add_argument("--kind", choices=("finite", "rec", "annotated"),
                   default="finite")
    p.set_defaults(fn=_cmd_typecheck_medium)

    p = sub.add_parser("swap-equiv",
                       help="search the swapping congruence")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--bound", type=int, default=8)
    p.set_defaults(fn=_cmd_swap_equiv)

    p = sub.add_parser("cc-equiv", help="search the conversion relation")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--bound", type=int, default=16)
    p.set_defaults(fn=_cmd_cc_equiv)

    p = sub.add_parser("simulate", help="deterministic bounded run, one "
                       "JSON line per transition")
    p.add_argument("file")
    p.add_argument("--steps", type=int, default=32)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("check-correspondence",
                       help="global/system operational correspondence")
    p.add_argument("file")
    p.add_argument("--depth", type=int, default=8)
    p.add_argument("--strategies", default="first")
    p.set_defaults(fn=_cmd_check_correspondence)

    p = sub.add_parser("check-progress",
                       help="deadlock-freedom of the canonical system")
    p.add_argument("file")
    p.add_argument("--state-bound", type=int, default=2000)
    p.add_argument("--types", action="store_true",
                   help="re-typecheck every explored state")
    p.set_defaults(fn=_cmd_check_progress)

    p = sub.add_parser("gen-corpus", help="seeded random global types")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--kind", choices=("fin", "mu"), default="fin")
    p.add_argument("--depth", type=int, default=4)
    p.set_defaults(fn=_cmd_gen_corpus)
    return ap


def run(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (_Usage, ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except SpecError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
