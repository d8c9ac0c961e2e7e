"""Command-line front end.

Subcommands:

    ingest   detections -> Atomese store file
    query    run a surface or raw Atomese query against a detection file
    check    cross-check the engine against the brute-force oracle
    dump     write a store (from detections or a dump) as Atomese text
    load     read a dump back in, optionally re-dumping it
    repl     interactive queries against one loaded store
    render   write an SVG overlay per matching frame

Relation thresholds come from ``--on-tau``, ``--on-overlap-min``,
``--inside-slack`` and ``--min-conf``; the environment variables
``SIQ_ON_TAU``, ``SIQ_ON_OVERLAP_MIN``, ``SIQ_INSIDE_SLACK`` and
``SIQ_MIN_CONF`` fill in when a flag is absent.

Exit codes: 0 with at least one match, 1 with none, 2 on any error
(``check`` exits 0 on agreement, 1 on disagreement).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import atomese
from .engine import Engine, QueryResult, load_goal
from .errors import SiqError
from .ingest import read_detection_file
from .oracle import oracle_retrieve
from .render import render_results
from .rules import RelParams, parse_query
from .store import AtomStore

_ENV_PARAMS = (
    ("on_tau", "SIQ_ON_TAU"),
    ("on_overlap_min", "SIQ_ON_OVERLAP_MIN"),
    ("inside_slack", "SIQ_INSIDE_SLACK"),
)


def _resolve_params(args) -> RelParams:
    values = {}
    for attr, env in _ENV_PARAMS:
        flag = getattr(args, attr, None)
        if flag is not None:
            values[attr] = flag
        elif os.environ.get(env):
            values[attr] = float(os.environ[env])
    return RelParams(**values)


def _resolve_min_conf(args) -> float | None:
    if getattr(args, "min_conf", None) is not None:
        return args.min_conf
    env = os.environ.get("SIQ_MIN_CONF")
    return float(env) if env else None


def _load_engine(args) -> tuple[Engine, list]:
    """Engine over the filtered detection file, plus the filtered list."""
    engine = Engine(_resolve_params(args))
    parsed = read_detection_file(args.detections)
    dets = list(parsed.detections)
    min_conf = _resolve_min_conf(args)
    if min_conf is not None:
        dets = [d for d in dets if d.confidence >= min_conf]
    engine.add_detections(dets, frames=parsed.frame_ids)
    return engine, dets


def _run_goal(engine: Engine, args) -> QueryResult:
    log: list = []
    if args.q is not None:
        return engine.query_text(args.q, log=log)
    with open(args.atomese, "r", encoding="utf-8") as handle:
        pattern = load_goal(handle.read())
    return engine.query_pattern(pattern, log=log)


def _fmt(value: float) -> str:
    return repr(float(value))


def _print_text(result: QueryResult, explain: bool, out) -> None:
    for frame_id in result.frame_ids():
        print(f"frame {frame_id}", file=out)
        for vars_info in result.frames[frame_id]:
            parts = []
            for var, info in sorted(vars_info.items()):
                box = ",".join(_fmt(v) for v in info.box.as_list())
                parts.append(f"{var}={info.bb} {info.label} "
                             f"conf={_fmt(info.conf)} box=[{box}]")
            print("  " + "  ".join(parts), file=out)
    if explain:
        for entry in result.log:
            print(f"# rule {entry.rule}: {entry.groundings} groundings, "
                  f"{entry.atoms_added} atoms added", file=out)


def _print_json(result: QueryResult, explain: bool, out) -> None:
    for frame_id in result.frame_ids():
        groundings = []
        for vars_info in result.frames[frame_id]:
            groundings.append({"vars": {
                var: {"bb": info.bb, "label": info.label,
                      "conf": info.conf, "box": info.box.as_list()}
                for var, info in sorted(vars_info.items())
            }})
        print(json.dumps({"frame": frame_id, "groundings": groundings}), file=out)
    if explain:
        print(json.dumps({"log": [entry._asdict() for entry in result.log]}), file=out)


# --- subcommands -----------------------------------------------------------

def cmd_ingest(args) -> int:
    engine, dets = _load_engine(args)
    store = engine.store
    with open(args.out, "w", encoding="utf-8") as handle:
        handle.write(atomese.dumps(store))
    print(f"{len(store)} atoms from {len(dets)} detections -> {args.out}")
    return 0


def cmd_query(args) -> int:
    engine, _ = _load_engine(args)
    result = _run_goal(engine, args)
    if args.format == "json":
        _print_json(result, args.explain, sys.stdout)
    else:
        _print_text(result, args.explain, sys.stdout)
    return 0 if result.matched else 1


def cmd_check(args) -> int:
    engine, dets = _load_engine(args)
    ast = parse_query(args.q)
    result = engine.query_ast(ast)
    engine_set = result.assignments
    oracle_set = oracle_retrieve(ast, dets, engine.params)
    if engine_set == oracle_set:
        frames = {frame for frame, _ in engine_set}
        print(f"ok: {len(engine_set)} assignments over {len(frames)} frames")
        return 0
    for frame, names in sorted(oracle_set - engine_set):
        print(f"missing from engine: frame {frame} {names}")
    for frame, names in sorted(engine_set - oracle_set):
        print(f"extra in engine: frame {frame} {names}")
    return 1


def cmd_dump(args) -> int:
    store = AtomStore()
    if args.detections is not None:
        engine, _ = _load_engine(args)
        store = engine.store
    else:
        with open(args.infile, "r", encoding="utf-8") as handle:
            atomese.loads(handle.read(), store)
    text = atomese.dumps(store)
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_load(args) -> int:
    store = AtomStore()
    with open(args.infile, "r", encoding="utf-8") as handle:
        roots = atomese.loads(handle.read(), store)
    print(f"loaded {len(store)} atoms ({len(roots)} roots)")
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(atomese.dumps(store))
    return 0


def cmd_repl(args) -> int:
    engine, _ = _load_engine(args)
    explain = False
    interactive = sys.stdin.isatty()
    while True:
        if interactive:
            sys.stdout.write("siq> ")
            sys.stdout.flush()
        line = sys.stdin.readline()
        if not line:
            break
        line = line.strip()
        if not line:
            continue
        if line.startswith(":"):
            if line == ":quit":
                break
            if line == ":params":
                p = engine.params
                print(f"on_tau={p.on_tau} on_overlap_min={p.on_overlap_min} "
                      f"inside_slack={p.inside_slack}")
            elif line in (":explain on", ":explain off"):
                explain = line.endswith("on")
            else:
                print(f"unknown command {line!r} "
                      "(try :params, :explain on|off, :quit)")
            continue
        try:
            result = engine.query_text(line)
        except SiqError as exc:
            print(f"error: {exc}")
            continue
        if result.frames:
            _print_text(result, explain, sys.stdout)
        else:
            print("(no matches)")
            if explain:
                _print_text(result, explain, sys.stdout)
    return 0


def cmd_render(args) -> int:
    engine, _ = _load_engine(args)
    result = _run_goal(engine, args)
    written = render_results(result, args.out_dir)
    for path in written:
        print(path)
    return 0 if result.matched else 1


# --- parser ---------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="siq",
        description="Spatial-relational frame retrieval over object detections.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    params = argparse.ArgumentParser(add_help=False)
    params.add_argument("--on-tau", dest="on_tau", type=float, default=None,
                        help="ON vertical tolerance (fraction of lower box height)")
    params.add_argument("--on-overlap-min", dest="on_overlap_min", type=float,
                        default=None,
                        help="ON minimum horizontal overlap (fraction of upper box width)")
    params.add_argument("--inside-slack", dest="inside_slack", type=float,
                        default=None, help="INSIDE slack in pixels")
    params.add_argument("--min-conf", dest="min_conf", type=float, default=None,
                        help="drop detections below this confidence before the build")

    dets = argparse.ArgumentParser(add_help=False)
    dets.add_argument("--detections", required=True,
                      help="JSON Lines detection file")

    def goal_args(p: argparse.ArgumentParser) -> None:
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--q", help="surface query text")
        group.add_argument("--atomese", help="raw Atomese query file (.ats)")

    p = sub.add_parser("ingest", parents=[dets, params],
                       help="build a store from detections and save it")
    p.add_argument("--out", required=True, help="output .ats file")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("query", parents=[dets, params],
                       help="run a query and print matching frames")
    goal_args(p)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--explain", action="store_true",
                   help="append the rule execution log")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("check", parents=[dets, params],
                       help="compare the engine against the brute-force oracle")
    p.add_argument("--q", required=True, help="surface query text")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("dump", parents=[params],
                       help="write a store as Atomese text")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--detections", help="JSON Lines detection file")
    src.add_argument("--in", dest="infile", help="existing .ats dump")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.set_defaults(func=cmd_dump)

    p = sub.add_parser("load", help="load an Atomese dump")
    p.add_argument("--in", dest="infile", required=True, help=".ats dump to load")
    p.add_argument("--out", default=None, help="re-dump the loaded store here")
    p.set_defaults(func=cmd_load)

    p = sub.add_parser("repl", parents=[dets, params],
                       help="interactive queries over one loaded store")
    p.set_defaults(func=cmd_repl)

    p = sub.add_parser("render", parents=[dets, params],
                       help="write an SVG overlay per matching frame")
    goal_args(p)
    p.add_argument("--out-dir", required=True, help="directory for the SVG files")
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SiqError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
