"""High-level orchestration: one store, the builtin rules, one chain session.

:class:`Engine` is what the CLI (and most tests) drive: load detections,
run surface or raw-pattern queries through backward chaining, and get the
results grouped per frame with each bound box's name, label, confidence and
rectangle attached.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from . import atomese
from .chainer import ChainSession, LogEntry
from .errors import EmptyQueryError
from .ingest import BBox, Detection, build_graph, ingest_file
from .matcher import Grounding, Pattern
from .rules import (
    EVALUATORS,
    CompiledQuery,
    QueryAST,
    RelParams,
    builtin_rules,
    compile_query,
    parse_query,
)
from .store import AtomId, AtomStore

_NUM_CHUNKS = re.compile(r"(\d+)")


def natural_key(text: str):
    """Sort key ordering embedded integers numerically, so "2" < "10"."""
    return tuple(
        (0, int(part)) if i % 2 else (1, part)
        for i, part in enumerate(_NUM_CHUNKS.split(text))
    )


@dataclass(frozen=True)
class BoxInfo:
    """Display data for one grounded box."""

    bb: str
    label: str
    conf: float
    box: BBox


@dataclass
class QueryResult:
    """Groundings grouped per frame, plus the rule execution log."""

    frames: dict[str, list[dict[str, BoxInfo]]]
    log: list[LogEntry]
    groundings: set[Grounding]
    assignments: set[tuple[str, tuple[str, ...]]] | None = None

    @property
    def matched(self) -> bool:
        return bool(self.groundings)

    def frame_ids(self) -> list[str]:
        return sorted(self.frames, key=natural_key)


def load_goal(text: str) -> Pattern:
    """Read a raw Atomese query into a pattern.

    A single AndLink root contributes its children as clauses; multiple
    roots are each one clause.
    """
    template_store = AtomStore()
    roots = atomese.loads(text, template_store)
    if not roots:
        raise EmptyQueryError("the Atomese query has no clauses")
    if len(roots) == 1:
        return Pattern.from_root(template_store, roots[0])
    return Pattern.from_clauses(template_store, roots)


class Engine:
    """A store with the builtin relation rules wired to a chain session."""

    def __init__(self, params: RelParams | None = None):
        self.params = params if params is not None else RelParams()
        self.store = AtomStore()
        self.rules = builtin_rules(self.params)
        self.session = ChainSession(self.store, self.rules, EVALUATORS)
        self._box_cache: dict[AtomId, BoxInfo | None] = {}

    # --- loading -----------------------------------------------------

    def load_detections(self, path, min_conf: float | None = None) -> int:
        return ingest_file(path, self.store, min_conf)

    def add_detections(self, dets: Sequence[Detection], frames=()) -> int:
        return build_graph(dets, self.store, frames)

    # --- querying ----------------------------------------------------

    def query_text(self, text: str, *, log=None) -> QueryResult:
        return self.query_compiled(compile_query(parse_query(text)), log=log)

    def query_ast(self, ast: QueryAST, *, log=None) -> QueryResult:
        return self.query_compiled(compile_query(ast), log=log)

    def query_compiled(self, compiled: CompiledQuery, *, log=None) -> QueryResult:
        groundings = self.session.query(compiled.goal, log=log)
        return self._assemble(groundings, compiled.ref_vars, compiled.frame_var)

    def query_pattern(self, pattern: Pattern, *, ref_vars=None,
                      frame_var=None, log=None) -> QueryResult:
        groundings = self.session.query(pattern, log=log)
        return self._assemble(groundings, ref_vars, frame_var)

    # --- result assembly -----------------------------------------------

    def _assemble(self, groundings: set[Grounding],
                  ref_vars: Sequence[str] | None,
                  frame_var: str | None) -> QueryResult:
        frames: dict[str, list[dict[str, BoxInfo]]] = {}
        assignments: set | None = set() if ref_vars else None
        for grounding in groundings:
            frame_id = self._frame_of(grounding, frame_var)
            if frame_id is None:
                continue
            vars_info = {}
            for name in grounding:
                info = self._box_info(grounding[name])
                if info is not None:
                    vars_info[name] = info
            frames.setdefault(frame_id, []).append(vars_info)
            if assignments is not None:
                names = []
                for var in ref_vars:
                    info = self._box_info(grounding[var])
                    names.append(info.bb if info is not None else "?")
                assignments.add((frame_id, tuple(names)))
        for entries in frames.values():
            entries.sort(key=lambda vars_info: tuple(
                info.bb for _, info in sorted(vars_info.items())
            ))
        return QueryResult(frames, self.session.last_log, groundings, assignments)

    def _frame_name(self, atom_id: AtomId) -> str | None:
        store = self.store
        name = store._names[atom_id]
        if (name is not None and name.startswith("Frame#")
                and store._types[atom_id] == "ConceptNode"):
            return name[len("Frame#"):]
        return None

    def _frame_of(self, grounding: Grounding, frame_var: str | None) -> str | None:
        if frame_var is not None and frame_var in grounding:
            frame_id = self._frame_name(grounding[frame_var])
            if frame_id is not None:
                return frame_id
        for name in sorted(grounding):
            frame_id = self._frame_name(grounding[name])
            if frame_id is not None:
                return frame_id
        # fall back to the frame a bound box belongs to
        store = self.store
        for name in sorted(grounding):
            atom_id = grounding[name]
            if self._box_info(atom_id) is None:
                continue
            for inc in store._incoming[atom_id]:
                if store._types[inc] == "MemberLink":
                    out = store._outs[inc]
                    if out[0] == atom_id:
                        frame_id = self._frame_name(out[1])
                        if frame_id is not None:
                            return frame_id
        return None

    def _box_info(self, atom_id: AtomId) -> BoxInfo | None:
        cached = self._box_cache.get(atom_id, False)
        if cached is not False:
            return cached
        info = self._decode_box(atom_id)
        self._box_cache[atom_id] = info
        return info

    def _decode_box(self, atom_id: AtomId) -> BoxInfo | None:
        store = self.store
        name = store._names[atom_id]
        if (name is None or not name.startswith("BB#")
                or store._types[atom_id] != "ConceptNode"):
            return None
        label = None
        values: dict[str, float] = {}
        for inc in store._incoming[atom_id]:
            inc_type = store._types[inc]
            out = store._outs[inc]
            if inc_type == "InheritanceLink" and out[0] == atom_id:
                target = out[1]
                if store._types[target] == "ConceptNode":
                    label = store._names[target]
            elif inc_type == "MemberLink" and out[1] == atom_id:
                role_link = out[0]
                if (store._outs[role_link] is not None
                        and store._types[role_link] == "InheritanceLink"):
                    num, role = store._outs[role_link]
                    if (store._types[num] == "NumberNode"
                            and store._types[role] == "Node"):
                        values[store._names[role]] = float(store._names[num])
        required = {"Left", "Right", "Top", "Bottom", "Confidence"}
        if label is None or not required <= values.keys():
            return None
        box = BBox(values["Left"], values["Top"], values["Right"], values["Bottom"])
        return BoxInfo(name, label, values["Confidence"], box)
