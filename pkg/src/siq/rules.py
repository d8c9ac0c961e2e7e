"""Spatial-relation rules over box pairs, plus the surface query language.

All relations hold between two boxes of the same frame, in image coordinates
(x grows rightward, y grows downward); a is the subject, b the object:

    RIGHT_OF    left(a) > right(b)
    LEFT_OF     right(a) < left(b)
    ABOVE       bottom(a) < top(b)
    BELOW       top(a) > bottom(b)
    INSIDE      a within b, each edge allowed inside_slack pixels outside
    CONTAINS    INSIDE with the roles swapped
    INTERSECTS  open interiors overlap on both axes
    ON          horizontal overlap >= on_overlap_min * width(a) and
                |bottom(a) - top(b)| <= on_tau * height(b)
    WITH        INTERSECTS or INSIDE or CONTAINS

Every comparison is strict where written strict, so boxes that merely touch
are neither RIGHT_OF nor INTERSECTS.  The ON and WITH thresholds are engine
defaults with no external authority; tune them through RelParams or the CLI
flags.

Each relation is packaged as a rewrite rule whose pattern binds two box
variables plus their shared frame and whose resultant is
``EvaluationLink(PredicateNode <name>, ListLink(a, b))``.  The four purely
ordinal relations use literal GreaterThanLink clauses; INSIDE, CONTAINS and
ON use arithmetic links registered with the matcher (``BoxInsideLink``,
``BoxOnTopLink``); WITH is three rules sharing one resultant predicate.

``parse_query`` reads the surface syntax

    query  := "FIND" "FRAMES" "WHERE" clause { "AND" clause }
    clause := classref REL classref
    classref := IDENT [":" IDENT] | QUOTED [":" IDENT]

with case-insensitive keywords and case-sensitive class names; quote class
names that contain spaces (for example "dining table").  ``compile_query``
turns the parsed form into one goal pattern: per clause, two box variables
with class constraints, membership in one shared frame variable, the
relation's predicate clause, and a distinctness constraint between the two
variables.  An alias names its variable, so ``person:p`` refers to the same
box wherever the alias appears.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from . import atomese
from .errors import (
    AliasClassMismatchError,
    EmptyQueryError,
    QuerySyntaxError,
    UnknownRelationError,
)
from .matcher import BindRule, NumericEvaluator, Pattern, not_identical
from .store import AtomStore


class RelKind(enum.Enum):
    RIGHT_OF = "RIGHT_OF"
    LEFT_OF = "LEFT_OF"
    ABOVE = "ABOVE"
    BELOW = "BELOW"
    INSIDE = "INSIDE"
    CONTAINS = "CONTAINS"
    INTERSECTS = "INTERSECTS"
    ON = "ON"
    WITH = "WITH"


PREDICATE_NAME = {
    RelKind.RIGHT_OF: "RightTo",
    RelKind.LEFT_OF: "LeftTo",
    RelKind.ABOVE: "Above",
    RelKind.BELOW: "Below",
    RelKind.INSIDE: "Inside",
    RelKind.CONTAINS: "Contains",
    RelKind.INTERSECTS: "Intersects",
    RelKind.ON: "On",
    RelKind.WITH: "With",
}


@dataclass(frozen=True)
class RelParams:
    """Thresholds for the non-ordinal relations.

    on_tau: ON's vertical tolerance, as a fraction of the lower box's height.
    on_overlap_min: ON's minimum horizontal overlap, as a fraction of the
        upper box's width.
    inside_slack: pixels each INSIDE edge may stick out.
    """

    on_tau: float = 0.15
    on_overlap_min: float = 0.5
    inside_slack: float = 0.0

    def __post_init__(self) -> None:
        if self.on_tau < 0:
            raise ValueError(f"on_tau must be >= 0, got {self.on_tau}")
        if not 0 < self.on_overlap_min <= 1:
            raise ValueError(f"on_overlap_min must be in (0, 1], got {self.on_overlap_min}")
        if self.inside_slack < 0:
            raise ValueError(f"inside_slack must be >= 0, got {self.inside_slack}")


# --- arithmetic clause evaluators ---------------------------------------------

def _box_inside(la, ta, ra, ba, lb, tb, rb, bb, slack):
    return (la >= lb - slack and ra <= rb + slack
            and ta >= tb - slack and ba <= bb + slack)


def _box_on_top(la, ra, ba, lb, rb, tb, bb, tau, overlap_min):
    overlap = min(ra, rb) - max(la, lb)
    return overlap >= overlap_min * (ra - la) and abs(ba - tb) <= tau * (bb - tb)


EVALUATORS = {
    "BoxInsideLink": NumericEvaluator(_box_inside, 9, "BoxInsideLink"),
    "BoxOnTopLink": NumericEvaluator(_box_on_top, 9, "BoxOnTopLink"),
    "NotIdenticalLink": not_identical,
}


# --- builtin rules --------------------------------------------------------------

def builtin_rules(params: RelParams | None = None) -> list[BindRule]:
    """One rule per relation (three for WITH), sharing one template store."""
    p = params if params is not None else RelParams()
    ts = AtomStore()

    def var(name: str) -> int:
        return ts.add_node("VariableNode", name)

    def member(a: int, b: int) -> int:
        return ts.add_link("MemberLink", (a, b))

    def gt(a: int, b: int) -> int:
        return ts.add_link("GreaterThanLink", (a, b))

    bb1, bb2, frame = var("$BB1"), var("$BB2"), var("$Frame")
    frame_clauses = (member(bb1, frame), member(bb2, frame))

    coord_vars = {}
    coord_clauses = {}
    for suffix, bb in (("1", bb1), ("2", bb2)):
        for role in ("Left", "Right", "Top", "Bottom"):
            name = f"${role}{suffix}"
            vid = var(name)
            coord_vars[name] = vid
            role_link = ts.add_link("InheritanceLink", (vid, ts.add_node("Node", role)))
            coord_clauses[name] = member(role_link, bb)

    l1, r1, t1, b1 = (coord_vars[f"${r}1"] for r in ("Left", "Right", "Top", "Bottom"))
    l2, r2, t2, b2 = (coord_vars[f"${r}2"] for r in ("Left", "Right", "Top", "Bottom"))

    slack = ts.add_number(p.inside_slack)
    tau = ts.add_number(p.on_tau)
    overlap_min = ts.add_number(p.on_overlap_min)
    inside_12 = ts.add_link("BoxInsideLink", (l1, t1, r1, b1, l2, t2, r2, b2, slack))
    inside_21 = ts.add_link("BoxInsideLink", (l2, t2, r2, b2, l1, t1, r1, b1, slack))
    on_top = ts.add_link("BoxOnTopLink", (l1, r1, b1, l2, r2, t2, b2, tau, overlap_min))
    intersect = (gt(r2, l1), gt(r1, l2), gt(b2, t1), gt(b1, t2))

    def rule(name: str, predicate: str, coords: tuple[str, ...],
             tests: tuple[int, ...]) -> BindRule:
        clauses = tuple(coord_clauses[c] for c in coords) + frame_clauses + tests
        resultant = ts.add_link("EvaluationLink", (
            ts.add_node("PredicateNode", predicate),
            ts.add_link("ListLink", (bb1, bb2)),
        ))
        declared = ("$BB1", "$BB2", "$Frame") + coords
        return BindRule(name, Pattern.from_clauses(ts, clauses), resultant, declared)

    all_coords = ("$Left1", "$Right1", "$Top1", "$Bottom1",
                  "$Left2", "$Right2", "$Top2", "$Bottom2")
    return [
        rule("RightTo", "RightTo", ("$Left1", "$Right2"), (gt(l1, r2),)),
        rule("LeftTo", "LeftTo", ("$Right1", "$Left2"), (gt(l2, r1),)),
        rule("Above", "Above", ("$Bottom1", "$Top2"), (gt(t2, b1),)),
        rule("Below", "Below", ("$Top1", "$Bottom2"), (gt(t1, b2),)),
        rule("Intersects", "Intersects", all_coords, intersect),
        rule("Inside", "Inside", all_coords, (inside_12,)),
        rule("Contains", "Contains", all_coords, (inside_21,)),
        rule("On", "On", ("$Left1", "$Right1", "$Bottom1",
                          "$Left2", "$Right2", "$Top2", "$Bottom2"), (on_top,)),
        rule("With[intersects]", "With", all_coords, intersect),
        rule("With[inside]", "With", all_coords, (inside_12,)),
        rule("With[contains]", "With", all_coords, (inside_21,)),
    ]


def load_rules(text: str) -> list[BindRule]:
    """Read BindLink roots from Atomese text into rules."""
    ts = AtomStore()
    roots = atomese.loads(text, ts)
    rules = []
    for root in roots:
        rules.append(BindRule.from_bind_link(ts, root))
    return rules


# --- surface queries -------------------------------------------------------------

@dataclass(frozen=True)
class ClassRef:
    label: str
    alias: str | None = None


@dataclass(frozen=True)
class QueryClause:
    left: ClassRef
    rel: RelKind
    right: ClassRef


@dataclass(frozen=True)
class QueryAST:
    clauses: tuple[QueryClause, ...]


@dataclass(frozen=True)
class CompiledQuery:
    """A goal pattern plus bookkeeping for result reporting.

    ``ref_vars`` lists the variable chosen for each class reference in
    clause order (left, right, left, right, ...); aliased references repeat
    their shared variable.
    """

    goal: Pattern
    needed_predicates: frozenset[RelKind]
    ref_vars: tuple[str, ...]
    frame_var: str


_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_KEYWORDS = {"FIND", "FRAMES", "WHERE", "AND"}


def _scan_query(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in " \t":
            i += 1
            continue
        col = i + 1
        if ch == '"':
            chars = []
            i += 1
            while i < n and text[i] != '"':
                if text[i] == "\\" and i + 1 < n:
                    chars.append(text[i + 1])
                    i += 2
                else:
                    chars.append(text[i])
                    i += 1
            if i >= n:
                raise QuerySyntaxError("unterminated quoted class name", col)
            i += 1
            tokens.append(("quoted", "".join(chars), col))
        elif ch == ":":
            tokens.append(("colon", ":", col))
            i += 1
        else:
            m = _IDENT_RE.match(text, i)
            if m is None:
                raise QuerySyntaxError(f"unexpected character {ch!r}", col)
            tokens.append(("word", m.group(), col))
            i = m.end()
    return tokens


class _Cursor:
    def __init__(self, tokens: list[tuple[str, str, int]], end_col: int):
        self.tokens = tokens
        self.pos = 0
        self.end_col = end_col

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self):
        token = self.peek()
        if token is not None:
            self.pos += 1
        return token

    def column(self) -> int:
        token = self.peek()
        return token[2] if token is not None else self.end_col

    def expect_keyword(self, word: str) -> None:
        token = self.take()
        if token is None or token[0] != "word" or token[1].upper() != word:
            raise QuerySyntaxError(f"expected {word}", token[2] if token else self.end_col)


def parse_query(text: str) -> QueryAST:
    """Parse surface query text; see the module docstring for the grammar."""
    cursor = _Cursor(_scan_query(text), len(text) + 1)
    for word in ("FIND", "FRAMES", "WHERE"):
        cursor.expect_keyword(word)

    def classref() -> ClassRef:
        token = cursor.take()
        if token is None or token[0] not in ("word", "quoted"):
            raise QuerySyntaxError("expected a class name",
                                   token[2] if token else cursor.end_col)
        label = token[1]
        alias = None
        nxt = cursor.peek()
        if nxt is not None and nxt[0] == "colon":
            cursor.take()
            alias_token = cursor.take()
            if alias_token is None or alias_token[0] != "word":
                raise QuerySyntaxError("expected an alias after ':'",
                                       alias_token[2] if alias_token else cursor.end_col)
            alias = alias_token[1]
        return ClassRef(label, alias)

    def clause() -> QueryClause:
        left = classref()
        token = cursor.take()
        if token is None or token[0] != "word":
            raise QuerySyntaxError("expected a relation",
                                   token[2] if token else cursor.end_col)
        try:
            rel = RelKind[token[1].upper()]
        except KeyError:
            raise UnknownRelationError(f"unknown relation {token[1]!r}", token[2]) from None
        return QueryClause(left, rel, classref())

    clauses = [clause()]
    while cursor.peek() is not None:
        cursor.expect_keyword("AND")
        clauses.append(clause())
    return QueryAST(tuple(clauses))


def compile_query(ast: QueryAST, params: RelParams | None = None) -> CompiledQuery:
    """Compile a parsed query into one goal pattern.

    ``params`` is accepted for interface symmetry with :func:`builtin_rules`;
    thresholds live in the rules, not in the goal.
    """
    del params
    if not ast.clauses:
        raise EmptyQueryError("a query needs at least one clause")
    alias_class: dict[str, str] = {}
    for cl in ast.clauses:
        for ref in (cl.left, cl.right):
            if ref.alias is not None:
                known = alias_class.get(ref.alias)
                if known is None:
                    alias_class[ref.alias] = ref.label
                elif known != ref.label:
                    raise AliasClassMismatchError(
                        f"alias {ref.alias!r} used for both {known!r} and {ref.label!r}"
                    )
    taken = set(alias_class)
    frame_var = "$Frame" if "Frame" not in taken else "$__frame"

    def fresh_names():
        for ch in "abcdefghijklmnopqrstuvwxyz":
            if ch not in taken:
                yield f"${ch}"
        i = 1
        while True:
            if f"v{i}" not in taken:
                yield f"$v{i}"
            i += 1

    fresh = fresh_names()
    ts = AtomStore()

    def var(name: str) -> int:
        return ts.add_node("VariableNode", name)

    frame_id = var(frame_var)
    clause_ids: list[int] = []
    ref_vars: list[str] = []
    needed: set[RelKind] = set()
    for cl in ast.clauses:
        pair = []
        for ref in (cl.left, cl.right):
            name = f"${ref.alias}" if ref.alias is not None else next(fresh)
            pair.append(name)
            vid = var(name)
            label = ts.add_node("ConceptNode", ref.label)
            clause_ids.append(ts.add_link("InheritanceLink", (vid, label)))
            clause_ids.append(ts.add_link("MemberLink", (vid, frame_id)))
        left_var, right_var = pair
        ref_vars.extend(pair)
        needed.add(cl.rel)
        clause_ids.append(ts.add_link("EvaluationLink", (
            ts.add_node("PredicateNode", PREDICATE_NAME[cl.rel]),
            ts.add_link("ListLink", (var(left_var), var(right_var))),
        )))
        if left_var != right_var:
            clause_ids.append(ts.add_link("NotIdenticalLink",
                                          (var(left_var), var(right_var))))
    goal = Pattern.from_clauses(ts, tuple(dict.fromkeys(clause_ids)))
    return CompiledQuery(goal, frozenset(needed), tuple(ref_vars), frame_var)
