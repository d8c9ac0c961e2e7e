"""Brute-force reference evaluation of queries, straight over detections.

This module answers the same questions as the store/matcher/chainer pipeline
but by nested loops over Detection lists, with its own copy of the relation
arithmetic.  It deliberately shares no geometry code with :mod:`siq.rules`:
the duplication is what makes the cross-check meaningful, since a mistake on
either side breaks the agreement instead of hiding in shared code.

No attention is paid to speed; per frame this is O(n^k) in the number of
class references.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Sequence

from .ingest import BBox, Detection
from .rules import QueryAST, RelKind, RelParams


def _intersects(a: BBox, b: BBox) -> bool:
    return (a.left < b.right and b.left < a.right
            and a.top < b.bottom and b.top < a.bottom)


def _inside(a: BBox, b: BBox, slack: float) -> bool:
    return (a.left >= b.left - slack
            and a.right <= b.right + slack
            and a.top >= b.top - slack
            and a.bottom <= b.bottom + slack)


def _on_top(a: BBox, b: BBox, tau: float, overlap_min: float) -> bool:
    overlap = min(a.right, b.right) - max(a.left, b.left)
    if overlap < overlap_min * (a.right - a.left):
        return False
    return abs(a.bottom - b.top) <= tau * (b.bottom - b.top)


def oracle_relation(rel: RelKind, a: BBox, b: BBox,
                    params: RelParams | None = None) -> bool:
    """Does the relation hold for subject box a against object box b?"""
    p = params if params is not None else RelParams()
    if rel is RelKind.RIGHT_OF:
        return a.left > b.right
    if rel is RelKind.LEFT_OF:
        return a.right < b.left
    if rel is RelKind.ABOVE:
        return a.bottom < b.top
    if rel is RelKind.BELOW:
        return a.top > b.bottom
    if rel is RelKind.INSIDE:
        return _inside(a, b, p.inside_slack)
    if rel is RelKind.CONTAINS:
        return _inside(b, a, p.inside_slack)
    if rel is RelKind.INTERSECTS:
        return _intersects(a, b)
    if rel is RelKind.ON:
        return _on_top(a, b, p.on_tau, p.on_overlap_min)
    if rel is RelKind.WITH:
        return (_intersects(a, b) or _inside(a, b, p.inside_slack)
                or _inside(b, a, p.inside_slack))
    raise ValueError(f"unknown relation {rel!r}")


def bb_names(dets: Iterable[Detection]) -> list[str]:
    """The BB#<frame>-<k> name each detection gets, in input order."""
    counters: dict[str, int] = {}
    names = []
    for det in dets:
        k = counters.get(det.frame_id, 0) + 1
        counters[det.frame_id] = k
        names.append(f"BB#{det.frame_id}-{k}")
    return names


def oracle_retrieve(ast: QueryAST, dets: Sequence[Detection],
                    params: RelParams | None = None
                    ) -> set[tuple[str, tuple[str, ...]]]:
    """Every satisfying assignment, as (frame id, box names per class ref).

    The name tuple follows the query's class references in clause order
    (left, right, left, right, ...).  Aliased references share one variable;
    the two references of a clause must land on distinct detections unless
    they are the same alias.
    """
    p = params if params is not None else RelParams()
    names = bb_names(dets)
    per_frame: dict[str, list[tuple[int, Detection, str]]] = {}
    for i, det in enumerate(dets):
        per_frame.setdefault(det.frame_id, []).append((i, det, names[i]))

    # one variable key per alias, one per unaliased reference position
    ref_keys: list[tuple] = []
    var_keys: list[tuple] = []
    var_label: dict[tuple, str] = {}
    for ci, clause in enumerate(ast.clauses):
        for side, ref in (("l", clause.left), ("r", clause.right)):
            key = ("alias", ref.alias) if ref.alias is not None else ("ref", ci, side)
            ref_keys.append(key)
            if key not in var_label:
                var_label[key] = ref.label
                var_keys.append(key)

    results: set[tuple[str, tuple[str, ...]]] = set()
    for frame_id, entries in per_frame.items():
        candidates = []
        empty = False
        for key in var_keys:
            matching = [e for e in entries if e[1].label == var_label[key]]
            if not matching:
                empty = True
                break
            candidates.append(matching)
        if empty:
            continue
        for combo in itertools.product(*candidates):
            env = dict(zip(var_keys, combo))
            ok = True
            for ci, clause in enumerate(ast.clauses):
                lkey = ref_keys[2 * ci]
                rkey = ref_keys[2 * ci + 1]
                li, ldet, _ = env[lkey]
                ri, rdet, _ = env[rkey]
                if lkey != rkey and li == ri:
                    ok = False
                    break
                if not oracle_relation(clause.rel, ldet.box, rdet.box, p):
                    ok = False
                    break
            if ok:
                results.add((frame_id, tuple(env[key][2] for key in ref_keys)))
    return results
