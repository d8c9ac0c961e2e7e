"""Shared generators and independent oracles for the test suite."""

from __future__ import annotations

import itertools
import json
import random
from pathlib import Path

import pytest

from siq import AtomStore, BBox, Detection, Grounding, Pattern

DATA_DIR = Path(__file__).parent / "data"

CLASSES = [f"c{i}" for i in range(10)]


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


# --- random scenes ----------------------------------------------------------

def random_box(rng: random.Random, extent: int = 300, max_side: int = 120) -> BBox:
    # integer coordinates so exact ties between edges actually happen
    left = rng.randrange(0, extent)
    top = rng.randrange(0, extent)
    return BBox(left, top, left + rng.randint(1, max_side), top + rng.randint(1, max_side))


def nested_box(rng: random.Random, outer: BBox) -> BBox:
    left = rng.randint(int(outer.left), int(outer.right) - 1)
    right = rng.randint(left + 1, int(outer.right))
    top = rng.randint(int(outer.top), int(outer.bottom) - 1)
    bottom = rng.randint(top + 1, int(outer.bottom))
    return BBox(left, top, right, bottom)


def stacked_box(rng: random.Random, lower: BBox) -> BBox:
    # a box whose bottom edge lands near the lower box's top edge
    width = rng.randint(1, max(1, int(lower.width)))
    left = rng.randint(int(lower.left) - 5, int(lower.right) - 1)
    bottom = int(lower.top) + rng.randint(-10, 10)
    return BBox(left, bottom - rng.randint(1, 80), left + width, bottom)


def random_scene(rng: random.Random, n_frames: int = 200, max_dets: int = 10,
                 classes: list[str] = CLASSES) -> tuple[list[Detection], list[str]]:
    """Detections plus the frame-id list (frames may be empty)."""
    dets: list[Detection] = []
    frames: list[str] = []
    for f in range(n_frames):
        frame_id = str(f)
        frames.append(frame_id)
        frame_boxes: list[BBox] = []
        for _ in range(rng.randint(0, max_dets)):
            roll = rng.random()
            if frame_boxes and roll < 0.25:
                box = nested_box(rng, rng.choice(frame_boxes))
            elif frame_boxes and roll < 0.40:
                box = stacked_box(rng, rng.choice(frame_boxes))
            else:
                box = random_box(rng)
            frame_boxes.append(box)
            dets.append(Detection(frame_id, rng.choice(classes),
                                  round(rng.uniform(0.3, 1.0), 3), box))
    return dets, frames


def write_detections(path: Path, dets: list[Detection],
                     frames: list[str] | None = None) -> None:
    per_frame: dict[str, list[Detection]] = {}
    order: list[str] = []
    for frame_id in frames or ():
        if frame_id not in per_frame:
            per_frame[frame_id] = []
            order.append(frame_id)
    for det in dets:
        if det.frame_id not in per_frame:
            per_frame[det.frame_id] = []
            order.append(det.frame_id)
        per_frame[det.frame_id].append(det)
    with open(path, "w", encoding="utf-8") as handle:
        for frame_id in order:
            entry = {"frame": frame_id, "detections": [
                {"label": d.label, "conf": d.confidence, "box": d.box.as_list()}
                for d in per_frame[frame_id]
            ]}
            handle.write(json.dumps(entry) + "\n")


# --- random stores and patterns ------------------------------------------------

NODE_POOL = [("ConceptNode", f"n{i}") for i in range(6)] + \
            [("NumberNode", str(v)) for v in (1, 2, 3, 5, 8)] + \
            [("PredicateNode", "P"), ("Node", "Left")]
LINK_TYPES = ["MemberLink", "InheritanceLink", "ListLink", "EvaluationLink"]


def random_store(rng: random.Random, n_atoms: int,
                 with_variables: bool = False) -> AtomStore:
    store = AtomStore()
    while len(store) < n_atoms:
        if len(store) < 2 or rng.random() < 0.45:
            if with_variables and rng.random() < 0.15:
                store.add_node("VariableNode", f"$v{rng.randrange(3)}")
            else:
                store.add_node(*rng.choice(NODE_POOL))
        else:
            arity = rng.randint(1, 3)
            children = [rng.randrange(len(store)) for _ in range(arity)]
            store.add_link(rng.choice(LINK_TYPES), children)
    return store


def random_pattern(rng: random.Random, max_vars: int = 3) -> Pattern:
    """A random pattern in its own template store."""
    ts = AtomStore()
    var_names = [f"$v{i}" for i in range(rng.randint(1, max_vars))]

    def leaf() -> int:
        if rng.random() < 0.45:
            return ts.add_node("VariableNode", rng.choice(var_names))
        return ts.add_node(*rng.choice(NODE_POOL))

    def template(depth: int) -> int:
        if depth >= 2 or rng.random() < 0.55:
            return leaf()
        arity = rng.randint(1, 3)
        return ts.add_link(rng.choice(LINK_TYPES),
                           [template(depth + 1) for _ in range(arity)])

    clauses: list[int] = []
    for _ in range(rng.randint(1, 3)):
        roll = rng.random()
        if roll < 0.8:
            arity = rng.randint(1, 3)
            clauses.append(ts.add_link(rng.choice(LINK_TYPES),
                                       [template(1) for _ in range(arity)]))
        elif roll < 0.9:
            clauses.append(ts.add_node("VariableNode", rng.choice(var_names)))
        else:
            clauses.append(ts.add_node(*rng.choice(NODE_POOL)))
    if rng.random() < 0.5:
        def gt_child() -> int:
            if rng.random() < 0.5:
                return ts.add_node("VariableNode", rng.choice(var_names))
            return ts.add_node("NumberNode", str(rng.choice((1, 2, 3, 5, 8))))
        clauses.append(ts.add_link("GreaterThanLink", (gt_child(), gt_child())))
    # keep the pattern well formed: any variable that only landed in the
    # GreaterThanLink gets a bare-variable structural clause
    structural_vars: set[str] = set()
    for cid in clauses:
        if ts._types[cid] != "GreaterThanLink":
            structural_vars |= Pattern.collect_variables(ts, cid)
    for name in sorted(Pattern.collect_variables(ts, clauses[-1]) - structural_vars):
        clauses.append(ts.add_node("VariableNode", name))
    return Pattern.from_clauses(ts, tuple(dict.fromkeys(clauses)))


# --- independent matcher oracle -----------------------------------------------

def subst_id(tstore: AtomStore, tid: int, env: dict[str, int],
             dstore: AtomStore) -> int | None:
    """Data-store id of the template under the assignment, or None."""
    atom = tstore.atom(tid)
    if atom.is_node:
        if atom.atom_type == "VariableNode":
            return env[atom.name]
        return dstore.node(atom.atom_type, atom.name)
    children = []
    for child in atom.out:
        resolved = subst_id(tstore, child, env, dstore)
        if resolved is None:
            return None
        children.append(resolved)
    return dstore.link(atom.atom_type, children)


def _gt_holds(tstore: AtomStore, cid: int, env: dict[str, int],
              dstore: AtomStore) -> bool:
    values = []
    for child in tstore.atom(cid).out:
        atom = tstore.atom(child)
        if atom.is_link:
            return False
        if atom.atom_type == "VariableNode":
            bound = dstore.atom(env[atom.name])
            if bound.atom_type != "NumberNode":
                return False
            values.append(float(bound.name))
        elif atom.atom_type == "NumberNode":
            values.append(float(atom.name))
        else:
            return False
    return len(values) == 2 and values[0] > values[1]


def exhaustive_match(pattern: Pattern, dstore: AtomStore) -> set[Grounding]:
    """Brute force over every |atoms|^|vars| assignment."""
    ts = pattern.store
    names = sorted(pattern.variables)
    structural = [c for c in pattern.clauses if ts._types[c] != "GreaterThanLink"
                  or ts._outs[c] is None]
    evaluatable = [c for c in pattern.clauses if c not in structural]
    found: set[Grounding] = set()
    for assignment in itertools.product(range(len(dstore)), repeat=len(names)):
        env = dict(zip(names, assignment))
        if all(subst_id(ts, c, env, dstore) is not None for c in structural) and \
                all(_gt_holds(ts, c, env, dstore) for c in evaluatable):
            found.add(Grounding(env))
    return found
