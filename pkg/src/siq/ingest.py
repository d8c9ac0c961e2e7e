"""Turn object-detector output files into the frame/box graph schema.

Detection files are JSON Lines, one frame per line:

    {"frame": <string|int>,
     "detections": [{"label": <string>, "conf": <float>,
                     "box": [<left>, <top>, <right>, <bottom>]}, ...]}

Coordinates are pixels, x growing rightward and y growing downward; ints are
widened to floats and unknown keys are ignored.

Each detection becomes one bounding-box node wired up as:

    ConceptNode "BB#<frame>-<k>"           k counts per frame from 1
    MemberLink(bb, ConceptNode "Frame#<frame>")
    InheritanceLink(bb, ConceptNode <label>)
    MemberLink(InheritanceLink(NumberNode <value>, Node <role>), bb)
        for each role in Left, Right, Top, Bottom, Confidence

so every coordinate and the detector confidence are reachable from the box
node through one member-of-role link.  Building the graph twice adds nothing.
"""

from __future__ import annotations

import gc
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import FormatError, GeometryError, RangeError
from .store import AtomStore

COORD_ROLES = ("Left", "Right", "Top", "Bottom")
ALL_ROLES = COORD_ROLES + ("Confidence",)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned pixel rectangle with strictly positive area."""

    left: float
    top: float
    right: float
    bottom: float

    def __post_init__(self) -> None:
        if not (self.left < self.right and self.top < self.bottom):
            raise GeometryError(
                f"degenerate box [{self.left}, {self.top}, {self.right}, {self.bottom}]"
            )

    @property
    def width(self) -> float:
        return self.right - self.left

    @property
    def height(self) -> float:
        return self.bottom - self.top

    def as_list(self) -> list[float]:
        return [self.left, self.top, self.right, self.bottom]


@dataclass(frozen=True)
class Detection:
    """One detector output: frame, class label, confidence, box."""

    frame_id: str
    label: str
    confidence: float
    box: BBox

    def __post_init__(self) -> None:
        if not self.label:
            raise ValueError("detection label must be non-empty")
        if not 0.0 <= self.confidence <= 1.0:
            raise RangeError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class DetectionFile:
    """Parsed detection file: detections in order plus every frame id seen."""

    detections: tuple[Detection, ...]
    frame_ids: tuple[str, ...]


def _number(value: object, what: str, lineno: int) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"line {lineno}: {what} must be a number, got {value!r}")
    return float(value)


def _parse_line(line: str, lineno: int) -> tuple[str, list[Detection]]:
    try:
        entry = json.loads(line)
    except json.JSONDecodeError as exc:
        raise FormatError(f"line {lineno}: invalid JSON: {exc}") from None
    if not isinstance(entry, dict):
        raise FormatError(f"line {lineno}: expected a JSON object")
    frame = entry.get("frame")
    if isinstance(frame, bool) or not isinstance(frame, (str, int)):
        raise FormatError(f"line {lineno}: 'frame' must be a string or int")
    frame_id = str(frame)
    raw = entry.get("detections")
    if not isinstance(raw, list):
        raise FormatError(f"line {lineno}: 'detections' must be a list")
    dets: list[Detection] = []
    for item in raw:
        if not isinstance(item, dict):
            raise FormatError(f"line {lineno}: detection entries must be objects")
        label = item.get("label")
        if not isinstance(label, str) or not label:
            raise FormatError(f"line {lineno}: 'label' must be a non-empty string")
        conf = _number(item.get("conf"), "'conf'", lineno)
        if not 0.0 <= conf <= 1.0:
            raise RangeError(f"line {lineno}: confidence {conf} outside [0, 1]")
        box = item.get("box")
        if not isinstance(box, list) or len(box) != 4:
            raise FormatError(f"line {lineno}: 'box' must be [left, top, right, bottom]")
        left, top, right, bottom = (_number(v, "'box' entry", lineno) for v in box)
        if not (left < right and top < bottom):
            raise GeometryError(
                f"line {lineno}: box [{left}, {top}, {right}, {bottom}] has no area"
            )
        dets.append(Detection(frame_id, label, conf, BBox(left, top, right, bottom)))
    return frame_id, dets


def read_detection_file(path) -> DetectionFile:
    """Parse a JSON Lines detection file, keeping frames with no detections."""
    detections: list[Detection] = []
    frame_ids: list[str] = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            if not line.strip():
                continue
            frame_id, dets = _parse_line(line, lineno)
            frame_ids.append(frame_id)
            detections.extend(dets)
    return DetectionFile(tuple(detections), tuple(frame_ids))


def parse_detections(path) -> list[Detection]:
    """Parse a detection file into a flat Detection list, order preserved."""
    return list(read_detection_file(path).detections)


def build_graph(dets: Sequence[Detection], store: AtomStore,
                frames: Iterable[str] = ()) -> int:
    """Insert the graph schema for every detection; returns atoms added.

    ``frames`` may carry extra frame ids (typically frames whose detection
    list was empty) so their frame nodes exist even without boxes.  The
    per-frame ordinal k is assigned by order of appearance, starting at 1.
    Re-running on the same input adds 0 atoms.
    """
    before = len(store)
    add_node = store.add_node
    add_link = store.add_link
    add_number = store.add_number
    role_ids = [add_node("Node", role) for role in ALL_ROLES]
    frame_nodes: dict[str, int] = {}
    for frame_id in frames:
        frame_nodes[frame_id] = add_node("ConceptNode", f"Frame#{frame_id}")
    counters: dict[str, int] = {}
    # a bulk build allocates millions of small objects; collector passes
    # in the middle only add time, nothing here creates cycles
    collecting = gc.isenabled()
    if collecting:
        gc.disable()
    try:
        for det in dets:
            frame_id = det.frame_id
            k = counters.get(frame_id, 0) + 1
            counters[frame_id] = k
            frame = frame_nodes.get(frame_id)
            if frame is None:
                frame = add_node("ConceptNode", f"Frame#{frame_id}")
                frame_nodes[frame_id] = frame
            bb = add_node("ConceptNode", f"BB#{frame_id}-{k}")
            add_link("MemberLink", (bb, frame))
            add_link("InheritanceLink", (bb, add_node("ConceptNode", det.label)))
            box = det.box
            for role_id, value in zip(
                role_ids, (box.left, box.right, box.top, box.bottom, det.confidence)
            ):
                role_link = add_link("InheritanceLink", (add_number(value), role_id))
                add_link("MemberLink", (role_link, bb))
    finally:
        if collecting:
            gc.enable()
    return len(store) - before


def ingest_file(path, store: AtomStore, min_conf: float | None = None) -> int:
    """Parse a detection file and build its graph; returns atoms added.

    ``min_conf`` drops detections below the threshold before the build (their
    frames keep a frame node; surviving boxes are renumbered from 1).
    """
    parsed = read_detection_file(path)
    dets = parsed.detections
    if min_conf is not None:
        dets = tuple(d for d in dets if d.confidence >= min_conf)
    return build_graph(dets, store, frames=parsed.frame_ids)


def decode_graph(store: AtomStore) -> list[Detection]:
    """Walk a store and reconstruct the Detection list the schema encodes.

    Ordered by frame appearance, then by per-frame ordinal.  The inverse of
    :func:`build_graph` up to that ordering.
    """
    types = store._types
    names = store._names
    outs = store._outs
    found: list[tuple[int, int, Detection]] = []
    for link_id in store.atoms_of_type("MemberLink"):
        bb, frame = outs[link_id]
        bb_name = names[bb]
        frame_name = names[frame]
        if bb_name is None or frame_name is None:
            continue
        if not (types[bb] == "ConceptNode" and bb_name.startswith("BB#")):
            continue
        if not (types[frame] == "ConceptNode" and frame_name.startswith("Frame#")):
            continue
        label: str | None = None
        values: dict[str, float] = {}
        for inc in store._incoming[bb]:
            inc_out = outs[inc]
            if types[inc] == "InheritanceLink" and inc_out[0] == bb:
                label = names[inc_out[1]]
            elif types[inc] == "MemberLink" and inc_out[1] == bb:
                role_link = inc_out[0]
                if types[role_link] == "InheritanceLink":
                    num, role = outs[role_link]
                    if types[num] == "NumberNode" and types[role] == "Node":
                        values[names[role]] = float(names[num])
        if label is None or set(values) != set(ALL_ROLES):
            continue
        k = int(bb_name.rsplit("-", 1)[1])
        box = BBox(values["Left"], values["Top"], values["Right"], values["Bottom"])
        det = Detection(frame_name[len("Frame#"):], label, values["Confidence"], box)
        found.append((frame, k, det))
    found.sort(key=lambda item: (item[0], item[1]))
    return [det for _, _, det in found]
