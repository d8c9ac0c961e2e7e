"""Deduplicating, append-only hypergraph store.

Atoms are either nodes (a type plus a name) or links (a type plus an ordered,
non-empty tuple of child atom ids).  Ids are dense ints handed out in
insertion order and never reused; there is no deletion.  Inserting an atom
that already exists returns the existing id, so a store is a set keyed on
(type, name) for nodes and (type, outgoing) for links.

Numeric atoms use the type ``NumberNode`` and are keyed on the parsed 64-bit
float value: the stored name is the shortest decimal that round-trips, so
``"60"`` and ``"60.0"`` are the same atom.

Concurrency: any number of readers may share a store, or one writer may
mutate it.  Nothing here locks.
"""

from __future__ import annotations

from array import array
from sys import intern
from typing import Iterable, Iterator, NamedTuple

from .errors import UnknownAtomError

AtomId = int


class Atom(NamedTuple):
    """Immutable view of one atom.  Nodes have ``name``, links have ``out``."""

    atom_type: str
    name: str | None = None
    out: tuple[AtomId, ...] | None = None

    @property
    def is_node(self) -> bool:
        return self.out is None

    @property
    def is_link(self) -> bool:
        return self.out is not None


def canonical_number(text: str) -> str:
    """Shortest round-trip decimal form of ``text`` parsed as a 64-bit float."""
    return repr(float(text))


class AtomStore:
    """In-memory atom container with incoming and per-type indices.

    Internals are columnar (parallel lists indexed by atom id) to keep
    per-atom overhead low at the 10^6-atom scale; other modules in this
    package read the underscored columns directly on hot paths.
    """

    __slots__ = (
        "_types", "_names", "_outs", "_incoming",
        "_node_index", "_link_index", "_type_index",
    )

    def __init__(self) -> None:
        self._types: list[str] = []
        self._names: list[str | None] = []
        self._outs: list[tuple[AtomId, ...] | None] = []
        # int arrays, not lists: they hold no object references, so millions
        # of them do not slow the cycle collector's full passes
        self._incoming: list[array] = []
        self._node_index: dict[tuple[str, str], AtomId] = {}
        self._link_index: dict[tuple[str, tuple[AtomId, ...]], AtomId] = {}
        self._type_index: dict[str, list[AtomId]] = {}

    # --- write ---------------------------------------------------------

    def add_node(self, atom_type: str, name: str) -> AtomId:
        """Insert a node, or return the id of the existing one."""
        if atom_type == "NumberNode":
            name = repr(float(name))
        key = (atom_type, name)
        idx = self._node_index.get(key)
        if idx is not None:
            return idx
        if not atom_type:
            raise ValueError("atom_type must be non-empty")
        atom_type = intern(atom_type)
        idx = len(self._types)
        self._types.append(atom_type)
        self._names.append(name)
        self._outs.append(None)
        self._incoming.append(array("i"))
        self._node_index[(atom_type, name)] = idx
        bucket = self._type_index.get(atom_type)
        if bucket is None:
            self._type_index[atom_type] = [idx]
        else:
            bucket.append(idx)
        return idx

    def add_number(self, value: float) -> AtomId:
        """Insert a NumberNode for ``value`` (skips the string re-parse)."""
        return self.add_node("NumberNode", repr(float(value)))

    def add_link(self, atom_type: str, outgoing: Iterable[AtomId]) -> AtomId:
        """Insert a link, or return the id of the existing one.

        Child order is significant; every child must already exist.
        """
        out = tuple(outgoing)
        key = (atom_type, out)
        idx = self._link_index.get(key)
        if idx is not None:
            return idx
        if not atom_type:
            raise ValueError("atom_type must be non-empty")
        if not out:
            raise ValueError(f"{atom_type} link must have at least one child")
        n = len(self._types)
        for child in out:
            if not 0 <= child < n:
                raise UnknownAtomError(f"no atom with id {child}")
        atom_type = intern(atom_type)
        idx = n
        self._types.append(atom_type)
        self._names.append(None)
        self._outs.append(out)
        self._incoming.append(array("i"))
        self._link_index[(atom_type, out)] = idx
        bucket = self._type_index.get(atom_type)
        if bucket is None:
            self._type_index[atom_type] = [idx]
        else:
            bucket.append(idx)
        incoming = self._incoming
        if len(out) == 2:
            first, second = out
            incoming[first].append(idx)
            if second != first:
                incoming[second].append(idx)
        else:
            for pos, child in enumerate(out):
                # a repeated child gets one incoming entry, not one per position
                if out.index(child) == pos:
                    incoming[child].append(idx)
        return idx

    # --- read ----------------------------------------------------------

    def __len__(self) -> int:
        return len(self._types)

    def __iter__(self) -> Iterator[AtomId]:
        return iter(range(len(self._types)))

    def __contains__(self, atom_id: object) -> bool:
        return isinstance(atom_id, int) and 0 <= atom_id < len(self._types)

    def atom(self, atom_id: AtomId) -> Atom:
        self._check(atom_id)
        return Atom(self._types[atom_id], self._names[atom_id], self._outs[atom_id])

    def node(self, atom_type: str, name: str) -> AtomId | None:
        """Id of the node with this type and name, or None."""
        if atom_type == "NumberNode":
            name = repr(float(name))
        return self._node_index.get((atom_type, name))

    def link(self, atom_type: str, outgoing: Iterable[AtomId]) -> AtomId | None:
        """Id of the link with this type and exact child order, or None."""
        return self._link_index.get((atom_type, tuple(outgoing)))

    def get_incoming(self, atom_id: AtomId) -> set[AtomId]:
        """All links that have ``atom_id`` among their children."""
        self._check(atom_id)
        return set(self._incoming[atom_id])

    def find_links(self, atom_type: str, position: int, child: AtomId) -> set[AtomId]:
        """All links of ``atom_type`` with ``child`` at ``position``."""
        self._check(child)
        types = self._types
        outs = self._outs
        found = set()
        for link_id in self._incoming[child]:
            if types[link_id] == atom_type:
                out = outs[link_id]
                if position < len(out) and out[position] == child:
                    found.add(link_id)
        return found

    def atoms_of_type(self, atom_type: str) -> list[AtomId]:
        """Ids of all atoms of the given type, in insertion order."""
        return list(self._type_index.get(atom_type, ()))

    def roots(self) -> list[AtomId]:
        """Atoms with no incoming links, in insertion order."""
        incoming = self._incoming
        return [i for i in range(len(incoming)) if not incoming[i]]

    # --- internal -------------------------------------------------------

    def _check(self, atom_id: AtomId) -> None:
        if not 0 <= atom_id < len(self._types):
            raise UnknownAtomError(f"no atom with id {atom_id}")
