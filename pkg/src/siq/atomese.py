"""Parser and printer for the indentation-based Atomese text form.

One atom per line.  Grammar:

    doc     := { atom } EOF
    atom    := INDENT(level) TYPE [ SP STRING ] NEWLINE { atom at level+1 }
    TYPE    := [A-Za-z][A-Za-z0-9]*
    STRING  := '"' ( escaped-char | any-char-except-quote-backslash )* '"'
    INDENT  := 2*level spaces

Tabs in indentation are a hard error; blank lines and ``;``-to-end-of-line
comments are ignored.  A line with a name token is a node, a line without one
is a link; types equal to ``Node`` or ending in ``Node`` must carry a name,
all other types must have children.  The conventional file extension is
``.ats``.

``parse`` returns a list of trees, ``dumps`` renders a store or trees back to
text, and ``load`` inserts trees bottom-up into an :class:`~siq.store.AtomStore`.
``load(parse(dumps(store)))`` reproduces the store's content exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

from .errors import AtomeseError, EmptyLinkError, IndentError, NodeNameError
from .store import AtomId, AtomStore

_TYPE_RE = re.compile(r"[A-Za-z][A-Za-z0-9]*")


@dataclass(frozen=True)
class AtomTree:
    """One parsed atom: a node (name, no children) or a link (children)."""

    atom_type: str
    name: str | None = None
    children: tuple["AtomTree", ...] = ()


def _is_node_type(atom_type: str) -> bool:
    return atom_type == "Node" or atom_type.endswith("Node")


# --- parsing -----------------------------------------------------------------

def _scan_string(line: str, start: int, lineno: int) -> tuple[str, int]:
    """Scan a double-quoted string starting at ``line[start] == '"'``."""
    chars: list[str] = []
    i = start + 1
    n = len(line)
    while i < n:
        ch = line[i]
        if ch == "\\":
            if i + 1 >= n:
                raise AtomeseError(f"line {lineno}: dangling escape in string")
            chars.append(line[i + 1])
            i += 2
        elif ch == '"':
            return "".join(chars), i + 1
        else:
            chars.append(ch)
            i += 1
    raise AtomeseError(f"line {lineno}: unterminated string")


def _scan_line(line: str, lineno: int) -> tuple[int, str, str | None] | None:
    """Return (level, type, name) for a content line, None for blank/comment."""
    stripped = line.strip()
    if not stripped or stripped.startswith(";"):
        return None
    indent = 0
    n = len(line)
    while indent < n and line[indent] == " ":
        indent += 1
    if indent < n and line[indent] == "\t":
        raise IndentError(f"line {lineno}: tab in indentation")
    if indent % 2:
        raise IndentError(f"line {lineno}: indentation must be a multiple of 2 spaces")
    match = _TYPE_RE.match(line, indent)
    if match is None:
        raise AtomeseError(f"line {lineno}: expected an atom type")
    atom_type = match.group()
    i = match.end()
    name: str | None = None
    if i + 1 < n and line[i] == " " and line[i + 1] == '"':
        name, i = _scan_string(line, i + 1, lineno)
    while i < n and line[i] == " ":
        i += 1
    if i < n and line[i] not in (";", "\r"):
        raise AtomeseError(f"line {lineno}: unexpected text after atom: {line[i:]!r}")
    return indent // 2, atom_type, name


def _finish(atom_type: str, name: str | None, children: list[AtomTree],
            lineno: int) -> AtomTree:
    node_typed = _is_node_type(atom_type)
    if name is not None:
        if not node_typed:
            raise NodeNameError(f"line {lineno}: link type {atom_type} cannot carry a name")
        if children:
            raise AtomeseError(f"line {lineno}: node {atom_type} cannot have children")
        return AtomTree(atom_type, name)
    if node_typed:
        raise NodeNameError(f"line {lineno}: node type {atom_type} requires a name")
    if not children:
        raise EmptyLinkError(f"line {lineno}: link {atom_type} has no children")
    return AtomTree(atom_type, children=tuple(children))


def parse(text: str) -> list[AtomTree]:
    """Parse Atomese text into a list of root trees."""
    roots: list[AtomTree] = []
    # each open frame: [atom_type, name, children, lineno]
    stack: list[list] = []

    def close_one() -> None:
        atom_type, name, children, lineno = stack.pop()
        tree = _finish(atom_type, name, children, lineno)
        if stack:
            stack[-1][2].append(tree)
        else:
            roots.append(tree)

    for lineno, line in enumerate(text.splitlines(), 1):
        scanned = _scan_line(line, lineno)
        if scanned is None:
            continue
        level, atom_type, name = scanned
        if level > len(stack):
            raise IndentError(f"line {lineno}: indentation jumps past its parent")
        while len(stack) > level:
            close_one()
        stack.append([atom_type, name, [], lineno])
    while stack:
        close_one()
    return roots


# --- printing ----------------------------------------------------------------

def _escape(name: str) -> str:
    if "\n" in name or "\r" in name:
        raise ValueError(f"atom name cannot be rendered as Atomese: {name!r}")
    return name.replace("\\", "\\\\").replace('"', '\\"')


def _tree_lines(tree: AtomTree, level: int, out: list[str]) -> None:
    pad = "  " * level
    if tree.name is not None:
        out.append(f'{pad}{tree.atom_type} "{_escape(tree.name)}"\n')
        return
    out.append(f"{pad}{tree.atom_type}\n")
    for child in tree.children:
        _tree_lines(child, level + 1, out)


def _store_lines(store: AtomStore, atom_id: AtomId, level: int, out: list[str]) -> None:
    pad = "  " * level
    name = store._names[atom_id]
    if name is not None:
        out.append(f'{pad}{store._types[atom_id]} "{_escape(name)}"\n')
        return
    out.append(f"{pad}{store._types[atom_id]}\n")
    for child in store._outs[atom_id]:
        _store_lines(store, child, level + 1, out)


def dumps(obj: AtomStore | AtomTree | Iterable[AtomTree]) -> str:
    """Render a store, one tree, or a list of trees as Atomese text.

    A store is rendered as its root atoms (those without incoming links) in
    insertion order, so loading the text into a fresh store reproduces every
    atom.
    """
    lines: list[str] = []
    if isinstance(obj, AtomStore):
        for root in obj.roots():
            _store_lines(obj, root, 0, lines)
    elif isinstance(obj, AtomTree):
        _tree_lines(obj, 0, lines)
    else:
        for tree in obj:
            _tree_lines(tree, 0, lines)
    return "".join(lines)


# --- loading -----------------------------------------------------------------

def _load_tree(tree: AtomTree, store: AtomStore) -> AtomId:
    if tree.name is not None:
        return store.add_node(tree.atom_type, tree.name)
    return store.add_link(tree.atom_type, [_load_tree(c, store) for c in tree.children])


def load(trees: Iterable[AtomTree], store: AtomStore) -> list[AtomId]:
    """Insert trees bottom-up into ``store``; returns the root ids."""
    return [_load_tree(tree, store) for tree in trees]


def loads(text: str, store: AtomStore) -> list[AtomId]:
    """Parse text and load it into ``store``; returns the root ids."""
    return load(parse(text), store)
