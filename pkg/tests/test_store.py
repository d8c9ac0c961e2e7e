import random
import struct

import pytest

from siq import AtomStore, UnknownAtomError
from conftest import random_store


@pytest.fixture
def store():
    return AtomStore()


def test_add_node_dedup_idempotent(store):
    a = store.add_node("ConceptNode", "Frame#1")
    b = store.add_node("ConceptNode", "Frame#1")
    assert a == b
    assert len(store) == 1


def test_distinct_names_distinct_ids(store):
    a = store.add_node("ConceptNode", "BB#1-1")
    b = store.add_node("ConceptNode", "BB#1-2")
    assert a != b


def test_node_name_can_contain_spaces(store):
    a = store.add_node("ConceptNode", "traffic light")
    assert store.atom(a).name == "traffic light"


def test_empty_type_rejected(store):
    with pytest.raises(ValueError):
        store.add_node("", "x")


def test_number_node_canonical_name(store):
    a = store.add_node("NumberNode", "60")
    assert float(store.atom(a).name) == 60.0
    assert store.atom(a).name == "60.0"


def test_number_node_dedup_by_value(store):
    assert store.add_node("NumberNode", "60") == store.add_node("NumberNode", "60.0")
    assert store.add_node("NumberNode", "6e1") == store.add_node("NumberNode", "60")
    assert store.node("NumberNode", "60.000") == store.node("NumberNode", "60")


def test_number_node_negative_zero_is_distinct(store):
    # 0.0 and -0.0 differ bitwise, so they must not collide
    assert store.add_node("NumberNode", "0") != store.add_node("NumberNode", "-0")


def test_number_node_bit_equality_property():
    rng = random.Random(7)
    store = AtomStore()
    for _ in range(300):
        value = rng.uniform(-1e6, 1e6) * 10 ** rng.randint(-8, 8)
        a = store.add_node("NumberNode", repr(value))
        b = store.add_node("NumberNode", f"{value:.17g}")
        assert a == b  # same bits, same atom
        other = value + abs(value) * 1e-8 + 1e-30
        if struct.pack("<d", other) != struct.pack("<d", value):
            assert store.add_node("NumberNode", repr(other)) != a


def test_add_link_dedup(store):
    bb = store.add_node("ConceptNode", "BB#1-1")
    frame = store.add_node("ConceptNode", "Frame#1")
    a = store.add_link("MemberLink", [bb, frame])
    b = store.add_link("MemberLink", [bb, frame])
    assert a == b


def test_link_order_is_significant(store):
    bb = store.add_node("ConceptNode", "BB#1-1")
    frame = store.add_node("ConceptNode", "Frame#1")
    assert store.add_link("MemberLink", [bb, frame]) != \
        store.add_link("MemberLink", [frame, bb])


def test_link_unknown_child(store):
    with pytest.raises(UnknownAtomError):
        store.add_link("MemberLink", [0, 1])


def test_link_needs_children(store):
    with pytest.raises(ValueError):
        store.add_link("ListLink", [])


def test_incoming_updated(store):
    bb1 = store.add_node("ConceptNode", "BB#1-1")
    bb2 = store.add_node("ConceptNode", "BB#1-2")
    frame = store.add_node("ConceptNode", "Frame#1")
    link = store.add_link("ListLink", [bb1, bb2, frame])
    assert link in store.get_incoming(bb1)
    assert link in store.get_incoming(bb2)
    assert link in store.get_incoming(frame)


def test_self_referencing_link(store):
    x = store.add_node("ConceptNode", "x")
    link = store.add_link("MemberLink", [x, x])
    assert store.get_incoming(x) == {link}
    assert store.find_links("MemberLink", 0, x) == {link}
    assert store.find_links("MemberLink", 1, x) == {link}


def test_find_links_examples(store):
    frame = store.add_node("ConceptNode", "Frame#1")
    bbs = [store.add_node("ConceptNode", f"BB#1-{k}") for k in (1, 2, 3)]
    links = {store.add_link("MemberLink", [bb, frame]) for bb in bbs}
    assert store.find_links("MemberLink", 1, frame) == links
    unrelated = store.add_node("ConceptNode", "loose")
    assert store.find_links("MemberLink", 0, unrelated) == set()
    assert store.find_links("MemberLink", 5, frame) == set()


def _scan_incoming(store, atom_id):
    return {i for i in store if store.atom(i).is_link and atom_id in store.atom(i).out}


def _scan_links(store, atom_type, position, child):
    found = set()
    for i in store:
        atom = store.atom(i)
        if atom.is_link and atom.atom_type == atom_type \
                and position < len(atom.out) and atom.out[position] == child:
            found.add(i)
    return found


def test_indices_match_full_scan_on_random_store():
    rng = random.Random(42)
    store = random_store(rng, 1200)
    assert len(store) >= 1000
    # every link is reachable through both indices from each child
    for link_id in store:
        atom = store.atom(link_id)
        if not atom.is_link:
            continue
        for pos, child in enumerate(atom.out):
            assert link_id in store.get_incoming(child)
            assert link_id in store.find_links(atom.atom_type, pos, child)
    # and the indices return nothing beyond the full scan
    for atom_id in rng.sample(range(len(store)), 100):
        assert store.get_incoming(atom_id) == _scan_incoming(store, atom_id)
        atom = store.atom(atom_id)
        for atom_type in ("MemberLink", "ListLink"):
            for pos in range(3):
                assert store.find_links(atom_type, pos, atom_id) == \
                    _scan_links(store, atom_type, pos, atom_id)


def test_replay_yields_identical_content():
    rng = random.Random(9)
    first = random_store(rng, 300)
    replay = AtomStore()
    for i in first:
        atom = first.atom(i)
        if atom.is_node:
            replay.add_node(atom.atom_type, atom.name)
        else:
            replay.add_link(atom.atom_type, atom.out)
    assert len(replay) == len(first)
    for i in first:
        assert replay.atom(i) == first.atom(i)


def test_store_is_monotone():
    rng = random.Random(11)
    store = AtomStore()
    last = 0
    for _ in range(200):
        if len(store) < 2 or rng.random() < 0.5:
            store.add_node("ConceptNode", f"n{rng.randrange(40)}")
        else:
            store.add_link("ListLink", [rng.randrange(len(store))])
        assert len(store) >= last
        last = len(store)


def test_atom_lookup_errors(store):
    with pytest.raises(UnknownAtomError):
        store.atom(0)
    store.add_node("ConceptNode", "x")
    with pytest.raises(UnknownAtomError):
        store.get_incoming(5)
    with pytest.raises(UnknownAtomError):
        store.find_links("MemberLink", 0, 5)
