"""Forward and backward chaining over rewrite rules.

Forward chaining applies every rule repeatedly until a full pass adds no
atoms.  Backward chaining starts from a goal pattern, finds the clauses
headed by predicates some rule derives, executes exactly the rules in that
dependency closure (recursing through rules whose own patterns mention
derived predicates, with cycle detection by predicate name), and then matches
the goal.  The result equals forward-chaining everything first and matching.

Before executing a rule, the backward chainer narrows it with the goal's own
class and distinctness constraints on the variables the rule's resultant
feeds.  That is purely an optimisation: every fact a goal grounding needs
gets derived either way, but the rule no longer enumerates box pairs the
goal would discard.  Rules whose resultant feeds another rule run unnarrowed.

Derived facts stay in the store, so repeating a query is cheap;
:class:`ChainSession` additionally remembers which (rule, narrowing) pairs
already ran and skips them until the store is mutated from outside.

Chaining writes to the store; do not run read-only matches concurrently
with it.
"""

from __future__ import annotations

from typing import Mapping, NamedTuple, Sequence

from .errors import CyclicRulesError, FixpointLimitError
from .matcher import BindRule, Grounding, Pattern, execute_bind, match
from .store import AtomId, AtomStore


class LogEntry(NamedTuple):
    """One rule execution: name, groundings found, atoms added."""

    rule: str
    groundings: int
    atoms_added: int


def _clause_predicate(store: AtomStore, clause: AtomId) -> str | None:
    """Predicate name of an EvaluationLink(PredicateNode ..., ...) clause."""
    if store._outs[clause] is None or store._types[clause] != "EvaluationLink":
        return None
    out = store._outs[clause]
    if not out:
        return None
    head = out[0]
    if store._outs[head] is None and store._types[head] == "PredicateNode":
        return store._names[head]
    return None


def forward_chain(rules: Sequence[BindRule], store: AtomStore, *,
                  evaluators: Mapping | None = None,
                  log: list[LogEntry] | None = None,
                  max_passes: int = 100) -> int:
    """Apply all rules to fixpoint; returns the total atoms added.

    Raises FixpointLimitError when ``max_passes`` full passes still add
    atoms, which signals a pathological rule set.
    """
    total = 0
    for _ in range(max_passes):
        added = 0
        for rule in rules:
            stats: dict = {}
            execute_bind(rule, store, evaluators, stats=stats)
            if log is not None:
                log.append(LogEntry(rule.name, stats["groundings"], stats["atoms_added"]))
            added += stats["atoms_added"]
        total += added
        if added == 0:
            return total
    raise FixpointLimitError(f"no fixpoint after {max_passes} passes")


class ChainSession:
    """Backward chaining against one store with cross-query memoisation."""

    def __init__(self, store: AtomStore, rules: Sequence[BindRule],
                 evaluators: Mapping | None = None):
        self.store = store
        self.rules = list(rules)
        self.evaluators = evaluators
        self._index: dict[str, list[BindRule]] = {}
        for rule in self.rules:
            pred = _clause_predicate(rule.pattern.store, rule.resultant)
            if pred is not None:
                self._index.setdefault(pred, []).append(rule)
        self._deps: dict[str, set[str]] = {}
        for pred, pred_rules in self._index.items():
            deps: set[str] = set()
            for rule in pred_rules:
                for cid in rule.pattern.clauses:
                    dep = _clause_predicate(rule.pattern.store, cid)
                    if dep is not None and dep in self._index:
                        deps.add(dep)
            self._deps[pred] = deps
        self._memo: set[tuple[str, object]] = set()
        self._seen_len = len(store)
        self.last_log: list[LogEntry] = []

    def query(self, goal: Pattern, *, log: list[LogEntry] | None = None) -> set[Grounding]:
        """Derive what the goal needs, then match it."""
        store = self.store
        if len(store) != self._seen_len:
            # the store was mutated outside this session; re-derive
            self._memo.clear()
        if log is None:
            log = []
        self.last_log = log

        direct: dict[str, list[AtomId]] = {}
        for cid in goal.clauses:
            pred = _clause_predicate(goal.store, cid)
            if pred is not None and pred in self._index:
                direct.setdefault(pred, []).append(cid)
        order, full = self._closure(direct)
        for pred in order:
            for rule in self._index[pred]:
                self._run_rule(rule, pred, goal, direct, full, log)
        self._seen_len = len(store)
        return match(goal, store, self.evaluators)

    # --- internals ----------------------------------------------------

    def _closure(self, direct: dict[str, list[AtomId]]) -> tuple[list[str], set[str]]:
        """Dependency-first execution order plus the predicates that must
        run unnarrowed (those another rule's pattern consumes)."""
        order: list[str] = []
        state: dict[str, int] = {}
        full: set[str] = set()

        def visit(pred: str) -> None:
            mark = state.get(pred)
            if mark == 1:
                raise CyclicRulesError(f"cyclic rules through predicate {pred!r}")
            if mark == 2:
                return
            state[pred] = 1
            for dep in sorted(self._deps[pred]):
                full.add(dep)
                visit(dep)
            state[pred] = 2
            order.append(pred)

        for pred in sorted(direct):
            visit(pred)
        return order, full

    def _run_rule(self, rule: BindRule, pred: str, goal: Pattern,
                  direct: dict[str, list[AtomId]], full: set[str],
                  log: list[LogEntry]) -> None:
        runs: list[tuple[object, BindRule]] = []
        if pred in full or pred not in direct:
            runs.append((None, rule))
        else:
            for cid in direct[pred]:
                narrowed = _narrow(rule, goal, cid)
                if narrowed is None:
                    runs = [(None, rule)]
                    break
                runs.append(narrowed)
        seen_keys: set[object] = set()
        for key, to_run in runs:
            if key in seen_keys:
                continue
            seen_keys.add(key)
            if (rule.name, None) in self._memo:
                continue
            if key is not None and (rule.name, key) in self._memo:
                continue
            stats: dict = {}
            execute_bind(to_run, self.store, self.evaluators, stats=stats)
            self._memo.add((rule.name, key))
            log.append(LogEntry(rule.name, stats["groundings"], stats["atoms_added"]))


def backward_chain(goal: Pattern, rules: Sequence[BindRule], store: AtomStore, *,
                   evaluators: Mapping | None = None,
                   log: list[LogEntry] | None = None) -> set[Grounding]:
    """Goal-directed chaining: run only the rules the goal needs, then match."""
    return ChainSession(store, rules, evaluators).query(goal, log=log)


# --- goal narrowing -----------------------------------------------------------

_NARROWABLE_TYPES = ("InheritanceLink", "NotIdenticalLink")


def _narrow(rule: BindRule, goal: Pattern,
            goal_clause: AtomId) -> tuple[object, BindRule] | None:
    """Copy the rule with the goal's constraints on its resultant variables.

    Requires the common shape on both sides: the rule resultant and the goal
    clause are ``EvaluationLink(PredicateNode, ListLink(...))`` with plain,
    distinct variables as the rule's list entries.  Returns None when the
    shapes do not line up or the goal adds no constraint, in which case the
    caller runs the rule as is.
    """
    ts = rule.pattern.store
    gs = goal.store
    res_out = ts._outs[rule.resultant]
    if len(res_out) != 2 or ts._types[res_out[1]] != "ListLink":
        return None
    rule_args = ts._outs[res_out[1]]
    rule_names = []
    for arg in rule_args:
        if ts._outs[arg] is not None or ts._types[arg] != "VariableNode":
            return None
        rule_names.append(ts._names[arg])
    if len(set(rule_names)) != len(rule_names):
        return None
    goal_out = gs._outs[goal_clause]
    if len(goal_out) != 2 or gs._types[goal_out[1]] != "ListLink":
        return None
    goal_args = gs._outs[goal_out[1]]
    if len(goal_args) != len(rule_names):
        return None
    var_map: dict[str, str] = {}
    for goal_arg, rule_name in zip(goal_args, rule_names):
        if gs._outs[goal_arg] is not None or gs._types[goal_arg] != "VariableNode":
            return None
        goal_name = gs._names[goal_arg]
        if var_map.get(goal_name, rule_name) != rule_name:
            return None
        var_map[goal_name] = rule_name

    extra: list[AtomId] = []
    for cid in goal.clauses:
        if cid == goal_clause or gs._outs[cid] is None:
            continue
        if gs._types[cid] not in _NARROWABLE_TYPES:
            continue
        cvars = Pattern.collect_variables(gs, cid)
        if not cvars or not cvars <= var_map.keys():
            continue
        extra.append(_translate(gs, cid, ts, var_map))
    if not extra:
        return None
    clauses = tuple(dict.fromkeys(rule.pattern.clauses + tuple(extra)))
    narrowed = BindRule(rule.name, Pattern.from_clauses(ts, clauses),
                        rule.resultant, rule.variables)
    return tuple(sorted(set(extra))), narrowed


def _translate(source: AtomStore, atom_id: AtomId, target: AtomStore,
               var_map: dict[str, str]) -> AtomId:
    out = source._outs[atom_id]
    if out is None:
        atom_type = source._types[atom_id]
        name = source._names[atom_id]
        if atom_type == "VariableNode":
            return target.add_node(atom_type, var_map[name])
        return target.add_node(atom_type, name)
    children = [_translate(source, child, target, var_map) for child in out]
    return target.add_link(source._types[atom_id], children)
