"""Variable-binding subgraph pattern matching and rewrite-rule execution.

A pattern is a conjunction of template clauses held in their own
:class:`~siq.store.AtomStore` (typically separate from the data store being
queried).  ``VariableNode`` atoms in a template are variables; everything
else matches atoms of the same type, name and child structure.  ``match``
returns every total assignment of variables to data atoms under which all
structural clauses exist in the data store and all evaluatable clauses
evaluate true.  Variables may bind to nodes or links.

Evaluatable clauses are checked by computation instead of structural lookup.
``GreaterThanLink`` (strict comparison of two numeric children) is built in;
further link types can be registered by passing an ``evaluators`` mapping of
link type to a function over the clause's resolved children.  Inside a match,
a comparison over something non-numeric simply fails the clause; calling
:func:`eval_clause` directly raises :class:`~siq.errors.NotNumericError`.

The search backtracks over structural clauses, most-constrained clause first,
enumerating candidates through the store's incoming and type indices.
Evaluatable clauses run as soon as all their variables are bound.  The
grounding set is independent of clause order.

``match`` is read-only and may run concurrently with other readers;
``execute_bind`` writes to the data store and needs the writer role.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple

from .errors import IllFormedPatternError, NotNumericError
from .store import AtomId, AtomStore

VARIABLE_TYPE = "VariableNode"

# compiled template tags
_VAR = 0
_CONST = 1
_LINK = 2


class Grounding(Mapping):
    """Immutable, hashable map from variable name to data-store atom id."""

    __slots__ = ("_map", "_key")

    def __init__(self, bindings: Iterable[tuple[str, AtomId]] | Mapping):
        self._map = dict(bindings)
        self._key = tuple(sorted(self._map.items()))

    def __getitem__(self, name: str) -> AtomId:
        return self._map[name]

    def __iter__(self):
        return iter(self._map)

    def __len__(self) -> int:
        return len(self._map)

    def __hash__(self) -> int:
        return hash(self._key)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Grounding):
            return self._key == other._key
        if isinstance(other, Mapping):
            return self._map == dict(other)
        return NotImplemented

    def __repr__(self) -> str:
        inner = ", ".join(f"{name}={atom}" for name, atom in self._key)
        return f"Grounding({inner})"

    def sort_key(self) -> tuple[tuple[str, AtomId], ...]:
        return self._key


@dataclass(frozen=True)
class Pattern:
    """A conjunction of template clauses living in ``store``."""

    store: AtomStore
    clauses: tuple[AtomId, ...]
    variables: frozenset[str]

    @staticmethod
    def collect_variables(store: AtomStore, atom_id: AtomId) -> set[str]:
        """Names of every VariableNode reachable from ``atom_id``."""
        found: set[str] = set()
        stack = [atom_id]
        while stack:
            current = stack.pop()
            out = store._outs[current]
            if out is None:
                if store._types[current] == VARIABLE_TYPE:
                    found.add(store._names[current])
            else:
                stack.extend(out)
        return found

    @classmethod
    def from_clauses(cls, store: AtomStore, clause_ids: Iterable[AtomId]) -> "Pattern":
        clauses = tuple(clause_ids)
        if not clauses:
            raise IllFormedPatternError("a pattern needs at least one clause")
        variables: set[str] = set()
        for cid in clauses:
            variables |= cls.collect_variables(store, cid)
        return cls(store, clauses, frozenset(variables))

    @classmethod
    def from_root(cls, store: AtomStore, root: AtomId) -> "Pattern":
        """Clauses are the children of an AndLink root, else the root itself."""
        if store._outs[root] is not None and store._types[root] == "AndLink":
            return cls.from_clauses(store, store._outs[root])
        return cls.from_clauses(store, (root,))


@dataclass(frozen=True)
class BindRule:
    """A rewrite rule: a pattern plus a resultant template to instantiate."""

    name: str
    pattern: Pattern
    resultant: AtomId
    variables: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        resultant_vars = Pattern.collect_variables(self.pattern.store, self.resultant)
        loose = resultant_vars - self.pattern.variables
        if loose:
            raise IllFormedPatternError(
                f"resultant variables not in pattern: {', '.join(sorted(loose))}"
            )
        if not self.variables:
            object.__setattr__(self, "variables", tuple(sorted(self.pattern.variables)))

    @classmethod
    def from_bind_link(cls, store: AtomStore, bind_id: AtomId,
                       name: str | None = None) -> "BindRule":
        """Build a rule from a BindLink atom.

        Accepts ``BindLink(VariableList, pattern, resultant)`` or the
        two-child form without the explicit VariableList.
        """
        if store._types[bind_id] != "BindLink" or store._outs[bind_id] is None:
            raise IllFormedPatternError("expected a BindLink atom")
        out = store._outs[bind_id]
        declared: tuple[str, ...] = ()
        if len(out) == 3:
            varlist, body, resultant = out
            if store._types[varlist] != "VariableList":
                raise IllFormedPatternError("first child of a 3-ary BindLink must be a VariableList")
            declared = tuple(store._names[v] for v in store._outs[varlist])
        elif len(out) == 2:
            body, resultant = out
        else:
            raise IllFormedPatternError("BindLink takes 2 or 3 children")
        pattern = Pattern.from_root(store, body)
        if name is None:
            pred = _resultant_predicate_name(store, resultant)
            name = pred if pred is not None else f"bind#{bind_id}"
        return cls(name, pattern, resultant, declared)


def _resultant_predicate_name(store: AtomStore, resultant: AtomId) -> str | None:
    out = store._outs[resultant]
    if out is None or store._types[resultant] != "EvaluationLink" or not out:
        return None
    head = out[0]
    if store._outs[head] is None and store._types[head] == "PredicateNode":
        return store._names[head]
    return None


# --- evaluatable clauses -------------------------------------------------------

class EvalArg(NamedTuple):
    """One resolved child of an evaluatable clause.

    ``atom_id`` is the data-store id when the child was a bound variable or a
    constant present in the data store; template-only constants have id None.
    """

    atom_type: str
    name: str | None
    atom_id: AtomId | None


Evaluator = Callable[[list[EvalArg]], bool]


def as_number(arg: EvalArg) -> float:
    """Numeric value of a resolved child, or NotNumericError."""
    if arg.atom_type != "NumberNode" or arg.name is None:
        raise NotNumericError(f"expected a NumberNode, got {arg.atom_type}")
    return float(arg.name)


class NumericEvaluator:
    """An evaluatable clause over a fixed number of numeric children.

    Wraps a plain function of floats.  Inside :func:`match` these get a
    fast path that skips the per-child :class:`EvalArg` resolution.
    """

    __slots__ = ("fn", "arity", "link_type")

    def __init__(self, fn: Callable[..., bool], arity: int, link_type: str):
        self.fn = fn
        self.arity = arity
        self.link_type = link_type

    def __call__(self, args: list[EvalArg]) -> bool:
        if len(args) != self.arity:
            raise IllFormedPatternError(
                f"{self.link_type} takes exactly {self.arity} children")
        return self.fn(*[as_number(arg) for arg in args])


def not_identical(args: list[EvalArg]) -> bool:
    """True when the two resolved children are different atoms.

    Not registered by default; meant for distinctness constraints between
    two variables (register it under a link type such as NotIdenticalLink).
    """
    if len(args) != 2:
        raise IllFormedPatternError("NotIdenticalLink takes exactly 2 children")
    first, second = args
    if first.atom_id is not None and second.atom_id is not None:
        return first.atom_id != second.atom_id
    return first != second


DEFAULT_EVALUATORS: dict[str, Evaluator] = {
    "GreaterThanLink": NumericEvaluator(lambda a, b: a > b, 2, "GreaterThanLink"),
}


# --- template compilation ------------------------------------------------------

def _compile_template(tstore: AtomStore, tid: AtomId, dstore: AtomStore,
                      var_index: dict[str, int]):
    """Compile a template into the match IR; returns (ir, var index set)."""
    out = tstore._outs[tid]
    if out is None:
        atom_type = tstore._types[tid]
        name = tstore._names[tid]
        if atom_type == VARIABLE_TYPE:
            idx = var_index.get(name)
            if idx is None:
                idx = len(var_index)
                var_index[name] = idx
            return (_VAR, idx), {idx}
        data_id = dstore._node_index.get((atom_type, name))
        return (_CONST, -1 if data_id is None else data_id), set()
    children = []
    vset: set[int] = set()
    for child in out:
        child_ir, child_vars = _compile_template(tstore, child, dstore, var_index)
        children.append(child_ir)
        vset |= child_vars
    atom_type = tstore._types[tid]
    if not vset:
        # ground link: fold to a concrete data id (or an unmatchable -1)
        ids = []
        for child_ir in children:
            if child_ir[1] < 0:
                return (_CONST, -1), set()
            ids.append(child_ir[1])
        data_id = dstore._link_index.get((atom_type, tuple(ids)))
        return (_CONST, -1 if data_id is None else data_id), set()
    ir = (_LINK, atom_type, tuple(children), tuple(sorted(vset)), len(children))
    return ir, vset


# check record kinds (evaluatable clauses plus fully bound structural ones)
_EV_GENERIC = 0
_EV_NUMERIC = 1  # NumericEvaluator over variables and numeric constants
_EV_IDENT = 2    # not_identical over two variables
_EV_FALSE = 3    # constant false (for example a non-numeric constant child)
_EV_RESOLVE = 4  # structural clause with all variables bound


def _eval_resolvers(tstore: AtomStore, cid: AtomId, dstore: AtomStore,
                    var_index: dict[str, int]):
    """Flat child resolvers of an evaluatable clause: var index or constant.

    Children must be variables, constant nodes, or fully ground links.
    """
    resolvers: list[int | EvalArg] = []
    vset: set[int] = set()
    for child in tstore._outs[cid]:
        atom_type = tstore._types[child]
        out = tstore._outs[child]
        if out is None and atom_type == VARIABLE_TYPE:
            name = tstore._names[child]
            idx = var_index.get(name)
            if idx is None:
                idx = len(var_index)
                var_index[name] = idx
            resolvers.append(idx)
            vset.add(idx)
        elif out is None:
            data_id = dstore._node_index.get((atom_type, tstore._names[child]))
            resolvers.append(EvalArg(atom_type, tstore._names[child], data_id))
        else:
            ir, child_vars = _compile_template(tstore, child, dstore, var_index)
            if child_vars:
                raise IllFormedPatternError(
                    "evaluatable clause children must be variables or ground atoms"
                )
            data_id = ir[1] if ir[1] >= 0 else None
            resolvers.append(EvalArg(atom_type, None, data_id))
    return tuple(resolvers), tuple(sorted(vset))


def _compile_eval(tstore: AtomStore, cid: AtomId, dstore: AtomStore,
                  var_index: dict[str, int], fn: Evaluator):
    """Compile an evaluatable clause into (kind, payload, var indices)."""
    resolvers, var_idxs = _eval_resolvers(tstore, cid, dstore, var_index)
    if isinstance(fn, NumericEvaluator):
        if len(resolvers) != fn.arity:
            raise IllFormedPatternError(
                f"{fn.link_type} takes exactly {fn.arity} children")
        specs: list[int | float] = []
        for resolver in resolvers:
            if type(resolver) is int:
                specs.append(resolver)
            elif resolver.atom_type == "NumberNode" and resolver.name is not None:
                specs.append(float(resolver.name))
            else:
                return (_EV_FALSE, None, var_idxs)
        return (_EV_NUMERIC, (fn.fn, tuple(specs)), var_idxs)
    if fn is not_identical and len(resolvers) == 2 \
            and type(resolvers[0]) is int and type(resolvers[1]) is int:
        return (_EV_IDENT, (resolvers[0], resolvers[1]), var_idxs)
    return (_EV_GENERIC, (fn, tuple(resolvers)), var_idxs)


# --- search ---------------------------------------------------------------------

def _unify(ir, data_id: int, bindings: list[int], trail: list[int],
           types: list, outs: list) -> bool:
    tag = ir[0]
    if tag == _LINK:
        if types[data_id] != ir[1]:
            return False
        out = outs[data_id]
        if out is None or len(out) != ir[4]:
            return False
        for child, child_id in zip(ir[2], out):
            ctag = child[0]
            if ctag == _CONST:
                if child[1] != child_id:
                    return False
            elif ctag == _VAR:
                idx = child[1]
                bound = bindings[idx]
                if bound < 0:
                    bindings[idx] = child_id
                    trail.append(idx)
                elif bound != child_id:
                    return False
            elif not _unify(child, child_id, bindings, trail, types, outs):
                return False
        return True
    if tag == _CONST:
        return ir[1] == data_id
    idx = ir[1]
    bound = bindings[idx]
    if bound < 0:
        bindings[idx] = data_id
        trail.append(idx)
        return True
    return bound == data_id


def _resolve(ir, bindings: list[int], dstore: AtomStore):
    """Concrete data id of a fully bound template, or None."""
    tag = ir[0]
    if tag == _CONST:
        return ir[1] if ir[1] >= 0 else None
    if tag == _VAR:
        bound = bindings[ir[1]]
        return bound if bound >= 0 else None
    ids = []
    for child in ir[2]:
        child_id = _resolve(child, bindings, dstore)
        if child_id is None:
            return None
        ids.append(child_id)
    return dstore._link_index.get((ir[1], tuple(ids)))


# anchors below this size are good enough that weighing nested
# sub-templates against them is not worth the estimate's cost
_SMALL_ANCHOR = 64


def _estimate(ir, bindings: list[int], dstore: AtomStore) -> int:
    """Cheap upper-bound candidate count used to order clauses."""
    tag = ir[0]
    if tag == _CONST:
        return 1 if ir[1] >= 0 else 0
    if tag == _VAR:
        return 1 if bindings[ir[1]] >= 0 else len(dstore._types)
    for var in ir[3]:
        if bindings[var] < 0:
            break
    else:
        return 1  # fully bound: a single existence lookup
    incoming = dstore._incoming
    best = -1
    has_nested = False
    for child in ir[2]:
        ctag = child[0]
        if ctag == _CONST:
            child_id = child[1]
            if child_id < 0:
                return 0
        elif ctag == _VAR:
            child_id = bindings[child[1]]
            if child_id < 0:
                continue
        else:
            has_nested = True
            continue
        count = len(incoming[child_id])
        if count == 0:
            return 0
        if best < 0 or count < best:
            best = count
    if 0 <= best <= _SMALL_ANCHOR:
        return best
    if has_nested:
        for child in ir[2]:
            if child[0] == _LINK:
                count = _estimate(child, bindings, dstore)
                if best < 0 or count < best:
                    best = count
    if best < 0:
        return len(dstore._type_index.get(ir[1], ()))
    return best


def _candidates(ir, bindings: list[int], dstore: AtomStore):
    """Candidate data atoms for one clause under the current bindings.

    The result may over-approximate (for example the whole incoming list of
    one child); unification filters it exactly.
    """
    tag = ir[0]
    if tag == _CONST:
        return (ir[1],) if ir[1] >= 0 else ()
    if tag == _VAR:
        bound = bindings[ir[1]]
        return (bound,) if bound >= 0 else range(len(dstore._types))
    for var in ir[3]:
        if bindings[var] < 0:
            break
    else:
        resolved = _resolve(ir, bindings, dstore)
        return (resolved,) if resolved is not None else ()
    incoming = dstore._incoming
    best_id = -1
    best_est = -1
    has_nested = False
    for child in ir[2]:
        ctag = child[0]
        if ctag == _CONST:
            child_id = child[1]
            if child_id < 0:
                return ()
        elif ctag == _VAR:
            child_id = bindings[child[1]]
            if child_id < 0:
                continue
        else:
            has_nested = True
            continue
        count = len(incoming[child_id])
        if best_est < 0 or count < best_est:
            best_id, best_est = child_id, count
    if best_id >= 0 and (not has_nested or best_est <= _SMALL_ANCHOR):
        return incoming[best_id]
    if has_nested:
        nested_ir = None
        nested_est = -1
        for child in ir[2]:
            if child[0] == _LINK:
                est = _estimate(child, bindings, dstore)
                if nested_est < 0 or est < nested_est:
                    nested_ir, nested_est = child, est
        if best_id >= 0 and best_est <= nested_est:
            return incoming[best_id]
        found: list[int] = []
        types = dstore._types
        nested_type = nested_ir[1]
        for child_id in _candidates(nested_ir, bindings, dstore):
            if types[child_id] == nested_type:
                found.extend(incoming[child_id])
        return found
    if best_id >= 0:
        return incoming[best_id]
    return dstore._type_index.get(ir[1], ())


def match(pattern: Pattern, store: AtomStore,
          evaluators: Mapping[str, Evaluator] | None = None) -> set[Grounding]:
    """All groundings of ``pattern`` against ``store``.

    Sound and complete: exactly the total assignments under which every
    structural clause exists in the store and every evaluatable clause
    evaluates true.
    """
    if evaluators is None:
        registry = DEFAULT_EVALUATORS
    else:
        registry = {**DEFAULT_EVALUATORS, **evaluators}
    tstore = pattern.store
    var_index: dict[str, int] = {}
    structural = []
    evals = []
    for cid in pattern.clauses:
        atom_type = tstore._types[cid]
        if tstore._outs[cid] is not None and atom_type in registry:
            evals.append(_compile_eval(tstore, cid, store, var_index, registry[atom_type]))
        else:
            ir, vset = _compile_template(tstore, cid, store, var_index)
            structural.append((ir, tuple(sorted(vset))))

    struct_vars: set[int] = set()
    for _, vset in structural:
        struct_vars.update(vset)
    names_by_idx = [""] * len(var_index)
    for name, idx in var_index.items():
        names_by_idx[idx] = name
    loose = [names_by_idx[i] for i in range(len(var_index)) if i not in struct_vars]
    if loose:
        raise IllFormedPatternError(
            f"variables only in evaluatable clauses: {', '.join(sorted(loose))}"
        )

    # constant evaluatable clauses decide the whole match up front
    pending = []
    for record in evals:
        kind, _payload, var_idxs = record
        if kind == _EV_FALSE:
            return set()
        if var_idxs:
            pending.append(record)
        elif not _run_eval(record, (), store):
            return set()

    # ground structural clauses are plain existence facts
    expandable = []
    for ir, var_idxs in structural:
        if ir[0] == _CONST:
            if ir[1] < 0:
                return set()
        else:
            expandable.append((ir, var_idxs))

    n_clauses = len(expandable)
    bindings = [-1] * len(var_index)
    trail: list[int] = []
    results: set[tuple[int, ...]] = set()
    # The clause order is fixed the first time each depth is reached, so the
    # variables bound at a given depth are path independent.  Each plan step
    # is one clause to expand plus the checks that become decidable there:
    # clauses whose variables are all bound (a single existence lookup) and
    # evaluatable clauses.
    order: list[tuple] = []
    consumed = 0
    used = [False] * n_clauses
    covered: set[int] = set()
    types = store._types
    outs = store._outs
    names = store._names

    def extend_plan() -> None:
        nonlocal consumed
        best_i = -1
        best_est = -1
        for i in range(n_clauses):
            if used[i]:
                continue
            est = _estimate(expandable[i][0], bindings, store)
            if best_est < 0 or est < best_est:
                best_i, best_est = i, est
                if est == 0:
                    break
        used[best_i] = True
        consumed += 1
        ir, var_idxs = expandable[best_i]
        covered.update(var_idxs)
        checks: list[tuple] = []
        for i in range(n_clauses):
            if not used[i] and all(v in covered for v in expandable[i][1]):
                used[i] = True
                consumed += 1
                checks.append((_EV_RESOLVE, expandable[i][0], ()))
        for record in tuple(pending):
            if all(v in covered for v in record[2]):
                pending.remove(record)
                checks.append(record)
        order.append((ir, tuple(checks)))

    def search(depth: int) -> None:
        if depth == len(order):
            if consumed == n_clauses:
                results.add(tuple(bindings))
                return
            extend_plan()
        ir, checks = order[depth]
        for cand in _candidates(ir, bindings, store):
            mark = len(trail)
            if _unify(ir, cand, bindings, trail, types, outs):
                for record in checks:
                    kind = record[0]
                    if kind == _EV_NUMERIC:
                        raw_fn, specs = record[1]
                        values = []
                        for spec in specs:
                            if type(spec) is float:
                                values.append(spec)
                            else:
                                bound = bindings[spec]
                                if types[bound] != "NumberNode":
                                    break
                                values.append(float(names[bound]))
                        else:
                            if raw_fn(*values):
                                continue
                        break
                    if kind == _EV_IDENT:
                        left, right = record[1]
                        if bindings[left] != bindings[right]:
                            continue
                        break
                    if kind == _EV_RESOLVE:
                        if _resolve(record[1], bindings, store) is not None:
                            continue
                        break
                    if _run_eval(record, bindings, store):
                        continue
                    break
                else:
                    search(depth + 1)
            while len(trail) > mark:
                bindings[trail.pop()] = -1

    if n_clauses == 0:
        results.add(tuple(bindings))
    else:
        search(0)
    return {Grounding(zip(names_by_idx, result)) for result in results}


def _run_eval(record, bindings, store: AtomStore) -> bool:
    kind, payload, _vars = record
    if kind == _EV_NUMERIC:
        raw_fn, specs = payload
        values = []
        types = store._types
        names = store._names
        for spec in specs:
            if type(spec) is float:
                values.append(spec)
            else:
                bound = bindings[spec]
                if types[bound] != "NumberNode":
                    return False
                values.append(float(names[bound]))
        return raw_fn(*values)
    if kind == _EV_IDENT:
        left, right = payload
        return bindings[left] != bindings[right]
    fn, resolvers = payload
    try:
        return fn(_resolve_eval_args(resolvers, bindings, store))
    except NotNumericError:
        return False


def _resolve_eval_args(resolvers, bindings, store: AtomStore) -> list[EvalArg]:
    types = store._types
    names = store._names
    args = []
    for resolver in resolvers:
        if type(resolver) is int:
            bound = bindings[resolver]
            args.append(EvalArg(types[bound], names[bound], bound))
        else:
            args.append(resolver)
    return args


def eval_clause(clause: AtomId, grounding: Mapping, store: AtomStore, *,
                template_store: AtomStore | None = None,
                evaluators: Mapping[str, Evaluator] | None = None) -> bool:
    """Evaluate one evaluatable clause under a total grounding.

    Unlike :func:`match`, a child that resolves to something non-numeric in a
    comparison raises :class:`~siq.errors.NotNumericError`.
    """
    tstore = template_store if template_store is not None else store
    if evaluators is None:
        registry = DEFAULT_EVALUATORS
    else:
        registry = {**DEFAULT_EVALUATORS, **evaluators}
    atom_type = tstore._types[clause]
    if tstore._outs[clause] is None or atom_type not in registry:
        raise IllFormedPatternError(f"{atom_type} is not an evaluatable clause")
    var_index: dict[str, int] = {}
    resolvers, _vidx = _eval_resolvers(tstore, clause, store, var_index)
    bindings = [-1] * len(var_index)
    for name, idx in var_index.items():
        if name not in grounding:
            raise IllFormedPatternError(f"unbound variable {name}")
        bindings[idx] = grounding[name]
    return registry[atom_type](_resolve_eval_args(resolvers, bindings, store))


def execute_bind(rule: BindRule, store: AtomStore,
                 evaluators: Mapping[str, Evaluator] | None = None, *,
                 stats: dict | None = None) -> list[AtomId]:
    """Match the rule's pattern and insert its instantiated resultant.

    Returns the deduplicated resultant root ids in a deterministic order.
    Running twice adds no atoms.  ``stats``, when given, receives the
    grounding count and the number of atoms added.
    """
    groundings = match(rule.pattern, store, evaluators)
    before = len(store)
    tstore = rule.pattern.store
    roots: list[AtomId] = []
    seen: set[AtomId] = set()
    for grounding in sorted(groundings, key=Grounding.sort_key):
        root = _instantiate(tstore, rule.resultant, grounding, store)
        if root not in seen:
            seen.add(root)
            roots.append(root)
    if stats is not None:
        stats["groundings"] = len(groundings)
        stats["atoms_added"] = len(store) - before
    return roots


def _instantiate(tstore: AtomStore, tid: AtomId, grounding: Grounding,
                 store: AtomStore) -> AtomId:
    out = tstore._outs[tid]
    if out is None:
        atom_type = tstore._types[tid]
        if atom_type == VARIABLE_TYPE:
            return grounding[tstore._names[tid]]
        return store.add_node(atom_type, tstore._names[tid])
    children = [_instantiate(tstore, child, grounding, store) for child in out]
    return store.add_link(tstore._types[tid], children)
