"""Grounding counts for conjunctions of parametrized literals.

count_groundings answers: over how many assignments of the free variables
does every literal hold, given the closed-world convention and an optional
equality constraint. The engine decomposes the conjunction into connected
components, enumerates candidates for positive literals through prefix
indices, and resolves negative relationship literals (value F, implicit
extension) by complement counts over the same variable universe.

family_config_counts computes a whole CPT worth of counts in one pass:
for small grounding spaces it walks the dense value arrays chunkwise
(group-by on configuration codes); otherwise it falls back to one
count_groundings call per configuration.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import QueryError
from .schema import RELATIONSHIP, Conjunction, Grounding, PRV, Var, check_prv

_PASS_LIMIT = 1 << 26
_CHUNK = 1 << 21


@dataclass
class _Lit:
    functor: str
    terms: tuple  # per position: int constant id, or Var
    value_id: int
    enumerable: bool

    @property
    def vars(self) -> tuple[Var, ...]:
        seen, out = set(), []
        for t in self.terms:
            if isinstance(t, Var) and t not in seen:
                seen.add(t)
                out.append(t)
        return tuple(out)


def _compile(view, conj: Conjunction):
    """Validate and lower literals to id form; returns (lits, var_pops, sat).

    sat is False when constraint substitution produced two contradictory
    ground literals (count is 0 regardless of data).
    """
    schema = view.schema
    var_pops: dict[Var, str] = {}
    for prv, _ in conj.literals:
        var_pops = check_prv(schema, prv, var_pops)
    binding: dict[Var, int] = {}
    if conj.constraint is not None:
        for v, c in conj.constraint.bindings.items():
            binding[v] = schema.const_id(var_pops[v], c)
    lits: list[_Lit] = []
    seen: dict[tuple, int] = {}
    sat = True
    for prv, value in conj.literals:
        decl = schema.functor(prv.functor)
        vid = decl.value_id(value)
        terms = []
        for pos, arg in enumerate(prv.args):
            if isinstance(arg, Var):
                if arg in binding:
                    terms.append(binding[arg])
                else:
                    terms.append(arg)
            else:
                terms.append(schema.const_id(decl.arg_populations[pos], arg))
        key = (prv.functor, tuple(terms))
        if key in seen:
            if seen[key] != vid:
                sat = False
            continue
        seen[key] = vid
        lits.append(
            _Lit(
                functor=prv.functor,
                terms=tuple(terms),
                value_id=vid,
                enumerable=view.enumerable(prv.functor, vid),
            )
        )
    free_pops = {v: p for v, p in var_pops.items() if v not in binding}
    return lits, free_pops, sat


def _components(lits: list[_Lit]):
    """Group literals into connected components by shared variables."""
    groups: list[list[_Lit]] = []
    varset: list[set[Var]] = []
    for lit in lits:
        vs = set(lit.vars)
        hits = [i for i, gvs in enumerate(varset) if gvs & vs]
        if not hits:
            groups.append([lit])
            varset.append(vs)
        else:
            first = hits[0]
            groups[first].append(lit)
            varset[first] |= vs
            for j in reversed(hits[1:]):
                groups[first].extend(groups.pop(j))
                varset[first] |= varset.pop(j)
    return list(zip(groups, varset))


def _pattern(lit: _Lit, binding: dict[Var, int]):
    pat = []
    for t in lit.terms:
        if isinstance(t, Var):
            pat.append(binding.get(t))
        else:
            pat.append(t)
    return tuple(pat)


def _bound(lit: _Lit, binding: dict[Var, int]) -> bool:
    return all(not isinstance(t, Var) or t in binding for t in lit.terms)


def _packed(view, lit: _Lit, binding: dict[Var, int]) -> int:
    ids = tuple(binding[t] if isinstance(t, Var) else t for t in lit.terms)
    return view.geom.pack(lit.functor, ids)


def _extend(lit: _Lit, ids: tuple, binding: dict[Var, int]):
    """Bind lit's variables to a candidate id tuple; None on inconsistency."""
    new = dict(binding)
    for t, i in zip(lit.terms, ids):
        if isinstance(t, Var):
            prev = new.get(t)
            if prev is None:
                new[t] = i
            elif prev != i:
                return None
        elif t != i:
            return None
    return new


def _count(view, lits, universe: dict[Var, str], binding: dict[Var, int]) -> int:
    pending = []
    for lit in lits:
        if _bound(lit, binding):
            if view.value_id(lit.functor, _packed(view, lit, binding)) != lit.value_id:
                return 0
        else:
            pending.append(lit)
    if not pending:
        total = 1
        for v, pop in universe.items():
            if v not in binding:
                total *= view.schema.population_size(pop)
        return total
    enumerable = [l for l in pending if l.enumerable]
    if enumerable:
        def rank(l: _Lit):
            bound_positions = sum(
                1 for t in l.terms if not isinstance(t, Var) or t in binding
            )
            return (-bound_positions, len(view.value_atoms(l.functor, l.value_id)))

        best = min(enumerable, key=rank)
        rest = [l for l in pending if l is not best]
        total = 0
        for ids in view.match(best.functor, best.value_id, _pattern(best, binding)):
            nb = _extend(best, ids, binding)
            if nb is not None:
                total += _count(view, rest, universe, nb)
        return total
    # Only negative relationship literals with free variables remain; count
    # them by complement over the same universe.
    neg = pending[0]
    rest = pending[1:]
    decl = view.schema.functors[neg.functor]
    t_id = decl.value_id("T")
    flipped = _Lit(neg.functor, neg.terms, t_id, view.enumerable(neg.functor, t_id))
    return _count(view, rest, universe, binding) - _count(
        view, rest + [flipped], universe, binding
    )


def count_groundings(view, conj: Conjunction) -> int:
    """Number of free-variable assignments under which every literal holds."""
    lits, free_pops, sat = _compile(view, conj)
    if not sat:
        return 0
    total = 1
    covered: set[Var] = set()
    for group, gvars in _components(lits):
        comp_universe = {v: free_pops[v] for v in gvars if v in free_pops}
        covered.update(comp_universe)
        c = _count(view, group, comp_universe, {})
        if c == 0:
            return 0
        total *= c
    for v, pop in free_pops.items():
        if v not in covered:
            total *= view.schema.population_size(pop)
    return total


def _enumerate(view, lits, binding: dict[Var, int], var_pops: dict[Var, str]):
    pending = []
    for lit in lits:
        if _bound(lit, binding):
            if view.value_id(lit.functor, _packed(view, lit, binding)) != lit.value_id:
                return
        else:
            pending.append(lit)
    if not pending:
        yield binding
        return
    enumerable = [l for l in pending if l.enumerable]
    if enumerable:
        best = enumerable[0]
        rest = [l for l in pending if l is not best]
        for ids in view.match(best.functor, best.value_id, _pattern(best, binding)):
            nb = _extend(best, ids, binding)
            if nb is not None:
                yield from _enumerate(view, rest, nb, var_pops)
        return
    # Negative relationship literal with free variables: walk its population
    # product, after which the literal is ground and checked on recursion.
    neg = pending[0]
    unbound = [v for v in neg.vars if v not in binding]
    sizes = [view.schema.population_size(var_pops[v]) for v in unbound]
    for combo in itertools.product(*(range(n) for n in sizes)):
        nb = dict(binding)
        nb.update(zip(unbound, combo))
        yield from _enumerate(view, pending, nb, var_pops)


def enumerate_groundings(view, conj: Conjunction):
    """Yield free-variable groundings satisfying the conjunction.

    Deterministic order: lexicographic by constant names, variables ordered
    by first appearance in the literal list. The result set is materialized
    for sorting, so this is meant for modest counts (oracles, traces).
    """
    lits, free_pops, sat = _compile(view, conj)
    if not sat:
        return iter(())
    order = []
    for prv, _ in conj.literals:
        for v in prv.vars:
            if v in free_pops and v not in order:
                order.append(v)
    schema = view.schema
    results = []
    for binding in _enumerate(view, lits, {}, free_pops):
        names = tuple(
            schema.populations[free_pops[v]][binding[v]] for v in order
        )
        results.append(names)
    results.sort()
    return iter(
        Grounding(dict(zip(order, names))) for names in results
    )


def _family_vars(child: PRV, parents: tuple[PRV, ...], schema) -> tuple[list[Var], dict[Var, str]]:
    var_pops: dict[Var, str] = {}
    order: list[Var] = []
    for prv in (child, *parents):
        var_pops = check_prv(schema, prv, var_pops)
        for v in prv.vars:
            if v not in order:
                order.append(v)
    return order, var_pops


def family_config_counts(
    db,
    child: PRV,
    parents: tuple[PRV, ...],
    exclude_false_relationships: bool = False,
) -> np.ndarray:
    """Grounding counts for every (parents..., child) value configuration.

    Returns an int64 array of shape (*parent range sizes, child range size).
    With exclude_false_relationships, groundings are dropped whenever a
    parent relationship takes value F (the child, as the query-target
    analogue, is exempt).
    """
    schema = db.schema
    parents = tuple(parents)
    order, var_pops = _family_vars(child, parents, schema)
    prvs = (*parents, child)
    shape = tuple(len(schema.functor(p.functor).range) for p in prvs)
    space = 1
    for v in order:
        space *= schema.population_size(var_pops[v])
    if 0 < space <= _PASS_LIMIT:
        counts = _dense_counts(db, prvs, order, var_pops, shape, space)
    else:
        counts = _per_config_counts(db, child, parents, shape)
    if exclude_false_relationships:
        for i, prv in enumerate(parents):
            decl = schema.functor(prv.functor)
            if decl.kind == RELATIONSHIP:
                slicer = [slice(None)] * len(shape)
                slicer[i] = decl.false_id
                counts[tuple(slicer)] = 0
    return counts


def _dense_counts(db, prvs, order, var_pops, shape, space) -> np.ndarray:
    schema = db.schema
    sizes = [schema.population_size(var_pops[v]) for v in order]
    strides = []
    acc = 1
    for n in reversed(sizes):
        strides.append(acc)
        acc *= n
    strides = list(reversed(strides))
    var_pos = {v: i for i, v in enumerate(order)}
    ncfg = 1
    for k in shape:
        ncfg *= k
    totals = np.zeros(ncfg, dtype=np.int64)
    dense = {p.functor: db.dense_values(p.functor) for p in prvs}
    for lo in range(0, space, _CHUNK):
        hi = min(space, lo + _CHUNK)
        flat = np.arange(lo, hi, dtype=np.int64)
        ids = [
            (flat // strides[i]) % sizes[i] if sizes[i] > 1 else np.zeros(hi - lo, dtype=np.int64)
            for i in range(len(order))
        ]
        code = np.zeros(hi - lo, dtype=np.int64)
        for prv, k in zip(prvs, shape):
            fst = db.geom.strides[prv.functor]
            packed = np.zeros(hi - lo, dtype=np.int64)
            decl = schema.functor(prv.functor)
            for pos, arg in enumerate(prv.args):
                if isinstance(arg, Var):
                    packed += ids[var_pos[arg]] * fst[pos]
                else:
                    cid = schema.const_id(decl.arg_populations[pos], arg)
                    packed += cid * fst[pos]
            vals = dense[prv.functor][packed].astype(np.int64)
            code = code * k + vals
        totals += np.bincount(code, minlength=ncfg)
    return totals.reshape(shape)


def _per_config_counts(db, child, parents, shape) -> np.ndarray:
    schema = db.schema
    counts = np.zeros(shape, dtype=np.int64)
    ranges = [schema.functor(p.functor).range for p in (*parents, child)]
    for combo in itertools.product(*(range(len(r)) for r in ranges)):
        literals = [
            (prv, ranges[i][combo[i]]) for i, prv in enumerate((*parents, child))
        ]
        counts[combo] = count_groundings(db, Conjunction(literals))
    return counts
