"""Independent oracles and random-instance generators for the test suite.

Everything here is deliberately naive: nested loops over explicit fact
dictionaries, no indices, no shared code with the package internals. Slow on
purpose — the point is to have a second, unrelated implementation to compare
against.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from reldn import (
    ATTRIBUTE,
    RELATIONSHIP,
    Conjunction,
    FunctorDecl,
    Grounding,
    PRV,
    RelationalDatabase,
    Schema,
    TemplateBN,
    Var,
)


# ---------------------------------------------------------------------------
# Brute-force grounding counts over a plain {(functor, args): value} dict.


def fact_value(schema: Schema, facts: dict, functor: str, args: tuple) -> str:
    decl = schema.functor(functor)
    key = (functor, tuple(args))
    if key in facts:
        return facts[key]
    if decl.kind == RELATIONSHIP:
        return "F"
    raise KeyError(f"attribute {key} missing from total fact dict")


def conj_var_pops(schema: Schema, conj: Conjunction) -> dict[Var, str]:
    pops: dict[Var, str] = {}
    for prv, _ in conj.literals:
        decl = schema.functor(prv.functor)
        for arg, pop in zip(prv.args, decl.arg_populations):
            if isinstance(arg, Var):
                pops.setdefault(arg, pop)
    return pops


def brute_groundings(schema: Schema, facts: dict, conj: Conjunction):
    """All satisfying assignments of the conjunction's free variables.

    Returns a sorted list of dicts (free var -> constant). Free means: not
    bound by the conjunction's equality constraint.
    """
    pops = conj_var_pops(schema, conj)
    bound = dict(conj.constraint.bindings) if conj.constraint is not None else {}
    free = [v for v in sorted(pops, key=lambda v: v.name) if v not in bound]
    out = []
    for combo in itertools.product(*(schema.populations[pops[v]] for v in free)):
        binding = dict(bound)
        binding.update(zip(free, combo))
        ok = True
        for prv, value in conj.literals:
            args = tuple(
                binding[a] if isinstance(a, Var) else a for a in prv.args
            )
            if fact_value(schema, facts, prv.functor, args) != value:
                ok = False
                break
        if ok:
            out.append({v: binding[v] for v in free})
    out.sort(key=lambda b: tuple(b[v] for v in free))
    return out


def brute_count(schema: Schema, facts: dict, conj: Conjunction) -> int:
    return len(brute_groundings(schema, facts, conj))


# ---------------------------------------------------------------------------
# Brute-force Markov blanket.


def brute_blanket(nodes, edges, node) -> set:
    parents = {p for p, c in edges if c == node}
    children = {c for p, c in edges if p == node}
    coparents = set()
    for child in children:
        coparents.update(p for p, c in edges if c == child and p != node)
    return parents | children | coparents


def blanket_edge_total(nodes, edges) -> int:
    """Directed edge count of the moralized graph, from the closed formula."""
    adjacent = set()
    for p, c in edges:
        adjacent.add(frozenset((p, c)))
    pairs = set()
    children: dict = {}
    for p, c in edges:
        children.setdefault(c, set()).add(p)
    for ps in children.values():
        for a, b in itertools.combinations(sorted(ps, key=repr), 2):
            if frozenset((a, b)) not in adjacent:
                pairs.add(frozenset((a, b)))
    return 2 * len(edges) + 2 * len(pairs)


# ---------------------------------------------------------------------------
# Exact joint for propositional models (one entity, unary functors).


def brute_joint(bn: TemplateBN) -> dict[tuple, float]:
    """Joint table of a single-grounding template, keyed by value tuples.

    Key order follows bn.nodes. Multiplies CPT entries directly — no shared
    code with the package's ground-graph machinery.
    """
    nodes = list(bn.nodes)
    ranges = [bn.functors[n.functor].range for n in nodes]
    idx = {n: i for i, n in enumerate(nodes)}
    joint: dict[tuple, float] = {}
    for combo in itertools.product(*(range(len(r)) for r in ranges)):
        p = 1.0
        for n in nodes:
            pv = tuple(combo[idx[q]] for q in bn.parents(n))
            p *= float(bn.cpts[n][pv + (combo[idx[n]],)])
        joint[combo] = p
    return joint


def joint_conditional(
    bn: TemplateBN, joint: dict, node, rest: dict
) -> list[float]:
    """P(node | all other nodes) from an explicit joint table."""
    nodes = list(bn.nodes)
    idx = {n: i for i, n in enumerate(nodes)}
    k = len(bn.functors[node.functor].range)
    weights = []
    for v in range(k):
        combo = [0] * len(nodes)
        for other, val in rest.items():
            combo[idx[other]] = val
        combo[idx[node]] = v
        weights.append(joint[tuple(combo)])
    z = sum(weights)
    return [w / z for w in weights]


# ---------------------------------------------------------------------------
# Random instances.


def random_schema(rng: np.random.Generator) -> Schema:
    n_pops = int(rng.integers(1, 3))
    pops = {
        f"p{i}": [f"p{i}e{j}" for j in range(int(rng.integers(2, 6)))]
        for i in range(n_pops)
    }
    names = list(pops)
    functors = []
    n_funcs = int(rng.integers(2, 5))
    for i in range(n_funcs):
        if rng.random() < 0.5 and n_pops >= 1:
            args = tuple(rng.choice(names, size=int(rng.integers(1, 3))))
            k = int(rng.integers(2, 4))
            rng_vals = tuple(f"v{j}" for j in range(k))
            functors.append(FunctorDecl(f"a{i}", args, rng_vals, ATTRIBUTE))
        else:
            args = tuple(rng.choice(names, size=2))
            functors.append(FunctorDecl(f"r{i}", args, ("T", "F"), RELATIONSHIP))
    return Schema(pops, functors)


def random_facts(rng: np.random.Generator, schema: Schema) -> dict:
    facts = {}
    for decl in schema.functors.values():
        spaces = [schema.populations[p] for p in decl.arg_populations]
        for args in itertools.product(*spaces):
            if decl.kind == ATTRIBUTE:
                facts[(decl.name, args)] = decl.range[int(rng.integers(len(decl.range)))]
            elif rng.random() < 0.4:
                facts[(decl.name, args)] = "T"
    return facts


def facts_to_db(schema: Schema, facts: dict) -> RelationalDatabase:
    atoms = [(f, args, v) for (f, args), v in facts.items()]
    return RelationalDatabase.from_atoms(schema, atoms)


def random_conjunction(rng: np.random.Generator, schema: Schema) -> Conjunction:
    decls = list(schema.functors.values())
    n_lits = int(rng.integers(1, 4))
    var_pool: dict[str, Var] = {}
    lits = []
    var_pops: dict[Var, str] = {}
    for _ in range(n_lits):
        decl = decls[int(rng.integers(len(decls)))]
        args = []
        for pop in decl.arg_populations:
            if rng.random() < 0.25:
                consts = schema.populations[pop]
                args.append(consts[int(rng.integers(len(consts)))])
                continue
            # reuse a variable of the right population half the time
            candidates = [v for v, p in var_pops.items() if p == pop]
            if candidates and rng.random() < 0.5:
                args.append(candidates[int(rng.integers(len(candidates)))])
            else:
                v = Var(f"V{len(var_pops)}")
                var_pops[v] = pop
                var_pool[v.name] = v
                args.append(v)
        value = decl.range[int(rng.integers(len(decl.range)))]
        lits.append((PRV(decl.name, tuple(args)), value))
    try:
        conj = Conjunction(lits)
    except Exception:
        return random_conjunction(rng, schema)
    # sometimes pin one variable with an equality constraint
    if conj.vars and rng.random() < 0.4:
        v = sorted(conj.vars, key=lambda x: x.name)[0]
        consts = schema.populations[var_pops[v]]
        conj = Conjunction(lits, Grounding({v: consts[int(rng.integers(len(consts)))]}))
    return conj


def random_propositional_bn(
    rng: np.random.Generator, max_nodes: int = 10
) -> tuple[TemplateBN, Schema]:
    """Random DAG over unary functors of a one-entity population.

    Every family then has exactly one grounding, so template queries reduce
    to ordinary Markov-blanket conditionals.
    """
    n = int(rng.integers(2, max_nodes + 1))
    schema = Schema(
        {"unit": ["u0"]},
        [FunctorDecl(f"x{i}", ("unit",), ("T", "F"), ATTRIBUTE) for i in range(n)],
    )
    e = Var("E")
    nodes = [PRV(f"x{i}", (e,)) for i in range(n)]
    edges = []
    for j in range(n):
        for i in range(j):
            if rng.random() < 0.35 and len([1 for p, c in edges if c == nodes[j]]) < 3:
                edges.append((nodes[i], nodes[j]))
    cpts = {}
    for j, node in enumerate(nodes):
        n_par = len([1 for p, c in edges if c == node])
        shape = (2,) * n_par + (2,)
        t = rng.uniform(0.05, 0.95, size=(2,) * n_par)
        cpt = np.empty(shape)
        cpt[..., 0] = t
        cpt[..., 1] = 1.0 - t
        cpts[node] = cpt
    bn = TemplateBN(dict(schema.functors), nodes, edges, cpts)
    return bn, schema


def random_dag(rng: np.random.Generator, max_nodes: int = 12):
    n = int(rng.integers(2, max_nodes + 1))
    e = Var("E")
    nodes = [PRV(f"x{i}", (e,)) for i in range(n)]
    edges = []
    for j in range(n):
        for i in range(j):
            if rng.random() < 0.3:
                edges.append((nodes[i], nodes[j]))
    functors = {
        f"x{i}": FunctorDecl(f"x{i}", ("unit",), ("T", "F"), ATTRIBUTE)
        for i in range(n)
    }
    return TemplateBN(functors, nodes, edges, None)


def assignment_db(schema: Schema, values: dict[str, int]) -> RelationalDatabase:
    """One-entity database from {functor: value id}."""
    atoms = []
    for name, vid in values.items():
        decl = schema.functor(name)
        atoms.append((name, ("u0",), decl.range[vid]))
    return RelationalDatabase.from_atoms(schema, atoms)


def log_mean(vals) -> float:
    return math.fsum(vals) / len(vals)
