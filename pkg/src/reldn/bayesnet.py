"""Template Bayesian networks over parametrized random variables.

A template network is a DAG whose nodes are PRVs; each node carries a CPT
over the full product of its parents' ranges. Parameters are estimated
from grounding counts with additive smoothing. Structure search is a
greedy hill-climb over single-edge moves scored by penalized family
log-likelihood.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .counting import family_config_counts
from .errors import EstimationError, ModelError
from .schema import FunctorDecl, PRV, Var, check_prv

_ROW_SUM_TOL = 1e-9


def _node_from_json(obj: dict) -> PRV:
    args = []
    for a in obj["args"]:
        if "var" in a:
            args.append(Var(a["var"]))
        else:
            args.append(a["const"])
    return PRV(obj["functor"], tuple(args))


def _node_to_json(prv: PRV) -> dict:
    return {
        "functor": prv.functor,
        "args": [
            {"var": a.name} if isinstance(a, Var) else {"const": a} for a in prv.args
        ],
    }


class _Vocabulary:
    """Just enough of a schema for type-checking PRVs against declarations."""

    def __init__(self, functors: dict[str, FunctorDecl]):
        self.functors = functors

    def functor(self, name: str) -> FunctorDecl:
        if name not in self.functors:
            raise ModelError(f"unknown functor {name!r} in model")
        return self.functors[name]

    def has_constant(self, pop: str, constant: str) -> bool:
        return True  # constants are validated against data schemas, not models


class TemplateBN:
    """Directed acyclic template model with optional CPTs."""

    def __init__(
        self,
        functors: dict[str, FunctorDecl],
        nodes,
        edges,
        cpts: dict[PRV, np.ndarray] | None = None,
    ):
        self.functors = dict(functors)
        self.nodes: tuple[PRV, ...] = tuple(nodes)
        self._edges: tuple[tuple[PRV, PRV], ...] = tuple(
            (p, c) for p, c in edges
        )
        self.cpts: dict[PRV, np.ndarray] = dict(cpts or {})
        self._parents: dict[PRV, list[PRV]] = {n: [] for n in self.nodes}
        self._children: dict[PRV, list[PRV]] = {n: [] for n in self.nodes}
        self._validate()

    # -- structure ----------------------------------------------------------

    def _validate(self):
        if len(set(self.nodes)) != len(self.nodes):
            raise ModelError("duplicate template nodes")
        voc = _Vocabulary(self.functors)
        var_pops: dict[Var, str] = {}
        for n in self.nodes:
            var_pops = check_prv(voc, n, var_pops)
        for p, c in self._edges:
            if p not in self._parents or c not in self._parents:
                raise ModelError(f"edge ({p}, {c}) references a non-node")
            if p == c:
                raise ModelError(f"self-edge on {p}")
            if p in self._parents[c]:
                raise ModelError(f"duplicate edge ({p}, {c})")
            self._parents[c].append(p)
            self._children[p].append(c)
        self._check_acyclic()
        for node, cpt in self.cpts.items():
            if node not in self._parents:
                raise ModelError(f"CPT for non-node {node}")
            self._check_cpt(node, cpt)

    def _check_acyclic(self):
        indeg = {n: len(self._parents[n]) for n in self.nodes}
        queue = [n for n in self.nodes if indeg[n] == 0]
        seen = 0
        while queue:
            n = queue.pop()
            seen += 1
            for c in self._children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        if seen != len(self.nodes):
            raise ModelError("template graph contains a directed cycle")

    def _check_cpt(self, node: PRV, cpt: np.ndarray):
        expected = self.cpt_shape(node)
        if cpt.shape != expected:
            raise ModelError(
                f"CPT for {node}: shape {cpt.shape}, expected {expected}"
            )
        if np.any(cpt < 0):
            raise ModelError(f"CPT for {node}: negative entry")
        sums = cpt.sum(axis=-1)
        if not np.allclose(sums, 1.0, rtol=0, atol=_ROW_SUM_TOL):
            raise ModelError(f"CPT for {node}: rows do not sum to 1")

    def cpt_shape(self, node: PRV) -> tuple[int, ...]:
        parent_sizes = tuple(
            len(self.functors[p.functor].range) for p in self._parents[node]
        )
        return (*parent_sizes, len(self.functors[node.functor].range))

    def parents(self, node: PRV) -> tuple[PRV, ...]:
        return tuple(self._parents[node])

    def children(self, node: PRV) -> tuple[PRV, ...]:
        return tuple(self._children[node])

    @property
    def edges(self) -> tuple[tuple[PRV, PRV], ...]:
        return self._edges

    @property
    def is_parameterized(self) -> bool:
        return all(n in self.cpts for n in self.nodes)

    def cp(self, node: PRV, child_vid: int, parent_vids: tuple[int, ...]) -> float:
        cpt = self.cpts.get(node)
        if cpt is None:
            raise ModelError(f"no CPT for {node}; network is not parameterized")
        return float(cpt[(*parent_vids, child_vid)])

    def with_edges(self, edges) -> "TemplateBN":
        return TemplateBN(self.functors, self.nodes, edges)

    def topological_order(self) -> tuple[PRV, ...]:
        indeg = {n: len(self._parents[n]) for n in self.nodes}
        out, queue = [], [n for n in self.nodes if indeg[n] == 0]
        while queue:
            queue.sort(key=repr)
            n = queue.pop(0)
            out.append(n)
            for c in self._children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    queue.append(c)
        return tuple(out)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        node_index = {n: i for i, n in enumerate(self.nodes)}
        return {
            "functors": [
                {
                    "name": d.name,
                    "args": list(d.arg_populations),
                    "range": list(d.range),
                    "kind": d.kind,
                }
                for d in self.functors.values()
            ],
            "nodes": [_node_to_json(n) for n in self.nodes],
            "edges": [[node_index[p], node_index[c]] for p, c in self._edges],
            "cpts": [
                self.cpts[n].tolist() if n in self.cpts else None
                for n in self.nodes
            ],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "TemplateBN":
        functors = {
            f["name"]: FunctorDecl(
                name=f["name"],
                arg_populations=tuple(f["args"]),
                range=tuple(f["range"]),
                kind=f.get("kind", "attribute"),
            )
            for f in obj["functors"]
        }
        nodes = [_node_from_json(n) for n in obj["nodes"]]
        edges = [(nodes[p], nodes[c]) for p, c in obj["edges"]]
        cpts = {}
        for node, cpt in zip(nodes, obj.get("cpts") or [None] * len(nodes)):
            if cpt is not None:
                cpts[node] = np.asarray(cpt, dtype=np.float64)
        return cls(functors, nodes, edges, cpts)

    def save(self, path: str | Path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path: str | Path) -> "TemplateBN":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def __repr__(self) -> str:
        return f"TemplateBN(nodes={len(self.nodes)}, edges={len(self._edges)})"


def estimate_parameters(
    structure: TemplateBN,
    db,
    pseudocount: float = 1.0,
    exclude_false_relationships: bool = False,
) -> TemplateBN:
    """Fit every CPT from grounding counts with additive smoothing.

    CP(child=u | parents=pa) = (count(u, pa) + pseudocount)
                             / (count(pa) + pseudocount * |range(child)|).

    Counts are raw grounding counts over the whole database. With
    exclude_false_relationships, groundings whose parent relationships are
    F are dropped from both numerator and denominator instead.
    """
    if pseudocount < 0:
        raise EstimationError("pseudocount must be nonnegative")
    for name, decl in structure.functors.items():
        got = db.schema.functors.get(name)
        if got is None or got != decl:
            raise EstimationError(
                f"model functor {name!r} missing from or conflicting with the "
                "data schema"
            )
    cpts: dict[PRV, np.ndarray] = {}
    for node in structure.nodes:
        parents = structure.parents(node)
        counts = family_config_counts(
            db, node, parents,
            exclude_false_relationships=exclude_false_relationships,
        )
        k = counts.shape[-1]
        denom = counts.sum(axis=-1, dtype=np.float64)
        if pseudocount == 0 and np.any(denom == 0):
            idx = tuple(int(i) for i in np.argwhere(denom == 0)[0])
            names = tuple(
                structure.functors[p.functor].range[i]
                for p, i in zip(parents, idx)
            )
            raise EstimationError(
                f"{node}: parent configuration {names} has zero groundings and "
                "pseudocount is 0"
            )
        cpts[node] = (counts + pseudocount) / (
            denom[..., None] + pseudocount * k
        )
    return TemplateBN(structure.functors, structure.nodes, structure.edges, cpts)


def _family_score(db, node: PRV, parents: tuple[PRV, ...], functors) -> float:
    """Penalized log-likelihood of one family under plug-in estimates."""
    counts = family_config_counts(db, node, parents)
    denom = counts.sum(axis=-1, dtype=np.float64)
    n = counts.astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(n > 0, n * np.log(n / denom[..., None]), 0.0)
    ll = float(terms.sum())
    total = float(denom.sum())
    k_child = counts.shape[-1]
    n_params = (k_child - 1) * int(np.prod(counts.shape[:-1], dtype=np.int64))
    penalty = 0.5 * math.log(max(total, 1.0)) * n_params
    return ll - penalty


def learn_structure(
    db,
    candidate_nodes,
    max_parents: int = 3,
    seed: int = 0,
    pseudocount: float = 1.0,
) -> TemplateBN:
    """Greedy hill-climb over add/remove/reverse single-edge moves.

    The score is the sum of per-family penalized log-likelihoods; the search
    is deterministic for a given seed (the seed only shuffles the order in
    which tying moves are encountered). Returns a parameterized network.
    """
    nodes = tuple(candidate_nodes)
    functors = {n.functor: db.schema.functor(n.functor) for n in nodes}
    bn = TemplateBN(functors, nodes, [])
    rng = np.random.default_rng(seed)
    cache: dict[tuple, float] = {}

    def fam_score(node: PRV, parents: tuple[PRV, ...]) -> float:
        key = (node, parents)
        if key not in cache:
            cache[key] = _family_score(db, node, parents, functors)
        return cache[key]

    def total_score(net: TemplateBN) -> float:
        return sum(fam_score(n, net.parents(n)) for n in net.nodes)

    current = bn
    current_score = total_score(current)
    while True:
        moves = []
        present = set(current.edges)
        for u in nodes:
            for v in nodes:
                if u == v:
                    continue
                if (u, v) in present:
                    moves.append(("remove", u, v))
                    if (v, u) not in present:
                        moves.append(("reverse", u, v))
                elif (v, u) not in present:
                    moves.append(("add", u, v))
        order = rng.permutation(len(moves))
        best = None
        for i in order:
            kind, u, v = moves[i]
            if kind == "add":
                edges = [*current.edges, (u, v)]
                if len(current.parents(v)) + 1 > max_parents:
                    continue
            elif kind == "remove":
                edges = [e for e in current.edges if e != (u, v)]
            else:
                edges = [e for e in current.edges if e != (u, v)] + [(v, u)]
                if len(current.parents(u)) + 1 > max_parents:
                    continue
            try:
                proposal = current.with_edges(edges)
            except ModelError:
                continue  # cycle
            delta = 0.0
            touched = {v} if kind in ("add", "remove") else {u, v}
            for t in touched:
                delta += fam_score(t, proposal.parents(t)) - fam_score(
                    t, current.parents(t)
                )
            if delta > 1e-9 and (best is None or delta > best[0]):
                best = (delta, proposal)
        if best is None:
            break
        current = best[1]
        current_score += best[0]
    return estimate_parameters(current, db, pseudocount=pseudocount)
