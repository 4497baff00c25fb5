"""Closed-form transform of a template Bayesian network into a template
dependency network.

Each node's new parent set is its Markov blanket in the source network:
parents, children, and co-parents. Every source edge therefore appears in
both directions (stored as two directed edges), and co-parent pairs gain a
bidirected link. In a dependency network the parent set itself is the
Markov blanket, so re-applying the transform to its own output changes
nothing.
"""

from __future__ import annotations

import json
from pathlib import Path

from .bayesnet import TemplateBN, _node_from_json, _node_to_json
from .errors import ModelError
from .schema import FunctorDecl, PRV


def markov_blanket(bn: TemplateBN, node: PRV) -> tuple[PRV, ...]:
    """Parents, children, and co-parents of a node, excluding the node."""
    if node not in bn._parents:
        raise ModelError(f"{node} is not a node of the network")
    blanket: list[PRV] = []
    seen = {node}
    for p in bn.parents(node):
        if p not in seen:
            seen.add(p)
            blanket.append(p)
    for c in bn.children(node):
        if c not in seen:
            seen.add(c)
            blanket.append(c)
    for c in bn.children(node):
        for q in bn.parents(c):
            if q not in seen:
                seen.add(q)
                blanket.append(q)
    return tuple(blanket)


class RdnTemplate:
    """Template dependency network: per-node parent sets, possibly cyclic."""

    def __init__(
        self,
        functors: dict[str, FunctorDecl],
        nodes,
        parents: dict[PRV, tuple[PRV, ...]],
        source: str | None = None,
    ):
        self.functors = dict(functors)
        self.nodes: tuple[PRV, ...] = tuple(nodes)
        self._parents = {n: tuple(parents.get(n, ())) for n in self.nodes}
        self.source = source
        node_set = set(self.nodes)
        for n, ps in self._parents.items():
            for p in ps:
                if p not in node_set:
                    raise ModelError(f"parent {p} of {n} is not a node")
            if len(set(ps)) != len(ps):
                raise ModelError(f"duplicate parent for {n}")

    def parents(self, node: PRV) -> tuple[PRV, ...]:
        return self._parents[node]

    def children(self, node: PRV) -> tuple[PRV, ...]:
        return tuple(c for c in self.nodes if node in self._parents[c])

    @property
    def edges(self) -> tuple[tuple[PRV, PRV], ...]:
        out = []
        for c in self.nodes:
            for p in self._parents[c]:
                out.append((p, c))
        return tuple(out)

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
            "edges": [[node_index[p], node_index[c]] for p, c in self.edges],
            "source_model": self.source,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RdnTemplate":
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
        parents: dict[PRV, list[PRV]] = {n: [] for n in nodes}
        for p, c in obj["edges"]:
            parents[nodes[c]].append(nodes[p])
        return cls(
            functors,
            nodes,
            {n: tuple(ps) for n, ps in parents.items()},
            source=obj.get("source_model"),
        )

    def save(self, path: str | Path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path: str | Path) -> "RdnTemplate":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def __repr__(self) -> str:
        return f"RdnTemplate(nodes={len(self.nodes)}, edges={len(self.edges)})"


def moralize_to_rdn(model, source: str | None = None) -> RdnTemplate:
    """Rewire every node to take its Markov blanket as parents.

    For a TemplateBN the blanket is parents + children + co-parents. A
    dependency network's parent set already is its blanket, so an
    RdnTemplate input comes back with identical edges.
    """
    if isinstance(model, RdnTemplate):
        return RdnTemplate(
            model.functors,
            model.nodes,
            {n: model.parents(n) for n in model.nodes},
            source=source if source is not None else model.source,
        )
    if not isinstance(model, TemplateBN):
        raise ModelError(f"cannot moralize {type(model).__name__}")
    parents = {n: markov_blanket(model, n) for n in model.nodes}
    return RdnTemplate(model.functors, model.nodes, parents, source=source)
