"""Grounding a template over concrete populations, exact joint enumeration,
and ordered (systematic-scan) Gibbs sampling.

Grounding instantiates every template node over all constant combinations;
atoms are deduplicated by functor and constants, so two template nodes
over the same functor induce the same ground atoms (and, typically,
bidirected ground edges). The exact joint oracle multiplies ground CPT
entries and is restricted to small acyclic ground networks in which every
atom is the child of exactly one ground family.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .bayesnet import TemplateBN
from .database import Geometry
from .errors import GroundingError, QueryError, SamplerDeadlockError, ScoreError
from .schema import PRV, Schema, Var
from .scoring import (
    GibbsQuery,
    GroundAtom,
    format_atom,
    gibbs_log_score,
    resolve_target,
)

_JOINT_LIMIT = 1 << 20
_EDGE_LIMIT = 5_000_000
_CACHE_KEY_LIMIT = 4096


@dataclass
class GroundGraph:
    """Ground atoms and directed ground edges induced by a template."""

    template: object
    populations: dict[str, tuple[str, ...]]
    atoms: tuple[GroundAtom, ...]
    edges: tuple[tuple[GroundAtom, GroundAtom], ...]

    @property
    def node_count(self) -> int:
        return len(self.atoms)

    @property
    def edge_count(self) -> int:
        return len(self.edges)


def _instantiations(template, populations, node: PRV, var_pops: dict[Var, str]):
    """All groundings of one family (node plus parents), as atom tuples."""
    parents = template.parents(node)
    fam_vars: list[Var] = []
    for prv in (node, *parents):
        for v in prv.vars:
            if v not in fam_vars:
                fam_vars.append(v)
    domains = [populations[var_pops[v]] for v in fam_vars]
    for combo in itertools.product(*domains):
        binding = dict(zip(fam_vars, combo))
        child = node.substitute(binding)
        child_atom = (child.functor, tuple(child.args))
        parent_atoms = tuple(
            (g.functor, tuple(g.args))
            for g in (p.substitute(binding) for p in parents)
        )
        yield child_atom, parent_atoms


def _template_var_pops(template) -> dict[Var, str]:
    var_pops: dict[Var, str] = {}
    for node in template.nodes:
        decl = template.functors[node.functor]
        for arg, pop in zip(node.args, decl.arg_populations):
            if isinstance(arg, Var):
                prior = var_pops.get(arg)
                if prior is not None and prior != pop:
                    raise QueryError(
                        f"variable {arg} typed over both {prior!r} and {pop!r}"
                    )
                var_pops[arg] = pop
    return var_pops


def ground_template(template, populations: dict[str, list[str]]) -> GroundGraph:
    """Instantiate a template network over concrete populations."""
    pops = {p: tuple(cs) for p, cs in populations.items()}
    var_pops = _template_var_pops(template)
    for decl in template.functors.values():
        for pop in decl.arg_populations:
            if pop not in pops:
                raise QueryError(f"population {pop!r} not supplied")
    functor_names = []
    for node in template.nodes:
        if node.functor not in functor_names:
            functor_names.append(node.functor)
    atoms: list[GroundAtom] = []
    for name in functor_names:
        decl = template.functors[name]
        for combo in itertools.product(*(pops[p] for p in decl.arg_populations)):
            atoms.append((name, combo))
    atoms = sorted(set(atoms))
    edges: set[tuple[GroundAtom, GroundAtom]] = set()
    for node in template.nodes:
        size = 1
        fam_vars = set(node.vars)
        for p in template.parents(node):
            fam_vars.update(p.vars)
        for v in fam_vars:
            size *= len(pops[var_pops[v]])
        if size * max(1, len(template.parents(node))) > _EDGE_LIMIT:
            raise GroundingError(
                f"grounding of {node}'s family would exceed the edge budget"
            )
        for child_atom, parent_atoms in _instantiations(template, pops, node, var_pops):
            for pa in parent_atoms:
                if pa != child_atom:
                    edges.add((pa, child_atom))
    return GroundGraph(
        template=template,
        populations=pops,
        atoms=tuple(atoms),
        edges=tuple(sorted(edges)),
    )


@dataclass
class JointTable:
    """Exact joint over ground atoms, enumerated from an acyclic ground net."""

    atoms: tuple[GroundAtom, ...]
    ranges: tuple[tuple[str, ...], ...]
    probs: np.ndarray  # shape: one axis per atom

    def prob(self, assignment: dict[GroundAtom, str]) -> float:
        idx = tuple(
            self.ranges[i].index(assignment[a]) for i, a in enumerate(self.atoms)
        )
        return float(self.probs[idx])

    def marginal(self, atom: GroundAtom) -> dict[str, float]:
        i = self.atoms.index(atom)
        axes = tuple(j for j in range(len(self.atoms)) if j != i)
        m = self.probs.sum(axis=axes)
        return {v: float(m[k]) for k, v in enumerate(self.ranges[i])}

    def conditional(
        self, atom: GroundAtom, given: dict[GroundAtom, str]
    ) -> dict[str, float]:
        i = self.atoms.index(atom)
        slicer: list = [slice(None)] * len(self.atoms)
        for a, v in given.items():
            j = self.atoms.index(a)
            slicer[j] = self.ranges[j].index(v)
        sub = self.probs[tuple(slicer)]
        axes = [a for a in self.atoms if a == atom or a not in given]
        k = axes.index(atom)
        other = tuple(j for j in range(sub.ndim) if j != k)
        m = sub.sum(axis=other) if other else sub
        z = m.sum()
        if z == 0:
            raise GroundingError("conditioning event has probability zero")
        return {v: float(m[j] / z) for j, v in enumerate(self.ranges[i])}


def _ground_families(graph: GroundGraph, bn: TemplateBN):
    """Map each ground atom to its unique (template node, parent atoms) family."""
    var_pops = _template_var_pops(bn)
    claims: dict[GroundAtom, tuple[PRV, tuple[GroundAtom, ...]]] = {}
    for node in bn.nodes:
        for p in bn.parents(node):
            if not set(p.vars) <= set(node.vars):
                raise GroundingError(
                    f"parent {p} of {node} has variables outside the child; "
                    "ground families are ambiguous (aggregation not supported)"
                )
        for child_atom, parent_atoms in _instantiations(
            bn, graph.populations, node, var_pops
        ):
            prior = claims.get(child_atom)
            if prior is not None and prior[0] != node:
                # Two template nodes over one functor agree only if they
                # induce the same ground family with the same table.
                same = prior[1] == parent_atoms and np.array_equal(
                    bn.cpts.get(prior[0]), bn.cpts.get(node)
                )
                if not same:
                    raise GroundingError(
                        f"ground atom {child_atom} is claimed by two template "
                        f"families ({prior[0]} and {node})"
                    )
                continue
            claims[child_atom] = (node, parent_atoms)
    for atom in graph.atoms:
        if atom not in claims:
            raise GroundingError(f"ground atom {atom} has no family")
    return claims


def exact_joint(graph: GroundGraph, bn: TemplateBN) -> JointTable:
    """Exact joint by multiplying ground CPT entries over all assignments."""
    if not bn.is_parameterized:
        raise GroundingError("model has no CPTs")
    claims = _ground_families(graph, bn)
    # Detect ground cycles via Kahn's algorithm over the claimed families.
    indeg = {a: 0 for a in graph.atoms}
    children: dict[GroundAtom, list[GroundAtom]] = {a: [] for a in graph.atoms}
    for atom, (_, parent_atoms) in claims.items():
        for pa in set(parent_atoms):
            indeg[atom] += 1
            children[pa].append(atom)
    queue = [a for a in graph.atoms if indeg[a] == 0]
    seen = 0
    while queue:
        a = queue.pop()
        seen += 1
        for c in children[a]:
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    if seen != len(graph.atoms):
        raise GroundingError("ground network contains a directed cycle")

    atoms = graph.atoms
    ranges = tuple(tuple(bn.functors[a[0]].range) for a in atoms)
    size = 1
    for r in ranges:
        size *= len(r)
        if size > _JOINT_LIMIT:
            raise GroundingError(
                f"joint table would exceed {_JOINT_LIMIT} cells"
            )
    index_of = {a: i for i, a in enumerate(atoms)}
    shape = tuple(len(r) for r in ranges)
    grids = np.unravel_index(np.arange(size), shape)
    logp = np.zeros(size, dtype=np.float64)
    with np.errstate(divide="ignore"):
        for atom in atoms:
            node, parent_atoms = claims[atom]
            cpt = np.log(bn.cpts[node])
            sel = tuple(grids[index_of[pa]] for pa in parent_atoms) + (
                grids[index_of[atom]],
            )
            logp += cpt[sel]
    probs = np.exp(logp).reshape(shape)
    total = probs.sum()
    if not math.isclose(total, 1.0, rel_tol=0, abs_tol=1e-9):
        raise GroundingError(f"joint does not normalize (sum={total!r})")
    return JointTable(atoms=atoms, ranges=ranges, probs=probs / total)


class MutableState:
    """A fully materialized assignment implementing the store protocol.

    Used as the sampler's chain state: every atom (including relationship
    F atoms) is explicit, so all values are enumerable and lookups are
    dense-array reads.
    """

    def __init__(self, schema: Schema):
        self.schema = schema
        self.geom = Geometry(schema)
        self._values: dict[str, np.ndarray] = {
            name: np.zeros(self.geom.space[name], dtype=np.int16)
            for name in schema.functors
        }

    def set_atom(self, atom: GroundAtom, value: str):
        functor, args = atom
        decl = self.schema.functor(functor)
        ids = tuple(
            self.schema.const_id(pop, c)
            for pop, c in zip(decl.arg_populations, args)
        )
        self._values[functor][self.geom.pack(functor, ids)] = decl.value_id(value)

    def get_atom(self, atom: GroundAtom) -> str:
        functor, args = atom
        decl = self.schema.functor(functor)
        ids = tuple(
            self.schema.const_id(pop, c)
            for pop, c in zip(decl.arg_populations, args)
        )
        return decl.range[self.value_id(functor, self.geom.pack(functor, ids))]

    # store protocol ---------------------------------------------------------

    def value_id(self, functor: str, packed: int) -> int:
        return int(self._values[functor][packed])

    def enumerable(self, functor: str, value_id: int) -> bool:
        return True

    def value_atoms(self, functor: str, value_id: int) -> np.ndarray:
        return np.flatnonzero(self._values[functor] == value_id).astype(np.int64)

    def match(self, functor: str, value_id: int, pattern: tuple):
        for packed in self.value_atoms(functor, value_id):
            ids = self.geom.unpack(functor, int(packed))
            if all(p is None or p == i for p, i in zip(pattern, ids)):
                yield ids

    def overridden(self, functor: str, packed: int):
        return None


@dataclass
class SampleChain:
    """Result of one ordered-Gibbs run."""

    order: tuple[GroundAtom, ...]
    state: dict[GroundAtom, str]
    samples: int
    seed: int
    marginals: dict[GroundAtom, dict[str, float]]
    joint_counts: dict[tuple[str, ...], int] | None = None


def _influence_atoms(bn, node, gamma, populations, var_pops, target_atom):
    """Ground atoms whose values can enter the target's conditional."""
    out: set[GroundAtom] = set()
    for family in (node, *bn.children(node)):
        prvs = (family, *bn.parents(family))
        fam_vars: list[Var] = []
        for prv in prvs:
            for v in prv.vars:
                if gamma.get(v) is None and v not in fam_vars:
                    fam_vars.append(v)
        domains = [populations[var_pops[v]] for v in fam_vars]
        size = 1
        for d in domains:
            size *= len(d)
        if size * len(prvs) > _CACHE_KEY_LIMIT:
            return None
        base = gamma.bindings
        for combo in itertools.product(*domains):
            binding = dict(base)
            binding.update(zip(fam_vars, combo))
            for prv in prvs:
                g = prv.substitute(binding)
                atom = (g.functor, tuple(g.args))
                if atom != target_atom:
                    out.add(atom)
    return tuple(sorted(out))


def gibbs_sample(
    graph: GroundGraph,
    bn: TemplateBN,
    evidence: dict[GroundAtom, str],
    iterations: int,
    burn_in: int | None = None,
    seed: int = 0,
    order=None,
    track_joint: bool = False,
) -> SampleChain:
    """Systematic-scan Gibbs over the free atoms of a ground graph.

    Each sweep updates every free atom once, in a fixed order (lexicographic
    by default, overridable). Sweeps after the burn-in (default 10% of
    iterations) are recorded. Runs are deterministic per seed.
    """
    if burn_in is None:
        burn_in = iterations // 10
    if iterations <= burn_in:
        raise QueryError("iterations must exceed burn_in")
    atom_set = set(graph.atoms)
    for a, v in evidence.items():
        if a not in atom_set:
            raise QueryError(f"evidence atom {a} is not in the ground graph")
        if v not in bn.functors[a[0]].range:
            raise QueryError(f"evidence value {v!r} not in range of {a[0]}")
    free = sorted(a for a in graph.atoms if a not in evidence)
    if not free:
        raise QueryError("no free atoms to sample")
    if order is not None:
        order = [tuple(a) if not isinstance(a, tuple) else a for a in order]
        if sorted(order) != free:
            raise QueryError("order must be a permutation of the free atoms")
    else:
        order = list(free)

    pops = {p: list(cs) for p, cs in graph.populations.items()}
    schema = Schema(pops, list(bn.functors.values()))
    state = MutableState(schema)
    rng = np.random.default_rng(seed)
    for atom in graph.atoms:
        rng_range = bn.functors[atom[0]].range
        if atom in evidence:
            state.set_atom(atom, evidence[atom])
        else:
            state.set_atom(atom, rng_range[rng.integers(len(rng_range))])

    var_pops = _template_var_pops(bn)
    resolved = {}
    influence = {}
    for atom in order:
        node, gamma = resolve_target(bn, atom[0], atom[1])
        resolved[atom] = (node, gamma)
        influence[atom] = _influence_atoms(
            bn, node, gamma, graph.populations, var_pops, atom
        )

    cond_cache: dict[tuple, np.ndarray] = {}

    def conditional(atom: GroundAtom) -> np.ndarray:
        node, gamma = resolved[atom]
        infl = influence[atom]
        key = None
        if infl is not None:
            key = (atom, tuple(state.get_atom(a) for a in infl))
            got = cond_cache.get(key)
            if got is not None:
                return got
        values = bn.functors[atom[0]].range
        query = GibbsQuery(state, node, gamma)
        scores = np.full(len(values), -np.inf)
        for i, v in enumerate(values):
            try:
                scores[i], _ = gibbs_log_score(query, v, bn)
            except ScoreError:
                pass
        if not np.isfinite(scores).any():
            raise SamplerDeadlockError(
                f"every value of {format_atom(atom)} has zero probability"
            )
        peak = scores.max()
        probs = np.exp(scores - peak)
        probs /= probs.sum()
        if key is not None:
            cond_cache[key] = probs
        return probs

    marg_counts = {
        a: np.zeros(len(bn.functors[a[0]].range), dtype=np.int64) for a in order
    }
    joint_counts: dict[tuple[str, ...], int] | None = {} if track_joint else None
    recorded = 0
    for sweep in range(iterations):
        for atom in order:
            probs = conditional(atom)
            values = bn.functors[atom[0]].range
            draw = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
            draw = min(draw, len(values) - 1)
            state.set_atom(atom, values[draw])
        if sweep >= burn_in:
            recorded += 1
            snapshot = tuple(state.get_atom(a) for a in order)
            for a, v in zip(order, snapshot):
                marg_counts[a][bn.functors[a[0]].range.index(v)] += 1
            if joint_counts is not None:
                joint_counts[snapshot] = joint_counts.get(snapshot, 0) + 1

    marginals = {
        a: {
            v: float(marg_counts[a][i]) / recorded
            for i, v in enumerate(bn.functors[a[0]].range)
        }
        for a in order
    }
    final_state = {a: state.get_atom(a) for a in graph.atoms}
    return SampleChain(
        order=tuple(order),
        state=final_state,
        samples=recorded,
        seed=seed,
        marginals=marginals,
        joint_counts=joint_counts,
    )
