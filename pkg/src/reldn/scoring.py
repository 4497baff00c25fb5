"""Gibbs conditional scoring for one ground target atom.

The log score of candidate value t sums, over the target's own family and
each child family, the CPT log-probabilities of every family configuration
weighted by that configuration's relevant-grounding proportion:

    score(t) = sum_U sum_(u,pa) ln CP(u | pa) * relevant(u,pa) / total_U

Counts are taken with the target atom set to t, under the equality
constraint that binds the variables each family shares with the target's
grounding; remaining variables range over their populations. A
configuration's relevant count is 0 when it contains a false relationship
other than the target atom itself, else it equals its grounding count.
Exponentiating a family's share of the score gives the geometric mean of
the CPT entries its relevant groundings instantiate.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path

from .bayesnet import TemplateBN
from .counting import count_groundings
from .database import DatabaseView
from .errors import QueryError, ScoreError
from .schema import RELATIONSHIP, Conjunction, Grounding, PRV, Var

GroundAtom = tuple[str, tuple[str, ...]]


def format_atom(atom: GroundAtom) -> str:
    return f"{atom[0]}({','.join(atom[1])})"


def _unify(node: PRV, args: tuple[str, ...]) -> Grounding | None:
    if len(node.args) != len(args):
        return None
    binding: dict[Var, str] = {}
    for term, const in zip(node.args, args):
        if isinstance(term, Var):
            if binding.get(term, const) != const:
                return None
            binding[term] = const
        elif term != const:
            return None
    return Grounding(binding)


def resolve_target(bn: TemplateBN, functor: str, args: tuple[str, ...]):
    """Pick the template node a ground atom instantiates.

    Several nodes can share a functor (population-variable copies); the
    resolver prefers the one with the most parents, ties broken by node
    order, since that family carries the learned dependency.
    """
    candidates = []
    for node in bn.nodes:
        if node.functor != functor:
            continue
        gamma = _unify(node, args)
        if gamma is not None:
            candidates.append((node, gamma))
    if not candidates:
        raise QueryError(f"no template node matches {functor}({','.join(args)})")
    return max(candidates, key=lambda ng: len(bn.parents(ng[0])))


@dataclass(frozen=True)
class GibbsQuery:
    """A masked ground target atom over an evidence database."""

    db: object
    target_node: PRV
    gamma: Grounding

    def __post_init__(self):
        missing = [v for v in self.target_node.vars if self.gamma.get(v) is None]
        if missing:
            raise QueryError(
                f"target grounding must bind every variable of "
                f"{self.target_node}; missing {missing}"
            )
        # The equality constraint binds exactly the target node's variables;
        # anything extra would over-constrain the shared-variable counts.
        keep = set(self.target_node.vars)
        if any(v not in keep for v in self.gamma.vars):
            object.__setattr__(self, "gamma", self.gamma.restrict(keep))

    @property
    def target_atom(self) -> GroundAtom:
        ground = self.target_node.substitute(self.gamma.bindings)
        return (ground.functor, tuple(ground.args))

    @classmethod
    def for_atom(cls, db, bn: TemplateBN, functor: str, args) -> "GibbsQuery":
        node, gamma = resolve_target(bn, functor, tuple(args))
        return cls(db, node, gamma)


@dataclass
class FamilyScoreRow:
    """One family configuration's counts and contribution to the score."""

    family: PRV
    child_value: str
    parent_values: tuple[tuple[PRV, str], ...]
    cp: float
    weight: float
    count: int
    relevant_count: int
    proportion: float
    contribution: float


def relevant_family_count(
    view, config_literals, gamma: Grounding, target_atom: GroundAtom
) -> tuple[int, int]:
    """Grounding count and relevant count of one family configuration.

    config_literals is the (PRV, value) list for the family's child and
    parents; gamma is the equality constraint shared with the target.
    Returns (count, relevant_count).
    """
    schema = view.schema
    conj = Conjunction(config_literals, constraint=gamma.restrict(
        set().union(*(prv.vars for prv, _ in config_literals)) if config_literals else ()
    ))
    n = count_groundings(view, conj)
    for prv, value in config_literals:
        decl = schema.functor(prv.functor)
        if decl.kind != RELATIONSHIP or value != "F":
            continue
        if all(gamma.get(v) is not None for v in prv.vars):
            ground = prv.substitute(gamma.bindings)
            if (ground.functor, tuple(ground.args)) == target_atom:
                continue  # the target's own candidate value never zeroes
        return n, 0
    return n, n


def _family_rows(view, bn: TemplateBN, family: PRV, gamma: Grounding,
                 target_atom: GroundAtom) -> list[FamilyScoreRow]:
    parents = bn.parents(family)
    child_range = bn.functors[family.functor].range
    parent_ranges = [bn.functors[p.functor].range for p in parents]
    rows = []
    for parent_combo in itertools.product(*(range(len(r)) for r in parent_ranges)):
        for child_vid in range(len(child_range)):
            literals = [(family, child_range[child_vid])]
            literals += [
                (p, parent_ranges[i][parent_combo[i]]) for i, p in enumerate(parents)
            ]
            n, rel = relevant_family_count(view, literals, gamma, target_atom)
            cp = bn.cp(family, child_vid, parent_combo)
            rows.append(
                FamilyScoreRow(
                    family=family,
                    child_value=child_range[child_vid],
                    parent_values=tuple(
                        (p, parent_ranges[i][parent_combo[i]])
                        for i, p in enumerate(parents)
                    ),
                    cp=cp,
                    weight=math.log(cp) if cp > 0 else float("-inf"),
                    count=n,
                    relevant_count=rel,
                    proportion=0.0,
                    contribution=0.0,
                )
            )
    total = sum(r.relevant_count for r in rows)
    if total > 0:
        for r in rows:
            r.proportion = r.relevant_count / total
            if r.proportion > 0.0:
                if r.cp == 0.0:
                    raise ScoreError(
                        f"zero-probability entry instantiated: {r.family} = "
                        f"{r.child_value} given {r.parent_values}"
                    )
                r.contribution = r.weight * r.proportion
    return rows


def _as_view(db, atom: GroundAtom, value: str) -> DatabaseView:
    if isinstance(db, DatabaseView):
        return db.with_override(atom[0], atom[1], value)
    return DatabaseView(db, {atom: value})


def gibbs_log_score(
    query: GibbsQuery, value: str, bn: TemplateBN
) -> tuple[float, list[FamilyScoreRow]]:
    """Unnormalized log score of one candidate target value, with the trace."""
    if not bn.is_parameterized:
        raise ScoreError("model has no CPTs; estimate parameters first")
    decl = bn.functors[query.target_node.functor]
    if value not in decl.range:
        raise QueryError(f"value {value!r} not in range of {decl.name}")
    view = _as_view(query.db, query.target_atom, value)
    rows: list[FamilyScoreRow] = []
    for family in (query.target_node, *bn.children(query.target_node)):
        rows.extend(_family_rows(view, bn, family, query.gamma, query.target_atom))
    return sum(r.contribution for r in rows), rows


@dataclass
class TargetScore:
    """Distribution over target values plus per-value score traces."""

    target_atom: GroundAtom
    distribution: dict[str, float]
    log_scores: dict[str, float]
    traces: dict[str, list[FamilyScoreRow]]


def score_target(query: GibbsQuery, bn: TemplateBN) -> TargetScore:
    decl = bn.functors[query.target_node.functor]
    log_scores: dict[str, float] = {}
    traces: dict[str, list[FamilyScoreRow]] = {}
    for value in decl.range:
        s, rows = gibbs_log_score(query, value, bn)
        log_scores[value] = s
        traces[value] = rows
    peak = max(log_scores.values())
    raw = {v: math.exp(s - peak) for v, s in log_scores.items()}
    z = sum(raw.values())
    dist = {v: r / z for v, r in raw.items()}
    return TargetScore(query.target_atom, dist, log_scores, traces)


def gibbs_probability(query: GibbsQuery, bn: TemplateBN) -> dict[str, float]:
    """Normalized distribution over the target's range (softmax of scores)."""
    return score_target(query, bn).distribution


def _parent_state(row: FamilyScoreRow, gamma: Grounding) -> str:
    parts = []
    for prv, val in row.parent_values:
        shown = prv.substitute(gamma.bindings)
        parts.append(f"{shown}={val}")
    return "; ".join(parts)


def write_trace_csv(path: str | Path, score: TargetScore, gamma: Grounding):
    """Trace rows per candidate value: configuration, CP, weight, proportion."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "target_value",
                "family",
                "child_value",
                "parent_state",
                "cp",
                "weight",
                "count",
                "relevant_count",
                "proportion",
                "weighted_contribution",
            ]
        )
        for value, rows in score.traces.items():
            for r in rows:
                writer.writerow(
                    [
                        value,
                        repr(r.family.substitute(gamma.bindings)),
                        r.child_value,
                        _parent_state(r, gamma),
                        repr(r.cp),
                        repr(r.weight),
                        r.count,
                        r.relevant_count,
                        repr(r.proportion),
                        repr(r.contribution),
                    ]
                )
