"""Auditing whether a template network's Gibbs conditionals can coexist.

A dependency network is consistent when some joint distribution induces all
of its conditionals. For two binary ground atoms, any joint satisfies a
cross-ratio identity: the ratio p(F,F)/p(T,T) reconstructed by conditioning
first on one atom and then on the other must come out the same along both
paths. The auditor locates template edges whose two endpoints can be made
to see *different* relevant family counts, builds a small database that
realizes the difference, and measures how badly the cross-ratio identity
fails. A nonzero residual certifies that no joint exists.

The residual also has a closed form in terms of the CPT entries and the two
relevant counts; computing it both ways checks the count-weighted score
decomposition end to end.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

from .bayesnet import TemplateBN
from .database import DatabaseView, RelationalDatabase
from .errors import ModelError, ScoreError, WitnessError
from .schema import (
    ATTRIBUTE,
    Grounding,
    PRV,
    RELATIONSHIP,
    Schema,
    Var,
)
from .scoring import (
    GibbsQuery,
    GroundAtom,
    gibbs_probability,
    relevant_family_count,
)

RATIO_TOL = 1e-12  # two CPT odds count as equal below this
CONSISTENT_TOL = 1e-9  # residual below: consistent
INCONSISTENT_TOL = 1e-6  # residual above: inconsistent
_PA_SCAN_LIMIT = 4096


@dataclass(frozen=True)
class DivergentEdge:
    """A template edge whose endpoints can see different relevant counts.

    Requires different variable sets on parent and child (so one side has a
    free variable the other binds) and no shared child node (so the other
    families drop out of the cross-ratio).
    """

    parent: PRV
    child: PRV
    shared_vars: frozenset[Var]
    common_children: tuple[PRV, ...] = ()


def find_divergent_edges(bn: TemplateBN) -> list[DivergentEdge]:
    out = []
    for parent, child in bn.edges:
        if set(parent.vars) == set(child.vars):
            continue
        common = [c for c in bn.children(parent) if c in bn.children(child)]
        if common:
            continue
        out.append(
            DivergentEdge(
                parent=parent,
                child=child,
                shared_vars=frozenset(parent.vars) & frozenset(child.vars),
            )
        )
    return out


def _edge_odds(bn: TemplateBN, edge: DivergentEdge, pa_setting) -> tuple:
    """The child's (value0:value1) odds under each parent value, at pa.

    Returns (odds_when_parent_is_value0, odds_when_parent_is_value1,
    degenerate) where degenerate means a zero denominator was hit.
    """
    parents = bn.parents(edge.child)
    slot = parents.index(edge.parent)
    pa_map = dict(pa_setting)
    vids = []
    for i, p in enumerate(parents):
        if i == slot:
            vids.append(None)
            continue
        decl = bn.functors[p.functor]
        vids.append(decl.value_id(pa_map[p]))
    odds = []
    degenerate = False
    for parent_vid in (0, 1):
        combo = tuple(parent_vid if v is None else v for v in vids)
        num = bn.cp(edge.child, 0, combo)
        den = bn.cp(edge.child, 1, combo)
        if den == 0.0:
            degenerate = True
            odds.append(math.inf if num > 0 else math.nan)
        else:
            odds.append(num / den)
    return odds[0], odds[1], degenerate


def check_nonredundancy(bn: TemplateBN, edge: DivergentEdge, pa_setting) -> bool:
    """True when the edge's CPT odds actually move with the parent value.

    pa_setting assigns a value to every parent of the child other than the
    edge's parent. A zero denominator counts as dependence (degenerate).
    """
    o0, o1, degenerate = _edge_odds(bn, edge, pa_setting)
    if degenerate:
        return True
    return abs(o0 - o1) > RATIO_TOL


def _scan_pa(bn: TemplateBN, edge: DivergentEdge):
    """First parent setting showing dependence; relationships stay true.

    A false relationship parent would zero every relevant count, so only
    true-valued relationship settings can ever be realized by a witness.
    """
    parents = [p for p in bn.parents(edge.child) if p != edge.parent]
    ranges = []
    for p in parents:
        decl = bn.functors[p.functor]
        if decl.kind == RELATIONSHIP:
            ranges.append(("T",))
        else:
            ranges.append(decl.range)
    total = 1
    for r in ranges:
        total *= len(r)
    if total > _PA_SCAN_LIMIT:
        total = _PA_SCAN_LIMIT
    fallback = None
    for i, combo in enumerate(itertools.product(*ranges)):
        if i >= total:
            break
        setting = tuple(zip(parents, combo))
        o0, o1, degenerate = _edge_odds(bn, edge, setting)
        if degenerate:
            fallback = fallback or setting
            continue
        if abs(o0 - o1) > RATIO_TOL:
            return setting, False
    if fallback is not None:
        return fallback, True
    return None, False


@dataclass
class ConsistencyWitness:
    """A concrete database on which the two targets count differently.

    gamma grounds both endpoints of the edge; evidence fixes every other
    atom. n1 is the child-family relevant total seen from the masked parent
    atom, n2 the total seen from the masked child atom, and n_common the
    groundings compatible with both targets at once.
    """

    edge: DivergentEdge
    gamma: Grounding
    evidence: RelationalDatabase
    n1: int
    n2: int
    n_common: int
    pa_setting: tuple = ()

    @property
    def parent_atom(self) -> GroundAtom:
        g = self.edge.parent.substitute(self.gamma.bindings)
        return (g.functor, tuple(g.args))

    @property
    def child_atom(self) -> GroundAtom:
        g = self.edge.child.substitute(self.gamma.bindings)
        return (g.functor, tuple(g.args))


def _family_layout(bn: TemplateBN, edge: DivergentEdge):
    """Ordered family variables and their populations for the child node."""
    var_pops: dict[Var, str] = {}
    fam_vars: list[Var] = []
    for prv in (edge.child, *bn.parents(edge.child)):
        decl = bn.functors[prv.functor]
        for arg, pop in zip(prv.args, decl.arg_populations):
            if isinstance(arg, Var):
                var_pops[arg] = pop
                if arg not in fam_vars:
                    fam_vars.append(arg)
    return fam_vars, var_pops


def _relevant_total(view, bn, family, constraint, target_atom) -> int:
    parents = bn.parents(family)
    ranges = [bn.functors[family.functor].range]
    ranges += [bn.functors[p.functor].range for p in parents]
    prvs = (family, *parents)
    total = 0
    for combo in itertools.product(*ranges):
        literals = list(zip(prvs, combo))
        _, rel = relevant_family_count(view, literals, constraint, target_atom)
        total += rel
    return total


def construct_witness(
    bn: TemplateBN, edge: DivergentEdge, pa_setting=None
) -> ConsistencyWitness:
    """Build a small database where the edge's two views count differently.

    Both endpoints must be binary attributes. The construction grounds the
    child family injectively, tries universes with one spare constant, and
    keeps the first candidate whose two relevant totals verifiably differ.
    """
    for prv in (edge.parent, edge.child):
        decl = bn.functors[prv.functor]
        if decl.kind != ATTRIBUTE:
            raise WitnessError(
                f"{prv} is a relationship; masking it destroys the counts "
                "the comparison needs"
            )
        if len(decl.range) != 2:
            raise WitnessError(f"{prv} is not binary")
    if edge.child not in bn.children(edge.parent):
        raise WitnessError(f"{edge.parent} -> {edge.child} is not in the model")

    if pa_setting is None:
        pa_setting, _ = _scan_pa(bn, edge)
        if pa_setting is None:
            raise WitnessError(
                f"no parent setting makes {edge.parent} -> {edge.child} "
                "informative"
            )
    pa_map = dict(pa_setting)
    fam_vars, var_pops = _family_layout(bn, edge)
    rel_parents = [
        p
        for p in bn.parents(edge.child)
        if bn.functors[p.functor].kind == RELATIONSHIP
    ]
    attr_parents = [
        p
        for p in bn.parents(edge.child)
        if bn.functors[p.functor].kind == ATTRIBUTE and p != edge.parent
    ]

    # One private constant per family variable, grouped by population.
    base_consts: dict[str, list[str]] = {}
    gamma_map: dict[Var, str] = {}
    for v in fam_vars:
        pop = var_pops[v]
        consts = base_consts.setdefault(pop, [])
        name = f"{pop}{len(consts)}"
        consts.append(name)
        gamma_map[v] = name
    gamma_full = Grounding(gamma_map)
    union_vars = set(edge.parent.vars) | set(edge.child.vars)
    diff_vars = [v for v in fam_vars if (v in union_vars) and
                 (v not in edge.parent.vars or v not in edge.child.vars)]

    populations_used = sorted({var_pops[v] for v in fam_vars})
    candidates = []
    for extra_pop in populations_used:
        deviation_vars = [v for v in diff_vars if var_pops[v] == extra_pop]
        for dev in deviation_vars:
            candidates.append((extra_pop, (dev,)))
        if len(deviation_vars) > 1:
            candidates.append((extra_pop, tuple(deviation_vars)))
    if not candidates:
        raise WitnessError(
            f"every variable of {edge.child}'s family is shared with both "
            "endpoints; the two views always count alike"
        )

    for extra_pop, deviations in candidates:
        pops = {p: list(cs) for p, cs in base_consts.items()}
        extra_const = f"{extra_pop}x"
        pops[extra_pop] = pops[extra_pop] + [extra_const]
        schema = Schema(pops, list(bn.functors.values()))

        groundings = [dict(gamma_map)]
        for dev in deviations:
            g = dict(gamma_map)
            g[dev] = extra_const
            groundings.append(g)

        assigned: dict[GroundAtom, str] = {}
        conflict = False
        for g in groundings:
            for p in attr_parents:
                atom = p.substitute(g)
                key = (atom.functor, tuple(atom.args))
                want = pa_map[p]
                if assigned.get(key, want) != want:
                    conflict = True
                    break
                assigned[key] = want
            if conflict:
                break
        if conflict:
            continue

        atoms = []
        for name, decl in schema.functors.items():
            if decl.kind != ATTRIBUTE:
                continue
            default = decl.range[0]
            for combo in itertools.product(
                *(pops[p] for p in decl.arg_populations)
            ):
                atoms.append((name, combo, assigned.get((name, combo), default)))
        for g in groundings:
            for r in rel_parents:
                atom = r.substitute(g)
                atoms.append((atom.functor, tuple(atom.args), "T"))
        db = RelationalDatabase.from_atoms(schema, atoms)

        parent_atom_prv = edge.parent.substitute(gamma_map)
        parent_atom = (parent_atom_prv.functor, tuple(parent_atom_prv.args))
        child_atom_prv = edge.child.substitute(gamma_map)
        child_atom = (child_atom_prv.functor, tuple(child_atom_prv.args))

        view1 = DatabaseView(db, {child_atom: bn.functors[edge.child.functor].range[0]})
        n1 = _relevant_total(
            view1, bn, edge.child,
            gamma_full.restrict(edge.parent.vars), parent_atom,
        )
        view2 = DatabaseView(db, {parent_atom: bn.functors[edge.parent.functor].range[0]})
        n2 = _relevant_total(
            view2, bn, edge.child,
            gamma_full.restrict(edge.child.vars), child_atom,
        )
        n_common = _relevant_total(
            view2, bn, edge.child, gamma_full.restrict(union_vars), child_atom,
        )
        if n1 >= 1 and n2 >= 1 and n1 != n2 and n_common >= 1:
            if not _pa_realized(db, bn, edge, pa_map, gamma_full, pops, var_pops):
                continue
            return ConsistencyWitness(
                edge=edge,
                gamma=gamma_full.restrict(union_vars),
                evidence=db,
                n1=n1,
                n2=n2,
                n_common=n_common,
                pa_setting=tuple(pa_setting),
            )
    raise WitnessError(
        f"could not make the two views of {edge.parent} -> {edge.child} "
        "count differently"
    )


def _pa_realized(db, bn, edge, pa_map, gamma_full, pops, var_pops) -> bool:
    """Every family grounding matching both targets must realize pa exactly.

    Those groundings' parameter terms are the only ones that survive the
    cross-ratio cancellation, so their parent values must be the audited
    setting, not a default.
    """
    fam_vars, _ = _family_layout(bn, edge)
    bound = gamma_full.bindings
    free = [v for v in fam_vars
            if v not in edge.parent.vars and v not in edge.child.vars]
    rel_parents = [
        p for p in bn.parents(edge.child)
        if bn.functors[p.functor].kind == RELATIONSHIP
    ]
    attr_parents = [
        p for p in bn.parents(edge.child)
        if bn.functors[p.functor].kind == ATTRIBUTE and p != edge.parent
    ]
    for combo in itertools.product(*(pops[var_pops[v]] for v in free)):
        g = dict(bound)
        g.update(zip(free, combo))
        relevant = True
        for r in rel_parents:
            atom = r.substitute(g)
            if db.value_of(atom.functor, tuple(atom.args)) != "T":
                relevant = False
                break
        if not relevant:
            continue
        for p in attr_parents:
            atom = p.substitute(g)
            if db.value_of(atom.functor, tuple(atom.args)) != pa_map[p]:
                return False
    return True


@dataclass
class CrossRatioResidual:
    """Both reconstructions of the joint ratio and their log gap."""

    lhs: float
    rhs: float
    residual: float


def cross_ratio_residual(
    bn: TemplateBN, witness: ConsistencyWitness
) -> CrossRatioResidual:
    """Measure the two-path cross-ratio identity on the witness database.

    Four conditionals are computed, each with the opposite target clamped;
    a consistent set of conditionals would make both sides equal.
    """
    edge = witness.edge
    r1 = bn.functors[edge.parent.functor].range
    r2 = bn.functors[edge.child.functor].range
    db = witness.evidence
    p_atom, c_atom = witness.parent_atom, witness.child_atom

    def child_dist(parent_value: str) -> dict[str, float]:
        view = DatabaseView(db, {p_atom: parent_value})
        q = GibbsQuery(view, edge.child, witness.gamma)
        return gibbs_probability(q, bn)

    def parent_dist(child_value: str) -> dict[str, float]:
        view = DatabaseView(db, {c_atom: child_value})
        q = GibbsQuery(view, edge.parent, witness.gamma)
        return gibbs_probability(q, bn)

    c_given_p0 = child_dist(r1[0])
    c_given_p1 = child_dist(r1[1])
    p_given_c0 = parent_dist(r2[0])
    p_given_c1 = parent_dist(r2[1])
    for dist in (c_given_p0, c_given_p1, p_given_c0, p_given_c1):
        if any(v == 0.0 for v in dist.values()):
            raise ScoreError("a clamped conditional hit an exact zero")
    lhs = (c_given_p0[r2[0]] / c_given_p0[r2[1]]) * (
        p_given_c1[r1[0]] / p_given_c1[r1[1]]
    )
    rhs = (p_given_c0[r1[0]] / p_given_c0[r1[1]]) * (
        c_given_p1[r2[0]] / c_given_p1[r2[1]]
    )
    return CrossRatioResidual(
        lhs=lhs, rhs=rhs, residual=abs(math.log(lhs) - math.log(rhs))
    )


def closed_form_residual(bn: TemplateBN, witness: ConsistencyWitness) -> float:
    """The residual predicted from CPT entries and the two relevant totals.

    Everything except the shared-grounding terms cancels between the two
    paths, leaving |N/n2 - N/n1| * |log odds gap| — so this must agree with
    the measured residual whenever the witness is cleanly constructed.
    """
    edge = witness.edge
    o0, o1, degenerate = _edge_odds(bn, edge, witness.pa_setting)
    if degenerate:
        raise ScoreError("closed form undefined: zero CPT odds denominator")
    exponent = abs(
        witness.n_common / witness.n2 - witness.n_common / witness.n1
    )
    return exponent * abs(math.log(o0) - math.log(o1))


@dataclass
class EdgeAudit:
    """Outcome of auditing one divergent edge."""

    parent: str
    child: str
    status: str  # audited | skipped | redundant | unconstructible
    verdict: str | None = None  # inconsistent | consistent | inconclusive
    pa_setting: dict = field(default_factory=dict)
    n1: int | None = None
    n2: int | None = None
    n_common: int | None = None
    lhs: float | None = None
    rhs: float | None = None
    residual: float | None = None
    closed_form: float | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "parent": self.parent,
            "child": self.child,
            "status": self.status,
            "verdict": self.verdict,
            "pa_setting": self.pa_setting,
            "n1": self.n1,
            "n2": self.n2,
            "n_common": self.n_common,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "closed_form": self.closed_form,
            "notes": list(self.notes),
        }


@dataclass
class AuditReport:
    """Model-level verdict plus the per-edge evidence."""

    verdict: str
    edges: list[EdgeAudit]
    consistent_tol: float = CONSISTENT_TOL
    inconsistent_tol: float = INCONSISTENT_TOL

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "consistent_tol": self.consistent_tol,
            "inconsistent_tol": self.inconsistent_tol,
            "edges": [e.to_dict() for e in self.edges],
        }

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("indent", 1)
        return json.dumps(self.to_dict(), **kwargs)


def audit(bn: TemplateBN) -> AuditReport:
    """Audit every divergent edge of a parameterized template network."""
    if not bn.is_parameterized:
        raise ModelError("audit requires CPTs; estimate parameters first")
    edges = find_divergent_edges(bn)
    if not edges:
        return AuditReport(verdict="no divergent edge found", edges=[])
    entries: list[EdgeAudit] = []
    for edge in edges:
        entry = EdgeAudit(parent=repr(edge.parent), child=repr(edge.child),
                          status="skipped")
        entries.append(entry)
        kinds = [bn.functors[p.functor].kind for p in (edge.parent, edge.child)]
        sizes = [len(bn.functors[p.functor].range)
                 for p in (edge.parent, edge.child)]
        if RELATIONSHIP in kinds:
            entry.notes.append("relationship endpoint; masking it would "
                               "zero the relevant counts")
            continue
        if sizes != [2, 2]:
            entry.notes.append("non-binary endpoint")
            continue
        pa_setting, degenerate = _scan_pa(bn, edge)
        if pa_setting is None:
            entry.status = "redundant"
            entry.verdict = "inconclusive"
            entry.notes.append("no parent setting shows dependence")
            continue
        entry.pa_setting = {repr(p): v for p, v in pa_setting}
        if degenerate:
            entry.notes.append("dependence only via a zero CPT entry")
        try:
            witness = construct_witness(bn, edge, pa_setting)
        except WitnessError as exc:
            entry.status = "unconstructible"
            entry.verdict = "inconclusive"
            entry.notes.append(str(exc))
            continue
        entry.n1, entry.n2 = witness.n1, witness.n2
        entry.n_common = witness.n_common
        try:
            measured = cross_ratio_residual(bn, witness)
            entry.closed_form = closed_form_residual(bn, witness)
        except ScoreError as exc:
            entry.status = "unconstructible"
            entry.verdict = "inconclusive"
            entry.notes.append(str(exc))
            continue
        entry.status = "audited"
        entry.lhs, entry.rhs = measured.lhs, measured.rhs
        entry.residual = measured.residual
        if abs(measured.residual - entry.closed_form) > 1e-7:
            entry.notes.append(
                "measured residual and closed form disagree; some other "
                "family also touches a masked atom"
            )
        if measured.residual > INCONSISTENT_TOL:
            entry.verdict = "inconsistent"
        elif measured.residual < CONSISTENT_TOL:
            entry.verdict = "consistent"
        else:
            entry.verdict = "inconclusive"
    if any(e.verdict == "inconsistent" for e in entries):
        verdict = "inconsistent"
    elif entries and all(e.verdict == "consistent" for e in entries):
        verdict = "consistent"
    else:
        verdict = "inconclusive"
    return AuditReport(verdict=verdict, edges=entries)
