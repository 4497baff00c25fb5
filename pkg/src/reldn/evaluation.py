"""Cross-validation harness: entity-subgraph folds, conditional
log-likelihood, precision-recall area, and a forward-sampling generator
for synthetic databases.

Folds partition the *entities* of each population; a fold's database keeps
only atoms all of whose arguments fall on the same side, so cross-fold
relationship tuples vanish entirely instead of leaking between train and
test.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bayesnet import TemplateBN, estimate_parameters
from .database import Geometry, RelationalDatabase
from .errors import DataError, GroundingError, ScoreError
from .schema import ATTRIBUTE, RELATIONSHIP, Schema, Var
from .scoring import GibbsQuery, GroundAtom, gibbs_probability

_SAMPLE_CHUNK = 1 << 20


@dataclass(frozen=True)
class FoldSpec:
    """A seeded partition of every population's constants into folds."""

    fold_count: int
    entity_assignment: dict  # population -> {constant: fold id}
    seed: int

    def side(self, fold: int, invert: bool = False):
        """Constants per population on (or off) the given fold."""
        out = {}
        for pop, assign in self.entity_assignment.items():
            out[pop] = [
                c for c, f in assign.items() if (f == fold) != invert
            ]
        return out


def assign_folds(schema: Schema, fold_count: int, seed: int = 0) -> FoldSpec:
    if fold_count < 2:
        raise DataError("fold_count must be at least 2")
    rng = np.random.default_rng(seed)
    assignment = {}
    for pop, consts in schema.populations.items():
        if len(consts) < fold_count:
            raise DataError(
                f"population {pop!r} has {len(consts)} constants; "
                f"cannot make {fold_count} folds"
            )
        order = list(consts)
        rng.shuffle(order)
        assignment[pop] = {c: i % fold_count for i, c in enumerate(order)}
    return FoldSpec(fold_count=fold_count, entity_assignment=assignment,
                    seed=seed)


def restrict_database(db: RelationalDatabase, keep: dict) -> RelationalDatabase:
    """Sub-database over a subset of each population's constants.

    Keeps attribute atoms and relationship tuples whose every argument
    survives; constants keep their original declaration order.
    """
    schema = db.schema
    new_pops = {}
    keep_ids = {}
    remap = {}
    for pop, consts in schema.populations.items():
        chosen = set(keep.get(pop, consts))
        kept = [c for c in consts if c in chosen]
        if not kept:
            raise DataError(f"population {pop!r} would become empty")
        new_pops[pop] = kept
        ids = np.array([schema.const_id(pop, c) for c in kept], dtype=np.int64)
        keep_ids[pop] = ids
        m = np.full(len(consts), -1, dtype=np.int64)
        m[ids] = np.arange(len(ids))
        remap[pop] = m
    sub_schema = Schema(new_pops, list(schema.functors.values()))
    sub_geom = Geometry(sub_schema)
    attr_values = {}
    rel_true = {}
    for name, decl in schema.functors.items():
        pops = decl.arg_populations
        if decl.kind == ATTRIBUTE:
            dense = db.dense_values(name)
            shaped = dense.reshape(tuple(len(schema.populations[p]) for p in pops))
            attr_values[name] = shaped[np.ix_(*(keep_ids[p] for p in pops))].ravel()
        else:
            packed = db.value_atoms(name, decl.value_id("T"))
            if packed.size == 0:
                rel_true[name] = packed
                continue
            cols = [db.geom.unpack_column(name, packed, i) for i in range(len(pops))]
            new_cols = [remap[p][c] for p, c in zip(pops, cols)]
            ok = np.ones(packed.size, dtype=bool)
            for c in new_cols:
                ok &= c >= 0
            repacked = np.zeros(int(ok.sum()), dtype=np.int64)
            for i, c in enumerate(new_cols):
                repacked += c[ok] * sub_geom.strides[name][i]
            rel_true[name] = repacked
    return RelationalDatabase.from_arrays(sub_schema, attr_values, rel_true)


def _merge_fold_subgraphs(db: RelationalDatabase, spec: FoldSpec, exclude: int):
    """Union of the induced per-fold subgraphs off the excluded fold.

    Merging keeps each fold's internal relationship tuples only; a tuple
    whose endpoints sit in two different folds belongs to neither subgraph,
    so it never reappears on the merged side.
    """
    restricted = restrict_database(db, spec.side(exclude, invert=True))
    assign = spec.entity_assignment
    kept = []
    for functor, args, value in restricted.atoms():
        decl = restricted.schema.functor(functor)
        if decl.kind == RELATIONSHIP:
            folds = {
                assign[pop][c] for pop, c in zip(decl.arg_populations, args)
            }
            if len(folds) > 1:
                continue
        kept.append((functor, args, value))
    return RelationalDatabase.from_atoms(restricted.schema, kept)


def subgraph_split(db: RelationalDatabase, fold_count: int, seed: int = 0):
    """Entity-partition cross-validation pairs (train db, test db).

    Every relationship tuple crossing two folds is dropped on both sides,
    including tuples between two train folds.
    """
    spec = assign_folds(db.schema, fold_count, seed)
    pairs = []
    for fold in range(fold_count):
        test = restrict_database(db, spec.side(fold))
        train = _merge_fold_subgraphs(db, spec, exclude=fold)
        pairs.append((train, test))
    return pairs


@dataclass
class FactScore:
    """One test atom: its observed value and the model's view of it."""

    atom: GroundAtom
    truth: str
    probability: float  # of the observed value
    positive_probability: float | None  # of the designated positive value
    label: bool | None  # truth == positive value, when binary


def _positive_value(decl) -> str | None:
    if decl.kind == RELATIONSHIP:
        return "T"
    if len(decl.range) == 2:
        return decl.range[-1]
    return None


def score_facts(
    bn: TemplateBN, db: RelationalDatabase, predicates=None
) -> tuple[list[FactScore], int]:
    """Score every ground atom of the chosen functors against the rest.

    Each atom is masked in turn with the remaining database as evidence.
    Returns the scored facts and the number whose observed value came out
    with probability zero.
    """
    node_functors = []
    for node in bn.nodes:
        if node.functor not in node_functors:
            node_functors.append(node.functor)
    if predicates is None:
        predicates = node_functors
    unknown = [p for p in predicates if p not in node_functors]
    if unknown:
        raise DataError(f"no model node covers predicate(s) {unknown}")
    schema = db.schema
    facts = []
    zero_count = 0
    for functor in predicates:
        decl = schema.functor(functor)
        positive = _positive_value(decl)
        for args in itertools.product(
            *(schema.populations[p] for p in decl.arg_populations)
        ):
            truth = db.value_of(functor, args)
            query = GibbsQuery.for_atom(db, bn, functor, args)
            try:
                dist = gibbs_probability(query, bn)
                p_true = dist[truth]
            except ScoreError:
                dist = None
                p_true = 0.0
            if p_true == 0.0:
                zero_count += 1
            facts.append(
                FactScore(
                    atom=(functor, tuple(args)),
                    truth=truth,
                    probability=p_true,
                    positive_probability=(
                        dist[positive] if dist and positive else None
                    ),
                    label=(truth == positive) if positive else None,
                )
            )
    return facts, zero_count


def conditional_log_likelihood(
    bn: TemplateBN, db: RelationalDatabase, predicates=None
) -> float:
    """Mean log-probability of each ground atom given all the others."""
    facts, _ = score_facts(bn, db, predicates)
    if not facts:
        raise DataError("no facts to score")
    total = 0.0
    for f in facts:
        total += math.log(f.probability) if f.probability > 0 else -math.inf
    return total / len(facts)


def auc_pr(scored) -> float:
    """Area under the precision-recall curve, stepwise over thresholds.

    scored: iterable of (score, label). Equal scores form one threshold;
    each threshold contributes (recall gain) x (its own precision).
    """
    items = sorted(scored, key=lambda sl: -sl[0])
    positives = sum(1 for _, label in items if label)
    if positives == 0:
        raise DataError("precision-recall area needs at least one positive")
    area = 0.0
    tp = fp = 0
    prev_recall = 0.0
    i = 0
    while i < len(items):
        j = i
        while j < len(items) and items[j][0] == items[i][0]:
            if items[j][1]:
                tp += 1
            else:
                fp += 1
            j += 1
        recall = tp / positives
        precision = tp / (tp + fp)
        area += (recall - prev_recall) * precision
        prev_recall = recall
        i = j
    return area


@dataclass
class MetricSummary:
    mean: float
    stderr: float
    values: list = field(default_factory=list)

    @classmethod
    def of(cls, values) -> "MetricSummary":
        vals = [float(v) for v in values]
        mean = sum(vals) / len(vals)
        if len(vals) > 1 and all(math.isfinite(v) for v in vals):
            var = sum((v - mean) ** 2 for v in vals) / (len(vals) - 1)
            stderr = math.sqrt(var / len(vals))
        else:
            stderr = 0.0
        return cls(mean=mean, stderr=stderr, values=vals)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr,
                "per_fold": list(self.values)}


@dataclass
class MetricReport:
    """Cross-validated conditional log-likelihood and PR-area summary."""

    cll: MetricSummary
    auc_pr: MetricSummary | None
    per_predicate: dict
    timing: dict  # predicate -> seconds, summed over folds
    fold_count: int
    seed: int
    zero_probability_facts: int = 0
    facts: list | None = None

    def to_dict(self) -> dict:
        return {
            "fold_count": self.fold_count,
            "seed": self.seed,
            "cll": self.cll.to_dict(),
            "auc_pr": self.auc_pr.to_dict() if self.auc_pr else None,
            "per_predicate": {
                name: {
                    "cll": s["cll"].to_dict(),
                    "auc_pr": s["auc_pr"].to_dict() if s["auc_pr"] else None,
                }
                for name, s in self.per_predicate.items()
            },
            "timing_seconds": dict(self.timing),
            "zero_probability_facts": self.zero_probability_facts,
        }


def evaluate(
    bn: TemplateBN,
    db: RelationalDatabase,
    fold_count: int = 5,
    seed: int = 0,
    pseudocount: float = 1.0,
    predicates=None,
    collect_facts: bool = False,
) -> MetricReport:
    """Re-estimate per fold on the train side, score the held-out side.

    Metrics are macro-averaged: per predicate within a fold, then across
    folds, so populous predicates do not drown the rest.
    """
    pairs = subgraph_split(db, fold_count, seed)
    node_functors = []
    for node in bn.nodes:
        if node.functor not in node_functors:
            node_functors.append(node.functor)
    if predicates is None:
        predicates = node_functors
    per_pred_cll: dict[str, list[float]] = {p: [] for p in predicates}
    per_pred_auc: dict[str, list[float]] = {p: [] for p in predicates}
    timing = {p: 0.0 for p in predicates}
    fold_cll, fold_auc = [], []
    zero_total = 0
    all_facts: list[FactScore] = []
    for train, test in pairs:
        model = estimate_parameters(bn, train, pseudocount=pseudocount)
        pred_cll, pred_auc = [], []
        for pred in predicates:
            t0 = time.perf_counter()
            facts, zeros = score_facts(model, test, [pred])
            timing[pred] += time.perf_counter() - t0
            zero_total += zeros
            if collect_facts:
                all_facts.extend(facts)
            lls = [
                math.log(f.probability) if f.probability > 0 else -math.inf
                for f in facts
            ]
            cll = sum(lls) / len(lls)
            per_pred_cll[pred].append(cll)
            pred_cll.append(cll)
            labeled = [
                (f.positive_probability, f.label)
                for f in facts
                if f.label is not None
            ]
            if labeled and any(label for _, label in labeled):
                auc = auc_pr(labeled)
                per_pred_auc[pred].append(auc)
                pred_auc.append(auc)
        fold_cll.append(sum(pred_cll) / len(pred_cll))
        if pred_auc:
            fold_auc.append(sum(pred_auc) / len(pred_auc))
    per_predicate = {
        p: {
            "cll": MetricSummary.of(per_pred_cll[p]),
            "auc_pr": (
                MetricSummary.of(per_pred_auc[p]) if per_pred_auc[p] else None
            ),
        }
        for p in predicates
    }
    return MetricReport(
        cll=MetricSummary.of(fold_cll),
        auc_pr=MetricSummary.of(fold_auc) if fold_auc else None,
        per_predicate=per_predicate,
        timing=timing,
        fold_count=fold_count,
        seed=seed,
        zero_probability_facts=zero_total,
        facts=all_facts if collect_facts else None,
    )


def _template_var_pops(bn: TemplateBN) -> dict[Var, str]:
    var_pops: dict[Var, str] = {}
    for node in bn.nodes:
        decl = bn.functors[node.functor]
        for arg, pop in zip(node.args, decl.arg_populations):
            if isinstance(arg, Var):
                var_pops[arg] = pop
    return var_pops


def generate_synthetic(
    sizes: dict, bn: TemplateBN, seed: int = 0, prefix: str = ""
) -> RelationalDatabase:
    """Forward-sample a database from a generator network.

    Every functor needs exactly one template node whose parents reuse the
    child's variables, so each ground atom is drawn from one well-defined
    family; nodes are sampled in template topological order, vectorized in
    chunks, so million-tuple spaces stay cheap.
    """
    if not bn.is_parameterized:
        raise GroundingError("generator has no CPTs")
    seen = set()
    for node in bn.nodes:
        if node.functor in seen:
            raise GroundingError(
                f"two template nodes over {node.functor}; ground families "
                "would be ambiguous"
            )
        seen.add(node.functor)
        if any(not isinstance(a, Var) for a in node.args) or len(
            set(node.args)
        ) != len(node.args):
            raise GroundingError(
                f"{node} does not range over its functor's full space"
            )
        for p in bn.parents(node):
            if not set(p.vars) <= set(node.vars):
                raise GroundingError(
                    f"parent {p} of {node} brings in fresh variables; "
                    "forward sampling needs determinate families"
                )
    missing = [f for f in bn.functors if f not in seen]
    if missing:
        raise GroundingError(f"no template node for functor(s) {missing}")

    pops = {}
    for pop, size in sizes.items():
        if size < 1:
            raise DataError(f"population {pop!r} must have at least 1 entity")
        pops[pop] = [f"{prefix}{pop}{i}" for i in range(size)]
    for decl in bn.functors.values():
        for pop in decl.arg_populations:
            if pop not in pops:
                raise DataError(f"no size given for population {pop!r}")
    schema = Schema(pops, list(bn.functors.values()))
    geom = Geometry(schema)
    var_pops = _template_var_pops(bn)
    rng = np.random.default_rng(seed)

    values: dict[str, np.ndarray] = {}
    for node in bn.topological_order():
        functor = node.functor
        decl = bn.functors[functor]
        space = geom.space[functor]
        parents = bn.parents(node)
        cpt = bn.cpts[node]
        rows = cpt.reshape(-1, len(decl.range))
        cum = np.cumsum(rows, axis=1)
        var_of_pos = list(node.args)  # all Vars by determinacy of the child
        out = np.empty(space, dtype=np.int16)
        for start in range(0, space, _SAMPLE_CHUNK):
            idx = np.arange(start, min(start + _SAMPLE_CHUNK, space),
                            dtype=np.int64)
            var_ids = {}
            for pos, v in enumerate(var_of_pos):
                size_v = len(pops[var_pops[v]])
                var_ids[v] = (idx // geom.strides[functor][pos]) % size_v
            code = np.zeros(idx.size, dtype=np.int64)
            for p in parents:
                pdecl = bn.functors[p.functor]
                packed = np.zeros(idx.size, dtype=np.int64)
                for pos, arg in enumerate(p.args):
                    if isinstance(arg, Var):
                        ids = var_ids[arg]
                    else:
                        pop = pdecl.arg_populations[pos]
                        ids = schema.const_id(pop, arg)
                    packed = packed + ids * geom.strides[p.functor][pos]
                code = code * len(pdecl.range) + values[p.functor][packed]
            u = rng.random(idx.size)
            drawn = (u[:, None] > cum[code]).sum(axis=1)
            out[idx] = np.minimum(drawn, len(decl.range) - 1).astype(np.int16)
        values[functor] = out

    attr_values = {}
    rel_true = {}
    for name, decl in schema.functors.items():
        if decl.kind == ATTRIBUTE:
            attr_values[name] = values[name]
        else:
            true_id = decl.value_id("T")
            rel_true[name] = np.flatnonzero(values[name] == true_id).astype(
                np.int64
            )
    return RelationalDatabase.from_arrays(schema, attr_values, rel_true)
