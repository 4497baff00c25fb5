"""Ground graphs, the exact-joint oracle, and the ordered Gibbs sampler."""

import math

import numpy as np
import pytest

from reldn import (
    ATTRIBUTE,
    FunctorDecl,
    GibbsQuery,
    GroundingError,
    MutableState,
    PRV,
    QueryError,
    SamplerDeadlockError,
    Schema,
    TemplateBN,
    Var,
    exact_joint,
    gibbs_probability,
    gibbs_sample,
    ground_template,
    moralize_to_rdn,
)

import helpers
from fixtures import social_bn
from test_bayesnet import chain_bn

UNIT = {"unit": ["u0"]}


def test_ground_template_counts():
    bn = social_bn()
    people = ["a", "b", "c"]
    graph = ground_template(bn, {"people": people})
    assert graph.node_count == 3 + 9 + 3
    # gender->gender for ordered distinct pairs, friend->gender for all pairs,
    # gender->coffee per person; self-loops are dropped
    assert graph.edge_count == 6 + 9 + 3


def test_ground_template_requires_population():
    bn = social_bn()
    with pytest.raises(QueryError):
        ground_template(bn, {})


def test_grounding_rdn_doubles_edges():
    bn, _ = chain_bn()
    graph_bn = ground_template(bn, UNIT)
    graph_rdn = ground_template(moralize_to_rdn(bn), UNIT)
    assert graph_rdn.node_count == graph_bn.node_count
    assert graph_rdn.edge_count == 2 * graph_bn.edge_count


# ---------------------------------------------------------------------------
# exact joint


def test_exact_joint_matches_product_oracle():
    bn, _ = chain_bn()
    graph = ground_template(bn, UNIT)
    table = exact_joint(graph, bn)
    assert table.probs.sum() == pytest.approx(1.0, abs=1e-12)
    want = helpers.brute_joint(bn)
    for combo, p in want.items():
        assignment = {
            (n.functor, ("u0",)): bn.functors[n.functor].range[v]
            for n, v in zip(bn.nodes, combo)
        }
        assert table.prob(assignment) == pytest.approx(p, abs=1e-12)


def test_exact_joint_marginal_and_conditional():
    bn, (x, y, z) = chain_bn()
    table = exact_joint(ground_template(bn, UNIT), bn)
    # P(x=T) is the prior
    assert table.marginal(("x", ("u0",)))["T"] == pytest.approx(0.7, abs=1e-12)
    # P(y | x=T) reads off the CPT
    cond = table.conditional(("y", ("u0",)), {("x", ("u0",)): "T"})
    assert cond["T"] == pytest.approx(0.9, abs=1e-12)


def test_exact_joint_rejects_ambiguous_families():
    # gender(B) -> gender(A) leaves B free given the child atom, so ground
    # atoms have no single well-defined family; enumeration must refuse
    bn = social_bn()
    graph = ground_template(bn, {"people": ["a", "b"]})
    with pytest.raises(GroundingError, match="ambiguous"):
        exact_joint(graph, bn)


def test_exact_joint_rejects_oversized_tables():
    n = 21  # 2^21 cells crosses the enumeration budget
    functors = {
        f"x{i}": FunctorDecl(f"x{i}", ("unit",), ("T", "F"), ATTRIBUTE)
        for i in range(n)
    }
    e = Var("E")
    nodes = [PRV(f"x{i}", (e,)) for i in range(n)]
    cpts = {node: np.array([0.5, 0.5]) for node in nodes}
    bn = TemplateBN(functors, nodes, [], cpts)
    graph = ground_template(bn, UNIT)
    with pytest.raises(GroundingError, match="cell"):
        exact_joint(graph, bn)


def test_gibbs_conditionals_match_joint_on_random_nets():
    rng = np.random.default_rng(13)
    for _ in range(30):
        bn, schema = helpers.random_propositional_bn(rng)
        joint = helpers.brute_joint(bn)
        # one random full assignment, every node's conditional checked
        combo = tuple(int(rng.integers(2)) for _ in bn.nodes)
        values = {f.name: v for f, v in zip(schema.functors.values(), combo)}
        db = helpers.assignment_db(schema, values)
        for i, node in enumerate(bn.nodes):
            rest = {
                other: combo[j]
                for j, other in enumerate(bn.nodes)
                if other != node
            }
            want = helpers.joint_conditional(bn, joint, node, rest)
            got = gibbs_probability(
                GibbsQuery.for_atom(db, bn, node.functor, ("u0",)), bn
            )
            for k, v in enumerate(bn.functors[node.functor].range):
                assert got[v] == pytest.approx(want[k], abs=1e-9)


# ---------------------------------------------------------------------------
# mutable state


def test_mutable_state_round_trip():
    schema = Schema(
        {"people": ["a", "b"]},
        [
            FunctorDecl("g", ("people",), ("W", "M"), ATTRIBUTE),
            FunctorDecl("r", ("people", "people"), ("T", "F"), "relationship"),
        ],
    )
    st = MutableState(schema)
    st.set_atom(("g", ("a",)), "W")
    st.set_atom(("g", ("b",)), "M")
    st.set_atom(("r", ("a", "b")), "T")
    assert st.get_atom(("g", ("a",))) == "W"
    assert st.get_atom(("r", ("a", "b"))) == "T"
    # the store protocol sees explicit F cells as enumerable
    assert st.enumerable("r", 1)
    st.set_atom(("r", ("a", "b")), "F")
    assert st.get_atom(("r", ("a", "b"))) == "F"


# ---------------------------------------------------------------------------
# ordered Gibbs


def test_sampler_matches_exact_joint_on_chain():
    bn, _ = chain_bn()
    graph = ground_template(bn, UNIT)
    table = exact_joint(graph, bn)
    chain = gibbs_sample(graph, bn, {}, iterations=22000, seed=4, track_joint=True)
    n = chain.samples
    assert n == 22000 - 2200
    for combo, count in chain.joint_counts.items():
        assignment = dict(zip(chain.order, combo))
        p = table.prob(assignment)
        sigma = math.sqrt(p * (1 - p) / n)
        assert abs(count / n - p) <= 3 * sigma + 1e-12, (combo, count / n, p)


def test_sampler_is_deterministic_per_seed():
    bn, _ = chain_bn()
    graph = ground_template(bn, UNIT)
    a = gibbs_sample(graph, bn, {}, iterations=500, seed=9)
    b = gibbs_sample(graph, bn, {}, iterations=500, seed=9)
    assert a.marginals == b.marginals
    assert a.state == b.state
    c = gibbs_sample(graph, bn, {}, iterations=500, seed=10)
    assert c.marginals != a.marginals


def test_sampler_respects_evidence():
    bn, (x, y, z) = chain_bn()
    graph = ground_template(bn, UNIT)
    ev = {("x", ("u0",)): "F"}
    chain = gibbs_sample(graph, bn, ev, iterations=3000, seed=1)
    assert chain.state[("x", ("u0",))] == "F"
    assert ("x", ("u0",)) not in chain.order  # evidence is never resampled
    # P(y=T | x=F) = 0.2; sampled frequency should be in the neighborhood
    assert chain.marginals[("y", ("u0",))]["T"] == pytest.approx(0.2, abs=0.05)


def test_sampler_validates_evidence_and_order():
    bn, _ = chain_bn()
    graph = ground_template(bn, UNIT)
    with pytest.raises(QueryError):
        gibbs_sample(graph, bn, {("w", ("u0",)): "T"}, iterations=10)
    with pytest.raises(QueryError):
        gibbs_sample(graph, bn, {("x", ("u0",)): "Q"}, iterations=10)
    with pytest.raises(QueryError):
        gibbs_sample(graph, bn, {}, iterations=10, order=[("x", ("u0",))])
    with pytest.raises(QueryError):
        gibbs_sample(graph, bn, {}, iterations=5, burn_in=5)


def test_sampler_custom_order():
    bn, _ = chain_bn()
    graph = ground_template(bn, UNIT)
    order = [("z", ("u0",)), ("x", ("u0",)), ("y", ("u0",))]
    chain = gibbs_sample(graph, bn, {}, iterations=200, seed=2, order=order)
    assert chain.order == tuple(order)


def test_sampler_deadlock_detected():
    functors = {
        "x": FunctorDecl("x", ("unit",), ("T", "F"), ATTRIBUTE),
        "y": FunctorDecl("y", ("unit",), ("T", "F"), ATTRIBUTE),
    }
    e = Var("E")
    x, y = PRV("x", (e,)), PRV("y", (e,))
    cpts = {
        x: np.array([1.0, 0.0]),
        y: np.array([[1.0, 0.0], [0.0, 1.0]]),  # y copies x
    }
    bn = TemplateBN(functors, [x, y], [(x, y)], cpts)
    graph = ground_template(bn, UNIT)
    with pytest.raises(SamplerDeadlockError):
        gibbs_sample(graph, bn, {("y", ("u0",)): "F"}, iterations=10, seed=0)


def test_sampler_on_relational_graph():
    bn = social_bn()
    graph = ground_template(bn, {"people": ["a", "b"]})
    ev = {("friend", ("a", "b")): "T", ("friend", ("b", "a")): "F",
          ("friend", ("a", "a")): "F", ("friend", ("b", "b")): "F"}
    chain = gibbs_sample(graph, bn, ev, iterations=800, seed=3)
    for atom in chain.order:
        dist = chain.marginals[atom]
        assert sum(dist.values()) == pytest.approx(1.0, abs=1e-9)
    # scan order can shift relational marginals; record, don't pin
    rev = gibbs_sample(
        graph, bn, ev, iterations=800, seed=3, order=list(reversed(chain.order))
    )
    assert set(rev.marginals) == set(chain.marginals)
