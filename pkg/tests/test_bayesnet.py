"""Template network construction, serialization, estimation, search."""

import numpy as np
import pytest

from reldn import (
    ATTRIBUTE,
    Conjunction,
    EstimationError,
    FunctorDecl,
    ModelError,
    PRV,
    RelationalDatabase,
    Schema,
    TemplateBN,
    Var,
    estimate_parameters,
    learn_structure,
    parse_prv,
)

import helpers
from test_store import tiny_db, tiny_schema

A, B = Var("A"), Var("B")


def chain_bn():
    functors = {
        "x": FunctorDecl("x", ("unit",), ("T", "F"), ATTRIBUTE),
        "y": FunctorDecl("y", ("unit",), ("T", "F"), ATTRIBUTE),
        "z": FunctorDecl("z", ("unit",), ("T", "F"), ATTRIBUTE),
    }
    e = Var("E")
    x, y, z = PRV("x", (e,)), PRV("y", (e,)), PRV("z", (e,))
    cpts = {
        x: np.array([0.7, 0.3]),
        y: np.array([[0.9, 0.1], [0.2, 0.8]]),
        z: np.array([[0.6, 0.4], [0.25, 0.75]]),
    }
    return TemplateBN(functors, [x, y, z], [(x, y), (y, z)], cpts), (x, y, z)


def test_graph_accessors():
    bn, (x, y, z) = chain_bn()
    assert bn.parents(y) == (x,)
    assert bn.children(y) == (z,)
    assert bn.edges == ((x, y), (y, z))
    assert bn.topological_order() == (x, y, z)
    assert bn.is_parameterized


def test_cp_lookup():
    bn, (x, y, z) = chain_bn()
    assert bn.cp(y, 1, (0,)) == 0.1
    assert bn.cp(x, 0, ()) == 0.7


def test_cycle_rejected():
    bn, (x, y, z) = chain_bn()
    with pytest.raises(ModelError):
        bn.with_edges([(x, y), (y, z), (z, x)])


def test_edge_endpoints_must_be_nodes():
    bn, (x, y, z) = chain_bn()
    w = PRV("w", (Var("E"),))
    with pytest.raises(ModelError):
        bn.with_edges([(x, w)])


def test_cpt_shape_checked():
    bn, (x, y, z) = chain_bn()
    bad = dict(bn.cpts)
    bad[y] = np.array([0.5, 0.5])
    with pytest.raises(ModelError):
        TemplateBN(bn.functors, bn.nodes, bn.edges, bad)


def test_cpt_rows_must_normalize():
    bn, (x, y, z) = chain_bn()
    bad = dict(bn.cpts)
    bad[x] = np.array([0.7, 0.4])
    with pytest.raises(ModelError):
        TemplateBN(bn.functors, bn.nodes, bn.edges, bad)


def test_save_load_round_trip_is_bit_exact(tmp_path):
    bn, _ = chain_bn()
    # make an entry with an awkward binary expansion
    nodes = bn.nodes
    cpts = dict(bn.cpts)
    cpts[nodes[0]] = np.array([1 / 3, 2 / 3])
    bn = TemplateBN(bn.functors, bn.nodes, bn.edges, cpts)
    path = tmp_path / "model.json"
    bn.save(path)
    again = TemplateBN.load(path)
    assert again.nodes == bn.nodes
    assert again.edges == bn.edges
    for node in bn.nodes:
        assert np.array_equal(again.cpts[node], bn.cpts[node])
    assert again.functors == bn.functors


def test_unparameterized_network():
    bn, (x, y, z) = chain_bn()
    bare = TemplateBN(bn.functors, bn.nodes, bn.edges, None)
    assert not bare.is_parameterized
    with pytest.raises(ModelError):
        bare.cp(x, 0, ())


# ---------------------------------------------------------------------------
# parameter estimation


def test_estimation_prior_family():
    db = tiny_db()
    g = parse_prv("gender(A)")
    bn = TemplateBN(dict(db.schema.functors), [g], [])
    fit = estimate_parameters(bn, db, pseudocount=1.0)
    # 2 women + 1 man, one pseudocount each
    assert np.allclose(fit.cpts[g], [(2 + 1) / 5, (1 + 1) / 5])


def test_estimation_with_relationship_parent():
    db = tiny_db()
    g, f = parse_prv("gender(A)"), parse_prv("friend(A,B)")
    bn = TemplateBN(dict(db.schema.functors), [g, f], [(f, g)])
    fit = estimate_parameters(bn, db, pseudocount=1.0)
    # friend=T pairs: (anna,bob), (anna,carol); gender(anna)=W twice
    assert np.allclose(fit.cpts[g][0], [(2 + 1) / 4, (0 + 1) / 4])
    # friend=F pairs: 7, of which A is a woman in 4
    assert np.allclose(fit.cpts[g][1], [(4 + 1) / 9, (3 + 1) / 9])


def test_estimation_matches_count_oracle():
    rng = np.random.default_rng(23)
    for _ in range(20):  # first draw with a unary attribute wins
        schema = helpers.random_schema(rng)
        decls = [d for d in schema.functors.values() if d.arity == 1]
        if decls:
            break
    facts = helpers.random_facts(rng, schema)
    db = helpers.facts_to_db(schema, facts)
    child_decl = decls[0]
    child = PRV(child_decl.name, (Var("X"),))
    bn = TemplateBN(dict(schema.functors), [child], [])
    fit = estimate_parameters(bn, db, pseudocount=0.5)
    counts = [
        helpers.brute_count(schema, facts, Conjunction([(child, v)]))
        for v in child_decl.range
    ]
    want = (np.array(counts) + 0.5) / (sum(counts) + 0.5 * len(counts))
    assert np.allclose(fit.cpts[child], want)


def test_estimation_zero_pseudocount_needs_support():
    schema = Schema(
        {"unit": ["u0"]},
        [
            FunctorDecl("x", ("unit",), ("T", "F"), ATTRIBUTE),
            FunctorDecl("y", ("unit",), ("T", "F"), ATTRIBUTE),
        ],
    )
    db = RelationalDatabase.from_atoms(
        schema, [("x", ("u0",), "T"), ("y", ("u0",), "T")]
    )
    e = Var("E")
    x, y = PRV("x", (e,)), PRV("y", (e,))
    bn = TemplateBN(dict(schema.functors), [x, y], [(x, y)])
    with pytest.raises(EstimationError, match="zero groundings"):
        estimate_parameters(bn, db, pseudocount=0.0)
    fit = estimate_parameters(bn, db, pseudocount=1.0)
    assert np.allclose(fit.cpts[y][1], [0.5, 0.5])  # unseen row falls to uniform


def test_estimation_exclude_false_relationships():
    db = tiny_db()
    g, f = parse_prv("gender(A)"), parse_prv("friend(A,B)")
    bn = TemplateBN(dict(db.schema.functors), [g, f], [(f, g)])
    fit = estimate_parameters(bn, db, pseudocount=1.0, exclude_false_relationships=True)
    assert np.allclose(fit.cpts[g][0], [3 / 4, 1 / 4])
    assert np.allclose(fit.cpts[g][1], [0.5, 0.5])  # F row emptied, smoothing only


def test_estimation_rejects_schema_mismatch():
    db = tiny_db()
    functors = {
        "gender": FunctorDecl("gender", ("people",), ("W", "M", "X"), ATTRIBUTE)
    }
    bn = TemplateBN(functors, [parse_prv("gender(A)")], [])
    with pytest.raises(EstimationError):
        estimate_parameters(bn, db)


# ---------------------------------------------------------------------------
# structure search


def correlated_db(n=120, seed=5):
    rng = np.random.default_rng(seed)
    people = [f"p{i}" for i in range(n)]
    schema = Schema(
        {"people": people},
        [
            FunctorDecl("x", ("people",), ("T", "F"), ATTRIBUTE),
            FunctorDecl("y", ("people",), ("T", "F"), ATTRIBUTE),
            FunctorDecl("z", ("people",), ("T", "F"), ATTRIBUTE),
        ],
    )
    atoms = []
    for p in people:
        xv = "T" if rng.random() < 0.5 else "F"
        # y copies x with 5% noise; z is independent coin
        yv = xv if rng.random() < 0.95 else ("F" if xv == "T" else "T")
        zv = "T" if rng.random() < 0.5 else "F"
        atoms += [("x", (p,), xv), ("y", (p,), yv), ("z", (p,), zv)]
    return RelationalDatabase.from_atoms(schema, atoms)


def test_learn_structure_finds_strong_dependence():
    db = correlated_db()
    nodes = [parse_prv("x(A)"), parse_prv("y(A)"), parse_prv("z(A)")]
    bn = learn_structure(db, nodes, max_parents=2, seed=3)
    linked = {frozenset((p.functor, c.functor)) for p, c in bn.edges}
    assert frozenset(("x", "y")) in linked
    assert bn.is_parameterized


def test_learn_structure_deterministic_per_seed():
    db = correlated_db()
    nodes = [parse_prv("x(A)"), parse_prv("y(A)"), parse_prv("z(A)")]
    a = learn_structure(db, nodes, seed=11)
    b = learn_structure(db, nodes, seed=11)
    assert a.edges == b.edges
    for n in a.nodes:
        assert np.array_equal(a.cpts[n], b.cpts[n])


def test_learn_structure_respects_max_parents():
    db = correlated_db()
    nodes = [parse_prv("x(A)"), parse_prv("y(A)"), parse_prv("z(A)")]
    bn = learn_structure(db, nodes, max_parents=1, seed=0)
    assert all(len(bn.parents(n)) <= 1 for n in bn.nodes)
