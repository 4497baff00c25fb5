"""The command-line surface, run in-process against a small data directory."""

import csv
import json

import numpy as np
import pytest

from reldn import (
    GibbsQuery,
    TemplateBN,
    estimate_parameters,
    gibbs_probability,
    load_database,
)
from reldn.cli import main

from fixtures import social_bn, social_db
from test_bayesnet import chain_bn


@pytest.fixture()
def data_dir(tmp_path):
    """Schema JSON plus CSVs for a 10-person social database."""
    db = social_db(men=5, women=4)
    d = tmp_path / "data"
    d.mkdir()
    (d / "schema.json").write_text(json.dumps(db.schema.to_dict()))
    rows = {"gender": [], "friend": [], "coffee": []}
    for f, args, v in db.atoms():
        rows[f].append(",".join(args) + f",{v}")
    (d / "gender.csv").write_text("arg1,value\n" + "\n".join(rows["gender"]) + "\n")
    (d / "coffee.csv").write_text("arg1,value\n" + "\n".join(rows["coffee"]) + "\n")
    (d / "friend.csv").write_text(
        "arg1,arg2,value\n" + "\n".join(rows["friend"]) + "\n"
    )
    return d


@pytest.fixture()
def model_path(tmp_path):
    path = tmp_path / "social-model.json"
    social_bn().save(path)
    return path


def structure_path(tmp_path):
    bn = social_bn()
    bare = TemplateBN(bn.functors, bn.nodes, bn.edges, None)
    path = tmp_path / "structure.json"
    bare.save(path)
    return path


def test_learn_with_fixed_structure(data_dir, tmp_path):
    out = tmp_path / "out"
    rc = main([
        "learn",
        "--schema", str(data_dir / "schema.json"),
        "--data-dir", str(data_dir),
        "--structure", str(structure_path(tmp_path)),
        "--out", str(out),
    ])
    assert rc == 0
    model = TemplateBN.load(out / "model.json")
    db = load_database(data_dir / "schema.json", data_dir)
    bn = social_bn()
    want = estimate_parameters(
        TemplateBN(bn.functors, bn.nodes, bn.edges, None), db
    )
    for node in want.nodes:
        assert np.array_equal(model.cpts[node], want.cpts[node])
    assert json.loads((out / "config.json").read_text())["command"] == "learn"


def test_learn_searches_when_no_structure(data_dir, tmp_path):
    out = tmp_path / "out"
    rc = main([
        "learn",
        "--schema", str(data_dir / "schema.json"),
        "--data-dir", str(data_dir),
        "--out", str(out),
        "--max-parents", "2",
    ])
    assert rc == 0
    model = TemplateBN.load(out / "model.json")
    assert model.is_parameterized
    assert all(len(model.parents(n)) <= 2 for n in model.nodes)


def test_transform(model_path, tmp_path):
    out = tmp_path / "out"
    rc = main(["transform", "--model", str(model_path), "--out", str(out)])
    assert rc == 0
    obj = json.loads((out / "rdn.json").read_text())
    assert obj["source_model"] == str(model_path)
    assert len(obj["edges"]) == 2 * 3 + 2 * 1  # 3 template edges, 1 coparent pair


def test_score_matches_library(data_dir, model_path, tmp_path, capsys):
    out = tmp_path / "out"
    rc = main([
        "score",
        "--schema", str(data_dir / "schema.json"),
        "--data-dir", str(data_dir),
        "--model", str(model_path),
        "--target", "gender(sam)",
        "--out", str(out),
    ])
    assert rc == 0
    got = json.loads((out / "distribution.json").read_text())
    db = load_database(data_dir / "schema.json", data_dir)
    bn = social_bn()
    want = gibbs_probability(GibbsQuery.for_atom(db, bn, "gender", ("sam",)), bn)
    assert got["target"] == "gender(sam)"
    for v, p in want.items():
        assert got["distribution"][v] == pytest.approx(p, rel=1e-12)
    with open(out / "trace.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["target_value"] for r in rows} == {"W", "M"}
    assert "gender(sam) = W" in capsys.readouterr().out


def test_score_unknown_target_exits_2(data_dir, model_path, tmp_path):
    rc = main([
        "score",
        "--schema", str(data_dir / "schema.json"),
        "--data-dir", str(data_dir),
        "--model", str(model_path),
        "--target", "gender(nobody)",
        "--out", str(tmp_path / "out"),
    ])
    assert rc == 2


def test_missing_required_flag_exits_2(capsys):
    assert main(["score", "--target", "gender(sam)"]) == 2
    capsys.readouterr()  # swallow argparse usage text


def test_evaluate(data_dir, model_path, tmp_path):
    out = tmp_path / "out"
    rc = main([
        "evaluate",
        "--schema", str(data_dir / "schema.json"),
        "--data-dir", str(data_dir),
        "--model", str(model_path),
        "--folds", "2",
        "--out", str(out),
    ])
    assert rc == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["fold_count"] == 2
    assert "cll" in metrics and "mean" in metrics["cll"]
    with open(out / "facts.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and set(rows[0]) == {"atom", "truth", "probability"}


def test_audit_subcommand_and_alias(model_path, tmp_path):
    out = tmp_path / "out"
    rc = main(["audit-consistency", "--model", str(model_path), "--out", str(out)])
    assert rc == 0
    report = json.loads((out / "consistency.json").read_text())
    assert report["verdict"] == "inconsistent"
    out2 = tmp_path / "out2"
    rc = main(["audit", "--model", str(model_path), "--out", str(out2)])
    assert rc == 0
    assert json.loads((out2 / "consistency.json").read_text()) == report


def test_sample_deterministic(tmp_path):
    bn, _ = chain_bn()
    model_path = tmp_path / "chain.json"
    bn.save(model_path)
    schema_path = tmp_path / "schema.json"
    schema_path.write_text(json.dumps({
        "populations": {"unit": ["u0"]},
        "functors": [
            {"name": n, "args": ["unit"], "range": ["T", "F"], "kind": "attribute"}
            for n in ("x", "y", "z")
        ],
    }))
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        rc = main([
            "sample",
            "--model", str(model_path),
            "--schema", str(schema_path),
            "--iterations", "400",
            "--seed", "5",
            "--out", str(out),
        ])
        assert rc == 0
        outs.append((out / "marginals.csv").read_bytes())
    assert outs[0] == outs[1]
    with open(tmp_path / "a" / "marginals.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    by_atom = {}
    for r in rows:
        by_atom.setdefault(r["atom"], 0.0)
        by_atom[r["atom"]] += float(r["probability"] if "probability" in r else r["frequency"])
    assert all(abs(total - 1.0) < 1e-9 for total in by_atom.values())
