"""Command-line front end.

One subcommand per pipeline stage; every run echoes its configuration as
JSON into the output directory so results can be reproduced. Exit codes:
0 success, 2 usage or input problems, 1 anything unexpected.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .bayesnet import TemplateBN, estimate_parameters, learn_structure
from .consistency import audit
from .database import load_database, load_evidence
from .errors import ReldnError
from .evaluation import evaluate
from .inference import gibbs_sample, ground_template
from .rdn import RdnTemplate, moralize_to_rdn
from .schema import PRV, Var, load_schema, parse_ground_atom
from .scoring import (
    GibbsQuery,
    format_atom,
    score_target,
    write_trace_csv,
)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _echo_config(args, out: Path):
    config = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k != "func" and v is not None
    }
    (out / "config.json").write_text(json.dumps(config, indent=1) + "\n")


def _default_nodes(schema) -> list[PRV]:
    """One template node per functor, variables named after populations."""
    nodes = []
    for decl in schema.functors.values():
        used: dict[str, int] = {}
        args = []
        for pop in decl.arg_populations:
            n = used.get(pop, 0)
            used[pop] = n + 1
            base = pop[:1].upper() + pop[1:]
            args.append(Var(base if n == 0 else f"{base}{n + 1}"))
        nodes.append(PRV(decl.name, tuple(args)))
    return nodes


def cmd_learn(args) -> int:
    out = _out_dir(args)
    _echo_config(args, out)
    schema = load_schema(args.schema)
    db = load_database(schema, args.data_dir)
    if args.structure:
        structure = TemplateBN.load(args.structure)
        model = estimate_parameters(structure, db, pseudocount=args.pseudocount)
    else:
        model = learn_structure(
            db,
            _default_nodes(schema),
            max_parents=args.max_parents,
            seed=args.seed,
            pseudocount=args.pseudocount,
        )
    path = out / "model.json"
    model.save(path)
    print(f"wrote {path}")
    return 0


def cmd_transform(args) -> int:
    out = _out_dir(args)
    _echo_config(args, out)
    model = TemplateBN.load(args.model)
    rdn = moralize_to_rdn(model, source=str(args.model))
    path = out / "rdn.json"
    rdn.save(path)
    print(f"wrote {path}")
    return 0


def cmd_score(args) -> int:
    out = _out_dir(args)
    _echo_config(args, out)
    model = TemplateBN.load(args.model)
    schema = load_schema(args.schema)
    db = load_database(schema, args.data_dir)
    functor, consts = parse_ground_atom(args.target)
    query = GibbsQuery.for_atom(db, model, functor, consts)
    score = score_target(query, model)
    dist_path = out / "distribution.json"
    dist_path.write_text(
        json.dumps(
            {
                "target": format_atom(score.target_atom),
                "distribution": score.distribution,
                "log_scores": score.log_scores,
            },
            indent=1,
        )
        + "\n"
    )
    trace_path = out / "trace.csv"
    write_trace_csv(trace_path, score, query.gamma)
    for value, p in score.distribution.items():
        print(f"{format_atom(score.target_atom)} = {value}: {p:.6f}")
    print(f"wrote {dist_path} and {trace_path}")
    return 0


def cmd_evaluate(args) -> int:
    out = _out_dir(args)
    _echo_config(args, out)
    model = TemplateBN.load(args.model)
    schema = load_schema(args.schema)
    db = load_database(schema, args.data_dir)
    report = evaluate(
        model,
        db,
        fold_count=args.folds,
        seed=args.seed,
        pseudocount=args.pseudocount,
        collect_facts=True,
    )
    report_path = out / "metrics.json"
    report_path.write_text(json.dumps(report.to_dict(), indent=1) + "\n")
    facts_path = out / "facts.csv"
    with open(facts_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["atom", "truth", "probability"])
        for f in report.facts or []:
            writer.writerow([format_atom(f.atom), f.truth, repr(f.probability)])
    print(f"cll mean {report.cll.mean:.4f} (stderr {report.cll.stderr:.4f})")
    if report.auc_pr:
        print(
            f"auc-pr mean {report.auc_pr.mean:.4f} "
            f"(stderr {report.auc_pr.stderr:.4f})"
        )
    print(f"wrote {report_path} and {facts_path}")
    return 0


def cmd_audit(args) -> int:
    out = _out_dir(args)
    _echo_config(args, out)
    model = TemplateBN.load(args.model)
    report = audit(model)
    path = out / "consistency.json"
    path.write_text(report.to_json() + "\n")
    print(f"verdict: {report.verdict}")
    for e in report.edges:
        res = "" if e.residual is None else f" residual={e.residual:.3e}"
        print(f"  {e.parent} -> {e.child}: {e.status}{res}")
    print(f"wrote {path}")
    return 0


def cmd_sample(args) -> int:
    out = _out_dir(args)
    _echo_config(args, out)
    model = TemplateBN.load(args.model)
    schema = load_schema(args.schema)
    graph = ground_template(model, schema.populations)
    evidence = {}
    if args.data_dir:
        partial = load_evidence(schema, args.data_dir)
        evidence = {atom: value for atom, value in partial.items()}
    chain = gibbs_sample(
        graph,
        model,
        evidence,
        iterations=args.iterations,
        burn_in=args.burn_in,
        seed=args.seed,
    )
    path = out / "marginals.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["atom", "value", "frequency"])
        for atom in chain.order:
            for value, freq in chain.marginals[atom].items():
                writer.writerow([format_atom(atom), value, repr(freq)])
    print(f"{chain.samples} samples over {len(chain.order)} free atoms")
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reldn",
        description=(
            "Learn template networks over relational data, turn them into "
            "dependency networks, and query, sample, evaluate, or audit them."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, schema=False, data=False, model=False):
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        if schema:
            p.add_argument("--schema", required=True, help="schema JSON")
        if data:
            p.add_argument("--data-dir", required=True,
                           help="directory of per-functor CSV files")
        if model:
            p.add_argument("--model", required=True, help="model JSON")

    p = sub.add_parser("learn", help="estimate (optionally hill-climb) a model")
    common(p, schema=True, data=True)
    p.add_argument("--structure", help="model JSON giving nodes and edges")
    p.add_argument("--pseudocount", type=float, default=1.0)
    p.add_argument("--max-parents", type=int, default=3)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("transform", help="moralize a model into a "
                       "dependency-network template")
    common(p, model=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("score", help="conditional distribution of one atom")
    common(p, schema=True, data=True, model=True)
    p.add_argument("--target", required=True, help="ground atom, e.g. g(sam)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="cross-validated metrics")
    common(p, schema=True, data=True, model=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--pseudocount", type=float, default=1.0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser(
        "audit-consistency",
        aliases=["audit"],
        help="test whether the model's conditionals admit a joint",
    )
    common(p, model=True)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("sample", help="ordered Gibbs marginals")
    common(p, schema=True, model=True)
    p.add_argument("--data-dir", help="optional evidence CSVs")
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--burn-in", type=int, default=None)
    p.set_defaults(func=cmd_sample)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ReldnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
