"""
Learning a template network from relational data
=================================================

We forward-sample a database from a known generator, then hand the learner
only the raw facts and see how close it gets: first parameter estimation
with the true structure, then a structure search from scratch.
"""

import numpy as np

from reldn import (
    ATTRIBUTE,
    RELATIONSHIP,
    FunctorDecl,
    PRV,
    TemplateBN,
    Var,
    estimate_parameters,
    generate_synthetic,
    learn_structure,
)

A, B = Var("A"), Var("B")

# --- the ground truth: smoking influences both cancer and friendship -----

functors = {
    "smokes": FunctorDecl("smokes", ("people",), ("T", "F"), ATTRIBUTE),
    "cancer": FunctorDecl("cancer", ("people",), ("T", "F"), ATTRIBUTE),
    "knows": FunctorDecl("knows", ("people", "people"), ("T", "F"), RELATIONSHIP),
}
smokes, cancer, knows = PRV("smokes", (A,)), PRV("cancer", (A,)), PRV("knows", (A, B))
truth = TemplateBN(
    functors,
    [smokes, cancer, knows],
    [(smokes, cancer), (smokes, knows)],
    {
        smokes: np.array([0.3, 0.7]),                 # P(smokes)
        cancer: np.array([[0.25, 0.75], [0.04, 0.96]]),  # P(cancer | smokes)
        knows: np.array([[0.15, 0.85], [0.05, 0.95]]),   # P(knows | smoker)
    },
)

db = generate_synthetic({"people": 300}, truth, seed=42)
print("sampled a database with", db.stored_atom_count, "stored atoms over",
      db.schema.population_size("people"), "people")

# --- parameter estimation with the structure given ------------------------

bare = TemplateBN(functors, truth.nodes, truth.edges, None)
fitted = estimate_parameters(bare, db, pseudocount=1.0)

print("\nrecovered conditional probabilities (truth in brackets):")
print("  P(cancer=T | smokes=T) = %.3f  [0.250]" % fitted.cpts[cancer][0, 0])
print("  P(cancer=T | smokes=F) = %.3f  [0.040]" % fitted.cpts[cancer][1, 0])
print("  P(knows=T  | smokes=T) = %.3f  [0.150]" % fitted.cpts[knows][0, 0])
print("  P(knows=T  | smokes=F) = %.3f  [0.050]" % fitted.cpts[knows][1, 0])

# --- structure search from scratch ----------------------------------------

learned = learn_structure(db, truth.nodes, max_parents=2, seed=0)
print("\nstructure search found:")
for parent, child in learned.edges:
    print("  ", parent, "->", child)
print("(the true edges were smokes->cancer and smokes->knows)")
