"""
Auditing a template for cross-ratio consistency
===============================================

A dependency network is only guaranteed a single joint distribution when
its conditionals are mutually consistent.  The relational transform can
break that: when an edge's parent and child range over different variable
sets, two groundings of the same pair of atoms can see *different numbers
of relevant neighbors*, and the induced conditionals stop agreeing with
any one joint.

The auditor hunts for exactly that: it picks a divergent edge, constructs
a small witness database where the two directions count differently, and
measures how far the pair of conditionals is from the cross-ratio identity
any true joint must satisfy.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))
from _social_fixture import social_bn

from reldn import (
    audit,
    closed_form_residual,
    construct_witness,
    cross_ratio_residual,
    find_divergent_edges,
)

bn = social_bn()

# --- step 1: which edges can even cause trouble? --------------------------

edges = find_divergent_edges(bn)
print("divergent edges (parent and child bind different variables):")
for e in edges:
    print(f"  {e.parent} -> {e.child}")

# --- step 2: build a witness for the gender edge ---------------------------

edge = [e for e in edges if str(e.parent) == "gender(B)"][0]
w = construct_witness(bn, edge)
print(f"\nwitness over {sorted(w.evidence.schema.populations['people'])}:")
print(f"  child-side relevant count  n1 = {w.n1}")
print(f"  parent-side relevant count n2 = {w.n2}")
print("  unequal counts make the two conditionals weigh the same")
print("  evidence differently")

# --- step 3: measure the cross-ratio residual ------------------------------

m = cross_ratio_residual(bn, w)
print(f"\n|log cross-ratio mismatch| = {m.residual:.6f}")
print(f"closed-form prediction     = {closed_form_residual(bn, w):.6f}")
print("any residual > 0 means no joint distribution has these conditionals")

# --- step 4: or just ask for the full report -------------------------------

report = audit(bn)
print(f"\naudit verdict: {report.verdict}")
for entry in report.edges:
    line = f"  {entry.parent} -> {entry.child}: {entry.status}"
    if entry.status == "audited":
        line += f", residual {entry.residual:.2e}, {entry.verdict}"
    print(line)
