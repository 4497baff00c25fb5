"""
From a directed template to a bidirected dependency structure
=============================================================

The Gibbs scorer conditions each node on everything else, so the structure
that matters is each node's Markov blanket: parents, children, and the
co-parents it shares a child with.  Rewiring every node to point at its
blanket turns the directed template into a dependency-network template in
closed form — no counting, no optimization.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))
from _social_fixture import social_bn

from reldn import ground_template, moralize_to_rdn

bn = social_bn()

print("directed template edges:")
for parent, child in bn.edges:
    print(f"  {parent} -> {child}")

rdn = moralize_to_rdn(bn)

print("\nafter moralization, each node conditions on its blanket:")
for node in rdn.nodes:
    members = ", ".join(str(p) for p in rdn.parents(node)) or "(nothing)"
    print(f"  {str(node):<12} <- {members}")

print(f"\ndirected edge count:   {len(bn.edges)}")
print(f"dependency edge count: {len(rdn.edges)}"
      "  (2 per original edge + 2 per co-parent pair)")

# both templates ground over a concrete population the same way
pops = {"people": ["ann", "ben", "cleo"]}
g_bn = ground_template(bn, pops)
g_rdn = ground_template(rdn, pops)
print(f"\nground graph over 3 people: {g_bn.edge_count} directed edges,")
print(f"                            {g_rdn.edge_count} dependency edges")
