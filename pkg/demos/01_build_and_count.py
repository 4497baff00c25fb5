"""
Building a relational database and counting groundings
=======================================================

Everything in this library starts from a typed schema: populations of
entities plus functors (attributes and relationships) over them.  This
script builds a five-person friendship circle by hand and then asks the
counting engine a few questions about it.
"""

from reldn import (
    ATTRIBUTE,
    RELATIONSHIP,
    Conjunction,
    FunctorDecl,
    PRV,
    RelationalDatabase,
    Schema,
    Var,
    count_groundings,
    enumerate_groundings,
)

# --- the schema: one population, two attributes, one relationship --------

schema = Schema(
    {"people": ["alice", "bob", "cara", "dave", "erin"]},
    [
        FunctorDecl("gender", ("people",), ("W", "M"), ATTRIBUTE),
        FunctorDecl("coffee", ("people",), ("T", "F"), ATTRIBUTE),
        FunctorDecl("friend", ("people", "people"), ("T", "F"), RELATIONSHIP),
    ],
)

# --- the facts: attributes are total, relationships are closed-world -----

atoms = [
    ("gender", ("alice",), "W"),
    ("gender", ("bob",), "M"),
    ("gender", ("cara",), "W"),
    ("gender", ("dave",), "M"),
    ("gender", ("erin",), "W"),
    ("coffee", ("alice",), "T"),
    ("coffee", ("bob",), "T"),
    ("coffee", ("cara",), "F"),
    ("coffee", ("dave",), "F"),
    ("coffee", ("erin",), "T"),
    ("friend", ("alice", "bob"), "T"),
    ("friend", ("alice", "cara"), "T"),
    ("friend", ("bob", "cara"), "T"),
    ("friend", ("cara", "erin"), "T"),
]
db = RelationalDatabase.from_atoms(schema, atoms)

print("stored atoms:  ", db.stored_atom_count)
print("logical atoms: ", db.atom_count, "(every friend pair has a value)")
print("friend(dave, erin) =", db.value_of("friend", ("dave", "erin")),
      "<- closed world: unlisted pairs are false")

# --- counting: how many groundings satisfy a conjunction? ----------------

A, B = Var("A"), Var("B")
women = Conjunction([(PRV("gender", (A,)), "W")])
print("\nwomen:", count_groundings(db, women))

# join two literals through a shared variable
women_with_coffee = Conjunction(
    [(PRV("gender", (A,)), "W"), (PRV("coffee", (A,)), "T")]
)
print("women who drink coffee:", count_groundings(db, women_with_coffee))

# a relationship literal ranges over ordered pairs
friendships = Conjunction([(PRV("friend", (A, B)), "T")])
print("friendship tuples:", count_groundings(db, friendships))

mixed = Conjunction(
    [
        (PRV("friend", (A, B)), "T"),
        (PRV("gender", (A,)), "W"),
        (PRV("gender", (B,)), "M"),
    ]
)
print("woman -> man friendships:", count_groundings(db, mixed))

# the engine can also hand back the satisfying substitutions themselves
print("\nwho are they?")
for grounding in enumerate_groundings(db, mixed):
    print("  ", {v.name: c for v, c in grounding.bindings.items()})
