"""The running example shared by the demos: a hand-built social network.

A person's gender is correlated with each friend's gender, and gender
influences coffee drinking.  One focal person ("sam") drinks coffee and is
friends with a fixed circle of men and women, so every number a demo
prints can be checked by hand.
"""

import numpy as np

from reldn import (
    ATTRIBUTE,
    RELATIONSHIP,
    FunctorDecl,
    PRV,
    RelationalDatabase,
    Schema,
    TemplateBN,
    Var,
)

A, B = Var("A"), Var("B")

GENDER_A = PRV("gender", (A,))
GENDER_B = PRV("gender", (B,))
FRIEND_AB = PRV("friend", (A, B))
COFFEE_A = PRV("coffee", (A,))


def social_schema(men=60, women=40) -> Schema:
    people = ["sam"] + [f"m{i}" for i in range(men)] + [f"w{i}" for i in range(women)]
    return Schema(
        {"people": people},
        [
            FunctorDecl("gender", ("people",), ("W", "M"), ATTRIBUTE),
            FunctorDecl("friend", ("people", "people"), ("T", "F"), RELATIONSHIP),
            FunctorDecl("coffee", ("people",), ("T", "F"), ATTRIBUTE),
        ],
    )


def social_db(men=60, women=40, sam_gender="W") -> RelationalDatabase:
    """sam drinks coffee and is friends with every other person."""
    schema = social_schema(men, women)
    atoms = []
    for p in schema.populations["people"]:
        if p == "sam":
            atoms.append(("gender", (p,), sam_gender))
        else:
            atoms.append(("gender", (p,), "M" if p.startswith("m") else "W"))
        atoms.append(("coffee", (p,), "T" if p == "sam" else "F"))
        if p != "sam":
            atoms.append(("friend", ("sam", p), "T"))
    return RelationalDatabase.from_atoms(schema, atoms)


def social_bn(men=60, women=40) -> TemplateBN:
    schema = social_schema(men, women)
    cpts = {
        GENDER_B: np.array([0.5, 0.5]),
        FRIEND_AB: np.array([0.5, 0.5]),
        # axes: gender(B) x friend(A,B) x gender(A); friend=F rows are inert
        GENDER_A: np.array(
            [[[0.55, 0.45], [0.5, 0.5]], [[0.37, 0.63], [0.5, 0.5]]]
        ),
        COFFEE_A: np.array([[0.80, 0.20], [0.60, 0.40]]),
    }
    return TemplateBN(
        dict(schema.functors),
        [GENDER_B, FRIEND_AB, GENDER_A, COFFEE_A],
        [(GENDER_B, GENDER_A), (FRIEND_AB, GENDER_A), (GENDER_A, COFFEE_A)],
        cpts,
    )
