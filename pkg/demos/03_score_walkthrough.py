"""
Scoring one atom against everything else: the friend-circle walkthrough
=======================================================================

Sam drinks coffee and has 100 friends: 40 women and 60 men.  A template
network says a person's gender is correlated with each friend's gender,
and that gender influences coffee drinking.  What does the model believe
about gender(sam), given everybody else?

Each family that touches the target contributes the *mean* of its log
conditional probabilities over the relevant groundings — so 100 friends
weigh in as proportions (0.4 women, 0.6 men), not as a product of 100
factors that would crush the probability toward 0 or 1.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))
from _social_fixture import social_bn, social_db

from reldn import GibbsQuery, score_target

db = social_db(men=60, women=40)
bn = social_bn()

query = GibbsQuery.for_atom(db, bn, "gender", ("sam",))
score = score_target(query, bn)

for value in ("W", "M"):
    print(f"\ncandidate gender(sam) = {value}")
    print(f"  {'family':<14} {'config':<28} {'cp':>5} {'ln cp':>6} "
          f"{'prop':>5} {'contrib':>8}")
    for row in score.traces[value]:
        config = f"{row.family.functor}={row.child_value}"
        if row.parent_values:
            config += " | " + ", ".join(
                f"{p.functor}={v}" for p, v in row.parent_values
            )
        print(f"  {str(row.family):<14} {config:<28} {row.cp:>5.2f} "
              f"{row.weight:>6.2f} {row.proportion:>5.2f} "
              f"{row.contribution:>8.2f}")
    print(f"  total log score: {score.log_scores[value]:.2f}")

print("\nfinal distribution for gender(sam):")
for value, p in score.distribution.items():
    print(f"  P({value}) = {p:.4f}")
print("\nSlightly more likely a woman: the 40% female friends pull harder")
print("through the gender-gender families than coffee pulls the other way.")
