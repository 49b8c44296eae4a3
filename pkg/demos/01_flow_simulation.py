"""
Watching probability mass flow between answers
==============================================

A refinement step takes the current distribution over answers and replaces
it with a mixture: each candidate answer is offered back to the model as a
hint, and the conditional response distributions are averaged under the
current weights.  With rational arithmetic the whole process is exact, so we
can watch a small two-answer system evolve step by step and account for
every bit of probability that moves.
"""

from fractions import Fraction

# The package keeps answers as parsed, canonicalized values and
# distributions as ordered (answer, Fraction) pairs.
from radkit.answers import Answer
from radkit.distribution import AnswerDistribution, weight_decimal_string
from radkit.flowsim import (
    TransitionKernel,
    exact_update,
    flow_condition,
    iterate,
    required_self_refine_prob,
)

right = Answer.numeric(1)
wrong = Answer.numeric(0)

# Initially the model answers correctly 40% of the time.
initial = AnswerDistribution.from_pairs(
    [(right, Fraction(2, 5)), (wrong, Fraction(3, 5))]
)

# Conditioning on a hint changes the response distribution.  Hinting the
# correct answer makes the model keep it 4 times in 5; hinting the wrong
# answer still lets the model recover 2 times in 5.
kernel = TransitionKernel.from_row_map(
    [right, wrong],
    {
        right: {right: Fraction(4, 5), wrong: Fraction(1, 5)},
        wrong: {wrong: Fraction(3, 5), right: Fraction(2, 5)},
    },
)

# %%
# One exact refinement step
# -------------------------
# The mixture update gives 2/5 * 4/5 + 3/5 * 2/5 = 14/25 on the right
# answer: a single round of hinted resampling lifts 40% to 56%.

p2 = exact_update(initial, kernel)
print("after one refinement:")
for answer, weight in p2.entries:
    print(f"  {answer.render()}: {weight} = {weight_decimal_string(weight)}")

# %%
# Where the mass came from
# ------------------------
# The gain decomposes into flow: mass arriving at the right answer from the
# wrong one (3/5 * 2/5 = 6/25) minus mass leaking away (2/5 * 1/5 = 2/25).

report = flow_condition(initial, kernel, right)
print(f"\nflow into 1:  {report.flow_in}")
print(f"flow out of 1: {report.flow_out}")
print(f"net change:    {report.net} (increases: {report.increases})")

# %%
# Iterating toward the fixed point
# --------------------------------
# Repeated refinement converges to the stationary distribution of the hint
# kernel.  Solving q = 4/5 q + 2/5 (1 - q) gives q = 2/3, so refinement
# cannot push this system past two-thirds confidence.

trajectory = iterate(initial, kernel, 8)
print("\ntrajectory of the right answer's weight:")
for r, dist in enumerate(trajectory, start=1):
    w = dist.weight(right)
    print(f"  r={r}: {str(w):>12} = {weight_decimal_string(w)}")

pi = AnswerDistribution.from_pairs(
    [(right, Fraction(2, 3)), (wrong, Fraction(1, 3))]
)
assert exact_update(pi, kernel).as_dict() == pi.as_dict()
print(f"\nstationary weight on 1: {pi.weight(right)} (a fixed point of the update)")

# %%
# How strong does self-retention have to be?
# ------------------------------------------
# Suppose every wrong hint still yields the right answer with probability
# c * p.  Mass is then guaranteed not to flow away from the right answer as
# long as its self-retention is at least 1 - c * (1 - p).  At p = 0.4 and
# c = 0.3 that threshold is exactly 41/50.

threshold = required_self_refine_prob(Fraction(2, 5), Fraction(3, 10))
print(f"\nrequired self-retention at p=0.4, c=0.3: {threshold} "
      f"= {weight_decimal_string(threshold)}")
