"""
The three prompt families, and the trip back from text to numbers
=================================================================

Every algorithm in the package speaks to the model through one of three
prompt builders: a plain few-shot chain-of-thought prompt, a hinted prompt
that carries the running answer history, and a refinement prompt that
conditions on exactly one candidate answer.  Coming back the other way,
free-text completions are parsed into canonical answers so that "8",
"8.0", and "the answer is 8." all land on the same point of the
distribution.
"""

from radkit.answers import Answer, RawCompletion, TaskKind, extract_answer
from radkit.distribution import from_samples, mode, weight_decimal_string
from radkit.prompting import (
    build_cot_prompt,
    build_php_prompt,
    build_rad_refine_prompt,
    builtin_pack,
)

pack = builtin_pack("arith4")
question = "A farm has 3 coops of 12 hens. How many hens are there?"

# %%
# Plain chain-of-thought
# ----------------------
# Worked examples, then the question, then an empty answer slot.

cot = build_cot_prompt(pack.shots, question)
print("=== chain-of-thought (tail) ===")
print("\n".join(cot.user_text.splitlines()[-4:]))

# %%
# Hinted prompting with an answer history
# ---------------------------------------
# Every question line gains a hint clause; the history accumulates across
# rounds, so the model sees what it answered before.

php = build_php_prompt(pack.shots, question, [Answer.numeric(34), Answer.numeric(36)])
print("\n=== hinted, two-round history (tail) ===")
print("\n".join(php.user_text.splitlines()[-4:]))
print(f"hints carried: {[a.render() for a in php.hint_answers]}")

# %%
# Refinement conditioning on one candidate
# ----------------------------------------
# The refinement engine always conditions on exactly one answer at a time;
# the builder enforces that and records the hint for routing and caching.

rad = build_rad_refine_prompt(pack.shots, question, Answer.numeric(36))
print("\n=== refine on candidate 36 (tail) ===")
print("\n".join(rad.user_text.splitlines()[-4:]))

# %%
# Parsing completions into canonical answers
# ------------------------------------------
# The extractor prefers an explicit declaration, takes the last one if the
# model changes its mind, and canonicalizes numerals to at most three
# decimal places (half away from zero).  Unparseable text yields None
# rather than a fake answer.

completions = [
    "3 coops times 12 hens is 36. The answer is 36.",
    "First guess 34... no wait. The answer is 34. Actually the answer is 36.",
    "Each coop has 12, so 36.0 hens in total.",
    "I cannot tell.",
    "The answer is 35.",
]
parsed = []
print("\n=== extraction ===")
for text in completions:
    answer = extract_answer(RawCompletion(text), TaskKind.NUMERIC)
    shown = "None" if answer is None else answer.render()
    print(f"  {shown:>4}  <-  {text!r}")
    if answer is not None:
        parsed.append(answer)

# %%
# From samples to a distribution
# ------------------------------
# Tallying the parsed answers gives the empirical distribution the engine
# refines; the mode is the final prediction.

tally = from_samples(parsed)
print("\n=== tally ===")
for answer, weight in tally.entries:
    print(f"  {answer.render():>4}: {weight} = {weight_decimal_string(weight)}")
print(f"prediction: {mode(tally).render()}")

# %%
# Canonicalization keeps equivalent spellings together
# ----------------------------------------------------

spellings = ["36", "36.0", "36.000", "$36", "36.0004"]
unique = {str(Answer.numeric(s)) for s in spellings}
print(f"\n{spellings} collapse to {len(unique)} canonical answer(s)")
print("1/15 rendered at three places:", Answer.numeric(round(1 / 15, 4)).render())
