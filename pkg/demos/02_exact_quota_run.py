"""
A refinement run you can check by hand
======================================

The scripted backend plays the role of a language model whose behaviour is a
known table: an initial answer distribution plus one conditional row per
hint.  In exact-quota mode it emits each batch of samples in exact
proportion to the scripted weights, so a full run of the refinement engine
becomes a deterministic calculation — and we can verify every number against
the analytic simulator.
"""

from importlib.resources import files

from radkit.backends.scripted import ScriptedSampler, load_kernel
from radkit.distribution import weight_decimal_string
from radkit.engine import BudgetPlan, RadConfig, Task, run_rad
from radkit.flowsim import TransitionKernel, iterate
from radkit.prompting import builtin_pack
from radkit.answers import TaskKind

# A three-answer task about a tree's age.  Initially the model says 17 half
# the time and 16 or 18 a quarter of the time each.  Hinting 18 locks it in;
# hinting 17 spreads mass evenly; hinting 16 sometimes drifts down to 15.
kernel = load_kernel(files("radkit.data") / "kernel_three_answers.json")
pack = builtin_pack("arith4")
task = Task(question="How old is the tree?", kind=TaskKind.NUMERIC)

# %%
# Running the engine
# ------------------
# Budgets of 4 then 9 calls: the first iteration buys 4 plain samples, the
# second divides 9 calls evenly across the 3 surviving answers (3 each) and
# mixes the resulting conditional rows under the first iteration's weights.

trace = run_rad(
    task,
    ScriptedSampler(kernel),
    pack.shots,
    RadConfig(budget=BudgetPlan.of([4, 9])),
)

for record in trace.iterations:
    print(f"iteration {record.r} ({record.samples_used} calls):")
    for answer, weight in record.distribution.entries:
        print(f"  {answer.render():>2}: {str(weight):>5} "
              f"= {weight_decimal_string(weight)}")
    if record.per_hint_counts:
        alloc = ", ".join(
            f"{a.render()}x{n}" for a, n in record.per_hint_counts
        )
        print(f"  hint allocation: {alloc}")
    print(f"  mode: {record.mode_answer.render()}")

print(f"\nfinal answer: {trace.final_answer.render()} "
      f"after {trace.total_llm_calls} calls")

# %%
# The same numbers, analytically
# ------------------------------
# Because exact-quota emission reproduces the scripted weights whenever the
# batch size is a multiple of their common denominator, the engine's second
# distribution coincides with the exact mixture update: the answer 18 ends
# at 1/4 * 1/3 + ... = 5/12, overtaking 17 even though 17 started on top.

matrix = TransitionKernel.from_conditionals(kernel.answer_space(), kernel.refine_rows)
analytic = iterate(kernel.initial, matrix, 2)[-1]
engine = trace.iterations[-1].distribution
assert engine.as_dict() == analytic.as_dict()
print("\nengine == analytic simulator on every weight:")
for answer, weight in analytic.entries:
    print(f"  {answer.render():>2}: {weight}")
