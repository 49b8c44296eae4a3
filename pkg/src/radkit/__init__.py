"""radkit: answer-distribution refinement for LLM reasoning.

The package keeps a probability distribution over candidate answers and
sharpens it by resampling the model conditioned on each candidate as a hint,
then marginalizing over the previous distribution. It ships the sampling
baselines (chain-of-thought, self-consistency, progressive hinting), an exact
rational-arithmetic simulator of the refinement dynamics, deterministic
scripted backends for offline testing, a live OpenAI-compatible backend with
caching, and an evaluation harness with significance testing.
"""

from .errors import RadkitError

__version__ = "0.1.0"

__all__ = ["RadkitError", "__version__"]
