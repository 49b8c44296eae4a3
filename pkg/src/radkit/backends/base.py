"""Shared backend types: the sample request and the sampler protocol."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from ..answers import RawCompletion
from ..errors import RadkitError
from ..prompting import PromptBundle


class BackendUnavailable(RadkitError):
    """The backend could not serve the request (after retries, if transient)."""


class AuthFailure(RadkitError):
    """The backend rejected our credentials; retrying cannot help."""


class BudgetExceeded(RadkitError):
    """The configured hard spend cap would be exceeded."""


@dataclass(frozen=True)
class SampleRequest:
    """A request for ``n`` independent completions of one prompt."""

    bundle: PromptBundle
    temperature: float
    n: int
    max_tokens: int = 1024
    model_id: str = "default"
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be nonnegative")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be at least 1")
        if self.temperature == 0 and self.n != 1:
            raise ValueError("greedy decoding (temperature 0) implies n == 1")


@runtime_checkable
class Sampler(Protocol):
    """Anything that can serve completions for a sample request."""

    def sample(self, request: SampleRequest) -> list[RawCompletion]:
        """Return exactly ``request.n`` completions."""
        ...
