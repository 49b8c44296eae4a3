"""Sampling backends: a deterministic scripted kernel and a live HTTP client."""

from .base import AuthFailure, BackendUnavailable, BudgetExceeded, SampleRequest, Sampler
from .cache import CacheKey, ResponseCache, StorageCorruption
from .scripted import (
    EmitMode,
    ScriptedKernel,
    ScriptedSampler,
    UnknownHint,
    largest_remainder,
    load_kernel,
    route,
    save_kernel,
)
from .http import HttpConfig, HttpSampler

__all__ = [
    "AuthFailure",
    "BackendUnavailable",
    "BudgetExceeded",
    "CacheKey",
    "EmitMode",
    "HttpConfig",
    "HttpSampler",
    "ResponseCache",
    "SampleRequest",
    "Sampler",
    "ScriptedKernel",
    "ScriptedSampler",
    "StorageCorruption",
    "UnknownHint",
    "largest_remainder",
    "load_kernel",
    "route",
    "save_kernel",
]
