"""Live backend speaking the OpenAI-compatible chat-completions protocol.

Each requested completion is fetched as its own HTTP call (keyed by sample
index) so the on-disk cache can serve partial reruns. Transient failures --
timeouts, connection errors, 429, and 5xx responses -- are retried up to five
attempts with exponential backoff and jitter; auth rejections fail immediately
and other client errors are not retried. A process-wide semaphore bounds
in-flight requests at ``max_concurrency``, and an optional hard spend cap
(counted in completions issued to the network) raises before any overspend.

The API key is read from an environment variable and never logged. The
``transport``, ``sleeper``, and ``rng`` constructor arguments exist for tests.
"""

from __future__ import annotations

import os
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import httpx

from ..answers import RawCompletion
from .base import AuthFailure, BackendUnavailable, BudgetExceeded, SampleRequest
from .cache import CacheKey, ResponseCache


@dataclass
class HttpConfig:
    """Connection, retry, and spend settings for the live backend."""

    base_url: str
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    max_retries: int = 5
    backoff_base: float = 0.5
    backoff_cap: float = 30.0
    max_concurrency: int = 4
    spend_cap: int | None = None
    cache_dir: str | Path | None = None


class HttpSampler:
    """Sampler backed by an OpenAI-compatible chat-completions endpoint."""

    def __init__(
        self,
        config: HttpConfig,
        transport: httpx.BaseTransport | None = None,
        sleeper: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
    ):
        self.config = config
        self._client = httpx.Client(
            transport=transport, timeout=config.timeout
        )
        self._cache = (
            ResponseCache(config.cache_dir) if config.cache_dir is not None else None
        )
        self._sleeper = sleeper
        self._rng = rng if rng is not None else random.Random()
        self._inflight = threading.Semaphore(config.max_concurrency)
        self._spend_lock = threading.Lock()
        self._issued = 0
        self._cache_write_lock = threading.Lock()

    @property
    def issued(self) -> int:
        """Completions sent to the network so far (cache hits excluded)."""
        return self._issued

    def sample(self, request: SampleRequest) -> list[RawCompletion]:
        keys = [
            CacheKey.build(
                model_id=request.model_id,
                temperature=request.temperature,
                max_tokens=request.max_tokens,
                prompt_text=request.bundle.user_text,
                sample_index=i,
                system_text=request.bundle.system_text,
            )
            for i in range(request.n)
        ]
        results: dict[int, RawCompletion] = {}
        misses: list[tuple[int, CacheKey]] = []
        for i, key in enumerate(keys):
            hit = self._cache.get(key) if self._cache is not None else None
            if hit is not None:
                results[i] = hit
            else:
                misses.append((i, key))
        if misses:
            self._reserve_spend(len(misses))
            workers = min(self.config.max_concurrency, len(misses))
            with ThreadPoolExecutor(max_workers=workers) as pool:
                fetched = pool.map(
                    lambda item: (item[0], self._fetch_one(request, item[1])), misses
                )
                for i, completion in fetched:
                    results[i] = completion
        return [results[i] for i in range(request.n)]

    def _reserve_spend(self, count: int) -> None:
        with self._spend_lock:
            cap = self.config.spend_cap
            if cap is not None and self._issued + count > cap:
                raise BudgetExceeded(
                    f"spend cap of {cap} completions would be exceeded "
                    f"({self._issued} issued, {count} more requested)"
                )
            self._issued += count

    def _auth_headers(self) -> dict[str, str]:
        key = os.environ.get(self.config.api_key_env, "")
        return {"Authorization": f"Bearer {key}"} if key else {}

    def _endpoint(self) -> str:
        return self.config.base_url.rstrip("/") + "/chat/completions"

    def _body(self, request: SampleRequest) -> dict:
        messages = []
        if request.bundle.system_text is not None:
            messages.append({"role": "system", "content": request.bundle.system_text})
        messages.append({"role": "user", "content": request.bundle.user_text})
        body = {
            "model": request.model_id,
            "messages": messages,
            "temperature": request.temperature,
            "n": 1,
            "max_tokens": request.max_tokens,
        }
        if request.seed is not None:
            body["seed"] = request.seed
        return body

    def _fetch_one(self, request: SampleRequest, key: CacheKey) -> RawCompletion:
        last_error: Exception | None = None
        for attempt in range(1, self.config.max_retries + 1):
            try:
                with self._inflight:
                    response = self._client.post(
                        self._endpoint(),
                        json=self._body(request),
                        headers=self._auth_headers(),
                    )
            except (httpx.TimeoutException, httpx.TransportError) as exc:
                last_error = exc
            else:
                if response.status_code == 200:
                    completion = self._parse(response)
                    if self._cache is not None:
                        with self._cache_write_lock:
                            self._cache.put(key, completion)
                    return completion
                if response.status_code in (401, 403):
                    raise AuthFailure(
                        f"endpoint rejected credentials (HTTP {response.status_code})"
                    )
                if response.status_code == 429 or response.status_code >= 500:
                    last_error = BackendUnavailable(
                        f"transient HTTP {response.status_code}"
                    )
                else:
                    raise BackendUnavailable(
                        f"unrecoverable HTTP {response.status_code}: "
                        f"{response.text[:200]}"
                    )
            if attempt < self.config.max_retries:
                self._sleeper(self._backoff(attempt))
        raise BackendUnavailable(
            f"request failed after {self.config.max_retries} attempts: {last_error}"
        )

    def _backoff(self, attempt: int) -> float:
        base = min(self.config.backoff_cap, self.config.backoff_base * 2 ** (attempt - 1))
        return base * (0.5 + self._rng.random() / 2)

    @staticmethod
    def _parse(response: httpx.Response) -> RawCompletion:
        try:
            payload = response.json()
            choice = payload["choices"][0]
            text = choice["message"]["content"] or ""
            finish_reason = choice.get("finish_reason") or "error"
            usage = payload.get("usage", {})
            token_count = int(usage.get("completion_tokens", 0))
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(f"malformed completion payload: {exc}") from exc
        if not text:
            finish_reason = "error" if finish_reason == "stop" else finish_reason
        return RawCompletion(
            text=text, finish_reason=finish_reason, token_count=token_count
        )

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "HttpSampler":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
