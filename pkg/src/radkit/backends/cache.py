"""Content-addressed on-disk cache for model completions.

A cache key is the sha256 digest of the request identity (model, temperature,
max_tokens, full prompt text, sample index), so rerunning an evaluation replays
completions instead of re-spending. Each entry is one JSON file named by the
hex digest; entries carry their own payload checksum, and any mismatch or
unreadable record raises :class:`StorageCorruption` rather than silently
returning bad data.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

from ..answers import RawCompletion
from ..errors import RadkitError


class StorageCorruption(RadkitError):
    """A cache entry failed its checksum or could not be decoded."""


def _canonical(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


@dataclass(frozen=True)
class CacheKey:
    """Content address of one completion request."""

    digest: str

    @classmethod
    def build(
        cls,
        model_id: str,
        temperature: float,
        max_tokens: int,
        prompt_text: str,
        sample_index: int,
        system_text: str | None = None,
    ) -> "CacheKey":
        identity = {
            "model_id": model_id,
            "temperature": repr(temperature),
            "max_tokens": max_tokens,
            "prompt_text": prompt_text,
            "system_text": system_text,
            "sample_index": sample_index,
        }
        return cls(hashlib.sha256(_canonical(identity)).hexdigest())


class ResponseCache:
    """Directory-backed store mapping cache keys to completions."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: CacheKey) -> Path:
        return self.directory / key.digest

    def get(self, key: CacheKey) -> RawCompletion | None:
        path = self._path(key)
        try:
            raw = path.read_bytes()
        except FileNotFoundError:
            return None
        try:
            record = json.loads(raw.decode("utf-8"))
            payload = record["completion"]
            stored_checksum = record["checksum"]
        except (ValueError, KeyError, TypeError) as exc:
            raise StorageCorruption(f"cache entry {key.digest} is unreadable") from exc
        actual = hashlib.sha256(_canonical(payload)).hexdigest()
        if actual != stored_checksum:
            raise StorageCorruption(f"cache entry {key.digest} failed its checksum")
        try:
            return RawCompletion(
                text=payload["text"],
                finish_reason=payload["finish_reason"],
                token_count=payload["token_count"],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise StorageCorruption(f"cache entry {key.digest} is malformed") from exc

    def put(self, key: CacheKey, completion: RawCompletion) -> None:
        payload = {
            "text": completion.text,
            "finish_reason": completion.finish_reason,
            "token_count": completion.token_count,
        }
        record = {
            "checksum": hashlib.sha256(_canonical(payload)).hexdigest(),
            "completion": payload,
        }
        body = json.dumps(record, sort_keys=True, indent=2).encode("utf-8")
        # Write-then-rename keeps concurrent writers from exposing torn entries.
        fd, tmp_name = tempfile.mkstemp(dir=self.directory, prefix=".tmp-")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(body)
            os.replace(tmp_name, self._path(key))
        except BaseException:
            try:
                os.unlink(tmp_name)
            except FileNotFoundError:
                pass
            raise

    def stats(self) -> dict:
        entries = [p for p in self.directory.iterdir() if not p.name.startswith(".")]
        return {
            "entries": len(entries),
            "bytes": sum(p.stat().st_size for p in entries),
            "directory": str(self.directory),
        }

    def purge(self) -> int:
        removed = 0
        for path in self.directory.iterdir():
            if not path.name.startswith("."):
                path.unlink()
                removed += 1
        return removed
