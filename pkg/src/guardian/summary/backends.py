"""Completion backends: a deterministic scripted mock and an HTTP client.

The mock resolves, in order: an exact prompt-fingerprint script entry, a
queued response, then the BEGIN_BASELINE block embedded in the prompt itself.
Every prompt built by this package carries such a baseline, so the whole
pipeline runs offline with no canned data at all.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path
from typing import Iterable, Protocol

from ..errors import BackendUnavailableError, InputError

BASELINE_BEGIN = "BEGIN_BASELINE"
BASELINE_END = "END_BASELINE"

ENV_URL = "GUARDIAN_LLM_URL"
ENV_KEY = "GUARDIAN_LLM_KEY"


class CompletionClient(Protocol):
    backend_kind: str

    def complete(self, prompt: str) -> str: ...


def prompt_fingerprint(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


def extract_baseline(prompt: str) -> str | None:
    lines = prompt.splitlines()
    try:
        start = lines.index(BASELINE_BEGIN)
        end = lines.index(BASELINE_END, start + 1)
    except ValueError:
        return None
    return "\n".join(lines[start + 1:end])


class MockCompletionClient:
    """Deterministic offline backend; a pure function of (prompt, script, queue)."""

    backend_kind = "mock"

    def __init__(
        self,
        script: dict[str, str] | None = None,
        responses: Iterable[str] = (),
        seed: int = 0,
    ):
        self.script = dict(script or {})
        self.seed = seed
        self._queue = list(responses)
        self._lock = threading.Lock()
        self.calls: list[str] = []

    @classmethod
    def from_script_file(cls, path: str | Path) -> "MockCompletionClient":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read mock script {path}: {exc}") from exc
        return cls(script=dict(doc))

    def complete(self, prompt: str) -> str:
        with self._lock:
            self.calls.append(prompt)
            fingerprint = prompt_fingerprint(prompt)
            if fingerprint in self.script:
                return self.script[fingerprint]
            if self._queue:
                return self._queue.pop(0)
        baseline = extract_baseline(prompt)
        if baseline is not None:
            return baseline
        return "NON_ACTIONABLE: mock backend has no scripted answer"


class HttpCompletionClient:
    """OpenAI-compatible chat-completions client, configured via environment."""

    backend_kind = "http"

    def __init__(
        self,
        url: str | None = None,
        api_key: str | None = None,
        model: str = "deepseek-chat",
        timeout: float = 30.0,
    ):
        self.url = url or os.environ.get(ENV_URL)
        self.api_key = api_key or os.environ.get(ENV_KEY)
        self.model = model
        self.timeout = timeout
        if not self.url:
            raise BackendUnavailableError(
                f"no completion endpoint configured; set {ENV_URL}"
            )

    def complete(self, prompt: str) -> str:
        import httpx

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        try:
            response = httpx.post(
                self.url.rstrip("/") + "/chat/completions",
                json=body,
                headers=headers,
                timeout=self.timeout,
            )
            response.raise_for_status()
            doc = response.json()
            return doc["choices"][0]["message"]["content"]
        except Exception as exc:
            raise BackendUnavailableError(f"completion backend failed: {exc}") from exc
