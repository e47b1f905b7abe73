"""Remote chat-completions reasoner and its deterministic parsing layer.

The client speaks the common JSON chat protocol: request ``{model,
messages, temperature}``, response ``{choices: [{message: {content}}],
usage: {prompt_tokens, completion_tokens}}``.  Completions are parsed by
extracting known receptacle ids in order of appearance, so the reasoner
can never emit an id outside the candidate list.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import httpx

from .errors import CompletionParseError, RemoteReasonerError
from .reasoning import ReasonerMetrics, ReceptacleDecision, SceneSummary
from .scene import TaskDescription

logger = logging.getLogger(__name__)

ENDPOINT_ENV = "PLACEKIT_LLM_ENDPOINT"
MODEL_ENV = "PLACEKIT_LLM_MODEL"
API_KEY_ENV = "PLACEKIT_LLM_API_KEY"

DEFAULT_TIMEOUT = 30.0
DEFAULT_RETRIES = 2


@dataclass(frozen=True)
class ChatCompletion:
    content: str
    prompt_tokens: int
    completion_tokens: int


@dataclass(frozen=True)
class PromptTemplates:
    system: str
    user: str

    @staticmethod
    def load(directory: str | Path | None = None) -> "PromptTemplates":
        """Read system/user templates from a directory, or the packaged defaults."""
        if directory is not None:
            base = Path(directory)
            return PromptTemplates(
                system=(base / "system.txt").read_text(),
                user=(base / "user.txt").read_text(),
            )
        pkg = resources.files("placekit") / "prompts"
        return PromptTemplates(
            system=(pkg / "system.txt").read_text(),
            user=(pkg / "user.txt").read_text(),
        )


class RemoteChatClient:
    """Blocking HTTP client for a chat-completions endpoint.

    The credential is only ever read from the environment; endpoint and
    model fall back to their environment variables when not given.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        model: str | None = None,
        timeout: float = DEFAULT_TIMEOUT,
        retries: int = DEFAULT_RETRIES,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV, "")
        self.model = model or os.environ.get(MODEL_ENV, "")
        if not self.endpoint:
            raise RemoteReasonerError("no chat endpoint configured", attempts=0)
        self.timeout = timeout
        self.retries = retries
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def complete(self, messages: list[dict], temperature: float = 0.0) -> ChatCompletion:
        headers = {}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {"model": self.model, "messages": messages, "temperature": temperature}
        attempts = 0
        last_error: Exception | None = None
        while attempts <= self.retries:
            attempts += 1
            try:
                response = self._client.post(self.endpoint, json=payload, headers=headers)
                response.raise_for_status()
                body = response.json()
                usage = body.get("usage", {})
                return ChatCompletion(
                    content=body["choices"][0]["message"]["content"],
                    prompt_tokens=int(usage.get("prompt_tokens", 0)),
                    completion_tokens=int(usage.get("completion_tokens", 0)),
                )
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                logger.warning("chat request attempt %d failed: %s", attempts, exc)
        raise RemoteReasonerError(
            f"chat endpoint failed after {attempts} attempts: {last_error}",
            attempts=attempts,
        )


def summary_text(summary: SceneSummary) -> str:
    lines = [
        f"object to place: {summary.placement_label} "
        f"attributes={summary.placement_attributes}"
    ]
    for o in summary.objects:
        lines.append(
            f"- {o.id} label={o.label} attributes={o.attributes} "
            f"center=({o.center.x:.3f}, {o.center.y:.3f}, {o.center.z:.3f}) "
            f"size=({o.size.x:.3f}, {o.size.y:.3f}, {o.size.z:.3f})"
        )
    return "\n".join(lines)


def extract_receptacle_ids(completion: str, known_ids: list[str]) -> list[str]:
    """Known ids found in a completion, ordered by first appearance.

    Longer ids win at the same position so ``shelf#tier12`` is never
    mistaken for ``shelf#tier1``.
    """
    hits: list[tuple[int, str]] = []
    for rid in sorted(known_ids, key=len, reverse=True):
        start = 0
        while True:
            pos = completion.find(rid, start)
            if pos < 0:
                break
            covered = any(
                p <= pos < p + len(other) for p, other in hits
            )
            if not covered:
                hits.append((pos, rid))
            start = pos + 1
    hits.sort()
    seen: list[str] = []
    for _, rid in hits:
        if rid not in seen:
            seen.append(rid)
    return seen


def llm_reason(
    client,
    summary: SceneSummary,
    task: TaskDescription,
    templates: PromptTemplates | None = None,
    temperature: float = 0.0,
) -> ReceptacleDecision:
    """One chat round-trip: render the prompt, parse ids, record usage.

    Raises RemoteReasonerError on transport failure and
    CompletionParseError when the completion names no known id.
    """
    if templates is None:
        templates = PromptTemplates.load()
    candidates = summary.receptacle_ids()
    fields = {
        "summary": summary_text(summary),
        "task": task.text,
        "candidates": ", ".join(candidates),
    }
    messages = [
        {"role": "system", "content": templates.system.format(**fields)},
        {"role": "user", "content": templates.user.format(**fields)},
    ]
    start = time.perf_counter()
    completion = client.complete(messages, temperature=temperature)
    elapsed = time.perf_counter() - start
    ids = extract_receptacle_ids(completion.content, candidates)
    if not ids:
        raise CompletionParseError(
            "completion names no known receptacle id", completion=completion.content
        )
    return ReceptacleDecision(
        receptacle_ids=tuple(ids),
        rationale=completion.content.strip(),
        metrics=ReasonerMetrics(
            wall_time=elapsed,
            prompt_tokens=completion.prompt_tokens,
            completion_tokens=completion.completion_tokens,
        ),
    )
