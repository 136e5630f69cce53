"""LLM client contract plus the two implementations.

MockLLMClient is a pure function of (prompt, seed): it reads the machine-
readable header lines the prompt templates embed (TASK:, NEED:, QUERY:,
RETRIEVAL_SCORE:, ...) and fills deterministic response templates. That
keeps the whole agent pipeline byte-reproducible in tests and demos.

HTTPLLMClient talks to an OpenAI-style chat-completions endpoint configured
through environment variables; transport failures raise LLMTransportError,
which callers may retry.
"""

from __future__ import annotations

import hashlib
import os
import re
from typing import Protocol

import httpx

from ..errors import TalentKGError


class LLMTransportError(TalentKGError):
    """Network or HTTP failure talking to the backbone; retriable."""


class AgentParseError(TalentKGError):
    """The backbone's reply did not match the expected envelope."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class LLMClient(Protocol):
    name: str

    def complete(self, prompt: str, temperature: float = 0.0, seed: int = 0, max_tokens: int = 512) -> str:
        ...


_STOPWORDS = frozenset(
    "a an and are as at be by for from in into is it of on or that the their "
    "this to want we with i my our your need needs collaborate collaboration "
    "expert experts looking find help improve working work".split()
)


def _field(prompt: str, key: str) -> str:
    m = re.search(rf"^{key}:\s*(.*)$", prompt, flags=re.MULTILINE)
    return m.group(1).strip() if m else ""


def _first_title(prompt: str) -> str:
    # profile blocks list papers as "- <title> (<venue>, <year>, <n> citations)";
    # greedy up to the final parenthetical so titles containing parens survive
    m = re.search(r"^- (.+) \(", prompt, flags=re.MULTILINE)
    return m.group(1).strip() if m else ""


def salient_tokens(text: str, limit: int = 8) -> list[str]:
    out: list[str] = []
    for tok in re.findall(r"[a-z0-9-]+", text.lower()):
        if tok in _STOPWORDS or tok in out:
            continue
        out.append(tok)
        if len(out) >= limit:
            break
    return out


class MockLLMClient:
    """Deterministic template responder for tests and --mock-llm serving."""

    def __init__(self, persona_seed: int = 0, name: str = "mock"):
        self.persona_seed = persona_seed
        self.name = name

    def _pick(self, prompt: str, seed: int, n: int) -> int:
        digest = hashlib.blake2b(
            f"{self.persona_seed}:{seed}:{prompt}".encode("utf-8"), digest_size=8
        ).digest()
        return int.from_bytes(digest, "little") % n

    def complete(self, prompt: str, temperature: float = 0.0, seed: int = 0, max_tokens: int = 512) -> str:
        task = _field(prompt, "TASK")
        if task == "expertise_gap":
            return self._expertise_gap(prompt, seed)
        if task == "rerank_candidate":
            return self._rerank(prompt, seed)
        if task == "justify_collaboration":
            return self._justify_collab(prompt, seed)
        if task == "justify_dataset_use":
            return self._justify_dataset(prompt, seed)
        return "OK"

    def _expertise_gap(self, prompt: str, seed: int) -> str:
        name = _field(prompt, "RESEARCHER") or "the researcher"
        need = _field(prompt, "NEED")
        tokens = salient_tokens(need)
        query = " ".join(tokens) if tokens else "interdisciplinary methods collaboration"
        anchor = _first_title(prompt)
        anchor_part = f' and their work on "{anchor}"' if anchor else ""
        variants = [
            f"{name}'s profile{anchor_part} does not yet cover {query}; the missing "
            f"capability is best described by those terms, so the search should target them.",
            f"Relative to the stated need, {name}{anchor_part} lacks demonstrated expertise "
            f"in {query}, which the retrieval query should capture directly.",
            f"The gap between {name}'s publication record{anchor_part} and the request centers "
            f"on {query}; candidates should be retrieved against exactly that.",
        ]
        thoughts = variants[self._pick(prompt, seed, len(variants))]
        return f"THOUGHTS: {thoughts}\nQUERY: {query}"

    def _rerank(self, prompt: str, seed: int) -> str:
        name = _field(prompt, "CANDIDATE_NAME") or "the candidate"
        query = _field(prompt, "QUERY")
        try:
            retrieval = float(_field(prompt, "RETRIEVAL_SCORE"))
        except ValueError:
            retrieval = 0.0
        # scaled retrieval cosine, so mock ordering tracks retrieval ordering
        score = max(0, min(100, round(50.0 + 45.0 * retrieval)))
        title = _first_title(prompt)
        focus = " ".join(query.split()[:4]) if query else "the stated need"
        if title:
            just = f'{name}\'s work on "{title}" directly addresses {focus}.'
        else:
            just = f"{name}'s publication record aligns with {focus}."
        return f"SCORE: {score}\nJUSTIFICATION: {just}"

    def _justify_collab(self, prompt: str, seed: int) -> str:
        subject = _field(prompt, "SUBJECT_NAME") or "the researcher"
        candidate = _field(prompt, "CANDIDATE_NAME") or "the candidate"
        cand_block = prompt.split("CANDIDATE PROFILE:", 1)[-1]
        title = _first_title(cand_block) or _first_title(prompt)
        title_part = f' shown in "{title}"' if title else ""
        variants = [
            f"{candidate}'s expertise{title_part} complements {subject}'s current agenda; "
            f"a collaboration would combine both tracks into a stronger joint program.",
            f"Pairing {subject} with {candidate} is promising because {candidate}'s "
            f"results{title_part} supply methods {subject}'s projects can apply directly.",
        ]
        return variants[self._pick(prompt, seed, len(variants))]

    def _justify_dataset(self, prompt: str, seed: int) -> str:
        dataset = _field(prompt, "DATASET_NAME") or "the dataset"
        researcher = _field(prompt, "RESEARCHER_NAME") or "the researcher"
        title = _first_title(prompt)
        title_part = f' such as "{title}"' if title else ""
        return (
            f"{dataset} fits {researcher}'s research line{title_part}: its records "
            f"extend the evidence base those studies build on, so adopting it should "
            f"be low-friction and high-yield."
        )


class HTTPLLMClient:
    """Chat-completions client configured via environment variables."""

    def __init__(
        self,
        model: str,
        endpoint: str | None = None,
        api_key: str | None = None,
        endpoint_env: str = "LLM_ENDPOINT",
        api_key_env: str = "LLM_API_KEY",
        timeout: float = 30.0,
    ):
        self.name = model
        self.model = model
        self.endpoint = endpoint or os.environ.get(endpoint_env, "")
        self.api_key = api_key or os.environ.get(api_key_env, "")
        self.timeout = timeout
        if not self.endpoint:
            raise LLMTransportError(f"no LLM endpoint configured (set {endpoint_env})")

    def complete(self, prompt: str, temperature: float = 0.0, seed: int = 0, max_tokens: int = 512) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
            "max_tokens": max_tokens,
            "seed": seed,
        }
        try:
            resp = httpx.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            data = resp.json()
            return data["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise LLMTransportError(f"LLM call failed: {exc}") from exc
