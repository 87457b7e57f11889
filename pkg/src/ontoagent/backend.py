"""Gateway to text generation: live HTTP, deterministic scripted replay, recording.

All model traffic flows through :func:`generate`, which enforces greedy
decoding, validates structured replies against the registered schema, and
re-prompts with the validation error at most twice before giving up.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Protocol

import jsonschema

from .prompts import SCHEMAS

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 3


class BackendError(Exception):
    """Base class for generation-backend failures."""


class BackendUnavailable(BackendError):
    """Transport-level failure talking to a live model."""


class MalformedOutput(BackendError):
    """The model never produced a schema-valid reply within the retry budget."""


class ScriptMiss(BackendError):
    """A strict scripted backend saw a fingerprint it has no response for."""


class StructureError(ValueError):
    """Internal: one reply failed JSON extraction or schema validation."""


@dataclass(frozen=True)
class GenerationRequest:
    system_text: str
    user_text: str
    expects_structure: bool = False
    schema_name: str = ""
    decoding: str = "greedy"  # fixed; all calls are reproducible


@dataclass
class GenerationResponse:
    raw_text: str
    parsed: Any | None
    attempts: int


class Backend(Protocol):
    def complete(self, request: GenerationRequest) -> str:
        """Return the model's raw reply for one request."""
        ...


def normalize_prompt(text: str) -> str:
    """Whitespace-insensitive form used for replay fingerprints."""
    return re.sub(r"\s+", " ", text.strip())


def prompt_digest(system_text: str, user_text: str) -> str:
    payload = normalize_prompt(system_text) + "\n" + normalize_prompt(user_text)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def request_fingerprint(request: GenerationRequest) -> tuple[str, str]:
    return request.schema_name, prompt_digest(request.system_text, request.user_text)


@dataclass(frozen=True)
class ScriptEntry:
    schema_name: str
    prompt_digest: str
    response_text: str


class ScriptedBackend:
    """Replays canned responses keyed by (schema_name, prompt digest).

    In strict mode an unmatched fingerprint raises ScriptMiss; in permissive
    mode it falls back to the entry recorded with digest ``"*"`` for that
    schema, or the empty string. The script is immutable after construction.
    """

    def __init__(self, entries: Iterable[ScriptEntry | dict[str, str]], strict: bool = True):
        self.strict = strict
        self._responses: dict[tuple[str, str], str] = {}
        self._defaults: dict[str, str] = {}
        for raw in entries:
            entry = raw if isinstance(raw, ScriptEntry) else ScriptEntry(**raw)
            if entry.prompt_digest == "*":
                self._defaults[entry.schema_name] = entry.response_text
            else:
                self._responses[(entry.schema_name, entry.prompt_digest)] = entry.response_text

    @classmethod
    def from_file(cls, path: str | Path, strict: bool = True) -> "ScriptedBackend":
        return cls(load_script(path), strict=strict)

    def __len__(self) -> int:
        return len(self._responses)

    def complete(self, request: GenerationRequest) -> str:
        key = request_fingerprint(request)
        hit = self._responses.get(key)
        if hit is not None:
            return hit
        if self.strict:
            raise ScriptMiss(
                f"no scripted response for schema {key[0]!r} digest {key[1][:12]}…"
            )
        return self._defaults.get(request.schema_name, "")


class RecordingBackend:
    """Wraps another backend and records every exchange as script entries."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self.entries: list[ScriptEntry] = []
        self._seen: dict[tuple[str, str], str] = {}

    def complete(self, request: GenerationRequest) -> str:
        response = self.inner.complete(request)
        key = request_fingerprint(request)
        previous = self._seen.get(key)
        if previous is None:
            self._seen[key] = response
            self.entries.append(ScriptEntry(key[0], key[1], response))
        elif previous != response:
            raise ValueError(f"non-deterministic inner backend at fingerprint {key}")
        return response

    def save(self, path: str | Path) -> None:
        save_script(path, self.entries)


def load_script(path: str | Path) -> list[ScriptEntry]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise ValueError(f"{path}: script file must hold a JSON array")
    return [ScriptEntry(**item) for item in data]


def save_script(path: str | Path, entries: Iterable[ScriptEntry]) -> None:
    rows = [
        {"schema_name": e.schema_name, "prompt_digest": e.prompt_digest, "response_text": e.response_text}
        for e in entries
    ]
    Path(path).write_text(json.dumps(rows, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


class HttpBackend:
    """Minimal chat-completions client: one request, one complete reply.

    Decoding is pinned to temperature 0; streaming is never used because
    every caller needs the full structured reply.
    """

    def __init__(self, model: str, api_base: str, api_key: str = "", timeout: float = 120.0):
        if not model or not api_base:
            raise ValueError("http backend requires a model name and an api base URL")
        self.model = model
        self.api_base = api_base.rstrip("/")
        self.api_key = api_key
        self.timeout = timeout

    def complete(self, request: GenerationRequest) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": request.user_text},
            ],
        }
        try:
            resp = requests.post(
                f"{self.api_base}/chat/completions", json=body, headers=headers, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise BackendUnavailable(str(exc)) from exc
        if resp.status_code != 200:
            raise BackendUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendUnavailable(f"unexpected completion payload: {exc}") from exc


def extract_json(raw: str) -> Any:
    """Pull the first JSON value out of a reply, tolerating fences and prose."""
    text = raw.strip()
    fenced = re.match(r"^```(?:json)?\s*(.*?)\s*```$", text, re.DOTALL)
    if fenced:
        text = fenced.group(1)
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    decoder = json.JSONDecoder()
    for match in re.finditer(r"[\[{]", text):
        try:
            value, _ = decoder.raw_decode(text[match.start():])
            return value
        except json.JSONDecodeError:
            continue
    raise StructureError("reply is not valid JSON")


def parse_structured(raw: str, schema_name: str) -> Any:
    """Extract and schema-validate a structured reply."""
    schema = SCHEMAS.get(schema_name)
    if schema is None:
        raise KeyError(f"no schema registered under {schema_name!r}")
    value = extract_json(raw)
    try:
        jsonschema.validate(value, schema)
    except jsonschema.ValidationError as exc:
        path = "$" + "".join(f"[{p!r}]" for p in exc.absolute_path)
        raise StructureError(f"schema {schema_name!r} violated at {path}: {exc.message}") from None
    return value


def retry_user_text(original_user_text: str, error: str, schema_name: str) -> str:
    """The re-prompt sent after an invalid structured reply.

    Public so scripted fixtures can compute the retry fingerprint.
    """
    return (
        f"{original_user_text}\n\n"
        f"Your previous reply was invalid: {error}\n"
        f"Reply again with only the strict JSON for {schema_name!r}."
    )


def generate(request: GenerationRequest, backend: Backend) -> GenerationResponse:
    """Run one generation, validating structure and retrying on bad output.

    Transport errors and script misses propagate untouched; structural
    failures re-prompt with the validation error appended, at most
    ``MAX_ATTEMPTS`` total attempts, then raise MalformedOutput.
    """
    if not request.user_text.strip():
        raise ValueError("user_text must be nonempty")
    current = request
    attempts = 0
    last_error = ""
    while attempts < MAX_ATTEMPTS:
        attempts += 1
        raw = backend.complete(current)
        if not request.expects_structure:
            return GenerationResponse(raw_text=raw, parsed=None, attempts=attempts)
        try:
            parsed = parse_structured(raw, request.schema_name)
            return GenerationResponse(raw_text=raw, parsed=parsed, attempts=attempts)
        except StructureError as exc:
            last_error = str(exc)
            logger.warning("attempt %d for %s failed: %s", attempts, request.schema_name, exc)
            current = replace(
                request,
                user_text=retry_user_text(request.user_text, last_error, request.schema_name),
            )
    raise MalformedOutput(
        f"no valid {request.schema_name!r} reply after {MAX_ATTEMPTS} attempts: {last_error}"
    )


def backend_from_env(env: dict[str, str] | None = None) -> Backend:
    """Build a backend from ONTOAGENT_* environment variables."""
    env = dict(os.environ if env is None else env)
    kind = env.get("ONTOAGENT_BACKEND", "scripted")
    if kind == "scripted":
        script = env.get("ONTOAGENT_SCRIPT", "")
        entries = load_script(script) if script else []
        return ScriptedBackend(entries, strict=True)
    if kind == "http":
        return HttpBackend(
            model=env.get("ONTOAGENT_MODEL", ""),
            api_base=env.get("ONTOAGENT_API_BASE", ""),
            api_key=env.get("ONTOAGENT_API_KEY", ""),
        )
    raise ValueError(f"ONTOAGENT_BACKEND must be 'scripted' or 'http', got {kind!r}")
