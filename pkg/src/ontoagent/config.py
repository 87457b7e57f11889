"""Application configuration: backend selection, interview knobs, storage paths."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .backend import Backend, HttpBackend, ScriptedBackend, load_script
from .engine import DEFAULT_GATE_THRESHOLD, DEFAULT_MAX_TURNS, SessionConfig
from .gym import BackendJudge, LexicalMatcher, Matcher

MATCHERS = ("lexical", "judge")
BACKENDS = ("scripted", "http")


@dataclass(frozen=True)
class AppConfig:
    backend: str = "scripted"
    model: str = ""
    api_base: str = ""
    api_key: str = ""
    script_path: str = ""
    strict_script: bool = True
    max_turns: int = DEFAULT_MAX_TURNS
    gate_threshold: int = DEFAULT_GATE_THRESHOLD
    matcher: str = "lexical"
    data_dir: Path = field(default_factory=lambda: Path("ontoagent-data"))
    host: str = "127.0.0.1"
    port: int = 8020
    figures: bool = True

    def __post_init__(self) -> None:
        if self.max_turns < 1 or self.gate_threshold < 1:
            raise ValueError("max_turns and gate_threshold must be >= 1")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.matcher not in MATCHERS:
            raise ValueError(f"matcher must be one of {MATCHERS}, got {self.matcher!r}")

    @classmethod
    def from_env(cls, env: dict[str, str] | None = None, **overrides) -> "AppConfig":
        env = dict(os.environ if env is None else env)
        base = cls(
            backend=env.get("ONTOAGENT_BACKEND", "scripted"),
            model=env.get("ONTOAGENT_MODEL", ""),
            api_base=env.get("ONTOAGENT_API_BASE", ""),
            api_key=env.get("ONTOAGENT_API_KEY", ""),
            script_path=env.get("ONTOAGENT_SCRIPT", ""),
        )
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return replace(base, **overrides) if overrides else base

    def build_backend(self) -> Backend:
        if self.backend == "http":
            return HttpBackend(model=self.model, api_base=self.api_base, api_key=self.api_key)
        entries = load_script(self.script_path) if self.script_path else []
        return ScriptedBackend(entries, strict=self.strict_script)

    def session_config(self) -> SessionConfig:
        return SessionConfig(max_turns=self.max_turns, gate_threshold=self.gate_threshold)

    def build_matcher(self, backend: Backend) -> Matcher:
        if self.matcher == "judge":
            return BackendJudge(backend)
        return LexicalMatcher()
