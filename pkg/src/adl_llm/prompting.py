"""System and user prompt construction."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from string import Template
from typing import Sequence

from .errors import ConfigurationError
from .model import HomeMetadata
from .window2text import WindowText

_TEMPLATE_FILES = ("system", "examples", "example_item", "user")


@dataclass(frozen=True)
class PromptTemplates:
    system: str
    examples: str
    example_item: str
    user: str

    @classmethod
    def load(cls, directory: str | Path | None = None) -> PromptTemplates:
        """Bundled templates, with any file present in ``directory`` overriding."""
        texts = {}
        for name in _TEMPLATE_FILES:
            override = Path(directory) / f"{name}.txt" if directory else None
            if override is not None and override.exists():
                texts[name] = override.read_text(encoding="utf-8")
            else:
                texts[name] = (
                    resources.files("adl_llm.templates").joinpath(f"{name}.txt")
                    .read_text(encoding="utf-8")
                )
        return cls(**texts)


DEFAULT_TEMPLATES = PromptTemplates.load()


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user: str
    examples_used: tuple[tuple[str, str], ...] = field(default=())
    model_hint: str = ""


def _bullets(items: Sequence[str]) -> str:
    return "\n".join(f"- {item}" for item in items)


def build_system_prompt(
    meta: HomeMetadata,
    examples: Sequence[tuple[str, str]] = (),
    templates: PromptTemplates = DEFAULT_TEMPLATES,
) -> str:
    """Task instructions for the home; few-shot examples are appended last.

    The zero-shot prompt is always a prefix of the few-shot prompt.
    """
    if not meta.activities:
        raise ConfigurationError("cannot build a prompt without activities")
    interactions = []
    for s in meta.sensors:
        line = f"{s.describe()} ({s.room})"
        if line not in interactions:
            interactions.append(line)
    prompt = Template(templates.system).substitute(
        rooms=_bullets(meta.rooms),
        interactions=_bullets(interactions),
        activities=_bullets(meta.activities),
    ).rstrip()
    if not examples:
        return prompt
    items = "\n".join(
        Template(templates.example_item).substitute(index=i, text=text, label=label)
        for i, (text, label) in enumerate(examples, start=1)
    )
    block = Template(templates.examples).substitute(examples=items.rstrip()).rstrip()
    return prompt + "\n" + block


def build_user_prompt(
    wt: WindowText,
    meta: HomeMetadata,
    templates: PromptTemplates = DEFAULT_TEMPLATES,
) -> str:
    del meta  # activity list lives in the system prompt
    return Template(templates.user).substitute(window=wt.text).strip()


def build_bundle(
    wt: WindowText,
    meta: HomeMetadata,
    examples: Sequence[tuple[str, str]] = (),
    *,
    model_hint: str = "",
    templates: PromptTemplates = DEFAULT_TEMPLATES,
) -> PromptBundle:
    return PromptBundle(
        system=build_system_prompt(meta, examples, templates),
        user=build_user_prompt(wt, meta, templates),
        examples_used=tuple(examples),
        model_hint=model_hint,
    )
