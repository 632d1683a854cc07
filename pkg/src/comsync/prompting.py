"""Prompt rendering: system message, instruction, delimiter-separated
demonstrations, and the target block."""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Sequence

from .samples import CCSample

DEFAULT_DELIMITER = "END_OF_DEMO"
DEMO_PLACEHOLDERS = ("{old_code}", "{new_code}", "{old_comment}", "{new_comment}")
TARGET_PLACEHOLDERS = ("{old_code}", "{new_code}", "{old_comment}")

_SECTION_NAMES = ("system", "instruction", "demo", "target")


class TemplateError(Exception):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    system_message: str
    instruction: str
    demo_block: str
    target_block: str
    delimiter: str = DEFAULT_DELIMITER

    def validate(self) -> None:
        for placeholder in DEMO_PLACEHOLDERS:
            if self.demo_block.count(placeholder) != 1:
                raise TemplateError(f"demo block must contain {placeholder} exactly once")
        for placeholder in TARGET_PLACEHOLDERS:
            if self.target_block.count(placeholder) != 1:
                raise TemplateError(f"target block must contain {placeholder} exactly once")
        if "{new_comment}" in self.target_block:
            raise TemplateError("target block must not contain {new_comment}")
        if not self.delimiter:
            raise TemplateError("delimiter must be non-empty")

    @classmethod
    def parse(cls, text: str, delimiter: str = DEFAULT_DELIMITER) -> "PromptTemplate":
        """Parse the sectioned template file format.

        Sections start at ``---SYSTEM---``, ``---INSTRUCTION---``,
        ``---DEMO---``, ``---TARGET---`` header lines (case-insensitive);
        each section's lines run until the next header.
        """
        sections: dict[str, list[str]] = {}
        current: list[str] | None = None
        for line in text.split("\n"):
            stripped = line.strip()
            if stripped.startswith("---") and stripped.endswith("---") and len(stripped) > 6:
                name = stripped[3:-3].strip().lower()
                if name not in _SECTION_NAMES:
                    raise TemplateError(f"unknown template section: {name!r}")
                if name in sections:
                    raise TemplateError(f"duplicate template section: {name!r}")
                sections[name] = []
                current = sections[name]
                continue
            if current is not None:
                current.append(line)
        missing = [name for name in _SECTION_NAMES if name not in sections]
        if missing:
            raise TemplateError(f"missing template sections: {', '.join(missing)}")

        def block(name: str) -> str:
            lines = sections[name]
            while lines and not lines[-1].strip():
                lines.pop()
            return "\n".join(lines) + "\n" if lines else ""

        template = cls(
            system_message=block("system").rstrip("\n"),
            instruction=block("instruction"),
            demo_block=block("demo"),
            target_block=block("target"),
            delimiter=delimiter,
        )
        template.validate()
        return template

    @classmethod
    def load(cls, path: str | Path, delimiter: str = DEFAULT_DELIMITER) -> "PromptTemplate":
        return cls.parse(Path(path).read_text(encoding="utf-8"), delimiter=delimiter)

    @classmethod
    def default(cls, delimiter: str = DEFAULT_DELIMITER) -> "PromptTemplate":
        text = resources.files("comsync").joinpath("templates/default.txt").read_text(encoding="utf-8")
        return cls.parse(text, delimiter=delimiter)

    def with_delimiter(self, delimiter: str) -> "PromptTemplate":
        return replace(self, delimiter=delimiter)


def _fill(block: str, sample: CCSample, with_reference: bool) -> str:
    filled = (
        block.replace("{old_code}", sample.old_code)
        .replace("{new_code}", sample.new_code)
        .replace("{old_comment}", sample.old_comment)
    )
    if with_reference:
        if sample.new_comment is None:
            raise TemplateError(f"demonstration {sample.id!r} has no reference comment")
        filled = filled.replace("{new_comment}", sample.new_comment)
    return filled


def render_prompt(
    template: PromptTemplate, demos: Sequence[CCSample], target: CCSample
) -> tuple[str, str]:
    """Render the (system, user) message pair.

    The user message is the instruction, one filled demo block plus delimiter
    per demonstration, then the filled target block. Zero demonstrations give
    a zero-shot prompt with no delimiter occurrences.
    """
    template.validate()
    parts = [template.instruction]
    for demo in demos:
        parts.append(_fill(template.demo_block, demo, with_reference=True))
        parts.append(template.delimiter + "\n")
    parts.append(_fill(template.target_block, target, with_reference=False))
    return template.system_message, "".join(parts)
