"""Fill-in-the-blank sentence rendering for the three explanation scenarios.

Templates carry {class} and {objects} placeholders. The object list is
deduplicated preserving first occurrence and joined with an Oxford
comma; when count rendering is enabled, labels seen k > 1 times render
as "k xlabel" style multiplicity markers. Template wording is plain
configuration and can be replaced from a JSON file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import EmptyObjectList, IoFailure, SchemaError

DEFAULT_SCENARIO1 = (
    "This image was classified as {class} because the model focused on {objects}."
)
DEFAULT_SCENARIO2 = (
    "The initial prediction was revised to {class} based on {objects} found in the scene."
)
DEFAULT_SCENARIO3 = (
    "The prediction {class} is not reliable, and no objects were detected to support or correct it."
)
DEFAULT_SCENARIO1_EMPTY = (
    "This image was classified as {class}, but no detected object passed the relevance checks."
)


@dataclass(frozen=True)
class TemplateSet:
    """One template per scenario plus the empty-evidence fallback."""

    scenario1: str = DEFAULT_SCENARIO1
    scenario2: str = DEFAULT_SCENARIO2
    scenario3: str = DEFAULT_SCENARIO3
    scenario1_empty: str = DEFAULT_SCENARIO1_EMPTY
    render_counts: bool = False

    def __post_init__(self) -> None:
        for name, tpl in (("scenario1", self.scenario1), ("scenario2", self.scenario2)):
            if "{class}" not in tpl or "{objects}" not in tpl:
                raise ValueError(f"{name} template needs both {{class}} and {{objects}}")
        for name, tpl in (("scenario3", self.scenario3), ("scenario1_empty", self.scenario1_empty)):
            if "{class}" not in tpl:
                raise ValueError(f"{name} template needs {{class}}")
            if "{objects}" in tpl:
                raise ValueError(f"{name} template must not use {{objects}}")


DEFAULT_TEMPLATES = TemplateSet()


def load_templates(path: Path | str) -> TemplateSet:
    """Read a template file: JSON with scenario1/scenario2/scenario3 keys.

    Missing keys fall back to the defaults; scenario1_empty and
    render_counts may also be given.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: invalid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    allowed = {"scenario1", "scenario2", "scenario3", "scenario1_empty", "render_counts"}
    unknown = set(doc) - allowed
    if unknown:
        raise SchemaError(f"{path}: unknown template keys {sorted(unknown)}")
    try:
        return TemplateSet(**doc)
    except (TypeError, ValueError) as e:
        raise SchemaError(f"{path}: {e}") from e


def format_object_list(labels: Sequence[str], render_counts: bool = False) -> str:
    """Join labels into an English list, deduplicated in first-seen order.

    ["bed", "lamp"] -> "the bed and the lamp"; with counts enabled,
    ["bed", "bed", "lamp"] -> "the 2 xbed and the lamp" (U+00D7 times sign).
    """
    order: list[str] = []
    counts: dict[str, int] = {}
    for label in labels:
        if label not in counts:
            order.append(label)
        counts[label] = counts.get(label, 0) + 1
    items = []
    for label in order:
        k = counts[label]
        if render_counts and k > 1:
            items.append(f"the {k} ×{label}")
        else:
            items.append(f"the {label}")
    if not items:
        return ""
    if len(items) == 1:
        return items[0]
    if len(items) == 2:
        return f"{items[0]} and {items[1]}"
    return ", ".join(items[:-1]) + f", and {items[-1]}"


def render_parts(
    scenario: int,
    final_label: str,
    objects: Sequence[str],
    templates: TemplateSet = DEFAULT_TEMPLATES,
) -> str:
    """Render from raw fields. See render() for the object-based form."""
    if scenario == 3:
        return templates.scenario3.replace("{class}", final_label)
    if scenario == 1:
        tpl = templates.scenario1
    elif scenario == 2:
        tpl = templates.scenario2
    else:
        raise ValueError(f"scenario must be 1, 2, or 3, got {scenario}")
    joined = format_object_list(objects, templates.render_counts)
    if not joined:
        raise EmptyObjectList(f"scenario {scenario} rendered with no objects")
    return tpl.replace("{class}", final_label).replace("{objects}", joined)


def render_scenario1_empty(final_label: str, templates: TemplateSet = DEFAULT_TEMPLATES) -> str:
    """Fallback wording for a confident prediction with zero validated objects."""
    return templates.scenario1_empty.replace("{class}", final_label)


def render(explanation, templates: TemplateSet = DEFAULT_TEMPLATES) -> str:
    """Render the sentence for an explanation record (duck-typed)."""
    return render_parts(
        explanation.scenario,
        explanation.final_label,
        explanation.contributing_objects,
        templates,
    )
