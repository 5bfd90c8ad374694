"""Template rendering: golden strings, dedup, counts, and template files."""

import json

import pytest

from tbx.errors import EmptyObjectList, SchemaError
from tbx.sentence import (
    TemplateSet,
    format_object_list,
    load_templates,
    render_parts,
    render_scenario1_empty,
)

GOLDEN_1 = "This image was classified as bedroom because the model focused on the bed and the lamp."
GOLDEN_2 = "The initial prediction was revised to kitchen based on the oven and the refrigerator found in the scene."
GOLDEN_3 = "The prediction bar is not reliable, and no objects were detected to support or correct it."


def test_golden_scenario_sentences():
    assert render_parts(1, "bedroom", ["bed", "lamp"]) == GOLDEN_1
    assert render_parts(2, "kitchen", ["oven", "refrigerator"]) == GOLDEN_2
    assert render_parts(3, "bar", []) == GOLDEN_3


def test_object_list_joins():
    assert format_object_list(["bed"]) == "the bed"
    assert format_object_list(["bed", "lamp"]) == "the bed and the lamp"
    assert format_object_list(["bed", "lamp", "rug"]) == "the bed, the lamp, and the rug"


def test_dedup_preserves_first_occurrence():
    assert format_object_list(["lamp", "bed", "lamp", "bed"]) == "the lamp and the bed"


def test_count_rendering():
    assert format_object_list(["bed", "bed", "lamp"], render_counts=True) == (
        "the 2 ×bed and the lamp"
    )
    # disabled by default: duplicates collapse silently
    assert format_object_list(["bed", "bed", "lamp"]) == "the bed and the lamp"


def test_empty_object_list_is_defensive_error():
    with pytest.raises(EmptyObjectList):
        render_parts(1, "bedroom", [])
    with pytest.raises(EmptyObjectList):
        render_parts(2, "kitchen", [])
    # scenario 3 never carries objects
    assert "bar" in render_parts(3, "bar", [])


def test_scenario1_empty_fallback():
    out = render_scenario1_empty("bar")
    assert "bar" in out and "{class}" not in out


def test_template_placeholder_validation():
    with pytest.raises(ValueError):
        TemplateSet(scenario1="no placeholders here")
    with pytest.raises(ValueError):
        TemplateSet(scenario3="has {objects} but should not {class}")
    with pytest.raises(ValueError):
        TemplateSet(scenario2="{class} only")


def test_render_injective_over_distinct_inputs():
    seen = {}
    cases = [
        (1, "bedroom", ("bed",)),
        (1, "bedroom", ("bed", "lamp")),
        (1, "kitchen", ("bed", "lamp")),
        (2, "bedroom", ("bed", "lamp")),
        (2, "kitchen", ("oven",)),
        (3, "bedroom", ()),
        (3, "kitchen", ()),
    ]
    for scenario, label, objs in cases:
        text = render_parts(scenario, label, list(objs))
        assert text not in seen, f"collision with {seen.get(text)}"
        seen[text] = (scenario, label, objs)


def test_output_contains_every_object_once():
    objs = ["bed", "lamp", "rug"]
    out = render_parts(1, "kitchen", objs)
    for o in objs:
        assert out.count(o) == 1
    assert out.count("kitchen") == 1


def test_load_templates_file(tmp_path):
    p = tmp_path / "templates.json"
    p.write_text(json.dumps({
        "scenario1": "Saw {objects}; called it {class}.",
        "scenario3": "No idea, guessing {class}.",
    }))
    t = load_templates(p)
    assert render_parts(1, "bedroom", ["bed"], t) == "Saw the bed; called it bedroom."
    assert render_parts(3, "bar", [], t) == "No idea, guessing bar."
    # untouched scenario falls back to the default
    assert render_parts(2, "kitchen", ["oven"], t).startswith("The initial prediction")


def test_load_templates_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"scenario9": "x"}))
    with pytest.raises(SchemaError):
        load_templates(p)
    p.write_text(json.dumps({"scenario1": "missing placeholders"}))
    with pytest.raises(SchemaError):
        load_templates(p)
