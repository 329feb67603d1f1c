from __future__ import annotations

import json

import pytest

from nmforge.errors import ScenarioError, ValidationError
from nmforge.scenario import (
    SizeProfile,
    build_scenario,
    bundled_scenario,
    generate_instance,
    generate_scenario,
    load_scenario,
)


def test_bundled_names(canon, canon_null):
    assert set(canon.spaces) == {"X", "Y"}
    assert canon.maps["phi"].measure_preserving
    assert canon_null.spaces["X"].null_points == frozenset({2})


def test_generate_is_deterministic():
    assert generate_instance(1) == generate_instance(1)
    assert generate_instance(1) != generate_instance(2)
    sc = generate_scenario(1)
    assert sc.maps["phi"].measure_preserving


@pytest.mark.parametrize("seed", range(1, 30))
def test_generated_instances_are_small(seed):
    sc = generate_scenario(seed)
    assert len(sc.spaces["X"]) + len(sc.spaces["Y"]) <= 10
    assert sc.chain_on(sc.spaces["X"]) is not None
    assert sc.chain_on(sc.spaces["Y"]) is not None


def test_profile_validation():
    with pytest.raises(ValidationError):
        SizeProfile(max_points=0)
    with pytest.raises(ValidationError):
        SizeProfile(max_denominator=12)
    small = SizeProfile(max_points=5, max_dim=1, kinds=("l1",))
    sc = generate_scenario(3, small)
    assert all(f.dim == 1 for f in sc.modules["M"].fibers)


def test_unknown_field_rejected():
    with pytest.raises(ScenarioError):
        build_scenario({"spaces": {}, "colour": "blue"})


def test_dangling_reference():
    doc = {
        "spaces": {"X": {"points": ["a"], "weights": [1]}},
        "chains": {"c": {"space": "Z", "generators": []}},
    }
    with pytest.raises(ScenarioError, match="Z"):
        build_scenario(doc)


def test_bad_weight_wrapped():
    with pytest.raises(ScenarioError):
        build_scenario({"spaces": {"X": {"points": ["a"], "weights": [-1]}}})


def test_function_length_checked():
    doc = {
        "spaces": {"X": {"points": ["a", "b"], "weights": [1, 1]}},
        "functions": {"f": {"space": "X", "values": [1]}},
    }
    with pytest.raises(ScenarioError):
        build_scenario(doc)


def test_fibers_by_label_or_list():
    base = {"spaces": {"X": {"points": ["a", "b"], "weights": [1, 1]}}}
    by_label = dict(base, bundles={"B": {"space": "X", "fibers": {
        "a": {"kind": "lp", "p": "1", "dim": 2}, "b": {"kind": "lp", "p": "inf", "dim": 1}}}})
    as_list = dict(base, bundles={"B": {"space": "X", "fibers": [
        {"kind": "lp", "p": "1", "dim": 2}, {"kind": "lp", "p": "inf", "dim": 1}]}})
    assert build_scenario(by_label).bundles["B"].fibers == build_scenario(as_list).bundles["B"].fibers


def test_load_from_file(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(generate_instance(5)))
    sc = load_scenario(path)
    assert sc.name == "s"
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(ScenarioError):
        load_scenario(bad)


def test_shipped_scenario_files_match_package_data():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "scenarios"
    for name in ("canonical", "canonical-null"):
        assert load_scenario(root / f"{name}.json").raw == bundled_scenario(name).raw
