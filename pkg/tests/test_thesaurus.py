"""
Tests for the EuroVoc hierarchy.
"""

import json
import os

import numpy as np
import pytest

from eurovoc_indexer.errors import InvariantError, ParseError, UnknownDescriptorError
from eurovoc_indexer.thesaurus import (
    HierarchyCounts,
    Level,
    Thesaurus,
    aggregate_level_scores,
    build_thesaurus,
    load_thesaurus,
    map_code,
    map_ids,
    map_ids_to_do,
    map_ids_to_mt,
    save_thesaurus,
    validate_counts,
)


@pytest.fixture
def tiny_tsv(tmp_path):
    path = tmp_path / "tiny.tsv"
    path.write_text(
        "id\tmt\tdo\tlabel\n"
        "1\t0406\t04\tfishing\n"
        "2\t0406\t04\taquaculture\n"
        "3\t0411\t04\tfisheries policy\n",
        encoding="utf-8",
    )
    return path


def test_load_tiny_tsv(tiny_tsv):
    t = load_thesaurus(tiny_tsv)
    assert len(t) == 3
    assert validate_counts(t) == HierarchyCounts(3, 2, 1)
    assert t.label("2") == "aquaculture"
    assert t.label("2", "fr") is None


def test_empty_thesaurus_counts():
    assert validate_counts(Thesaurus({}, {})) == HierarchyCounts(0, 0, 0)


def test_mt_without_domain_is_rejected(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text(json.dumps({"ids": {"1": ["0406"], "2": ["0411"]}, "mts": {"0406": "04"}}))
    with pytest.raises(InvariantError):
        load_thesaurus(path)


@pytest.mark.parametrize("value", ["0406", [406], {"mt": "0406"}])
def test_json_mt_value_must_be_list_of_codes(tmp_path, value):
    path = tmp_path / "flat.json"
    path.write_text(json.dumps({"ids": {"1": value}, "mts": {"0406": "04"}}))
    with pytest.raises(ParseError, match="descriptor 1"):
        load_thesaurus(path)


def test_domain_must_be_mt_prefix():
    with pytest.raises(InvariantError):
        build_thesaurus([("1", "0406", "05")])


def test_non_numeric_descriptor_rejected():
    with pytest.raises(InvariantError):
        build_thesaurus([("d1", "0406", "04")])


def test_bad_header_reports_line(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("code\tmt\tdo\n1\t0406\t04\n")
    with pytest.raises(ParseError) as info:
        load_thesaurus(path)
    assert info.value.line == 1


def test_short_row_reports_line(tmp_path):
    path = tmp_path / "short.tsv"
    path.write_text("id\tmt\tdo\tlabel\n1\t0406\t04\tx\n2\t0406\n")
    with pytest.raises(ParseError) as info:
        load_thesaurus(path)
    assert info.value.line == 3


def test_map_to_mt_and_do():
    t = build_thesaurus([("1", "0406", "04"), ("2", "0406", "04"), ("3", "0411", "04")])
    assert map_ids_to_mt(t, {"1", "2"}) == {"0406"}
    assert map_ids_to_mt(t, set()) == set()
    assert map_ids_to_do(t, {"1", "3"}) == {"04"}
    assert map_ids_to_do(t, set()) == set()


def test_primary_mt_is_first(thesaurus):
    assert thesaurus.id_to_mt["1001"] == ("0406", "1211")
    assert map_ids(thesaurus, {"1001"}, Level.MT) == {"0406"}
    assert map_ids(thesaurus, {"1001"}, "DO") == {"04"}
    assert map_code(thesaurus, "1001", Level.DO) == "04"


def test_unknown_descriptor(thesaurus):
    with pytest.raises(UnknownDescriptorError):
        map_ids(thesaurus, {"9999"}, Level.MT)
    with pytest.raises(KeyError):
        thesaurus.primary_mt("9999")


def test_random_mapping_matches_oracle():
    rng = np.random.default_rng(7)
    mts = ["0101", "0102", "0201", "0202", "0301"]
    rows = []
    for i in range(20):
        for mt in rng.choice(mts, size=int(rng.integers(1, 3)), replace=False):
            rows.append((str(100 + i), str(mt), str(mt)[:2]))
    t = build_thesaurus(rows)
    primary = {}
    for code, mt, _ in rows:
        primary.setdefault(code, mt)

    for _ in range(50):
        ids = set(rng.choice(sorted(primary), size=int(rng.integers(0, 8)), replace=False).tolist())
        expected_mt = {primary[code] for code in ids}
        expected_do = {mt[:2] for mt in expected_mt}
        assert map_ids_to_mt(t, ids) == expected_mt
        assert map_ids_to_do(t, ids) == expected_do
        assert len(expected_do) <= len(expected_mt) <= len(ids)


def test_do_prefix_consistency(thesaurus):
    for mt, do in thesaurus.mt_to_do.items():
        assert mt[:2] == do


@pytest.mark.parametrize("suffix", [".tsv", ".json"])
def test_save_and_reload(tmp_path, thesaurus, suffix):
    path = tmp_path / f"t{suffix}"
    save_thesaurus(thesaurus, path)
    loaded = load_thesaurus(path)
    assert dict(loaded.id_to_mt) == dict(thesaurus.id_to_mt)
    assert dict(loaded.mt_to_do) == dict(thesaurus.mt_to_do)
    assert loaded.label("1005") == "descriptor 1005"


def test_aggregate_level_scores(thesaurus):
    codes = ["1002", "1003", "1004", "1007"]
    scores = [0.9, 0.5, 0.2, 0.4]
    assert aggregate_level_scores(thesaurus, codes, scores, Level.MT) == {
        "0406": 0.9, "0411": 0.2, "1206": 0.4,
    }
    summed = aggregate_level_scores(thesaurus, codes, scores, Level.DO, mode="sum")
    assert summed["04"] == pytest.approx(1.6)
    mean = aggregate_level_scores(thesaurus, codes, scores, Level.DO, mode="mean")
    assert mean["04"] == pytest.approx(1.6 / 3)
    assert aggregate_level_scores(thesaurus, [], [], Level.MT) == {}
    with pytest.raises(ValueError):
        aggregate_level_scores(thesaurus, codes, scores, Level.MT, mode="median")


def test_level_parse():
    assert Level.parse("mt") is Level.MT
    with pytest.raises(ValueError):
        Level.parse("XX")


@pytest.mark.skipif(not os.getenv("EUROVOC_EXPORT"), reason="EUROVOC_EXPORT not set")
def test_full_eurovoc_export_counts():
    t = load_thesaurus(os.environ["EUROVOC_EXPORT"])
    assert validate_counts(t) == HierarchyCounts(6883, 127, 21)
