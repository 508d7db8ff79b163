import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rtlab import io as rio
from rtlab import numerics as nx
from rtlab.errors import ConfigError
from rtlab.scenarios.base import metric_row

CONFIGS = sorted((Path(__file__).resolve().parents[1] / "configs").glob("*.json"))
PROJ_0 = [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]


def _doc(**extra) -> dict:
    doc = {"ensemble": {"items": [{"weight": 0.5, "state": {"theta": 0.3}, "label": 1},
                                  {"weight": 0.5, "state": {"theta": 2.8}, "label": -1}]},
           "classifier": {"type": "binary-povm", "projector": PROJ_0}}
    doc.update(extra)
    return doc


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.name)
def test_shipped_configs_round_trip(path):
    cfg = rio.load_config(path)
    again = rio.parse_config(rio.serialize_config(cfg))
    assert again.tree == cfg.tree
    assert rio.serialize_config(again) == rio.serialize_config(cfg)


def test_configs_exist():
    assert len(CONFIGS) >= 5


def test_unknown_key_reports_its_line():
    text = json.dumps(_doc(), indent=2).replace('"label": 1', '"label": 1, "colour": "red"')
    with pytest.raises(ConfigError) as err:
        rio.parse_config(text)
    line = next(i for i, l in enumerate(text.splitlines(), 1) if "colour" in l)
    assert err.value.line == line
    assert "colour" in str(err.value)


def test_bad_json_reports_line():
    with pytest.raises(ConfigError) as err:
        rio.parse_config('{\n  "ensemble": {\n    "items": [,]\n  }\n}')
    assert err.value.line == 3


def test_schema_rejects_bad_perturbation():
    with pytest.raises(ConfigError, match="perturbation"):
        rio.parse_config(json.dumps(_doc(perturbation={"type": "bit-flip", "p": 2})))


def test_construction_errors_are_anchored():
    doc = _doc()
    doc["ensemble"]["items"][0]["weight"] = 0.7
    cfg = rio.parse_config(json.dumps(doc, indent=2))
    with pytest.raises(ConfigError, match="sum") as err:
        rio.build_ensemble(cfg)
    assert err.value.line is not None


@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                min_size=4, max_size=4))
def test_matrix_encoding_round_trip(entries):
    m = np.array(entries, dtype=complex).reshape(2, 2)
    assert np.array_equal(rio.decode_matrix(rio.encode_matrix(m)), m)


def test_bloch_and_matrix_encodings_agree():
    theta = 0.9
    ket = np.array([np.cos(theta / 2), np.sin(theta / 2)])
    a = rio.decode_state({"theta": theta})
    b = rio.decode_state(rio.encode_matrix(nx.ket_projector(ket)))
    assert a.allclose(b.matrix)


def test_builders_cover_every_type():
    doc = _doc(perturbation={"type": "pauli", "p": [0.7, 0.1, 0.1, 0.1]}, oracle={"type": "hemisphere"})
    cfg = rio.parse_config(json.dumps(doc))
    e = rio.build_ensemble(cfg)
    assert len(e) == 2
    assert rio.build_perturbation(cfg, len(e)).channel.name == "pauli"
    assert rio.build_oracle(cfg, e)(e.items[0].state) == 1
    for node in ({"type": "observable-sign", "operator": rio.encode_matrix(nx.PAULI_Z)},
                 {"type": "fidelity-clustering", "centroids": [{"theta": 0}, {"theta": np.pi}], "classes": [1, -1]},
                 {"type": "povm", "effects": [PROJ_0, rio.encode_matrix(nx.PROJ_1)], "classes": [1, -1]}):
        c = rio.build_classifier(rio.parse_config(json.dumps(_doc(classifier=node))))
        assert c.predict(e.items[0].state) == 1
    swap = rio.parse_config(json.dumps(_doc(perturbation={"type": "index-map", "pairs": [[0, 1], [1, 0]]})))
    assert rio.build_perturbation(swap, 2).index_map == (1, 0)


def test_lookup_oracle_includes_extra_states():
    doc = _doc(oracle={"type": "lookup", "extra": [{"state": {"theta": 1.5}, "label": -1}]})
    cfg = rio.parse_config(json.dumps(doc))
    e = rio.build_ensemble(cfg)
    o = rio.build_oracle(cfg, e)
    assert o(e.items[0].state) == 1
    assert o(rio.decode_state({"theta": 1.5})) == -1


def test_report_json_and_csv_agree(tmp_path):
    rows = [metric_row("A_tilde", 0.25), metric_row("A", 0.5, "x", 0.01, "monte-carlo"), metric_row("gap", -1.5)]
    rep = rio.make_report("metrics", 4, rio.sort_metric_rows(rows), normalize=True)
    js, cs = rio.write_report(rep, tmp_path / "r.json")
    back = rio.read_metrics_csv(cs.read_text())
    full = json.loads(js.read_text())["metrics"]
    assert [r["key"] for r in back] == ["A", "A_tilde", "gap"]
    for a, b in zip(back, full):
        assert a["value"] == b["value"] and a["standard_error"] == b["standard_error"]
        assert a["label"] == b["label"] and a["method"] == b["method"]
    assert "timestamp" not in json.loads(js.read_text())["metadata"]


def test_infinite_values_survive_serialization():
    rep = rio.make_report("metrics", None, [metric_row("radius", float("inf"))], normalize=True)
    assert json.loads(rio.report_json(rep))["metrics"][0]["value"] == "inf"
    assert rio.read_metrics_csv(rio.metrics_csv(rep["metrics"]))[0]["value"] == "inf"


def test_documented_schema_matches_packaged_copy():
    docs = Path(__file__).resolve().parents[1] / "docs" / "config.schema.json"
    assert json.loads(docs.read_text()) == rio.load_schema()
