import json

import numpy as np
import pytest

from ccfp import io
from ccfp.errors import ParseError
from ccfp.reformulate import Variant, build_nlp
from ccfp.solver import solve

GOLDEN = json.loads((io.Path(__file__).parent / "golden" / "golden.json").read_text())


def econ_doc():
    return json.loads(io.bundled_path("main_economic").read_text())


def test_bundled_digests_match_golden():
    for name, digest in GOLDEN["digests"].items():
        assert io.instance_digest(io.load_instance(name)) == digest


def test_round_trip_is_lossless(tmp_path, econ):
    path = tmp_path / "copy.json"
    io.save_instance(econ, path)
    back = io.load_instance(path)
    assert io.canonical_json(back) == io.canonical_json(econ)
    assert io.instance_to_dict(io.instance_from_dict(econ_doc())) == io.instance_to_dict(econ)


def test_infinite_bounds_travel_as_strings(econ):
    doc = io.instance_to_dict(econ)
    assert doc["feasible_set"]["upper"] == ["inf"] * 5
    json.dumps(doc, allow_nan=False)


@pytest.mark.parametrize(
    "mutate,key",
    [
        (lambda d: d["gamma_cov"].pop(), "gamma_cov"),
        (lambda d: d.pop("epsilon"), "epsilon"),
        (lambda d: d["scenarios"][1].pop("r"), "scenarios[1].r"),
        (lambda d: d["mu1"].__setitem__(0, "x"), "mu1"),
        (lambda d: d.__setitem__("schema_version", 2), "schema_version"),
        (lambda d: d["c_spec"].__setitem__("kind", "cubic"), "c_spec"),
        (lambda d: d["feasible_set"]["ranges"][0].__setitem__("lo", 200.0), "feasible_set.ranges[0]"),
    ],
)
def test_parse_errors_name_the_key(mutate, key):
    doc = econ_doc()
    mutate(doc)
    with pytest.raises(ParseError) as info:
        io.instance_from_dict(doc)
    assert info.value.key == key
    assert key in str(info.value)


def test_malformed_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{ not json")
    with pytest.raises(ParseError, match="malformed JSON"):
        io.load_instance(path)
    with pytest.raises(ParseError, match="cannot read"):
        io.load_instance(tmp_path / "missing.json")


def test_load_attaches_report():
    inst = io.load_instance("main_economic")
    assert "report" in inst.__dict__


def test_csv_format():
    text = io.csv_text(["a", "b"], [[1, 0.1 + 0.2], [2, 1e-20]])
    assert text == "a,b\n1,0.3\n2,1e-20\n"
    assert io.fmt(1 / 3) == "0.333333333333333"


def test_result_document_fields(econ_feasible):
    variant = Variant("secant", 3)
    res = solve(build_nlp(econ_feasible, variant))
    doc = io.result_to_dict(econ_feasible, variant, res)
    assert doc["instance_digest"] == GOLDEN["digests"]["main_economic_feasible"]
    assert doc["variant"] == {"kind": "secant", "K": 3, "z_max": 1 - 1e-4}
    assert doc["sense"] == "max"
    assert doc["objective"] == pytest.approx(GOLDEN["main_economic_feasible"]["secant(K=3)"]["objective"], abs=1e-6)
    json.dumps(doc, allow_nan=False)


def test_golden_companion_objectives(econ_feasible):
    for label, ref in GOLDEN["main_economic_feasible"].items():
        if label == "exact":
            variant = Variant("exact")
        else:
            kind, k = label.rstrip(")").split("(K=")
            variant = Variant(kind, int(k))
        res = solve(build_nlp(econ_feasible, variant))
        assert res.objective == pytest.approx(ref["objective"], abs=1e-6), label
        assert np.allclose(res.x, ref["x"], atol=1e-5), label
