import json

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from freespec.ensembles import DataMatrix
from freespec.events import decompose, scene_config, signature, simulate_scene
from freespec.exceptions import InvalidInputError
from freespec.serialize import (SCHEMAS, decomposition_to_dict, density_from_dict,
                                density_to_dict, load_schema, read_json, read_matrix_csv,
                                rsig_from_dict, rsig_to_dict, signature_from_dict,
                                signature_to_dict, transform_to_dict, write_json,
                                write_matrix_csv, write_table_csv)
from freespec.spectral import SpectrumSample, esd_histogram
from freespec.xform import GSource, r_contour


@pytest.mark.parametrize("name", SCHEMAS)
def test_schemas_are_valid(name):
    schema = load_schema(name)
    jsonschema.Draft202012Validator.check_schema(schema)


def test_csv_roundtrip_with_labels(tmp_path):
    d = DataMatrix(np.arange(12, dtype=float).reshape(3, 4) / 7, row_labels=["a", "b", "c"])
    write_matrix_csv(tmp_path / "m.csv", d)
    back = read_matrix_csv(tmp_path / "m.csv")
    assert np.array_equal(back.values, d.values)
    assert back.row_labels == ["a", "b", "c"]
    raw = (tmp_path / "m.csv").read_bytes()
    assert b"\r" not in raw and raw.startswith(b"label,")


@pytest.mark.parametrize("text,shape,labels", [
    ("1,2,3\n4,5,6\n", (2, 3), None),
    ("t0,t1,t2\n1,2,3\n4,5,6\n", (2, 3), None),
    ("x,1,2,3\ny,4,5,6\n", (2, 3), ["x", "y"]),
    ("node,2024-01-01T00:00,2024-01-01T00:15\nn1,1,2\nn2,3,5\n", (2, 2), ["n1", "n2"]),
    ("label,0,1,2\nr1,1,2,3\nr2,4,5,6\n", (2, 3), ["r1", "r2"]),
])
def test_csv_layouts(tmp_path, text, shape, labels):
    p = tmp_path / "m.csv"
    p.write_text(text)
    d = read_matrix_csv(p)
    assert d.shape == shape
    assert d.row_labels == labels


def test_csv_bad_cell(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("1,2,3\n4,oops,6\n")
    with pytest.raises(InvalidInputError):
        read_matrix_csv(p)
    p.write_text("")
    with pytest.raises(InvalidInputError):
        read_matrix_csv(p)


@given(arrays(np.float64, st.tuples(st.integers(2, 5), st.integers(2, 6)),
              elements=st.floats(-1e6, 1e6, allow_nan=False)))
@settings(max_examples=30, deadline=None)
def test_csv_roundtrip_exact(tmp_path_factory, values):
    p = tmp_path_factory.mktemp("csv") / "m.csv"
    write_matrix_csv(p, DataMatrix(values))
    assert np.array_equal(read_matrix_csv(p).values, values)


def test_table_csv(tmp_path):
    write_table_csv(tmp_path / "t.csv", {"x": np.array([0.5, 1.0]), "n": np.array([1, 2])})
    assert (tmp_path / "t.csv").read_text() == "x,n\n0.5,1\n1.0,2\n"


def test_density_roundtrip(tmp_path):
    h = esd_histogram(SpectrumSample(np.array([0.0, 0, 1, 1])), bins=2)
    doc = density_to_dict(h, overlay=[0.1, 0.2], meta={"law": "mp"})
    jsonschema.validate(doc, load_schema("density"))
    write_json(tmp_path / "d.json", doc)
    back = density_from_dict(read_json(tmp_path / "d.json"))
    assert np.array_equal(back.grid, h.grid)
    assert back.mass() == pytest.approx(1)


def test_signature_roundtrip(tmp_path):
    sig = signature(simulate_scene(scene_config("A", seed=1)), id="A")
    doc = signature_to_dict(sig, meta={"seed": 1})
    jsonschema.validate(doc, load_schema("signature"))
    write_json(tmp_path / "s.json", doc)
    back = signature_from_dict(read_json(tmp_path / "s.json"))
    assert back.id == "A" and back.spike_count == sig.spike_count
    assert np.array_equal(back.spectrum.eigenvalues, sig.spectrum.eigenvalues)
    assert np.array_equal(back.r_signature.r_values, sig.r_signature.r_values)
    assert back.r_signature.contour == sig.r_signature.contour


def test_signature_wrong_schema():
    with pytest.raises(InvalidInputError):
        signature_from_dict({"schema": "density"})


def test_transform_and_decomposition_schemas():
    g = GSource.empirical(SpectrumSample(np.array([0.5, 1.5])))
    sig = r_contour(g)
    jsonschema.validate(transform_to_dict(sig, {"seed": 0}), load_schema("transform"))
    back = rsig_from_dict(rsig_to_dict(sig))
    assert np.array_equal(back.w_nodes, sig.w_nodes)
    a = signature(simulate_scene(scene_config("A", seed=1)), id="A")
    doc = decomposition_to_dict(decompose(a, [a], 1))
    jsonschema.validate(json.loads(json.dumps(doc)), load_schema("decomposition"))
    assert doc["winner_margin"] is None
