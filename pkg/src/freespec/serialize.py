"""CSV and JSON readers/writers for panels, densities, signatures and results.

CSV files use ',' delimiters, '.' decimals, LF line endings, UTF-8 and a
header row.  JSON documents carry a ``schema`` field naming one of the
schemas shipped in ``freespec/schemas``.
"""
from __future__ import annotations

import csv
import io
import json
from importlib import resources
from pathlib import Path

import numpy as np

from .ensembles import DataMatrix
from .events import DecompositionResult, EventSignature
from .exceptions import InvalidInputError, UnreadableInputError
from .spectral import DensityEstimate, SpectrumSample
from .xform import ContourSpec, RSignature

SCHEMAS = ("density", "transform", "signature", "decomposition")
HEADER_CORNERS = ("", "label", "labels", "node", "row", "time", "timestamp")


def load_schema(name: str) -> dict:
    text = resources.files("freespec.schemas").joinpath(f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_matrix_csv(path) -> DataMatrix:
    """Read an N x T panel; a non-numeric header row and label column are detected."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise UnreadableInputError(f"{path}: no data")
    first = rows[0]
    has_header = len(rows) > 1 and (
        not all(_is_number(c) for c in first[1:])
        or first[0].strip().lower() in HEADER_CORNERS)
    body = rows[1:] if has_header else rows
    labels = None
    if not all(_is_number(r[0]) for r in body):
        labels = [r[0] for r in body]
        body = [r[1:] for r in body]
    try:
        values = np.array([[float(c) for c in r] for r in body])
    except ValueError as exc:
        raise UnreadableInputError(f"{path}: cannot parse cells ({exc})") from None
    return DataMatrix(values, row_labels=labels)


def write_matrix_csv(path, data: DataMatrix, timestamps=None) -> None:
    labels = data.row_labels or [f"row{i + 1}" for i in range(data.n)]
    header = ["label"] + [str(t) for t in (timestamps if timestamps is not None else range(data.t))]
    rows = [[lab] + [repr(float(v)) for v in row] for lab, row in zip(labels, data.values)]
    _write_csv(path, header, rows)


def write_table_csv(path, columns: dict) -> None:
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    rows = [[_fmt(a[i]) for a in arrays] for i in range(len(arrays[0]))]
    _write_csv(path, names, rows)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="")


def write_json(path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n",
                          encoding="utf-8", newline="")


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _floats(a):
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def _complex(a):
    a = np.asarray(a, dtype=complex)
    return {"re": _floats(a.real), "im": _floats(a.imag)}


def _from_complex(d):
    return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)


def density_to_dict(d: DensityEstimate, overlay=None, meta=None) -> dict:
    own = {k: v for k, v in d.meta.items() if isinstance(v, (bool, int, float, str))}
    doc = {"schema": "density", "grid": _floats(d.grid), "density": _floats(d.density),
           "support": list(d.support), "meta": {**own, **(meta or {})}}
    if overlay is not None:
        doc["overlay"] = _floats(overlay)
    return doc


def density_from_dict(doc: dict) -> DensityEstimate:
    return DensityEstimate(doc["grid"], doc["density"], tuple(doc["support"]),
                           meta=dict(doc.get("meta", {})))


def contour_to_dict(c: ContourSpec) -> dict:
    return {"x_min": c.x_min, "x_max": c.x_max, "nodes": int(c.nodes), "eps": c.eps}


def rsig_to_dict(sig: RSignature) -> dict:
    return {"source_id": sig.source_id,
            "contour": contour_to_dict(sig.contour) if sig.contour else None,
            "z": _complex(sig.z_nodes), "w": _complex(sig.w_nodes), "r": _complex(sig.r_values),
            "dropped": list(sig.dropped)}


def rsig_from_dict(doc: dict) -> RSignature:
    contour = ContourSpec(**doc["contour"]) if doc.get("contour") else None
    return RSignature(_from_complex(doc["z"]), _from_complex(doc["w"]), _from_complex(doc["r"]),
                      source_id=doc.get("source_id", ""), contour=contour,
                      dropped=tuple(doc.get("dropped", ())))


def signature_to_dict(sig: EventSignature, meta=None) -> dict:
    s = sig.spectrum
    return {"schema": "signature", "id": sig.id, "spike_count": int(sig.spike_count),
            "spectrum": {"eigenvalues": _floats(s.eigenvalues), "n": int(s.n),
                         "t": None if s.t is None else int(s.t),
                         "c": None if s.c is None else float(s.c)},
            "r_signature": rsig_to_dict(sig.r_signature),
            "meta": {**{str(k): str(v) for k, v in sig.meta.items()}, **(meta or {})}}


def signature_from_dict(doc: dict) -> EventSignature:
    if doc.get("schema") != "signature":
        raise InvalidInputError("document is not a signature")
    sp = doc["spectrum"]
    spectrum = SpectrumSample(sp["eigenvalues"], n=sp["n"], t=sp.get("t"), c=sp.get("c"))
    meta = {k: v for k, v in doc.get("meta", {}).items() if isinstance(v, str)}
    return EventSignature(doc["id"], spectrum, rsig_from_dict(doc["r_signature"]),
                          int(doc["spike_count"]), meta)


def transform_to_dict(sig: RSignature, meta=None) -> dict:
    return {"schema": "transform", **rsig_to_dict(sig), "meta": dict(meta or {})}


def transform_columns(sig: RSignature) -> dict:
    z, w, r = sig.z_nodes, sig.w_nodes, sig.r_values
    return {"x": z.real, "eps": z.imag, "re_g": w.real, "im_g": w.imag,
            "re_w": w.real, "im_w": w.imag, "re_r": r.real, "im_r": r.imag}


def decomposition_to_dict(res: DecompositionResult, meta=None) -> dict:
    margin = res.winner_margin
    return {"schema": "decomposition",
            "ranked": [{"combo": list(ids), "residual": float(score)} for ids, score in res.ranked],
            "winner": list(res.winner),
            "winner_margin": None if not np.isfinite(margin) else float(margin),
            "meta": dict(meta or {})}
