"""Persistence for knowledge bases.

The on-disk form is a JSON document that stores raw archives rather than
fitted models: every real number is written as decimal text with 17
significant digits (enough to round-trip doubles exactly), archive rows
are flattened row-major, and surrogates are re-fit from the archives on
load.  Decay parameters are stored under their file-format keys
``gamma_o`` (floor), ``gamma_i`` (amplitude), ``lambda`` (rate) and
``r2`` (fit quality).
"""

from __future__ import annotations

import json
import os

import numpy as np

from .adaptation import AdaptationMap
from .decay import DecayModel
from .exceptions import KnowledgeBaseFormatError, TrainingError
from .rng import RngStream
from .surrogates import GprRegressor, RbfInterpolator
from .transfer import KnowledgeBase, SourceRecord

SCHEMA_VERSION = 1


def format_real(value) -> str:
    return f"{float(value):.17g}"


def _real_list(values):
    return [format_real(v) for v in np.asarray(values, dtype=float).ravel()]


def _record_document(rec: SourceRecord) -> dict:
    lower = rec.lower_bounds if rec.lower_bounds is not None \
        else np.zeros(rec.dim)
    upper = rec.upper_bounds if rec.upper_bounds is not None \
        else np.ones(rec.dim)
    doc = {
        "task_id": int(rec.source_id),
        "bounds": [_real_list(lower), _real_list(upper)],
        "X": _real_list(rec.X),
        "y": _real_list(rec.y),
        "tau_max": int(rec.tau_max),
        "decay": {
            "gamma_o": format_real(rec.decay.floor),
            "gamma_i": format_real(rec.decay.amplitude),
            "lambda": format_real(rec.decay.rate),
            "r2": format_real(rec.decay.fit_quality),
            "degenerate": bool(rec.decay.degenerate),
        },
        "best_index": int(np.argmin(rec.y)),
    }
    if rec.adaptation is not None:
        doc["adaptation"] = {
            "theta": _real_list(rec.adaptation.shift),
            "s_adapted": format_real(rec.adaptation.similarity),
        }
    return doc


def save_kb(kb: KnowledgeBase, path) -> None:
    """Write a knowledge base as a self-contained JSON document.

    The best solution is stored as an index into the archive, so records
    whose best point is not an archive row lose that distinction."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "dimension": int(kb.dim),
        "records": [_record_document(rec) for rec in kb.records],
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2)
        handle.write("\n")
    os.replace(tmp, path)


def _fail(field: str, reason: str):
    raise KnowledgeBaseFormatError(f"{field}: {reason}", field=field)


def _want(mapping, key, field):
    if not isinstance(mapping, dict) or key not in mapping:
        _fail(field, "missing")
    return mapping[key]


def _parse_real(value, field):
    try:
        return float(value)
    except (TypeError, ValueError):
        _fail(field, f"not a real number: {value!r}")


def _parse_real_array(values, field, expected_len=None):
    if not isinstance(values, list):
        _fail(field, "expected an array of decimal strings")
    if expected_len is not None and len(values) != expected_len:
        _fail(field, f"expected {expected_len} entries, found {len(values)}")
    return np.array([_parse_real(v, field) for v in values])


def _parse_int(value, field, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(field, f"expected an integer, found {value!r}")
    if minimum is not None and value < minimum:
        _fail(field, f"must be >= {minimum}, found {value}")
    return value


def _load_record(doc, index: int, dim: int, rng: RngStream,
                 surrogate: str) -> SourceRecord:
    prefix = f"records[{index}]"
    if not isinstance(doc, dict):
        _fail(prefix, "expected an object")
    task_id = _parse_int(_want(doc, "task_id", f"{prefix}.task_id"),
                         f"{prefix}.task_id", minimum=0)
    bounds = _want(doc, "bounds", f"{prefix}.bounds")
    if not isinstance(bounds, list) or len(bounds) != 2:
        _fail(f"{prefix}.bounds", "expected [lower, upper] arrays")
    lower = _parse_real_array(bounds[0], f"{prefix}.bounds", expected_len=dim)
    upper = _parse_real_array(bounds[1], f"{prefix}.bounds", expected_len=dim)
    y = _parse_real_array(_want(doc, "y", f"{prefix}.y"), f"{prefix}.y")
    n = len(y)
    if n < 1:
        _fail(f"{prefix}.y", "archive must hold at least one evaluation")
    flat = _parse_real_array(_want(doc, "X", f"{prefix}.X"), f"{prefix}.X",
                             expected_len=n * dim)
    X = flat.reshape(n, dim)
    tau_max = _parse_int(_want(doc, "tau_max", f"{prefix}.tau_max"),
                         f"{prefix}.tau_max", minimum=1)
    decay_doc = _want(doc, "decay", f"{prefix}.decay")
    decay = DecayModel(
        floor=_parse_real(_want(decay_doc, "gamma_o",
                                f"{prefix}.decay.gamma_o"),
                          f"{prefix}.decay.gamma_o"),
        amplitude=_parse_real(_want(decay_doc, "gamma_i",
                                    f"{prefix}.decay.gamma_i"),
                              f"{prefix}.decay.gamma_i"),
        rate=_parse_real(_want(decay_doc, "lambda",
                               f"{prefix}.decay.lambda"),
                         f"{prefix}.decay.lambda"),
        fit_quality=_parse_real(_want(decay_doc, "r2",
                                      f"{prefix}.decay.r2"),
                                f"{prefix}.decay.r2"),
        degenerate=bool(_want(decay_doc, "degenerate",
                              f"{prefix}.decay.degenerate")),
    )
    best_index = _parse_int(_want(doc, "best_index", f"{prefix}.best_index"),
                            f"{prefix}.best_index", minimum=0)
    if best_index >= n:
        _fail(f"{prefix}.best_index", f"out of range for {n} evaluations")

    adaptation = None
    if "adaptation" in doc and doc["adaptation"] is not None:
        adoc = doc["adaptation"]
        theta = _parse_real_array(
            _want(adoc, "theta", f"{prefix}.adaptation.theta"),
            f"{prefix}.adaptation.theta", expected_len=dim)
        s_adapted = _parse_real(
            _want(adoc, "s_adapted", f"{prefix}.adaptation.s_adapted"),
            f"{prefix}.adaptation.s_adapted")
        adaptation = AdaptationMap(
            shift=theta, similarity=s_adapted,
            damping=1.0 - float(np.max(np.abs(theta))),
            degenerate=False, evaluations=0)

    if surrogate == "rbf":
        model = RbfInterpolator().fit(X, y)
    else:
        try:
            model = GprRegressor(random_state=rng).fit(X, y)
        except TrainingError:
            model = RbfInterpolator().fit(X, y)

    return SourceRecord(
        source_id=task_id, X=X, y=y, surrogate=model, decay=decay,
        best_point=X[best_index].copy(), best_value=float(y[best_index]),
        tau_max=tau_max, lower_bounds=lower, upper_bounds=upper,
        adaptation=adaptation)


def load_kb(path, rng: RngStream, surrogate: str = "gpr") -> KnowledgeBase:
    """Read a knowledge base, re-fitting one surrogate per record.

    ``rng`` seeds the surrogate refits (one child stream per record), so
    loading is deterministic.  Malformed documents raise
    KnowledgeBaseFormatError naming the offending field."""
    if surrogate not in ("gpr", "rbf"):
        raise ValueError("surrogate must be 'gpr' or 'rbf'")
    with open(path, "r", encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise KnowledgeBaseFormatError(f"document: invalid JSON ({exc})",
                                           field="document") from exc
    version = _want(doc, "schema_version", "schema_version")
    if version != SCHEMA_VERSION:
        _fail("schema_version",
              f"expected {SCHEMA_VERSION}, found {version!r}")
    dim = _parse_int(_want(doc, "dimension", "dimension"), "dimension",
                     minimum=1)
    records_doc = _want(doc, "records", "records")
    if not isinstance(records_doc, list):
        _fail("records", "expected an array")
    records = [_load_record(rec, i, dim, rng.child(i), surrogate)
               for i, rec in enumerate(records_doc)]
    return KnowledgeBase(dim=dim, records=records)
