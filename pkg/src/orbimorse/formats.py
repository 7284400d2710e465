"""JSON file formats: model files, critical-data files, polynomials.

Matrix entries are numbers or ``"p/q"`` strings; strings keep group matrices
exact.  Schema errors carry the path of the offending key, e.g.
``generators[0].linear``.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .critical import CriticalPointData, QuotientModel, SeedConfig, Tolerances
from .errors import InputError
from .expr import parse
from .group_rep import AffineIsometry, ComplexStructure, generate_group, to_scalar
from .morse_poly import InertiaSectorDatum
from .polynomial import ExponentPolynomial

MODEL_KEYS = {"dim", "lattice", "generators", "function", "complex_structure", "tolerances", "seeds"}
SEED_KEYS = {"grid", "random", "rng_seed", "box"}
ENTRY_KEYS = {"location_label", "value", "stabilizer", "index_action", "coindex_action",
              "complex_structure", "location"}
STABILIZER_KEYS = {"order", "generators", "auxiliary"}


class FormatError(InputError):
    def __init__(self, message: str, where: str = "", source: str | None = None):
        loc = ":".join(p for p in (source, where) if p)
        super().__init__(f"{loc}: {message}" if loc else message)


def read_json(path) -> Any:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(str(exc), source=str(path)) from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}",
                          str(path)) from exc


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _check_keys(doc, allowed, where, source):
    if not isinstance(doc, dict):
        raise FormatError("expected an object", where, source)
    extra = sorted(set(doc) - allowed)
    if extra:
        raise FormatError(f"unknown key(s) {', '.join(extra)}", where, source)


def _matrix(rows, where, source, shape=None) -> np.ndarray:
    try:
        arr = np.asarray(rows, dtype=object)
        if arr.size == 0:
            arr = arr.reshape(0, 0)
        if arr.ndim != 2:
            raise InputError("expected a 2-d array")
        out = np.vectorize(lambda v: float(to_scalar(v)), otypes=[float])(arr) if arr.size else np.zeros((0, 0))
    except (InputError, ValueError) as exc:
        raise FormatError(str(exc), where, source) from exc
    if shape is not None and out.shape != shape:
        raise FormatError(f"expected shape {shape}, got {out.shape}", where, source)
    return out


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------

def load_model(doc, source: str | None = None, check: bool = True) -> QuotientModel:
    if isinstance(doc, (str, Path)) and source is None:
        source = str(doc)
        doc = read_json(doc)
    _check_keys(doc, MODEL_KEYS, "", source)
    for key in ("dim", "function"):
        if key not in doc:
            raise FormatError(f"missing key {key!r}", "", source)
    dim = doc["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise FormatError("dim must be a positive integer", "dim", source)
    lattice = doc.get("lattice", False)
    if not isinstance(lattice, bool):
        raise FormatError("lattice must be true or false", "lattice", source)
    gens = []
    for k, g in enumerate(doc.get("generators", [])):
        where = f"generators[{k}]"
        _check_keys(g, {"linear", "translation"}, where, source)
        if "linear" not in g:
            raise FormatError("missing key 'linear'", where, source)
        try:
            iso = AffineIsometry(g["linear"], g.get("translation"), lattice=lattice)
        except InputError as exc:
            raise FormatError(str(exc), where, source) from exc
        if iso.dim != dim:
            raise FormatError(f"expected a {dim}x{dim} matrix", where + ".linear", source)
        gens.append(iso)
    try:
        group = generate_group(gens, lattice=lattice, dim=dim)
    except InputError as exc:
        raise FormatError(str(exc), "generators", source) from exc
    if not isinstance(doc["function"], str):
        raise FormatError("function must be a string", "function", source)
    try:
        function = parse(doc["function"], dim)
    except InputError as exc:
        raise FormatError(str(exc), "function", source) from exc
    J = None
    if doc.get("complex_structure") is not None:
        try:
            J = ComplexStructure(_matrix(doc["complex_structure"], "complex_structure", source))
        except InputError as exc:
            raise FormatError(str(exc), "complex_structure", source) from exc
    tol_doc = doc.get("tolerances", {}) or {}
    try:
        tolerances = Tolerances(**tol_doc)
    except TypeError as exc:
        raise FormatError(f"unknown tolerance key(s): {exc}", "tolerances", source) from exc
    seed_doc = doc.get("seeds", {}) or {}
    _check_keys(seed_doc, SEED_KEYS, "seeds", source)
    if "box" in seed_doc:
        seed_doc = dict(seed_doc, box=tuple(float(v) for v in seed_doc["box"]))
    try:
        seeds = SeedConfig(**seed_doc)
    except (TypeError, ValueError) as exc:
        raise FormatError(str(exc), "seeds", source) from exc
    try:
        return QuotientModel(dim, group, function, J, tolerances, seeds, check=check)
    except InputError as exc:
        raise FormatError(str(exc), "", source) from exc


# ---------------------------------------------------------------------------
# critical-data files
# ---------------------------------------------------------------------------

def load_critical_data(doc, source: str | None = None) -> list[CriticalPointData]:
    if isinstance(doc, (str, Path)) and source is None:
        source = str(doc)
        doc = read_json(doc)
    if not isinstance(doc, list):
        raise FormatError("critical-data file must be a JSON array of entries", "", source)
    out = []
    for k, e in enumerate(doc):
        where = f"[{k}]"
        _check_keys(e, ENTRY_KEYS, where, source)
        for key in ("value", "stabilizer", "index_action", "coindex_action"):
            if key not in e:
                raise FormatError(f"missing key {key!r}", where, source)
        label = str(e.get("location_label", f"c{k}"))
        stab = e["stabilizer"]
        _check_keys(stab, STABILIZER_KEYS, where + ".stabilizer", source)
        ind = [_matrix(m, f"{where}.index_action[{i}]", source) for i, m in enumerate(e["index_action"])]
        coind = [_matrix(m, f"{where}.coindex_action[{i}]", source) for i, m in enumerate(e["coindex_action"])]
        aux = stab.get("auxiliary")
        if aux is not None:
            aux = [_matrix(m, f"{where}.stabilizer.auxiliary[{i}]", source) for i, m in enumerate(aux)]
        J = e.get("complex_structure")
        if J is not None:
            J = _matrix(J, where + ".complex_structure", source)
        try:
            c = CriticalPointData.from_actions(label, e["value"], ind, coind, aux,
                                               order=stab.get("order"), complex_structure=J)
        except InputError as exc:
            raise FormatError(str(exc), where, source) from exc
        gens = stab.get("generators")
        if gens is not None:
            if len(gens) != len(ind):
                raise FormatError("one tangent matrix per generator expected", where + ".stabilizer.generators",
                                  source)
            n = c.tangent_rep.ambient_dim
            for i, m in enumerate(gens):
                mat = _matrix(m, f"{where}.stabilizer.generators[{i}]", source, shape=(n, n))
                expect = c.stabilizer.linear_parts()[c.stabilizer.generators[i]][:n, :n]
                if np.max(np.abs(mat - expect), initial=0.0) > 1e-9:
                    raise FormatError("generator does not match index/coindex blocks",
                                      f"{where}.stabilizer.generators[{i}]", source)
        if e.get("location") is not None:
            c = _with_location(c, np.asarray(e["location"], dtype=float))
        out.append(c)
    return out


def _with_location(c: CriticalPointData, x) -> CriticalPointData:
    from dataclasses import replace
    return replace(c, location=x)


def _num(v: float):
    r = round(v)
    if abs(v - r) <= 1e-12:
        return int(r)
    return float(v)


def _mat_json(m: np.ndarray) -> list:
    return [[_num(v) for v in row] for row in m]


def critical_data_to_json(cpd) -> list[dict]:
    """Serialize in the adapted basis (index coordinates first, then coindex)."""
    out = []
    for c in cpd:
        B = c.adapted_basis()
        n = B.shape[0]
        ki = c.index
        G = c.stabilizer
        carrier = G.linear_parts()
        tang = [B.T @ c.tangent_rep.ambient_action[g] @ B for g in G.generators]
        entry = {
            "location_label": c.label,
            "value": _num(c.value),
            "stabilizer": {"order": G.order, "generators": [_mat_json(m) for m in tang]},
            "index_action": [_mat_json(m[:ki, :ki]) for m in tang],
            "coindex_action": [_mat_json(m[ki:, ki:]) for m in tang],
        }
        if not G.generators:
            # trivial stabilizer: one identity generator fixes the block sizes
            entry["stabilizer"]["generators"] = [_mat_json(np.eye(n))]
            entry["index_action"] = [_mat_json(np.eye(ki))]
            entry["coindex_action"] = [_mat_json(np.eye(n - ki))]
        if carrier.shape[1] > n and G.generators:
            entry["stabilizer"]["auxiliary"] = [_mat_json(carrier[g][n:, n:]) for g in G.generators]
        if c.complex_structure is not None and c.complex_structure.dim == n:
            entry["complex_structure"] = _mat_json(B.T @ c.complex_structure.matrix @ B)
        if c.location is not None:
            entry["location"] = [float(v) for v in c.location]
        out.append(entry)
    return out


# ---------------------------------------------------------------------------
# polynomials and sectors
# ---------------------------------------------------------------------------

def load_polynomial(path_or_doc, source: str | None = None) -> ExponentPolynomial:
    """A JSON map ``{"exponent": coefficient}`` or the rendered text ``1 + 22*t^2 + t^4``."""
    doc = path_or_doc
    if isinstance(doc, (str, Path)) and Path(doc).exists():
        source = str(doc)
        text = Path(doc).read_text()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError:
            doc = text
    elif isinstance(doc, (str, Path)) and str(doc).endswith((".json", ".txt")):
        raise FormatError("no such file", "", str(doc))
    if isinstance(doc, dict) and "polynomial" in doc:
        doc = doc["polynomial"]  # output of `orbimorse poly --json`
    try:
        if isinstance(doc, str):
            return ExponentPolynomial.parse(doc)
        return ExponentPolynomial.from_json(doc)
    except InputError as exc:
        raise FormatError(str(exc), "", source) from exc


def sector_to_json(s: InertiaSectorDatum) -> dict:
    return {
        "point": s.base.label,
        "class_rep": s.class_rep,
        "class_size": s.class_size,
        "centralizer_order": s.centralizer_order,
        "ind_fixed_dim": s.ind_fixed_dim,
        "coind_fixed_dim": s.coind_fixed_dim,
        "age": None if s.age is None else str(s.age),
        "orientable_pair": s.orientable_pair,
    }
