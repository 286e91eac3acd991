"""Loading, validation, and hashing of operator spec files.

A spec file describes D = sum_k D_k T^k: the torus dimension, the translation
vector theta, and per-shift first-order coefficient data.  JSON is the primary
format, TOML is accepted as an alternative; complex values are {re, im}
objects.  Unknown fields are rejected so that typos fail loudly.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .symbols import FirstOrderCoefficient, ShiftOperatorSpec, TorusIsometry


class SpecFormatError(ValueError):
    """The spec file does not match the schema."""


_TOP_FIELDS = {"d", "theta", "terms", "name", "comment"}
_TERM_FIELDS = {"k", "coeffs"}
_COEFF_FIELDS = {"j", "m", "re", "im"}


def _require(cond, msg):
    if not cond:
        raise SpecFormatError(msg)


def _complex_value(entry) -> complex:
    re = entry.get("re", 0.0)
    im = entry.get("im", 0.0)
    _require(isinstance(re, (int, float)) and isinstance(im, (int, float)),
             "re/im must be numbers")
    return complex(re, im)


def parse_spec(data: dict) -> ShiftOperatorSpec:
    """Validate a parsed spec document and build the operator description."""
    _require(isinstance(data, dict), "spec document must be a mapping")
    unknown = set(data) - _TOP_FIELDS
    _require(not unknown, f"unknown spec fields: {sorted(unknown)}")
    _require("d" in data and "theta" in data and "terms" in data,
             "spec needs fields d, theta, terms")
    d = data["d"]
    _require(isinstance(d, int) and d >= 1, "d must be a positive integer")
    theta = data["theta"]
    _require(isinstance(theta, list) and len(theta) == d and
             all(isinstance(v, (int, float)) for v in theta),
             "theta must be a list of d numbers")
    _require(isinstance(data["terms"], list) and data["terms"],
             "terms must be a non-empty list")
    iso = TorusIsometry(d, tuple(float(v) for v in theta))
    terms = {}
    for term in data["terms"]:
        _require(isinstance(term, dict), "each term must be a mapping")
        unknown = set(term) - _TERM_FIELDS
        _require(not unknown, f"unknown term fields: {sorted(unknown)}")
        _require("k" in term and "coeffs" in term, "term needs fields k, coeffs")
        k = term["k"]
        _require(isinstance(k, int), "shift power k must be an integer")
        _require(k not in terms, f"duplicate shift power k={k}")
        coeffs = {}
        _require(isinstance(term["coeffs"], list) and term["coeffs"],
                 "coeffs must be a non-empty list")
        for entry in term["coeffs"]:
            _require(isinstance(entry, dict), "each coefficient must be a mapping")
            unknown = set(entry) - _COEFF_FIELDS
            _require(not unknown, f"unknown coefficient fields: {sorted(unknown)}")
            _require("j" in entry and "m" in entry, "coefficient needs fields j, m")
            j = entry["j"]
            m = entry["m"]
            _require(isinstance(j, int) and 1 <= j <= d,
                     f"direction j={j} outside 1..{d}")
            _require(isinstance(m, list) and len(m) == d and
                     all(isinstance(mi, int) for mi in m),
                     "frequency m must be a list of d integers")
            key = (j, tuple(m))
            coeffs[key] = coeffs.get(key, 0.0) + _complex_value(entry)
        terms[k] = FirstOrderCoefficient.from_dict(d, coeffs)
    return ShiftOperatorSpec.from_terms(iso, terms)


def load_spec(path) -> ShiftOperatorSpec:
    """Load a spec from a .json or .toml file."""
    data = _load_document(path)
    return parse_spec(data)


def _load_document(path) -> dict:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text)
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise SpecFormatError(f"cannot parse {path}: {err}") from err


def spec_hash(path) -> str:
    """sha256 of the canonicalized spec document, for report provenance."""
    data = _load_document(path)
    canon = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()
