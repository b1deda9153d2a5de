"""The shipped catalog of Weierstrass data and its JSON loader."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .domain import PuncturedDomain, homology_basis
from .errors import NullCurveError, ParseError
from .rational import RationalMap, parse_rational
from .weierstrass import RationalVector, WeierstrassData

SCHEMA_VERSION = 1


@dataclass
class CatalogEntry:
    name: str
    n: int
    domain: PuncturedDomain
    g: RationalMap
    eta: RationalMap
    theta: RationalMap
    loop_radius: Optional[Fraction] = None
    expected: dict = field(default_factory=dict)
    line: Optional[int] = None

    def data(self) -> WeierstrassData:
        return WeierstrassData.from_gw(self.g, self.eta, self.domain, self.theta, self.name)

    @property
    def f(self) -> RationalVector:
        return self.data().f

    def basis(self) -> list:
        return homology_basis(self.domain, self.data().exceptional_points(), self.loop_radius)

    def expected_periods(self) -> Optional[np.ndarray]:
        p = self.expected.get("periods")
        if p is None:
            return None
        return np.array([[complex(re, im) for re, im in loop] for loop in p])

    def expected_flux(self) -> Optional[np.ndarray]:
        fx = self.expected.get("flux")
        return None if fx is None else np.array(fx, dtype=float)

    def expected_bits(self) -> Optional[tuple]:
        b = self.expected.get("bits")
        return None if b is None else tuple(int(x) for x in b)

    def g_holomorphic(self) -> bool:
        return self.g.poles_within(self.domain.punctures)


def default_catalog_path():
    return resources.files("nullcurves") / "data" / "catalog.json"


def _line_of(text: str, name: str) -> Optional[int]:
    m = re.search(r'"name"\s*:\s*"' + re.escape(name) + '"', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _parse_map(raw, name, fieldname, line):
    if not isinstance(raw, str):
        raise ParseError(f"{name}: expected a rational-function string", line, fieldname)
    try:
        return parse_rational(raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"{name}: cannot parse {raw!r}: {exc or 'zero denominator'}", line,
                         fieldname) from exc


def parse_entry(raw: dict, text: str = "") -> CatalogEntry:
    if not isinstance(raw, dict):
        raise ParseError("catalog entry must be an object")
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise ParseError("entry without a name", field="name")
    line = _line_of(text, name) if text else None
    for key in ("n", "domain", "g", "eta"):
        if key not in raw:
            raise ParseError(f"{name}: missing field", line, key)
    n = raw["n"]
    if n != 3:
        raise ParseError(f"{name}: (g, eta) data needs n = 3, got {n!r}", line, "n")
    try:
        domain = PuncturedDomain.from_json(raw["domain"])
    except (ValueError, KeyError, TypeError, NullCurveError) as exc:
        raise ParseError(f"{name}: bad domain: {exc}", line, "domain") from exc
    g = _parse_map(raw["g"], name, "g", line)
    eta = _parse_map(raw["eta"], name, "eta", line)
    theta = _parse_map(raw.get("theta", "1"), name, "theta", line)
    if eta.is_zero():
        raise ParseError(f"{name}: eta vanishes identically", line, "eta")
    radius = raw.get("loop_radius")
    try:
        radius = None if radius is None else Fraction(radius)
    except (ValueError, TypeError) as exc:
        raise ParseError(f"{name}: bad loop radius {radius!r}", line, "loop_radius") from exc
    entry = CatalogEntry(name, n, domain, g, eta, theta, radius, raw.get("expected", {}), line)
    try:
        entry.data()
    except (ValueError, NullCurveError) as exc:
        raise ParseError(f"{name}: invalid data: {exc}", line, "eta") from exc
    return entry


def load_catalog(path=None) -> list:
    """Parse and validate a catalog file (the shipped one by default)."""
    if path is None:
        text = default_catalog_path().read_text()
    else:
        text = Path(path).read_text()
    if not text.strip():
        raise ParseError("catalog file is empty", line=1)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    if isinstance(doc, dict) and "entries" in doc:
        if doc.get("schema") != SCHEMA_VERSION:
            raise ParseError(f"unsupported schema {doc.get('schema')!r}", field="schema")
        raw_entries = doc["entries"]
    elif isinstance(doc, dict) and "name" in doc:
        raw_entries = [doc]
    else:
        raise ParseError("catalog must hold an 'entries' list", field="entries")
    entries = [parse_entry(e, text) for e in raw_entries]
    names = [e.name for e in entries]
    if len(set(names)) != len(names):
        raise ParseError("duplicate entry names", field="name")
    return entries


def get_entry(name: str, path=None) -> CatalogEntry:
    for e in load_catalog(path):
        if e.name == name:
            return e
    raise KeyError(name)
