"""Knowledge base loading and access.

A knowledge base is two TSV files:

* attribute triples: ``entity<TAB>attribute<TAB>literal<TAB>kind`` where
  kind is one of ``string``, ``number``, ``date``;
* relationship triples: ``head<TAB>relation<TAB>tail``.

Lines starting with ``#`` and blank lines are skipped.  Fields may contain
tabs/newlines escaped as ``\\t`` / ``\\n`` (``\\\\`` for a backslash).
Malformed lines are counted rather than fatal; unparseable numbers/dates
fall back to string literals and are counted.

The entity set of a KB is: subjects of attribute triples plus subjects and
objects of relationship triples.  Entities, attributes and relationships
are interned to dense integer ids at load; downstream modules work on ids
and map back to names only at I/O boundaries.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass, field

_EPOCH = datetime.date(1970, 1, 1)

KIND_STRING = "string"
KIND_NUMBER = "number"
KIND_DATE = "date"


def escape_field(s: str) -> str:
    return s.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def unescape_field(s: str) -> str:
    out = []
    i = 0
    while i < len(s):
        c = s[i]
        if c == "\\" and i + 1 < len(s):
            nxt = s[i + 1]
            if nxt == "t":
                out.append("\t")
                i += 2
                continue
            if nxt == "n":
                out.append("\n")
                i += 2
                continue
            if nxt == "\\":
                out.append("\\")
                i += 2
                continue
        out.append(c)
        i += 1
    return "".join(out)


class Interner:
    """Bidirectional string <-> dense int id table (first-seen order)."""

    def __init__(self):
        self._ids: dict[str, int] = {}
        self.names: list[str] = []

    def add(self, name: str) -> int:
        i = self._ids.get(name)
        if i is None:
            i = len(self.names)
            self._ids[name] = i
            self.names.append(name)
        return i

    def get(self, name: str):
        return self._ids.get(name)

    def id(self, name: str) -> int:
        return self._ids[name]

    def name(self, i: int) -> str:
        return self.names[i]

    def __len__(self):
        return len(self.names)

    def __contains__(self, name):
        return name in self._ids

    def __iter__(self):
        return iter(range(len(self.names)))


@dataclass(frozen=True)
class TypedLiteral:
    """An attribute value: raw text, a kind tag, and for numbers/dates a
    parsed numeric form (dates become days since 1970-01-01, possibly
    negative)."""

    raw: str
    kind: str
    num: float | None = None

    def __repr__(self):  # keep test failure output readable
        return f"TypedLiteral({self.raw!r}, {self.kind})"


def parse_literal(raw: str, kind: str) -> tuple[TypedLiteral, bool]:
    """Build a TypedLiteral; returns (literal, fell_back_to_string)."""
    if kind == KIND_NUMBER:
        try:
            v = float(raw)
        except ValueError:
            return TypedLiteral(raw, KIND_STRING), True
        if v != v or v in (float("inf"), float("-inf")):
            return TypedLiteral(raw, KIND_STRING), True
        return TypedLiteral(raw, KIND_NUMBER, v), False
    if kind == KIND_DATE:
        try:
            d = datetime.date.fromisoformat(raw)
        except ValueError:
            return TypedLiteral(raw, KIND_STRING), True
        return TypedLiteral(raw, KIND_DATE, float((d - _EPOCH).days)), False
    if kind == KIND_STRING:
        return TypedLiteral(raw, KIND_STRING), False
    return TypedLiteral(raw, KIND_STRING), True  # unknown kind tag


@dataclass
class LoadReport:
    malformed_lines: int = 0
    kind_fallbacks: int = 0
    duplicate_triples: int = 0


class KnowledgeBase:
    """Triple store with adjacency indexes over interned integer ids."""

    def __init__(self, name: str = ""):
        self.name = name
        self.ents = Interner()
        self.atts = Interner()
        self.rels = Interner()
        # entity id -> attribute id -> set[TypedLiteral]
        self.attrs: dict[int, dict[int, set]] = {}
        # head id -> rel id -> set[tail id]   (and the reverse index)
        self.out: dict[int, dict[int, set]] = {}
        self.inc: dict[int, dict[int, set]] = {}
        self.report = LoadReport()

    # -- construction -------------------------------------------------

    def add_attr(self, entity: str, attr: str, lit: TypedLiteral) -> bool:
        u = self.ents.add(entity)
        a = self.atts.add(attr)
        vals = self.attrs.setdefault(u, {}).setdefault(a, set())
        if lit in vals:
            return False
        vals.add(lit)
        return True

    def add_rel(self, head: str, rel: str, tail: str) -> bool:
        h = self.ents.add(head)
        r = self.rels.add(rel)
        t = self.ents.add(tail)
        tails = self.out.setdefault(h, {}).setdefault(r, set())
        if t in tails:
            return False
        tails.add(t)
        self.inc.setdefault(t, {}).setdefault(r, set()).add(h)
        return True

    # -- queries (integer ids) -----------------------------------------

    def n_entities(self) -> int:
        return len(self.ents)

    def attr_values(self, u: int, a: int) -> set:
        return self.attrs.get(u, {}).get(a, set())

    def entity_attrs(self, u: int) -> dict:
        return self.attrs.get(u, {})

    def neighbors(self, u: int, r: int, direction: str = "out") -> set:
        """Entities one directed hop away: tails of (u, r, *) for "out",
        heads of (*, r, u) for "in".  Unknown ids give an empty set."""
        table = self.out if direction == "out" else self.inc
        return table.get(u, {}).get(r, set())

    def out_rels(self, u: int):
        return self.out.get(u, {}).keys()

    def labels(self, u: int, label_attr: int) -> list[str]:
        return sorted(lit.raw for lit in self.attr_values(u, label_attr))

    # -- triple iteration / export -------------------------------------

    def attr_triples(self):
        for u in sorted(self.attrs):
            for a in sorted(self.attrs[u]):
                for lit in sorted(self.attrs[u][a], key=lambda l: (l.raw, l.kind)):
                    yield u, a, lit

    def rel_triples(self):
        for h in sorted(self.out):
            for r in sorted(self.out[h]):
                for t in sorted(self.out[h][r]):
                    yield h, r, t

    def n_attr_triples(self) -> int:
        return sum(len(v) for per in self.attrs.values() for v in per.values())

    def n_rel_triples(self) -> int:
        return sum(len(v) for per in self.out.values() for v in per.values())

    def export_tsv(self, attr_path, rel_path):
        """Write the KB back out in canonical sorted order; reloading the
        result yields identical triple sets."""
        with open(attr_path, "w", encoding="utf-8") as f:
            for u, a, lit in self.attr_triples():
                f.write("\t".join((escape_field(self.ents.name(u)),
                                   escape_field(self.atts.name(a)),
                                   escape_field(lit.raw), lit.kind)) + "\n")
        with open(rel_path, "w", encoding="utf-8") as f:
            for h, r, t in self.rel_triples():
                f.write("\t".join((escape_field(self.ents.name(h)),
                                   escape_field(self.rels.name(r)),
                                   escape_field(self.ents.name(t)))) + "\n")


def _data_lines(path):
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            yield line


def load_kb(attr_path, rel_path, name: str = "") -> KnowledgeBase:
    kb = KnowledgeBase(name=name)
    rep = kb.report
    for line in _data_lines(attr_path):
        parts = line.split("\t")
        if len(parts) != 4:
            rep.malformed_lines += 1
            continue
        entity, attr, raw = (unescape_field(p) for p in parts[:3])
        lit, fell_back = parse_literal(raw, parts[3].strip())
        if fell_back:
            rep.kind_fallbacks += 1
        if not kb.add_attr(entity, attr, lit):
            rep.duplicate_triples += 1
    for line in _data_lines(rel_path):
        parts = line.split("\t")
        if len(parts) != 3:
            rep.malformed_lines += 1
            continue
        head, rel, tail = (unescape_field(p) for p in parts)
        if not kb.add_rel(head, rel, tail):
            rep.duplicate_triples += 1
    return kb
