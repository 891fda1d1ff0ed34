"""Typed relational data: values, signatures, instances and CSV fact files.

Values are plain Python objects:

* ``str``          -- text
* ``Decimal``      -- numbers (exact)
* :class:`Time`    -- clock time, minutes since midnight
* :class:`DateTag` -- opaque date label such as ``Sep/5``; equality only
* ``None``         -- Null; it never joins and never satisfies a comparison
"""

from __future__ import annotations

import csv
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Union

from .errors import MissingRelation, SchemaMismatch, ValueParseError

KINDS = ("str", "num", "time", "date")

_TIME_RE = re.compile(r"^(\d{1,2}):(\d{2})$")
_NUM_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)$")


@dataclass(frozen=True, order=True)
class Time:
    minutes: int

    def __post_init__(self):
        if not 0 <= self.minutes <= 1439:
            raise ValueError(f"time out of range: {self.minutes} minutes")

    @classmethod
    def parse(cls, text: str) -> Time:
        m = _TIME_RE.match(text.strip())
        if not m:
            raise ValueError(f"not a time literal: {text!r}")
        hours, minutes = int(m.group(1)), int(m.group(2))
        if hours > 23 or minutes > 59:
            raise ValueError(f"time out of range: {text!r}")
        return cls(hours * 60 + minutes)

    def __str__(self) -> str:
        return f"{self.minutes // 60:02d}:{self.minutes % 60:02d}"


@dataclass(frozen=True)
class DateTag:
    text: str

    def __str__(self) -> str:
        return self.text


Value = Union[str, Decimal, Time, DateTag, None]


def kind_of(value: Value) -> str | None:
    if value is None:
        return None
    if isinstance(value, str):
        return "str"
    if isinstance(value, Decimal):
        return "num"
    if isinstance(value, Time):
        return "time"
    if isinstance(value, DateTag):
        return "date"
    raise TypeError(f"not a relational value: {value!r}")


def parse_value(text: str, kind: str) -> Value:
    """Parse one trimmed CSV cell; the empty cell is Null."""
    text = text.strip()
    if text == "":
        return None
    if kind == "str":
        return text
    if kind == "num":
        if not _NUM_RE.match(text):
            raise ValueError(f"not a number: {text!r}")
        try:
            return Decimal(text)
        except InvalidOperation as exc:
            raise ValueError(f"not a number: {text!r}") from exc
    if kind == "time":
        return Time.parse(text)
    if kind == "date":
        return DateTag(text)
    raise ValueError(f"unknown kind {kind!r}")


def format_num(value: Decimal) -> str:
    text = format(value.normalize(), "f")
    return "0" if text in ("-0", "") else text


def format_value(value: Value) -> str:
    """Inverse of :func:`parse_value` (Null becomes the empty string)."""
    if value is None:
        return ""
    if isinstance(value, Decimal):
        return format_num(value)
    return str(value)


_KIND_RANK = {None: 0, "num": 1, "time": 2, "date": 3, "str": 4}


def value_sort_key(value: Value) -> tuple:
    # total order across kinds, used only for deterministic output
    kind = kind_of(value)
    if value is None:
        return (0,)
    if kind == "time":
        return (_KIND_RANK[kind], value.minutes)
    if kind == "date":
        return (_KIND_RANK[kind], value.text)
    return (_KIND_RANK[kind], value)


def tuple_sort_key(row: tuple) -> tuple:
    return tuple(value_sort_key(v) for v in row)


def sorted_tuples(rows: Iterable[tuple]) -> list[tuple]:
    return sorted(rows, key=tuple_sort_key)


@dataclass(frozen=True)
class AttributeSignature:
    name: str
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaMismatch(f"unknown attribute kind {self.kind!r}")


@dataclass(frozen=True)
class RelationSignature:
    name: str
    attributes: tuple[AttributeSignature, ...]

    def __post_init__(self):
        if not self.attributes:
            raise SchemaMismatch(f"relation {self.name} must have arity >= 1")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise SchemaMismatch(f"duplicate attribute names in {self.name}")

    @classmethod
    def of(cls, name: str, *attrs: tuple[str, str]) -> RelationSignature:
        return cls(name, tuple(AttributeSignature(a, k) for a, k in attrs))

    @property
    def arity(self) -> int:
        return len(self.attributes)

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(a.kind for a in self.attributes)

    @property
    def attribute_names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def renamed(self, name: str) -> RelationSignature:
        return RelationSignature(name, self.attributes)

    def same_shape(self, other: RelationSignature) -> bool:
        return self.attributes == other.attributes

    def check(self, row: tuple) -> None:
        if len(row) != self.arity:
            raise SchemaMismatch(
                f"{self.name}: tuple of length {len(row)} for arity {self.arity}")
        for value, attr in zip(row, self.attributes):
            kind = kind_of(value)
            if kind is not None and kind != attr.kind:
                raise SchemaMismatch(
                    f"{self.name}.{attr.name}: {kind} value {value!r} "
                    f"in {attr.kind} column")


class Instance(Mapping):
    """Immutable map from relation name to a frozenset of tuples.

    Signatures are optional metadata; relations produced by rule evaluation
    usually have none.  Looking up an absent relation raises ``KeyError``;
    :meth:`get` returns the empty set instead.
    """

    __slots__ = ("_rels", "_sigs")

    def __init__(self, relations: Mapping[str, Iterable[tuple]] | None = None,
                 signatures: Mapping[str, RelationSignature] | None = None):
        rels = {name: frozenset(rows) for name, rows in (relations or {}).items()}
        sigs = dict(signatures or {})
        for name, sig in sigs.items():
            rels.setdefault(name, frozenset())
            for row in rels[name]:
                sig.check(row)
        self._rels = rels
        self._sigs = sigs

    @classmethod
    def empty(cls) -> Instance:
        return cls()

    def __getitem__(self, name: str) -> frozenset:
        return self._rels[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._rels)

    def __len__(self) -> int:
        return len(self._rels)

    def get(self, name: str, default=frozenset()) -> frozenset:
        return self._rels.get(name, default)

    @property
    def signatures(self) -> Mapping[str, RelationSignature]:
        return dict(self._sigs)

    def signature(self, name: str) -> RelationSignature | None:
        return self._sigs.get(name)

    def size(self, names: Iterable[str] | None = None) -> int:
        names = self._rels if names is None else names
        return sum(len(self.get(n)) for n in names)

    def restrict(self, names: Iterable[str]) -> Instance:
        names = list(names)
        return Instance({n: self.get(n) for n in names},
                        {n: s for n, s in self._sigs.items() if n in names})

    def replace(self, relations: Mapping[str, Iterable[tuple]],
                signatures: Mapping[str, RelationSignature] | None = None) -> Instance:
        rels = dict(self._rels)
        rels.update({n: frozenset(r) for n, r in relations.items()})
        sigs = dict(self._sigs)
        sigs.update(signatures or {})
        return Instance(rels, sigs)

    def union(self, other: Instance) -> Instance:
        rels = dict(self._rels)
        for name, rows in other._rels.items():
            rels[name] = rels.get(name, frozenset()) | rows
        sigs = dict(other._sigs)
        sigs.update(self._sigs)
        return Instance(rels, sigs)

    def issubset(self, other: Instance) -> bool:
        return all(rows <= other.get(name) for name, rows in self._rels.items())

    def __le__(self, other: Instance) -> bool:
        return self.issubset(other)

    def _nonempty(self) -> dict:
        return {n: r for n, r in self._rels.items() if r}

    def __eq__(self, other) -> bool:
        # an empty relation and an absent one are the same extension
        if not isinstance(other, Instance):
            return NotImplemented
        return self._nonempty() == other._nonempty()

    def __hash__(self):
        return hash(frozenset(self._nonempty().items()))

    def canonical(self) -> tuple:
        """Hashable, ordered form ignoring empty relations."""
        return tuple((name, tuple(sorted_tuples(rows)))
                     for name, rows in sorted(self._rels.items()) if rows)

    def __repr__(self) -> str:
        body = ", ".join(f"{n}: {len(r)}" for n, r in sorted(self._rels.items()))
        return f"Instance({body})"


def read_relation_csv(path: Path, sig: RelationSignature) -> frozenset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        if tuple(header) != sig.attribute_names:
            raise SchemaMismatch(
                f"{path}: header {header} does not match "
                f"{sig.name}{list(sig.attribute_names)}")
        rows = set()
        for lineno, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != sig.arity:
                raise ValueParseError(
                    f"expected {sig.arity} cells, found {len(cells)}",
                    sig.name, lineno, "*")
            values = []
            for cell, attr in zip(cells, sig.attributes):
                try:
                    values.append(parse_value(cell, attr.kind))
                except ValueError as exc:
                    raise ValueParseError(str(exc), sig.name, lineno, attr.name) from None
            rows.add(tuple(values))
    return frozenset(rows)


def load_facts(directory: str | Path, schema: Iterable[RelationSignature],
               optional: Iterable[str] = ()) -> Instance:
    """Load ``<relation>.csv`` for every signature in ``schema``.

    Relations named in ``optional`` may have no file and load as empty.
    """
    directory = Path(directory)
    optional = set(optional)
    rels, sigs = {}, {}
    for sig in schema:
        path = directory / f"{sig.name}.csv"
        sigs[sig.name] = sig
        if not path.is_file():
            if sig.name in optional:
                rels[sig.name] = frozenset()
                continue
            raise MissingRelation(sig.name, str(path))
        rels[sig.name] = read_relation_csv(path, sig)
    return Instance(rels, sigs)


def write_facts(instance: Instance, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name in instance:
        sig = instance.signature(name)
        if sig is None:
            raise SchemaMismatch(f"cannot write {name}: no signature")
        with open(directory / f"{name}.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(sig.attribute_names)
            for row in sorted_tuples(instance[name]):
                writer.writerow([format_value(v) for v in row])


def symmetric_difference(a: Instance, b: Instance, relation: str) -> int:
    if relation not in a or relation not in b:
        raise SchemaMismatch(f"relation {relation} missing from an instance")
    sa, sb = a.signature(relation), b.signature(relation)
    if sa is not None and sb is not None and not sa.same_shape(sb):
        raise SchemaMismatch(f"signatures of {relation} differ")
    return len(a[relation] ^ b[relation])
