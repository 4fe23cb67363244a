"""File formats for complexes, features, values, and labels.

Complex text format: a header line ``order k`` opens each section, followed
by one simplex per line as whitespace-separated vertex labels. Blank lines
and ``#`` comments are ignored. The JSON variant carries the same content as
an object mapping order strings to lists of label lists (optionally nested
under an ``orders`` key).

Contact format: one interaction group per line (whitespace-separated vertex
labels); each group becomes a maximal simplex and the complex is closed
downward.

Co-authorship CSV: header ``authors,citations``; the authors column joins
labels with ``-``. Each row is one paper, the complex is the closure of the
author sets, and the value of a simplex is the summed citations of all
papers whose author set contains it.

Sidecar CSVs key rows by the sorted vertex labels joined with ``-``:
features ``simplex,f0,f1,...``, values ``simplex,value``, vertex labels
``vertex,label``. Loaders reject undeclared columns.

Vertex labels are arbitrary strings; every loader maps them to dense
integers in order of first appearance and records the names on the complex.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .complex import SimplicialComplex, build_complex
from .errors import EmptyDataset, ParseError


class _LabelMap:
    def __init__(self):
        self.ids: dict[str, int] = {}
        self.names: list[str] = []

    def get(self, label: str) -> int:
        if label not in self.ids:
            self.ids[label] = len(self.names)
            self.names.append(label)
        return self.ids[label]


def _build_from_groups(
    groups: list[tuple[int, ...]], labels: _LabelMap, auto_close: bool
) -> SimplicialComplex:
    by_order: dict[int, list[tuple[int, ...]]] = {}
    seen: set[tuple[int, ...]] = set()
    for g in groups:
        if g in seen:
            continue
        seen.add(g)
        by_order.setdefault(len(g) - 1, []).append(g)
    if not by_order:
        raise EmptyDataset("no simplices found")
    return build_complex(by_order, auto_close=auto_close, vertex_names=labels.names)


def read_complex_text(path: str | Path, auto_close: bool = False) -> SimplicialComplex:
    labels = _LabelMap()
    groups: list[tuple[int, ...]] = []
    current_order: int | None = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            if tokens[0] == "order":
                if len(tokens) != 2 or not tokens[1].isdigit():
                    raise ParseError(f"{path}:{lineno}: malformed order header")
                current_order = int(tokens[1])
                continue
            if current_order is None:
                raise ParseError(f"{path}:{lineno}: simplex before any order header")
            if len(tokens) != current_order + 1:
                raise ParseError(
                    f"{path}:{lineno}: expected {current_order + 1} vertices,"
                    f" got {len(tokens)}"
                )
            if len(set(tokens)) != len(tokens):
                raise ParseError(f"{path}:{lineno}: repeated vertex label")
            groups.append(tuple(sorted(labels.get(t) for t in tokens)))
    return _build_from_groups(groups, labels, auto_close)


def read_complex_json(path: str | Path, auto_close: bool = False) -> SimplicialComplex:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON ({exc})") from None
    orders = doc.get("orders", doc) if isinstance(doc, dict) else None
    if not isinstance(orders, dict):
        raise ParseError(f"{path}: expected an object mapping order -> simplices")
    labels = _LabelMap()
    groups: list[tuple[int, ...]] = []
    for key in sorted(orders, key=lambda s: int(s)):
        if not str(key).lstrip("-").isdigit() or int(key) < 0:
            raise ParseError(f"{path}: bad order key {key!r}")
        for entry in orders[key]:
            tokens = [str(v) for v in entry]
            if len(tokens) != int(key) + 1:
                raise ParseError(
                    f"{path}: simplex {entry} does not have {int(key) + 1} vertices"
                )
            groups.append(tuple(sorted(labels.get(t) for t in tokens)))
    return _build_from_groups(groups, labels, auto_close)


def read_complex_file(path: str | Path, auto_close: bool = False) -> SimplicialComplex:
    path = Path(path)
    if path.suffix.lower() == ".json":
        return read_complex_json(path, auto_close)
    return read_complex_text(path, auto_close)


def read_contact_file(path: str | Path) -> SimplicialComplex:
    """One interaction group per line; the closure of the groups is built."""
    labels = _LabelMap()
    groups: list[tuple[int, ...]] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            if len(set(tokens)) != len(tokens):
                raise ParseError(f"{path}:{lineno}: repeated vertex label")
            groups.append(tuple(sorted(labels.get(t) for t in tokens)))
    return _build_from_groups(groups, labels, auto_close=True)


def read_coauthor_csv(
    path: str | Path,
) -> tuple[SimplicialComplex, dict[int, np.ndarray]]:
    """Papers with citation counts; returns the closed complex and per-order
    simplex values (sum of citations of papers containing each simplex)."""
    labels = _LabelMap()
    papers: list[tuple[tuple[int, ...], float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["authors", "citations"]:
            raise ParseError(f"{path}:1: header must be exactly 'authors,citations'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 columns")
            names = row[0].split("-")
            if len(set(names)) != len(names):
                raise ParseError(f"{path}:{lineno}: repeated author")
            try:
                citations = float(row[1])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: bad citation count") from None
            papers.append((tuple(sorted(labels.get(n) for n in names)), citations))
    if not papers:
        raise EmptyDataset(f"{path}: no papers")
    cx = _build_from_groups([p[0] for p in papers], labels, auto_close=True)
    paper_sets = [(frozenset(authors), value) for authors, value in papers]
    values: dict[int, np.ndarray] = {}
    for k in range(cx.max_order + 1):
        vals = np.zeros(cx.num_simplices(k))
        for i, simplex in enumerate(cx.simplices(k)):
            s = frozenset(simplex)
            vals[i] = sum(v for authors, v in paper_sets if s <= authors)
        values[k] = vals
    return cx, values


def _simplex_key_lookup(cx: SimplicialComplex, order: int) -> dict[str, int]:
    if cx.vertex_names is None:
        names = {v: str(v) for simplex in cx.simplices(0) for v in simplex}
    else:
        # raw vertex ids are assigned densely in name order on load
        names = {vid: cx.vertex_names[vid] for (vid,) in cx.simplices(0)}
    out = {}
    for i, simplex in enumerate(cx.simplices(order)):
        key = "-".join(sorted(names[v] for v in simplex))
        out[key] = i
    return out


def read_feature_csv(path: str | Path, cx: SimplicialComplex, order: int) -> np.ndarray:
    """Sidecar features: header ``simplex,f0,f1,...``; one row per simplex."""
    lookup = _simplex_key_lookup(cx, order)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if (
            header is None
            or header[0] != "simplex"
            or header[1:] != [f"f{i}" for i in range(len(header) - 1)]
        ):
            raise ParseError(f"{path}:1: header must be 'simplex,f0,f1,...'")
        width = len(header) - 1
        out = np.zeros((cx.num_simplices(order), width))
        filled = np.zeros(cx.num_simplices(order), dtype=bool)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width + 1:
                raise ParseError(f"{path}:{lineno}: expected {width + 1} columns")
            if row[0] not in lookup:
                raise ParseError(f"{path}:{lineno}: unknown simplex {row[0]!r}")
            idx = lookup[row[0]]
            try:
                out[idx] = [float(x) for x in row[1:]]
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric feature") from None
            filled[idx] = True
    if not filled.all():
        missing = int((~filled).sum())
        raise ParseError(f"{path}: {missing} simplices have no feature row")
    return out


def read_value_csv(path: str | Path, cx: SimplicialComplex, order: int) -> np.ndarray:
    """Per-simplex scalar values: header ``simplex,value``."""
    lookup = _simplex_key_lookup(cx, order)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["simplex", "value"]:
            raise ParseError(f"{path}:1: header must be exactly 'simplex,value'")
        out = np.zeros(cx.num_simplices(order))
        filled = np.zeros(cx.num_simplices(order), dtype=bool)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 columns")
            if row[0] not in lookup:
                raise ParseError(f"{path}:{lineno}: unknown simplex {row[0]!r}")
            try:
                out[lookup[row[0]]] = float(row[1])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric value") from None
            filled[lookup[row[0]]] = True
    if not filled.all():
        raise ParseError(f"{path}: {int((~filled).sum())} simplices missing values")
    return out


def read_label_csv(path: str | Path, cx: SimplicialComplex) -> np.ndarray:
    """Vertex class labels: header ``vertex,label``. Class names map to dense
    integers in sorted name order."""
    lookup = _simplex_key_lookup(cx, 0)
    raw: dict[int, str] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["vertex", "label"]:
            raise ParseError(f"{path}:1: header must be exactly 'vertex,label'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 columns")
            if row[0] not in lookup:
                raise ParseError(f"{path}:{lineno}: unknown vertex {row[0]!r}")
            raw[lookup[row[0]]] = row[1]
    n = cx.num_simplices(0)
    if len(raw) != n:
        raise ParseError(f"{path}: {n - len(raw)} vertices have no label")
    classes = sorted(set(raw.values()))
    class_ids = {c: i for i, c in enumerate(classes)}
    return np.array([class_ids[raw[v]] for v in range(n)], dtype=np.int64)
