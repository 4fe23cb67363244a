"""Abstract simplicial complexes with per-order features and sparse incidence algebra.

A complex stores, for every order k, the list of k-simplices as sorted vertex
tuples together with the unsigned boundary matrices B_k linking consecutive
orders. All adjacency structure used elsewhere (faces, cofaces, lower/upper
neighbors, connection tables) is derived from the boundary matrices, so the
tables here are the single structural source of truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    ClosureViolation,
    DuplicateSimplex,
    FeatureShapeMismatch,
    UnknownSimplex,
)

Simplex = tuple[int, ...]


@dataclass(frozen=True, order=True)
class SimplexId:
    """Stable handle for one simplex: its order k and its index within X_k."""

    order: int
    index: int


@dataclass(frozen=True)
class ConnectionTable:
    """Sparse n_k x (n_{k-1} + n_{k+1}) table of faces and cofaces per simplex.

    Columns below ``split_point`` reference faces (order k-1), columns at or
    above it reference cofaces (order k+1), shifted by ``split_point``.
    """

    order: int
    table: sp.csr_matrix
    split_point: int


@dataclass(frozen=True)
class NeighborTable:
    """Symmetric 0/1 matrix marking lower- or upper-adjacent k-simplices."""

    order: int
    table: sp.csr_matrix
    include_self: bool


def _normalize_simplex(verts: Iterable[int]) -> Simplex:
    t = tuple(sorted(int(v) for v in verts))
    if len(set(t)) != len(t):
        raise ValueError(f"simplex {t} repeats a vertex")
    return t


class SimplicialComplex:
    """Immutable simplicial complex. Build instances through :func:`build_complex`.

    Safe to share across threads once constructed; every accessor either
    returns cached immutable data or derives new arrays.
    """

    def __init__(
        self,
        simplices: list[list[Simplex]],
        features: dict[int, np.ndarray],
        vertex_names: list[str] | None = None,
    ):
        self._simplices = simplices
        self._lookup: list[dict[Simplex, int]] = [
            {s: i for i, s in enumerate(order)} for order in simplices
        ]
        self._features = features
        self.vertex_names = vertex_names
        self._boundary: dict[int, sp.csr_matrix] = {}
        self._face_ids: dict[int, np.ndarray] = {}
        self._adj_cache: dict[tuple, sp.csr_matrix] = {}
        self._build_boundaries()

    # -- construction ------------------------------------------------------

    def _build_boundaries(self) -> None:
        for k in range(1, self.max_order + 1):
            n_prev, n_k = self.num_simplices(k - 1), self.num_simplices(k)
            face_ids = np.empty((n_k, k + 1), dtype=np.int64)
            lookup = self._lookup[k - 1]
            for j, simplex in enumerate(self._simplices[k]):
                for a, face in enumerate(combinations(simplex, k)):
                    try:
                        face_ids[j, a] = lookup[face]
                    except KeyError:
                        raise ClosureViolation(
                            f"{k}-simplex {simplex} is missing face {face}"
                        ) from None
            rows = face_ids.ravel()
            cols = np.repeat(np.arange(n_k, dtype=np.int64), k + 1)
            data = np.ones(rows.size, dtype=np.int8)
            self._face_ids[k] = face_ids
            self._boundary[k] = sp.csr_matrix(
                (data, (rows, cols)), shape=(n_prev, n_k)
            )

    # -- basic shape -------------------------------------------------------

    @property
    def max_order(self) -> int:
        return len(self._simplices) - 1

    def num_simplices(self, order: int) -> int:
        if 0 <= order <= self.max_order:
            return len(self._simplices[order])
        return 0

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(order) for order in self._simplices)

    def simplices(self, order: int) -> list[Simplex]:
        self._check_order(order)
        return list(self._simplices[order])

    def vertices_of(self, sid: SimplexId) -> Simplex:
        self._check_id(sid)
        return self._simplices[sid.order][sid.index]

    def index_of(self, order: int, verts: Iterable[int]) -> int:
        """Index of the simplex with this vertex set, or raise UnknownSimplex."""
        self._check_order(order)
        key = _normalize_simplex(verts)
        try:
            return self._lookup[order][key]
        except KeyError:
            raise UnknownSimplex(f"no {order}-simplex {key}") from None

    def id_of(self, verts: Iterable[int]) -> SimplexId:
        key = _normalize_simplex(verts)
        return SimplexId(len(key) - 1, self.index_of(len(key) - 1, key))

    def features_of(self, order: int) -> np.ndarray | None:
        return self._features.get(order)

    def feature_dim(self, order: int) -> int:
        feats = self._features.get(order)
        return 0 if feats is None else feats.shape[1]

    def _check_order(self, order: int) -> None:
        if not 0 <= order <= self.max_order:
            raise UnknownSimplex(
                f"order {order} outside [0, {self.max_order}]"
            )

    def _check_id(self, sid: SimplexId) -> None:
        self._check_order(sid.order)
        if not 0 <= sid.index < self.num_simplices(sid.order):
            raise UnknownSimplex(f"no simplex {sid}")

    # -- incidence ---------------------------------------------------------

    def boundary_matrix(self, k: int) -> sp.csr_matrix:
        """Unsigned incidence matrix B_k of shape n_{k-1} x n_k, for k >= 1.

        B_{max_order + 1} is the empty matrix with zero columns.
        """
        if k == self.max_order + 1:
            return sp.csr_matrix((self.num_simplices(k - 1), 0), dtype=np.int8)
        if not 1 <= k <= self.max_order:
            raise UnknownSimplex(f"no boundary matrix B_{k}")
        return self._boundary[k]

    def face_indices(self, k: int) -> np.ndarray:
        """Array (n_k, k+1) with the face index of every k-simplex, k >= 1."""
        if not 1 <= k <= self.max_order:
            raise UnknownSimplex(f"order {k} has no face table")
        return self._face_ids[k]

    def faces(self, sid: SimplexId) -> list[SimplexId]:
        """All (k-1)-simplices contained in ``sid``; empty for vertices."""
        self._check_id(sid)
        if sid.order == 0:
            return []
        row = self._face_ids[sid.order][sid.index]
        return [SimplexId(sid.order - 1, int(i)) for i in row]

    def cofaces(self, sid: SimplexId) -> list[SimplexId]:
        """All (k+1)-simplices containing ``sid``; empty at the top order."""
        self._check_id(sid)
        k = sid.order
        if k >= self.max_order:
            return []
        b_up = self._boundary[k + 1]
        start, stop = b_up.indptr[sid.index], b_up.indptr[sid.index + 1]
        return [SimplexId(k + 1, int(j)) for j in b_up.indices[start:stop]]

    # -- adjacency ---------------------------------------------------------

    def lower_adjacency(self, k: int, include_self: bool = True) -> sp.csr_matrix:
        """0/1 matrix marking k-simplices that share a face.

        The diagonal follows the set-builder reading: with ``include_self``
        a simplex is lower-adjacent to itself exactly when it has at least
        one face.
        """
        return self._adjacency(k, include_self, "lower")

    def upper_adjacency(self, k: int, include_self: bool = True) -> sp.csr_matrix:
        """0/1 matrix marking k-simplices that share a coface."""
        return self._adjacency(k, include_self, "upper")

    def _adjacency(self, k: int, include_self: bool, kind: str) -> sp.csr_matrix:
        self._check_order(k)
        key = (k, include_self, kind)
        cached = self._adj_cache.get(key)
        if cached is not None:
            return cached
        n_k = self.num_simplices(k)
        parts = []
        if kind in ("lower", "both") and k >= 1:
            b = self._boundary[k]
            parts.append((b.T @ b).astype(np.int64))
        if kind in ("upper", "both") and k < self.max_order:
            b = self._boundary[k + 1]
            parts.append((b @ b.T).astype(np.int64))
        if not parts:
            mat = sp.csr_matrix((n_k, n_k), dtype=np.int8)
        else:
            acc = parts[0]
            for p in parts[1:]:
                acc = acc + p
            mat = acc.sign().astype(np.int8)
            if not include_self:
                mat = mat.tolil()
                mat.setdiag(0)
                mat = mat.tocsr()
                mat.eliminate_zeros()
        mat.sort_indices()
        self._adj_cache[key] = mat
        return mat

    def lower_neighbors(
        self, sid: SimplexId, include_self: bool = True
    ) -> list[SimplexId]:
        """k-simplices sharing a face with ``sid`` (self per flag)."""
        self._check_id(sid)
        adj = self.lower_adjacency(sid.order, include_self)
        start, stop = adj.indptr[sid.index], adj.indptr[sid.index + 1]
        return [SimplexId(sid.order, int(j)) for j in adj.indices[start:stop]]

    def upper_neighbors(
        self, sid: SimplexId, include_self: bool = True
    ) -> list[SimplexId]:
        """k-simplices sharing a coface with ``sid`` (self per flag)."""
        self._check_id(sid)
        adj = self.upper_adjacency(sid.order, include_self)
        start, stop = adj.indptr[sid.index], adj.indptr[sid.index + 1]
        return [SimplexId(sid.order, int(j)) for j in adj.indices[start:stop]]

    def connection_table(self, k: int) -> ConnectionTable:
        """S_k = hstack(B_k^T, B_{k+1}): one row of faces and cofaces per k-simplex."""
        self._check_order(k)
        n_k = self.num_simplices(k)
        n_prev = self.num_simplices(k - 1) if k >= 1 else 0
        left = (
            self._boundary[k].T.tocsr()
            if k >= 1
            else sp.csr_matrix((n_k, 0), dtype=np.int8)
        )
        right = (
            self._boundary[k + 1]
            if k < self.max_order
            else sp.csr_matrix((n_k, self.num_simplices(k + 1)), dtype=np.int8)
        )
        table = sp.hstack([left, right], format="csr").astype(np.int8)
        return ConnectionTable(order=k, table=table, split_point=n_prev)

    def neighbor_table(self, k: int, include_self: bool = True) -> NeighborTable:
        """sign(B_k^T B_k + B_{k+1} B_{k+1}^T), diagonal kept or zeroed per flag."""
        self._check_order(k)
        return NeighborTable(
            order=k,
            table=self._adjacency(k, include_self, "both"),
            include_self=include_self,
        )

    # -- validation --------------------------------------------------------

    def validate_closure(self) -> None:
        """Raise ClosureViolation if any simplex lacks one of its faces."""
        for k in range(1, self.max_order + 1):
            lookup = self._lookup[k - 1]
            for simplex in self._simplices[k]:
                for face in combinations(simplex, k):
                    if face not in lookup:
                        raise ClosureViolation(
                            f"{k}-simplex {simplex} is missing face {face}"
                        )

    def __repr__(self) -> str:
        counts = " ".join(f"n_{k}={n}" for k, n in enumerate(self.counts))
        return f"SimplicialComplex({counts})"


def _normalize_input(
    simplex_sets: Mapping[int, Iterable[Iterable[int]]]
    | Sequence[Iterable[Iterable[int]]],
) -> list[list[Simplex]]:
    if isinstance(simplex_sets, Mapping):
        orders = {int(k): v for k, v in simplex_sets.items()}
        max_order = max(orders) if orders else 0
        raw: list[Iterable[Iterable[int]]] = [
            orders.get(k, []) for k in range(max_order + 1)
        ]
    else:
        raw = list(simplex_sets)
    out: list[list[Simplex]] = []
    for k, entries in enumerate(raw):
        seen: dict[Simplex, int] = {}
        order_list: list[Simplex] = []
        for verts in entries:
            s = _normalize_simplex(verts)
            if len(s) != k + 1:
                raise ValueError(
                    f"simplex {s} has {len(s)} vertices, expected {k + 1} at order {k}"
                )
            if s in seen:
                raise DuplicateSimplex(f"{k}-simplex {s} appears twice")
            seen[s] = len(order_list)
            order_list.append(s)
        out.append(order_list)
    while len(out) > 1 and not out[-1]:
        out.pop()
    return out


def build_complex(
    simplex_sets: Mapping[int, Iterable[Iterable[int]]]
    | Sequence[Iterable[Iterable[int]]],
    features: Mapping[int, np.ndarray | None] | None = None,
    auto_close: bool = False,
    vertex_names: list[str] | None = None,
) -> SimplicialComplex:
    """Build and validate a simplicial complex.

    Parameters
    ----------
    simplex_sets : per-order simplex lists
        Either a mapping order -> iterable of vertex tuples, or a sequence
        indexed by order. Vertex ids are arbitrary integers; tuples are
        sorted internally.
    features : optional per-order feature matrices
        Rows must align with the simplex count of the order. When
        ``auto_close`` synthesizes simplices, a matrix matching the explicit
        count is zero-padded for the synthesized rows.
    auto_close : bool
        When true, missing faces are added (appended after the explicit
        simplices of their order, in discovery order). When false a missing
        face raises :class:`ClosureViolation`.

    Raises
    ------
    ClosureViolation, DuplicateSimplex, FeatureShapeMismatch
    """
    simplices = _normalize_input(simplex_sets)
    explicit_counts = [len(order) for order in simplices]

    if auto_close:
        for k in range(len(simplices) - 1, 0, -1):
            lookup = {s: None for s in simplices[k - 1]}
            for simplex in simplices[k]:
                for face in combinations(simplex, k):
                    if face not in lookup:
                        lookup[face] = None
                        simplices[k - 1].append(face)

    feats: dict[int, np.ndarray] = {}
    if features:
        for k, mat in features.items():
            if mat is None:
                continue
            k = int(k)
            mat = np.asarray(mat, dtype=np.float64)
            if mat.ndim != 2:
                raise FeatureShapeMismatch(
                    f"order-{k} features must be 2-dimensional"
                )
            n_k = len(simplices[k]) if k < len(simplices) else 0
            n_explicit = explicit_counts[k] if k < len(explicit_counts) else 0
            if mat.shape[0] == n_k:
                feats[k] = mat
            elif mat.shape[0] == n_explicit:
                padded = np.zeros((n_k, mat.shape[1]), dtype=np.float64)
                padded[:n_explicit] = mat
                feats[k] = padded
            else:
                raise FeatureShapeMismatch(
                    f"order-{k} features have {mat.shape[0]} rows, expected {n_k}"
                )

    cx = SimplicialComplex(simplices, feats, vertex_names=vertex_names)
    cx.validate_closure()
    return cx
