"""Seeded random walks on the k-simplices of a complex.

Two sampling strategies are provided. Connection sampling first draws a face
or coface of the current simplex uniformly and then moves to a uniform
incident simplex of that connection; neighbor sampling first draws a uniform
adjacent simplex and then a uniform shared connection. Adjacency can be
restricted to faces only or cofaces only, with the exception that walks on
vertices may always traverse edges (a vertex has no faces, so no other moves
would exist).

Reproducibility contract: walk j of order k in an epoch consumes a dedicated
Philox counter-based stream seeded by ``SeedSequence(epoch_seed,
spawn_key=(order, j))``. Streams are independent of scheduling, so sampling
walks in any order, or in parallel, yields identical results.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .complex import SimplexId, SimplicialComplex
from .errors import UnknownSimplex

KIND_FACE = 0
KIND_COFACE = 1
KIND_STAY = 2

_KIND_NAMES = {KIND_FACE: "face", KIND_COFACE: "coface", KIND_STAY: "stay"}
_KIND_CHARS = {KIND_FACE: "F", KIND_COFACE: "C", KIND_STAY: "S"}

STRATEGIES = ("connection", "neighbor")
ADJACENCY_MODES = ("both", "upper", "lower")


@dataclass(frozen=True)
class ConnectionRecord:
    """Connection traversed between consecutive walk simplices.

    ``kind`` is "face", "coface", or "stay"; ``id`` names the traversed
    (k-1)- or (k+1)-simplex and is None for stay steps.
    """

    kind: str
    id: SimplexId | None


@dataclass(frozen=True)
class Walk:
    """One sampled trajectory on order-k simplices.

    ``simplex_indices`` has length ell; the two connection arrays have length
    ell - 1, with ``connection_indices`` holding -1 on stay steps.
    """

    order: int
    simplex_indices: np.ndarray
    connection_kinds: np.ndarray
    connection_indices: np.ndarray

    @property
    def length(self) -> int:
        return len(self.simplex_indices)

    def simplices(self) -> list[SimplexId]:
        return [SimplexId(self.order, int(i)) for i in self.simplex_indices]

    def connections(self) -> list[ConnectionRecord]:
        out = []
        for kind, idx in zip(self.connection_kinds, self.connection_indices):
            kind = int(kind)
            if kind == KIND_STAY:
                out.append(ConnectionRecord("stay", None))
            else:
                order = self.order - 1 if kind == KIND_FACE else self.order + 1
                out.append(ConnectionRecord(_KIND_NAMES[kind], SimplexId(order, int(idx))))
        return out

    def to_line(self) -> str:
        """Render as `k=<order> v0 [F|C|S:<id>] v1 ...` for golden-file dumps."""
        parts = [f"k={self.order}", str(int(self.simplex_indices[0]))]
        for i in range(self.length - 1):
            kind = int(self.connection_kinds[i])
            if kind == KIND_STAY:
                parts.append("S")
            else:
                parts.append(f"{_KIND_CHARS[kind]}:{int(self.connection_indices[i])}")
            parts.append(str(int(self.simplex_indices[i + 1])))
        return " ".join(parts)


@dataclass(frozen=True)
class WalkConfig:
    """Sampling parameters shared by every walk in a set."""

    length: int
    walks: int | None = None  # None: one walk starting at every simplex
    strategy: str = "connection"
    adjacency: str = "both"
    include_self: bool = True
    exclude_return: bool = False

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("walk length must be at least 1")
        if self.walks is not None and self.walks < 1:
            raise ValueError("walk count must be at least 1 (or None for all)")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.adjacency not in ADJACENCY_MODES:
            raise ValueError(f"unknown adjacency mode {self.adjacency!r}")


@dataclass(frozen=True)
class WalkSlot:
    """All walks of one order, stored as dense (m, ell) index arrays."""

    order: int
    sims: np.ndarray
    kinds: np.ndarray
    conns: np.ndarray

    def __len__(self) -> int:
        return self.sims.shape[0]

    @property
    def length(self) -> int:
        return self.sims.shape[1]

    def walk(self, j: int) -> Walk:
        return Walk(self.order, self.sims[j], self.kinds[j], self.conns[j])

    def walks(self) -> Iterator[Walk]:
        for j in range(len(self)):
            yield self.walk(j)


SeedLike = int | tuple[int, ...] | list[int]


@dataclass(frozen=True)
class WalkSet:
    """Per-order walk slots sampled once per epoch and reused across layers."""

    slots: dict[int, WalkSlot]
    epoch_seed: SeedLike
    config: WalkConfig
    empty_orders: frozenset[int] = field(default_factory=frozenset)

    def slot(self, order: int) -> WalkSlot:
        return self.slots[order]


@dataclass(frozen=True)
class TransitionOracle:
    """Dense row-stochastic matrix of exact one-step probabilities."""

    order: int
    matrix: np.ndarray


def walk_stream(epoch_seed: SeedLike, order: int, walk_index: int) -> np.random.Generator:
    """Philox stream dedicated to one walk, keyed by (epoch_seed, order, index)."""
    seq = np.random.SeedSequence(epoch_seed, spawn_key=(order, walk_index))
    return np.random.Generator(np.random.Philox(seq))


class WalkSampler:
    """Transition machinery for one (complex, order, config) triple.

    Precomputes face/coface/neighbor lists so that a single step only does a
    few list lookups. ``step`` consumes exactly two uniform variates, which
    keeps the mapping from rng stream to trajectory fixed and testable.
    """

    def __init__(self, cx: SimplicialComplex, order: int, config: WalkConfig):
        cx._check_order(order)
        self.cx = cx
        self.order = order
        self.config = config
        k = order
        n_k = cx.num_simplices(k)
        self.n = n_k

        # Appendix-style exception: vertex walks may always use edges.
        self.allow_lower = config.adjacency in ("both", "lower") and k >= 1
        self.allow_upper = config.adjacency in ("both", "upper") or k == 0

        faces = (
            [cx.face_indices(k)[v].tolist() for v in range(n_k)]
            if k >= 1
            else [[] for _ in range(n_k)]
        )
        if k < cx.max_order:
            b_up = cx.boundary_matrix(k + 1)
            cofaces = [
                b_up.indices[b_up.indptr[v] : b_up.indptr[v + 1]].tolist()
                for v in range(n_k)
            ]
        else:
            cofaces = [[] for _ in range(n_k)]
        self._faces = faces
        self._cofaces = cofaces

        if config.strategy == "connection":
            self._conn_kinds: list[list[int]] = []
            self._conn_ids: list[list[int]] = []
            for v in range(n_k):
                kinds: list[int] = []
                ids: list[int] = []
                if self.allow_lower:
                    kinds += [KIND_FACE] * len(faces[v])
                    ids += faces[v]
                if self.allow_upper:
                    kinds += [KIND_COFACE] * len(cofaces[v])
                    ids += cofaces[v]
                self._conn_kinds.append(kinds)
                self._conn_ids.append(ids)
            # incident k-simplices of each possible connection
            if k >= 1:
                b = cx.boundary_matrix(k)  # rows: (k-1)-simplices
                bt = b.tocsr()
                self._face_targets = [
                    bt.indices[bt.indptr[e] : bt.indptr[e + 1]].tolist()
                    for e in range(cx.num_simplices(k - 1))
                ]
            else:
                self._face_targets = []
            if k < cx.max_order:
                self._coface_targets = [
                    cx.face_indices(k + 1)[e].tolist()
                    for e in range(cx.num_simplices(k + 1))
                ]
            else:
                self._coface_targets = []
        else:
            lower = cx.lower_adjacency(k, config.include_self)
            upper = cx.upper_adjacency(k, config.include_self)
            self._neighbors = []
            for v in range(n_k):
                ids: set[int] = set()
                if self.allow_lower:
                    ids.update(
                        lower.indices[lower.indptr[v] : lower.indptr[v + 1]].tolist()
                    )
                if self.allow_upper:
                    ids.update(
                        upper.indices[upper.indptr[v] : upper.indptr[v + 1]].tolist()
                    )
                self._neighbors.append(sorted(ids))
            self._face_sets = [set(f) for f in faces]
            self._cof_sets = [set(c) for c in cofaces]

    # -- single transition -------------------------------------------------

    def step(self, v: int, u1: float, u2: float) -> tuple[int, int, int]:
        """One transition from simplex ``v`` driven by two uniforms in [0, 1).

        Returns (next_simplex, connection_kind, connection_index), with kind
        KIND_STAY and index -1 when no move is possible.
        """
        if self.config.strategy == "connection":
            return self._step_connection(v, u1, u2)
        return self._step_neighbor(v, u1, u2)

    def _step_connection(self, v: int, u1: float, u2: float) -> tuple[int, int, int]:
        ids = self._conn_ids[v]
        n = len(ids)
        if n == 0:
            return v, KIND_STAY, -1
        j = min(int(u1 * n), n - 1)
        kind = self._conn_kinds[v][j]
        e = ids[j]
        targets = (
            self._face_targets[e] if kind == KIND_FACE else self._coface_targets[e]
        )
        if self.config.exclude_return:
            targets = [t for t in targets if t != v]
            if not targets:
                return v, KIND_STAY, -1
        t = min(int(u2 * len(targets)), len(targets) - 1)
        return targets[t], kind, e

    def _step_neighbor(self, v: int, u1: float, u2: float) -> tuple[int, int, int]:
        nbrs = self._neighbors[v]
        if not nbrs:
            return v, KIND_STAY, -1
        w = nbrs[min(int(u1 * len(nbrs)), len(nbrs) - 1)]
        shared_faces = (
            sorted(self._face_sets[v] & self._face_sets[w]) if self.allow_lower else []
        )
        shared_cofs = (
            sorted(self._cof_sets[v] & self._cof_sets[w]) if self.allow_upper else []
        )
        pool_size = len(shared_faces) + len(shared_cofs)
        if pool_size == 0:  # unreachable for neighbors drawn from the tables
            return v, KIND_STAY, -1
        j = min(int(u2 * pool_size), pool_size - 1)
        if j < len(shared_faces):
            return w, KIND_FACE, shared_faces[j]
        return w, KIND_COFACE, shared_cofs[j - len(shared_faces)]

    # -- whole walks ---------------------------------------------------------

    def walk_from(self, start: int, length: int, rng: np.random.Generator) -> Walk:
        if not 0 <= start < self.n:
            raise UnknownSimplex(f"no {self.order}-simplex with index {start}")
        if length < 1:
            raise ValueError("walk length must be at least 1")
        sims = np.empty(length, dtype=np.int64)
        kinds = np.empty(max(length - 1, 0), dtype=np.int8)
        conns = np.empty(max(length - 1, 0), dtype=np.int64)
        sims[0] = start
        if length > 1:
            u = rng.random((length - 1, 2))
            v = start
            for i in range(length - 1):
                v, kind, conn = self.step(v, u[i, 0], u[i, 1])
                sims[i + 1] = v
                kinds[i] = kind
                conns[i] = conn
        return Walk(self.order, sims, kinds, conns)

    # -- exact dynamics ------------------------------------------------------

    def transition_matrix(self) -> np.ndarray:
        """Exact one-step marginal P(next | current) for this configuration."""
        p = np.zeros((self.n, self.n))
        if self.config.strategy == "connection":
            for v in range(self.n):
                ids = self._conn_ids[v]
                if not ids:
                    p[v, v] = 1.0
                    continue
                w_conn = 1.0 / len(ids)
                for kind, e in zip(self._conn_kinds[v], ids):
                    targets = (
                        self._face_targets[e]
                        if kind == KIND_FACE
                        else self._coface_targets[e]
                    )
                    if self.config.exclude_return:
                        targets = [t for t in targets if t != v]
                    if not targets:
                        p[v, v] += w_conn
                    else:
                        w = w_conn / len(targets)
                        for t in targets:
                            p[v, t] += w
        else:
            for v in range(self.n):
                nbrs = self._neighbors[v]
                if not nbrs:
                    p[v, v] = 1.0
                else:
                    p[v, nbrs] = 1.0 / len(nbrs)
        return p


def sample_walk_connection(
    cx: SimplicialComplex,
    start: SimplexId,
    length: int,
    rng_stream: np.random.Generator,
    adjacency: str = "both",
    exclude_return: bool = False,
) -> Walk:
    """Sample one walk under uniform connection sampling."""
    config = WalkConfig(
        length=length,
        strategy="connection",
        adjacency=adjacency,
        exclude_return=exclude_return,
    )
    sampler = WalkSampler(cx, start.order, config)
    return sampler.walk_from(start.index, length, rng_stream)


def sample_walk_neighbor(
    cx: SimplicialComplex,
    start: SimplexId,
    length: int,
    rng_stream: np.random.Generator,
    adjacency: str = "both",
    include_self: bool = True,
) -> Walk:
    """Sample one walk under uniform neighbor sampling."""
    config = WalkConfig(
        length=length,
        strategy="neighbor",
        adjacency=adjacency,
        include_self=include_self,
    )
    sampler = WalkSampler(cx, start.order, config)
    return sampler.walk_from(start.index, length, rng_stream)


def sample_walk_slot(
    cx: SimplicialComplex,
    order: int,
    config: WalkConfig,
    epoch_seed: SeedLike,
) -> WalkSlot:
    """Sample the order-``order`` slot of an epoch's walk collection.

    With ``config.walks`` unset, exactly one walk starts at every simplex in
    index order. Otherwise each walk draws its start uniformly (with
    replacement) from its own stream, so the slot is reproducible and
    independent of scheduling either way.
    """
    n_k = cx.num_simplices(order)
    ell = config.length
    if n_k == 0:
        return WalkSlot(
            order,
            np.empty((0, ell), dtype=np.int64),
            np.empty((0, max(ell - 1, 0)), dtype=np.int8),
            np.empty((0, max(ell - 1, 0)), dtype=np.int64),
        )
    sampler = WalkSampler(cx, order, config)
    m = n_k if config.walks is None else config.walks
    sims = np.empty((m, ell), dtype=np.int64)
    kinds = np.empty((m, max(ell - 1, 0)), dtype=np.int8)
    conns = np.empty((m, max(ell - 1, 0)), dtype=np.int64)
    for j in range(m):
        rng = walk_stream(epoch_seed, order, j)
        if config.walks is None:
            start = j
        else:
            start = min(int(rng.random() * n_k), n_k - 1)
        w = sampler.walk_from(start, ell, rng)
        sims[j] = w.simplex_indices
        kinds[j] = w.connection_kinds
        conns[j] = w.connection_indices
    return WalkSlot(order, sims, kinds, conns)


def sample_walk_set(
    cx: SimplicialComplex,
    orders: Iterable[int],
    config: WalkConfig,
    epoch_seed: SeedLike,
) -> WalkSet:
    """Sample one epoch's walks for every requested order."""
    slots: dict[int, WalkSlot] = {}
    empty = set()
    for k in sorted(set(int(k) for k in orders)):
        slot = sample_walk_slot(cx, k, config, epoch_seed)
        slots[k] = slot
        if len(slot) == 0:
            empty.add(k)
    return WalkSet(
        slots=slots,
        epoch_seed=epoch_seed,
        config=config,
        empty_orders=frozenset(empty),
    )


def transition_oracle(
    cx: SimplicialComplex,
    order: int,
    strategy: str = "connection",
    adjacency: str = "both",
    include_self: bool = True,
    exclude_return: bool = False,
) -> TransitionOracle:
    """Exact one-step transition probabilities, for tests and diagnostics."""
    config = WalkConfig(
        length=2,
        strategy=strategy,
        adjacency=adjacency,
        include_self=include_self,
        exclude_return=exclude_return,
    )
    sampler = WalkSampler(cx, order, config)
    return TransitionOracle(order=order, matrix=sampler.transition_matrix())


def validate_walk(cx: SimplicialComplex, walk: Walk) -> None:
    """Check every step against the connection-record invariants.

    Raises ValueError on the first violation; a clean pass returns None.
    """
    k = walk.order
    for i in range(walk.length - 1):
        v = SimplexId(k, int(walk.simplex_indices[i]))
        w = SimplexId(k, int(walk.simplex_indices[i + 1]))
        kind = int(walk.connection_kinds[i])
        conn = int(walk.connection_indices[i])
        if kind == KIND_STAY:
            if v != w or conn != -1:
                raise ValueError(f"step {i}: malformed stay step")
            continue
        if kind == KIND_FACE:
            e = SimplexId(k - 1, conn)
            if e not in cx.faces(v) or e not in cx.faces(w):
                raise ValueError(f"step {i}: {e} is not a shared face of {v}, {w}")
        elif kind == KIND_COFACE:
            e = SimplexId(k + 1, conn)
            if e not in cx.cofaces(v) or e not in cx.cofaces(w):
                raise ValueError(f"step {i}: {e} is not a shared coface of {v}, {w}")
        else:
            raise ValueError(f"step {i}: unknown connection kind {kind}")
