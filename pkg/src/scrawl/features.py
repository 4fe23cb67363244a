"""Walk feature matrices: per-step features plus windowed structural bits.

Each walk of length ell on k-simplices becomes an ell x D matrix with six
horizontally stacked blocks

    [current | face | coface | identity | lower-adj | upper-adj]

where D = d_k + d_{k-1} + d_{k+1} + 3s - 2 for window size s. The feature
blocks carry the features of the visited simplex and of the connection used
to reach it (faces and cofaces are mutually exclusive per row, both zero on
row 0 and on stay steps). The structural blocks look back within the window:

* identity column j (j = 0..s-1) marks offset j+1: the current simplex was
  also visited j+1 steps ago;
* adjacency column j (j = 0..s-2) marks offset j+2: the simplex visited j+2
  steps ago is lower (resp. upper) adjacent to the current one. Offset 1 is
  omitted because consecutive walk simplices are adjacent by construction.

Adjacency bits never treat a simplex as adjacent to itself, regardless of how
the walk was sampled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complex import SimplicialComplex
from .errors import FeatureLookupFailure
from .walks import KIND_COFACE, KIND_FACE, Walk, WalkSlot


@dataclass(frozen=True)
class WalkFeatureMatrix:
    """Numeric encoding of one walk plus bookkeeping for pooling."""

    walk_ref: tuple[int, int] | None  # (order, walk index) when known
    data: np.ndarray
    block_offsets: tuple[int, int, int, int, int]
    window: int

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def block(self, name: str) -> np.ndarray:
        """Return one of the six blocks by name."""
        bounds = (0, *self.block_offsets, self.data.shape[1])
        names = ("current", "face", "coface", "identity", "lower", "upper")
        i = names.index(name)
        return self.data[:, bounds[i] : bounds[i + 1]]

    def column_names(self) -> list[str]:
        o = self.block_offsets
        s = self.window
        names = [f"f_k_{i}" for i in range(o[0])]
        names += [f"face_{i}" for i in range(o[1] - o[0])]
        names += [f"coface_{i}" for i in range(o[2] - o[1])]
        names += [f"id_{j}" for j in range(1, s + 1)]
        names += [f"adjL_{j}" for j in range(2, s + 1)]
        names += [f"adjU_{j}" for j in range(2, s + 1)]
        assert len(names) == self.data.shape[1]
        return names


def _lookup(mat: np.ndarray, idx: int, what: str) -> np.ndarray:
    if idx < 0 or idx >= mat.shape[0]:
        raise FeatureLookupFailure(f"{what} index {idx} outside feature matrix")
    return mat[idx]


def feature_blocks(
    walk: Walk,
    feat_k: np.ndarray | None,
    feat_faces: np.ndarray | None,
    feat_cofaces: np.ndarray | None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Current/face/coface feature blocks of one walk.

    A None matrix means that order carries no features and yields a
    zero-width block; this covers d_{-1} = d_{top+1} = 0 at the boundary
    orders.
    """
    ell = walk.length
    d_k = 0 if feat_k is None else feat_k.shape[1]
    d_lo = 0 if feat_faces is None else feat_faces.shape[1]
    d_up = 0 if feat_cofaces is None else feat_cofaces.shape[1]
    cur = np.zeros((ell, d_k))
    lo = np.zeros((ell, d_lo))
    up = np.zeros((ell, d_up))
    if feat_k is not None:
        for i, v in enumerate(walk.simplex_indices):
            cur[i] = _lookup(feat_k, int(v), "simplex")
    for i in range(1, ell):
        kind = int(walk.connection_kinds[i - 1])
        conn = int(walk.connection_indices[i - 1])
        if kind == KIND_FACE and feat_faces is not None:
            lo[i] = _lookup(feat_faces, conn, "face")
        elif kind == KIND_COFACE and feat_cofaces is not None:
            up[i] = _lookup(feat_cofaces, conn, "coface")
    return cur, lo, up


def identity_block(walk: Walk, window: int) -> np.ndarray:
    """Revisit indicators: entry (i, j) is 1 iff v_i equals v_{i-(j+1)}."""
    if window < 1:
        raise ValueError("window must be at least 1")
    ell = walk.length
    sims = walk.simplex_indices
    out = np.zeros((ell, window))
    for offset in range(1, window + 1):
        if offset >= ell:
            break
        out[offset:, offset - 1] = sims[offset:] == sims[:-offset]
    return out


def adjacency_blocks(
    walk: Walk, cx: SimplicialComplex, window: int
) -> tuple[np.ndarray, np.ndarray]:
    """Lookback adjacency indicators at offsets 2..s, each ell x (s-1)."""
    ell = walk.length
    sims = walk.simplex_indices
    out = []
    for kind in ("lower", "upper"):
        adj = (
            cx.lower_adjacency(walk.order, include_self=False)
            if kind == "lower"
            else cx.upper_adjacency(walk.order, include_self=False)
        )
        block = np.zeros((ell, max(window - 1, 0)))
        for offset in range(2, window + 1):
            if offset >= ell:
                break
            rows = sims[offset:]
            cols = sims[:-offset]
            vals = np.asarray(adj[rows, cols]).ravel()
            block[offset:, offset - 2] = vals
        out.append(block)
    return out[0], out[1]


def build_feature_matrix(
    walk: Walk,
    cx: SimplicialComplex,
    window: int,
    features: dict[int, np.ndarray | None] | None = None,
    walk_ref: tuple[int, int] | None = None,
) -> WalkFeatureMatrix:
    """Assemble the six blocks of one walk in their fixed order.

    ``features`` maps order -> matrix and defaults to the complex's own
    feature tables; orders below 0 or above the top order contribute
    zero-width blocks.
    """
    k = walk.order

    def feats_at(order: int) -> np.ndarray | None:
        if order < 0 or order > cx.max_order:
            return None
        if features is not None:
            return features.get(order)
        return cx.features_of(order)

    cur, lo, up = feature_blocks(walk, feats_at(k), feats_at(k - 1), feats_at(k + 1))
    ident = identity_block(walk, window)
    adj_lo, adj_up = adjacency_blocks(walk, cx, window)
    data = np.hstack([cur, lo, up, ident, adj_lo, adj_up])
    offsets = np.cumsum(
        [cur.shape[1], lo.shape[1], up.shape[1], ident.shape[1], adj_lo.shape[1]]
    )
    expected = cur.shape[1] + lo.shape[1] + up.shape[1] + 3 * window - 2
    assert data.shape[1] == expected, "width formula violated"
    return WalkFeatureMatrix(
        walk_ref=walk_ref,
        data=data,
        block_offsets=tuple(int(x) for x in offsets),
        window=window,
    )


@dataclass(frozen=True)
class WalkBatch:
    """Vectorized encoding of one walk slot, reused by every model layer.

    ``face_idx`` and ``coface_idx`` hold the traversed connection index per
    step (-1 where there is none: row 0, stay steps, or the other kind). The
    structural tensor stacks identity and adjacency bits per walk; it only
    depends on the trajectories, so it is computed once per epoch while the
    feature blocks are regathered from the current hidden states each layer.
    """

    order: int
    window: int
    sims: np.ndarray  # (m, ell) int64
    face_idx: np.ndarray  # (m, ell) int64
    coface_idx: np.ndarray  # (m, ell) int64
    structural: np.ndarray  # (m, ell, 3s - 2)


def encode_slot(
    cx: SimplicialComplex,
    slot: WalkSlot,
    window: int,
    dtype: np.dtype = np.float32,
) -> WalkBatch:
    """Precompute index arrays and structural bits for one walk slot."""
    m, ell = slot.sims.shape
    sims = slot.sims.astype(np.int64)
    face_idx = np.full((m, ell), -1, dtype=np.int64)
    cof_idx = np.full((m, ell), -1, dtype=np.int64)
    if ell > 1 and m > 0:
        is_face = slot.kinds == KIND_FACE
        is_cof = slot.kinds == KIND_COFACE
        face_idx[:, 1:] = np.where(is_face, slot.conns, -1)
        cof_idx[:, 1:] = np.where(is_cof, slot.conns, -1)

    s = window
    structural = np.zeros((m, ell, 3 * s - 2), dtype=dtype)
    if m > 0:
        for offset in range(1, s + 1):
            if offset >= ell:
                break
            structural[:, offset:, offset - 1] = (
                sims[:, offset:] == sims[:, :-offset]
            )
        for col, kind in ((s, "lower"), (2 * s - 1, "upper")):
            adj = (
                cx.lower_adjacency(slot.order, include_self=False)
                if kind == "lower"
                else cx.upper_adjacency(slot.order, include_self=False)
            )
            if adj.nnz == 0:
                continue
            for offset in range(2, s + 1):
                if offset >= ell:
                    break
                rows = sims[:, offset:].ravel()
                cols = sims[:, :-offset].ravel()
                vals = np.asarray(adj[rows, cols]).reshape(m, ell - offset)
                structural[:, offset:, col + offset - 2] = vals
    return WalkBatch(
        order=slot.order,
        window=window,
        sims=sims,
        face_idx=face_idx,
        coface_idx=cof_idx,
        structural=structural,
    )
