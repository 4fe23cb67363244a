import numpy as np
import pytest

from scrawl.complex import SimplexId, build_complex
from scrawl.errors import FeatureLookupFailure
from scrawl.features import (
    WalkBatch,
    adjacency_blocks,
    build_feature_matrix,
    encode_slot,
    feature_blocks,
    identity_block,
)
from scrawl.walks import (
    KIND_COFACE,
    KIND_FACE,
    KIND_STAY,
    Walk,
    WalkConfig,
    sample_walk_set,
    sample_walk_slot,
)

from conftest import make_toy_complex, random_complex, seeded_rng


def make_walk(order, sims, kinds=(), conns=()):
    return Walk(
        order=order,
        simplex_indices=np.asarray(sims, dtype=np.int64),
        connection_kinds=np.asarray(kinds, dtype=np.int8),
        connection_indices=np.asarray(conns, dtype=np.int64),
    )


@pytest.fixture
def toy_features():
    # recognizable values: vertex i -> (i, 10 + i); edge j -> 100 + j; tri j -> 200 + j
    return {
        0: np.array([[i, 10.0 + i] for i in range(6)]),
        1: np.array([[100.0 + j] for j in range(8)]),
        2: np.array([[200.0 + j] for j in range(2)]),
    }


@pytest.fixture
def featured_complex(toy_features):
    return make_toy_complex(features=toy_features)


def vertex_walk(cx):
    """v1 v2 v4 v3 v6 v4 along edges (1,2), (2,4), (3,4), (3,6), (4,6)."""
    sims = [cx.index_of(0, (v,)) for v in (1, 2, 4, 3, 6, 4)]
    conns = [cx.index_of(1, e) for e in ((1, 2), (2, 4), (3, 4), (3, 6), (4, 6))]
    return make_walk(0, sims, [KIND_COFACE] * 5, conns)


def edge_walk(cx):
    """(1,2) (2,4) (3,4) (4,6) via vertex 2, vertex 4, triangle (3,4,6)."""
    sims = [cx.index_of(1, e) for e in ((1, 2), (2, 4), (3, 4), (4, 6))]
    kinds = [KIND_FACE, KIND_FACE, KIND_COFACE]
    conns = [
        cx.index_of(0, (2,)),
        cx.index_of(0, (4,)),
        cx.index_of(2, (3, 4, 6)),
    ]
    return make_walk(1, sims, kinds, conns)


# -- naive double-loop references -------------------------------------------


def naive_identity(walk, s):
    ell = walk.length
    out = np.zeros((ell, s))
    for i in range(ell):
        for o in range(1, s + 1):
            if i - o >= 0 and walk.simplex_indices[i] == walk.simplex_indices[i - o]:
                out[i, o - 1] = 1
    return out


def naive_adjacency(walk, cx, s):
    ell = walk.length
    low = np.zeros((ell, max(s - 1, 0)))
    up = np.zeros((ell, max(s - 1, 0)))
    for i in range(ell):
        here = SimplexId(walk.order, int(walk.simplex_indices[i]))
        lowers = set(cx.lower_neighbors(here, include_self=False))
        uppers = set(cx.upper_neighbors(here, include_self=False))
        for o in range(2, s + 1):
            if i - o < 0:
                continue
            past = SimplexId(walk.order, int(walk.simplex_indices[i - o]))
            if past in lowers:
                low[i, o - 2] = 1
            if past in uppers:
                up[i, o - 2] = 1
    return low, up


# -- worked examples ---------------------------------------------------------


def test_identity_marks_second_visit(toy_complex):
    ident = identity_block(vertex_walk(toy_complex), 4)
    np.testing.assert_array_equal(ident[:5], np.zeros((5, 4)))
    np.testing.assert_array_equal(ident[5], [0, 0, 1, 0])


def test_identity_all_distinct_is_zero(toy_complex):
    w = make_walk(0, [0, 1, 2, 3], [KIND_COFACE] * 3, [0, 1, 2])
    assert identity_block(w, 4).sum() == 0


def test_identity_two_cycle_sets_offset_two():
    w = make_walk(0, [0, 1, 0, 1, 0, 1], [KIND_COFACE] * 5, [0] * 5)
    ident = identity_block(w, 3)
    np.testing.assert_array_equal(ident, naive_identity(w, 3))
    assert (ident[2:, 1] == 1).all()


def test_upper_adjacency_from_vertex_walk(toy_complex):
    low, up = adjacency_blocks(vertex_walk(toy_complex), toy_complex, 4)
    assert up[2, 0] == 1  # v4 two steps after v1, which share edge (1, 4)
    expected_up = np.array(
        [
            [0, 0, 0],
            [0, 0, 0],
            [1, 0, 0],
            [0, 1, 0],
            [1, 0, 0],
            [1, 0, 1],
        ]
    )
    np.testing.assert_array_equal(up, expected_up)
    assert low.sum() == 0  # vertices never share a face


def test_lower_adjacency_from_edge_walk(toy_complex):
    low, up = adjacency_blocks(edge_walk(toy_complex), toy_complex, 4)
    assert low[3, 0] == 1  # (2,4) and (4,6) share vertex 4 at offset 2
    expected_low = np.array([[0, 0, 0], [0, 0, 0], [0, 0, 0], [1, 0, 0]])
    np.testing.assert_array_equal(low, expected_low)
    assert up[2, 0] == 0  # (1,2) has no cofaces


def test_feature_blocks_vertex_walk(featured_complex, toy_features):
    w = vertex_walk(featured_complex)
    cur, lo, up = feature_blocks(w, toy_features[0], None, toy_features[1])
    assert lo.shape == (6, 0)
    np.testing.assert_array_equal(
        up[1], toy_features[1][featured_complex.index_of(1, (1, 2))]
    )
    np.testing.assert_array_equal(
        cur[0], toy_features[0][featured_complex.index_of(0, (1,))]
    )
    assert (up[0] == 0).all()


def test_feature_blocks_edge_walk(featured_complex, toy_features):
    w = edge_walk(featured_complex)
    cur, lo, up = feature_blocks(w, toy_features[1], toy_features[0], toy_features[2])
    v2 = featured_complex.index_of(0, (2,))
    np.testing.assert_array_equal(lo[1], toy_features[0][v2])
    assert (up[1] == 0).all()  # face and coface rows are mutually exclusive
    t346 = featured_complex.index_of(2, (3, 4, 6))
    np.testing.assert_array_equal(up[3], toy_features[2][t346])
    assert (lo[3] == 0).all()


def test_top_order_walk_has_no_coface_block(featured_complex):
    w = make_walk(2, [0, 1], [KIND_FACE], [featured_complex.index_of(1, (3, 4))])
    fm = build_feature_matrix(w, featured_complex, window=4)
    assert fm.block("coface").shape == (2, 0)
    # d_2 + d_1 + 0 + 3s - 2
    assert fm.width == 1 + 1 + 0 + 10


def test_width_formula_vertex_order(featured_complex):
    fm = build_feature_matrix(vertex_walk(featured_complex), featured_complex, window=4)
    assert fm.width == 2 + 0 + 1 + 10  # d_0 + d_{-1} + d_1 + 3s - 2
    assert fm.block_offsets == (2, 2, 3, 7, 10)


def test_stay_steps_have_zero_connection_rows(featured_complex, toy_features):
    w = make_walk(0, [0, 0, 1], [KIND_STAY, KIND_COFACE], [-1, 0])
    cur, lo, up = feature_blocks(w, toy_features[0], None, toy_features[1])
    assert (up[1] == 0).all()
    ident = identity_block(w, 3)
    assert ident[1, 0] == 1  # stay means the offset-1 revisit bit is set


def test_structure_independent_of_features(featured_complex, toy_complex):
    w_feat = vertex_walk(featured_complex)
    w_bare = vertex_walk(toy_complex)
    a = build_feature_matrix(w_feat, featured_complex, window=5)
    b = build_feature_matrix(w_bare, toy_complex, window=5)
    np.testing.assert_array_equal(a.block("identity"), b.block("identity"))
    np.testing.assert_array_equal(a.block("lower"), b.block("lower"))
    np.testing.assert_array_equal(a.block("upper"), b.block("upper"))


def test_row_zero_has_no_connection_features(featured_complex):
    for walk in (vertex_walk(featured_complex), edge_walk(featured_complex)):
        fm = build_feature_matrix(walk, featured_complex, window=4)
        assert (fm.block("face")[0] == 0).all()
        assert (fm.block("coface")[0] == 0).all()


def test_face_coface_zero_exclusive_per_row(featured_complex):
    ws = sample_walk_set(
        featured_complex, [1], WalkConfig(length=20), epoch_seed=17
    )
    for walk in ws.slot(1).walks():
        fm = build_feature_matrix(walk, featured_complex, window=4)
        face_nz = (np.abs(fm.block("face")) > 0).any(axis=1)
        cof_nz = (np.abs(fm.block("coface")) > 0).any(axis=1)
        assert not (face_nz & cof_nz).any()


def test_golden_matrix_assembled_from_block_oracles(featured_complex, toy_features):
    w = vertex_walk(featured_complex)
    s = 4
    cur, lo, up = feature_blocks(w, toy_features[0], None, toy_features[1])
    expected = np.hstack(
        [cur, lo, up, naive_identity(w, s), *naive_adjacency(w, featured_complex, s)]
    )
    fm = build_feature_matrix(w, featured_complex, window=s)
    np.testing.assert_array_equal(fm.data, expected)


@pytest.mark.parametrize("seed", range(10))
def test_blocks_match_naive_reference_on_random_walks(seed):
    rng = seeded_rng(8000 + seed)
    cx = random_complex(rng, max_vertices=7)
    s = int(rng.integers(1, 7))
    ell = int(rng.integers(2, 13))
    ws = sample_walk_set(
        cx, range(cx.max_order + 1), WalkConfig(length=ell), epoch_seed=seed
    )
    for k in range(cx.max_order + 1):
        for walk in ws.slot(k).walks():
            np.testing.assert_array_equal(identity_block(walk, s), naive_identity(walk, s))
            got_lo, got_up = adjacency_blocks(walk, cx, s)
            want_lo, want_up = naive_adjacency(walk, cx, s)
            np.testing.assert_array_equal(got_lo, want_lo)
            np.testing.assert_array_equal(got_up, want_up)


@pytest.mark.parametrize("strategy", ["connection", "neighbor"])
def test_offset_one_column_would_be_constant(toy_complex, strategy):
    # consecutive simplices on stay-free walks are always adjacent, so the
    # omitted offset-1 adjacency column carries no information
    cfg = WalkConfig(length=30, strategy=strategy)
    ws = sample_walk_set(toy_complex, [0, 1, 2], cfg, epoch_seed=23)
    for k in (0, 1, 2):
        for walk in ws.slot(k).walks():
            if (walk.connection_kinds == KIND_STAY).any():
                continue
            for i in range(1, walk.length):
                here = SimplexId(k, int(walk.simplex_indices[i]))
                prev = SimplexId(k, int(walk.simplex_indices[i - 1]))
                nbrs = set(toy_complex.lower_neighbors(here, include_self=True))
                nbrs |= set(toy_complex.upper_neighbors(here, include_self=True))
                assert prev in nbrs


def test_feature_lookup_failure(featured_complex, toy_features):
    w = make_walk(0, [0, 99], [KIND_COFACE], [0])
    with pytest.raises(FeatureLookupFailure):
        feature_blocks(w, toy_features[0], None, toy_features[1])


def test_column_names_layout(featured_complex):
    fm = build_feature_matrix(vertex_walk(featured_complex), featured_complex, window=4)
    names = fm.column_names()
    assert names[:2] == ["f_k_0", "f_k_1"]
    assert names[2] == "coface_0"
    assert names[3:7] == ["id_1", "id_2", "id_3", "id_4"]
    assert names[7:10] == ["adjL_2", "adjL_3", "adjL_4"]
    assert names[10:] == ["adjU_2", "adjU_3", "adjU_4"]


def test_batch_encoding_matches_single_walk_path(featured_complex):
    cfg = WalkConfig(length=9, strategy="connection")
    slot = sample_walk_slot(featured_complex, 1, cfg, epoch_seed=31)
    s = 3
    batch = encode_slot(featured_complex, slot, window=s, dtype=np.float64)
    for j, walk in enumerate(slot.walks()):
        fm = build_feature_matrix(walk, featured_complex, window=s, features={})
        struct = np.hstack(
            [fm.block("identity"), fm.block("lower"), fm.block("upper")]
        )
        np.testing.assert_array_equal(batch.structural[j], struct)
        for i in range(walk.length):
            kind = int(walk.connection_kinds[i - 1]) if i > 0 else KIND_STAY
            conn = int(walk.connection_indices[i - 1]) if i > 0 else -1
            assert batch.face_idx[j, i] == (conn if kind == KIND_FACE else -1)
            assert batch.coface_idx[j, i] == (conn if kind == KIND_COFACE else -1)
    np.testing.assert_array_equal(batch.sims, slot.sims)
