from itertools import combinations

import numpy as np
import pytest
import scipy.sparse as sp

from scrawl.complex import SimplexId, build_complex
from scrawl.errors import (
    ClosureViolation,
    DuplicateSimplex,
    FeatureShapeMismatch,
    UnknownSimplex,
)

from conftest import TOY_EDGES, TOY_TRIANGLES, random_complex, seeded_rng


def ids_to_vertex_sets(cx, ids):
    return {cx.vertices_of(s) for s in ids}


def test_toy_complex_counts(toy_complex):
    assert toy_complex.counts == (6, 8, 2)
    assert toy_complex.max_order == 2


def test_single_vertex_complex():
    cx = build_complex({0: [(0,)]})
    assert cx.counts == (1,)
    assert cx.boundary_matrix(1).shape == (1, 0)


def test_auto_close_from_triangles_only():
    cx = build_complex({2: TOY_TRIANGLES}, auto_close=True)
    # brute-force face enumeration of the two triangles
    edges = set()
    verts = set()
    for tri in TOY_TRIANGLES:
        edges.update(combinations(tri, 2))
        verts.update((v,) for v in tri)
    assert cx.num_simplices(1) == len(edges) == 5
    assert cx.num_simplices(0) == len(verts) == 4
    assert set(cx.simplices(1)) == edges
    cx.validate_closure()


def test_missing_face_raises_without_auto_close():
    with pytest.raises(ClosureViolation):
        build_complex({0: [(1,), (3,), (4,)], 2: [(1, 3, 4)]})


def test_duplicate_simplex_rejected():
    with pytest.raises(DuplicateSimplex):
        build_complex({0: [(1,), (2,)], 1: [(1, 2), (2, 1)]})


def test_feature_shape_mismatch():
    with pytest.raises(FeatureShapeMismatch):
        build_complex({0: [(0,), (1,)]}, features={0: np.zeros((3, 2))})


def test_auto_close_pads_features_with_zeros():
    feats = np.arange(6.0).reshape(2, 3)
    cx = build_complex(
        {2: TOY_TRIANGLES},
        features={2: feats, 1: np.ones((5, 1))},
        auto_close=True,
    )
    np.testing.assert_array_equal(cx.features_of(2), feats)
    assert cx.features_of(1).shape == (5, 1)


def test_faces_of_triangle(toy_complex):
    tri = toy_complex.id_of((1, 3, 4))
    got = ids_to_vertex_sets(toy_complex, toy_complex.faces(tri))
    assert got == {(1, 3), (1, 4), (3, 4)}


def test_faces_of_vertex_empty(toy_complex):
    assert toy_complex.faces(toy_complex.id_of((1,))) == []


def test_faces_of_edge(toy_complex):
    got = ids_to_vertex_sets(toy_complex, toy_complex.faces(toy_complex.id_of((3, 4))))
    assert got == {(3,), (4,)}


def test_cofaces_of_vertex(toy_complex):
    got = ids_to_vertex_sets(toy_complex, toy_complex.cofaces(toy_complex.id_of((4,))))
    assert got == {(2, 4), (3, 4), (1, 4), (4, 6)}


def test_cofaces_of_edge(toy_complex):
    got = ids_to_vertex_sets(toy_complex, toy_complex.cofaces(toy_complex.id_of((3, 4))))
    assert got == {(1, 3, 4), (3, 4, 6)}


def test_cofaces_at_top_order_empty(toy_complex):
    assert toy_complex.cofaces(toy_complex.id_of((1, 3, 4))) == []


def test_upper_neighbors_of_vertex(toy_complex):
    v4 = toy_complex.id_of((4,))
    got = ids_to_vertex_sets(
        toy_complex, toy_complex.upper_neighbors(v4, include_self=False)
    )
    assert got == {(1,), (2,), (3,), (6,)}


def test_lower_neighbors_of_vertex_empty(toy_complex):
    for v in range(1, 7):
        assert toy_complex.lower_neighbors(toy_complex.id_of((v,))) == []


def test_lower_neighbors_of_edge(toy_complex):
    e46 = toy_complex.id_of((4, 6))
    got = ids_to_vertex_sets(
        toy_complex, toy_complex.lower_neighbors(e46, include_self=False)
    )
    assert got == {(2, 4), (3, 4), (1, 4), (3, 6), (5, 6)}


def test_self_adjacency_follows_incidence(toy_complex):
    # with include_self, the diagonal is set exactly for simplices that have
    # at least one face or coface
    table = toy_complex.neighbor_table(0, include_self=True).table.toarray()
    assert (np.diag(table) == 1).all()  # every vertex has an edge here
    iso = build_complex({0: [(0,), (1,)], 1: [(0, 1)]})
    # add an isolated vertex: it has no face and no coface
    iso2 = build_complex({0: [(0,), (1,), (2,)], 1: [(0, 1)]})
    diag = np.diag(iso2.neighbor_table(0, include_self=True).table.toarray())
    assert diag.tolist() == [1, 1, 0]
    assert iso.max_order == 1


def test_unknown_simplex_errors(toy_complex):
    with pytest.raises(UnknownSimplex):
        toy_complex.index_of(1, (1, 5))
    with pytest.raises(UnknownSimplex):
        toy_complex.faces(SimplexId(2, 9))
    with pytest.raises(UnknownSimplex):
        toy_complex.faces(SimplexId(5, 0))


def test_boundary_columns_sum_to_order_plus_one(toy_complex):
    for k in range(1, toy_complex.max_order + 1):
        sums = np.asarray(toy_complex.boundary_matrix(k).sum(axis=0)).ravel()
        assert (sums == k + 1).all()


def test_connection_table_row_for_shared_edge(toy_complex):
    ct = toy_complex.connection_table(1)
    e34 = toy_complex.index_of(1, (3, 4))
    row = ct.table.getrow(e34)
    cols = set(row.indices.tolist())
    expected = {
        toy_complex.index_of(0, (3,)),
        toy_complex.index_of(0, (4,)),
        ct.split_point + toy_complex.index_of(2, (1, 3, 4)),
        ct.split_point + toy_complex.index_of(2, (3, 4, 6)),
    }
    assert cols == expected
    assert row.nnz == 4


def test_connection_table_no_edges():
    cx = build_complex({0: [(0,), (1,)]})
    ct = cx.connection_table(0)
    assert ct.table.shape == (2, 0)
    assert ct.split_point == 0


def test_connection_table_row_sums(toy_complex):
    ct = toy_complex.connection_table(1)
    sums = np.asarray(ct.table.sum(axis=1)).ravel()
    for j in range(toy_complex.num_simplices(1)):
        n_cofaces = len(toy_complex.cofaces(SimplexId(1, j)))
        assert sums[j] == 2 + n_cofaces


def test_neighbor_table_row_for_pendant_vertex(toy_complex):
    nt = toy_complex.neighbor_table(0, include_self=False)
    v5 = toy_complex.index_of(0, (5,))
    row = nt.table.getrow(v5)
    assert row.indices.tolist() == [toy_complex.index_of(0, (6,))]


def test_neighbor_table_row_for_edge(toy_complex):
    nt = toy_complex.neighbor_table(1, include_self=False)
    e56 = toy_complex.index_of(1, (5, 6))
    got = {toy_complex.vertices_of(SimplexId(1, int(j))) for j in nt.table.getrow(e56).indices}
    assert got == {(3, 6), (4, 6)}


def brute_neighbors(cx, k, include_self):
    """Pairwise face/coface intersection tests, straight from the definitions."""
    n = cx.num_simplices(k)
    out = np.zeros((n, n), dtype=np.int8)
    face_sets = [set(map(tuple, [cx.vertices_of(f) for f in cx.faces(SimplexId(k, i))])) for i in range(n)]
    cof_sets = [set(map(tuple, [cx.vertices_of(f) for f in cx.cofaces(SimplexId(k, i))])) for i in range(n)]
    for i in range(n):
        for j in range(n):
            if not include_self and i == j:
                continue
            if face_sets[i] & face_sets[j] or cof_sets[i] & cof_sets[j]:
                out[i, j] = 1
    return out


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("include_self", [True, False])
def test_neighbor_table_matches_brute_force(seed, include_self):
    rng = seeded_rng(1000 + seed)
    cx = random_complex(rng)
    assert sum(cx.counts) <= 50
    for k in range(cx.max_order + 1):
        got = cx.neighbor_table(k, include_self=include_self).table.toarray()
        want = brute_neighbors(cx, k, include_self)
        np.testing.assert_array_equal(got, want)


@pytest.mark.parametrize("seed", range(6))
def test_connection_table_nnz_matches_face_coface_counts(seed):
    rng = seeded_rng(2000 + seed)
    cx = random_complex(rng)
    for k in range(cx.max_order + 1):
        ct = cx.connection_table(k)
        for i in range(cx.num_simplices(k)):
            sid = SimplexId(k, i)
            expected = len(cx.faces(sid)) + len(cx.cofaces(sid))
            assert ct.table.getrow(i).nnz == expected


@pytest.mark.parametrize("seed", range(6))
def test_faces_cofaces_are_mutual(seed):
    rng = seeded_rng(3000 + seed)
    cx = random_complex(rng)
    for k in range(1, cx.max_order + 1):
        for i in range(cx.num_simplices(k)):
            sid = SimplexId(k, i)
            for f in cx.faces(sid):
                assert sid in cx.cofaces(f)
    for k in range(cx.max_order):
        for i in range(cx.num_simplices(k)):
            sid = SimplexId(k, i)
            for c in cx.cofaces(sid):
                assert sid in cx.faces(c)


@pytest.mark.parametrize("seed", range(6))
def test_auto_closed_complexes_validate(seed):
    rng = seeded_rng(4000 + seed)
    cx = random_complex(rng)
    cx.validate_closure()


def test_neighbor_table_symmetry(toy_complex):
    for k in range(toy_complex.max_order + 1):
        t = toy_complex.neighbor_table(k, include_self=False).table
        assert (t != t.T).nnz == 0
