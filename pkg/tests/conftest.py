import numpy as np
import pytest

from scrawl.complex import build_complex

# Six vertices, eight edges, and two filled triangles sharing the edge (3, 4).
TOY_EDGES = [(1, 2), (2, 4), (1, 3), (3, 4), (3, 6), (1, 4), (5, 6), (4, 6)]
TOY_TRIANGLES = [(1, 3, 4), (3, 4, 6)]


def make_toy_complex(features=None):
    return build_complex(
        {
            0: [(v,) for v in range(1, 7)],
            1: TOY_EDGES,
            2: TOY_TRIANGLES,
        },
        features=features,
    )


@pytest.fixture
def toy_complex():
    return make_toy_complex()


def random_complex(rng, max_vertices=8, max_order=3, max_maximal=6):
    """Small random complex built from random maximal simplices plus closure."""
    n_verts = int(rng.integers(1, max_vertices + 1))
    n_maximal = int(rng.integers(1, max_maximal + 1))
    by_order: dict[int, list[tuple[int, ...]]] = {0: [(v,) for v in range(n_verts)]}
    for _ in range(n_maximal):
        size = int(rng.integers(1, min(max_order + 2, n_verts) + 1))
        verts = tuple(sorted(rng.choice(n_verts, size=size, replace=False).tolist()))
        order = len(verts) - 1
        if verts not in by_order.setdefault(order, []):
            by_order[order].append(verts)
    return build_complex(by_order, auto_close=True)


def seeded_rng(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
