import numpy as np
import pytest
from hypothesis import given, strategies as st

from gnnwireless import channels as ch
from gnnwireless.graphs import (
    CommGraph,
    GraphBatch,
    build_cellfree_graph,
    build_d2d_graph,
    build_graph,
    build_hybrid_graph,
    permute_graph,
    random_type_permutation,
)
from gnnwireless.objectives import sinr_d2d
from gnnwireless.serialize import dumps, loads


def test_d2d_substitution_example():
    H = np.diag([1.0, 2.0]).astype(complex)
    g = build_d2d_graph(ch.D2dInstance(H, [1, 1], [1, 1]))
    assert g.Z.tolist() == [[1, 1, 1], [4, 1, 1]]
    assert np.all(g.A == 0)
    assert list(g.node_types) == ["pair", "pair"]


@pytest.mark.parametrize("seed", range(5))
def test_d2d_features_define_the_same_sinr(seed, rng):
    inst = ch.sample_gaussian_ic(5, seed)
    g = build_d2d_graph(inst)
    assert np.array_equal(g.Z[:, 1], inst.w)
    p = rng.uniform(size=5)
    # SINR straight from (Z, A): channel 0 is incoming interference
    interf = g.A[:, :, 0].T @ p
    from_graph = g.Z[:, 0] * p / (interf + g.Z[:, 2])
    assert np.allclose(from_graph, sinr_d2d(inst, p), rtol=1e-12, atol=0)
    # channel 1 carries the reverse link |h_kj|^2
    assert np.allclose(g.A[:, :, 1], g.A[:, :, 0].T)


def test_cellfree_blocks():
    inst = ch.sample_cellfree(4, 3, 3, 500.0, 0)
    g = build_cellfree_graph(inst)
    M = 4
    assert np.all(g.A[:M, :M, 0] == 0) and np.all(g.A[M:, M:, 0] == 0)
    assert np.array_equal(g.A[:M, M:, 0], inst.U)
    assert list(g.node_types) == ["ap"] * 4 + ["ue"] * 3
    assert g.Z.shape == (7, 0)


def test_hybrid_blocks_and_round_trip():
    inst = ch.sample_mmwave(16, 4, 2, 4, seed=1)
    g = build_hybrid_graph(inst)
    Nt = 16
    assert np.array_equal(g.complex_block(), inst.Fopt)
    assert np.all(g.A[:Nt, :Nt] == 0)
    F = g.A[Nt:, :Nt, 0] + 1j * g.A[Nt:, :Nt, 1]
    assert np.array_equal(F, inst.Fopt.conj().T)
    rebuilt = build_hybrid_graph(ch.instance_from_json(loads(dumps(inst.to_json()))))
    assert rebuilt.equals(g)
    assert CommGraph.from_json(loads(dumps(g.to_json()))).equals(g)


def _any_graph(kind, seed):
    inst = {"d2d": lambda: ch.sample_gaussian_ic(4, seed),
            "cellfree": lambda: ch.sample_cellfree(3, 3, 2, 500.0, seed),
            "hybrid": lambda: ch.sample_mmwave(8, 4, 2, 2, seed)}[kind]()
    return build_graph(inst)


@given(st.integers(0, 10 ** 6), st.sampled_from(["d2d", "cellfree", "hybrid"]))
def test_zero_off_edge_after_build_and_permute(seed, kind):
    g = _any_graph(kind, seed).check()
    perm = random_type_permutation(g, np.random.default_rng(seed))
    permute_graph(g, perm).check()


@given(st.integers(0, 10 ** 6), st.sampled_from(["d2d", "cellfree", "hybrid"]))
def test_permutation_inverse_restores(seed, kind):
    g = _any_graph(kind, seed)
    assert permute_graph(g, np.arange(g.n_nodes)).equals(g)
    perm = random_type_permutation(g, np.random.default_rng(seed))
    assert permute_graph(permute_graph(g, perm), np.argsort(perm)).equals(g)


def test_swap_relabels_adjacency():
    g = _any_graph("d2d", 0)
    h = permute_graph(g, [0, 2, 1, 3])
    assert np.array_equal(h.A[2, 1], g.A[1, 2])
    assert np.array_equal(h.Z[1], g.Z[2])


def test_type_mixing_permutation_rejected():
    g = _any_graph("cellfree", 0)
    with pytest.raises(ValueError, match="mixes"):
        permute_graph(g, [3, 1, 2, 0, 4, 5])
    with pytest.raises(ValueError):
        permute_graph(g, [0, 0, 1, 2, 3, 4])


def test_check_rejects_bad_graphs():
    A = np.zeros((2, 2, 1))
    A[0, 0, 0] = 1.0
    with pytest.raises(ValueError):
        CommGraph("d2d", ["pair"] * 2, np.zeros((2, 0)), A, np.ones((2, 2), bool)).check()
    A2 = np.zeros((2, 2, 1))
    A2[0, 1, 0] = 1.0
    with pytest.raises(ValueError, match="nonzero off"):
        CommGraph("d2d", ["pair"] * 2, np.zeros((2, 0)), A2, np.zeros((2, 2), bool)).check()


def test_batch_stacking():
    gs = [_any_graph("d2d", s) for s in range(3)]
    b = GraphBatch.stack(gs)
    assert b.size == 3 and b.A.shape == (3, 4, 4, 2)
    assert np.array_equal(b.take([2]).Z[0], gs[2].Z)
    with pytest.raises(ValueError):
        GraphBatch.stack([gs[0], build_graph(ch.sample_gaussian_ic(5, 0))])
