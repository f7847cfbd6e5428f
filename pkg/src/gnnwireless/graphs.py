"""Communication graphs: node features Z, adjacency features A and edge masks.

Adjacency channels are 0-based here.  D2D graphs carry ``A[j, k, 0] =
|h_jk|^2`` and the reverse-link gain ``A[j, k, 1] = |h_kj|^2``.  Hybrid
graphs store the complex Fopt blocks as two real channels (re, im).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import CellFreeInstance, D2dInstance, HybridInstance
from .serialize import decode_array, encode_array

NODE_TYPES = ("pair", "ap", "ue", "antenna", "symbol")


@dataclass
class CommGraph:
    kind: str                      # "d2d", "cellfree" or "hybrid"
    node_types: np.ndarray         # (n,) strings
    Z: np.ndarray                  # (n, d1)
    A: np.ndarray                  # (n, n, d2)
    edge_mask: np.ndarray          # (n, n) bool
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.node_types = np.asarray(self.node_types)
        self.Z = np.asarray(self.Z, dtype=np.float64)
        self.A = np.asarray(self.A, dtype=np.float64)
        self.edge_mask = np.asarray(self.edge_mask, dtype=bool)
        n = self.n_nodes
        if self.Z.shape[0] != n or self.A.shape[:2] != (n, n) or self.edge_mask.shape != (n, n):
            raise ValueError(f"inconsistent graph shapes Z {self.Z.shape}, A {self.A.shape}, "
                             f"mask {self.edge_mask.shape} for {n} nodes")
        bad = set(self.node_types.tolist()) - set(NODE_TYPES)
        if bad:
            raise ValueError(f"unknown node types {sorted(bad)}")

    @property
    def n_nodes(self) -> int:
        return len(self.node_types)

    def check(self):
        """Raise if an off-edge adjacency entry is nonzero or a self-edge exists."""
        if np.any(np.diag(self.edge_mask)):
            raise ValueError("graph has self-edges")
        if np.any(self.A[~self.edge_mask] != 0):
            raise ValueError("adjacency features are nonzero off the edge set")
        return self

    def complex_block(self) -> np.ndarray:
        """Hybrid graphs: Fopt recovered from the antenna-symbol block."""
        if self.kind != "hybrid":
            raise ValueError(f"complex_block needs a hybrid graph, got {self.kind}")
        Nt = self.meta["Nt"]
        blk = self.A[:Nt, Nt:, :]
        return blk[..., 0] + 1j * blk[..., 1]

    def equals(self, other: "CommGraph") -> bool:
        return (self.kind == other.kind and np.array_equal(self.node_types, other.node_types)
                and np.array_equal(self.Z, other.Z) and np.array_equal(self.A, other.A)
                and np.array_equal(self.edge_mask, other.edge_mask) and self.meta == other.meta)

    def to_json(self) -> dict:
        return {"kind": self.kind, "node_types": self.node_types.tolist(),
                "Z": encode_array(self.Z), "A": encode_array(self.A),
                "edge_mask": encode_array(self.edge_mask), "meta": self.meta}

    @classmethod
    def from_json(cls, obj) -> "CommGraph":
        return cls(obj["kind"], obj["node_types"], decode_array(obj["Z"]),
                   decode_array(obj["A"]), decode_array(obj["edge_mask"]), obj.get("meta", {}))


def build_d2d_graph(inst: D2dInstance) -> CommGraph:
    K = inst.K
    G = inst.gains
    Z = np.stack([np.diag(G), inst.w, inst.sigma2], axis=1)
    mask = ~np.eye(K, dtype=bool)
    A = np.stack([G, G.T], axis=2) * mask[:, :, None]
    return CommGraph("d2d", ["pair"] * K, Z, A, mask, {"K": K}).check()


def build_cellfree_graph(inst: CellFreeInstance) -> CommGraph:
    M, K = inst.M, inst.K
    n = M + K
    A = np.zeros((n, n, 1))
    A[:M, M:, 0] = inst.U
    A[M:, :M, 0] = inst.U.T
    mask = np.zeros((n, n), dtype=bool)
    mask[:M, M:] = True
    mask[M:, :M] = True
    return CommGraph("cellfree", ["ap"] * M + ["ue"] * K, np.zeros((n, 0)), A, mask,
                     {"M": M, "K": K}).check()


def build_hybrid_graph(inst: HybridInstance) -> CommGraph:
    Nt, Ns = inst.Nt, inst.Ns
    n = Nt + Ns
    A = np.zeros((n, n, 2))
    F = inst.Fopt
    A[:Nt, Nt:, 0], A[:Nt, Nt:, 1] = F.real, F.imag
    A[Nt:, :Nt, 0], A[Nt:, :Nt, 1] = F.real.T, -F.imag.T
    mask = np.zeros((n, n), dtype=bool)
    mask[:Nt, Nt:] = True
    mask[Nt:, :Nt] = True
    return CommGraph("hybrid", ["antenna"] * Nt + ["symbol"] * Ns, np.zeros((n, 0)), A, mask,
                     {"Nt": Nt, "Ns": Ns, "Nrf": inst.Nrf}).check()


def build_graph(inst) -> CommGraph:
    if isinstance(inst, D2dInstance):
        return build_d2d_graph(inst)
    if isinstance(inst, CellFreeInstance):
        return build_cellfree_graph(inst)
    if isinstance(inst, HybridInstance):
        return build_hybrid_graph(inst)
    raise TypeError(f"no graph builder for {type(inst).__name__}")


def permute_graph(g: CommGraph, perm) -> CommGraph:
    """Relabel nodes: new node i is old node perm[i].  Types must be preserved."""
    perm = np.asarray(perm)
    if sorted(perm.tolist()) != list(range(g.n_nodes)):
        raise ValueError("perm is not a permutation of the node indices")
    if not np.array_equal(g.node_types[perm], g.node_types):
        raise ValueError("permutation mixes node types")
    return CommGraph(g.kind, g.node_types.copy(), g.Z[perm], g.A[np.ix_(perm, perm)],
                     g.edge_mask[np.ix_(perm, perm)], dict(g.meta))


def random_type_permutation(g: CommGraph, rng) -> np.ndarray:
    """A permutation that shuffles nodes within each type."""
    perm = np.arange(g.n_nodes)
    for t in np.unique(g.node_types):
        idx = np.flatnonzero(g.node_types == t)
        perm[idx] = rng.permutation(idx)
    return perm


@dataclass
class GraphBatch:
    """Same-sized graphs stacked along a leading batch axis."""
    kind: str
    Z: np.ndarray            # (B, n, d1)
    A: np.ndarray            # (B, n, n, d2)
    mask: np.ndarray         # (B, n, n)
    meta: dict

    @classmethod
    def stack(cls, graphs) -> "GraphBatch":
        graphs = list(graphs)
        if not graphs:
            raise ValueError("empty graph list")
        g0 = graphs[0]
        for g in graphs[1:]:
            if g.kind != g0.kind or g.A.shape != g0.A.shape or g.meta != g0.meta:
                raise ValueError("graphs in a batch must share kind, size and metadata")
        return cls(g0.kind, np.stack([g.Z for g in graphs]), np.stack([g.A for g in graphs]),
                   np.stack([g.edge_mask for g in graphs]), dict(g0.meta))

    @property
    def size(self) -> int:
        return self.A.shape[0]

    def take(self, idx) -> "GraphBatch":
        return GraphBatch(self.kind, self.Z[idx], self.A[idx], self.mask[idx], self.meta)
