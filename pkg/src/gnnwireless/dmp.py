"""Synchronous distributed message passing and two classic solvers written in it.

A :class:`DmpSpec` bundles four callables.  Each round every node ``i``
collects ``encode(t, src, dst, a_ji)`` from its neighbors ``j``, reduces them
with ``aggregate(t, msgs)`` and replaces its state by ``update(t, node, y)``.
All messages of round ``t`` are computed from the states of round ``t - 1``.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .graphs import CommGraph
from .objectives import block_index
from .solvers import project_unit_modulus

Node = namedtuple("Node", "index x z kind")


@dataclass
class DmpSpec:
    encode: Callable
    aggregate: Callable
    update: Callable
    init: Callable
    n_rounds: int
    graph_kind: str | None = None


def sum_aggregate(t, msgs):
    if not msgs:
        return None
    return np.sum(msgs, axis=0)


def run_dmp(spec: DmpSpec, g: CommGraph, rng=None, return_history=False):
    """Run ``spec.n_rounds`` rounds on ``g``; returns the list of final states.

    With ``rng`` the neighbor visiting order is shuffled every round, which
    must not change the result for a symmetric aggregate.
    """
    if spec.graph_kind is not None and g.kind != spec.graph_kind:
        raise ValueError(f"this spec runs on {spec.graph_kind} graphs, got {g.kind}")
    n = g.n_nodes
    states = [np.asarray(spec.init(i, g)) for i in range(n)]
    dims = {}
    for i, x in enumerate(states):
        dims.setdefault(g.node_types[i], x.shape)
        if x.shape != dims[g.node_types[i]]:
            raise ValueError(f"round 0, node {i}: state shape {x.shape} differs from "
                             f"{dims[g.node_types[i]]} for type {g.node_types[i]}")
    neighbors = [np.flatnonzero(g.edge_mask[:, i]) for i in range(n)]
    history = [list(states)] if return_history else None
    for t in range(1, spec.n_rounds + 1):
        nodes = [Node(i, states[i], g.Z[i], g.node_types[i]) for i in range(n)]
        new = []
        for i in range(n):
            order = neighbors[i] if rng is None else rng.permutation(neighbors[i])
            msgs = [spec.encode(t, nodes[j], nodes[i], g.A[j, i]) for j in order]
            try:
                y = spec.aggregate(t, msgs)
                x = np.asarray(spec.update(t, nodes[i], y))
            except ValueError as exc:
                raise ValueError(f"round {t}, node {i}: {exc}") from None
            if x.shape != dims[g.node_types[i]]:
                raise ValueError(f"round {t}, node {i}: state shape {x.shape}, "
                                 f"expected {dims[g.node_types[i]]}")
            new.append(x)
        states = new
        if return_history:
            history.append(list(states))
    return history if return_history else states


# -- WMMSE -------------------------------------------------------------------

def wmmse_dmp_spec(T: int, p0=None) -> DmpSpec:
    """WMMSE with node state [v, u, alpha].

    Round 1 computes (u, alpha) from the initial amplitudes; after that odd
    rounds refresh (u, alpha) and even rounds refresh v, so T iterations use
    2T + 1 rounds.  Node features are [|h_kk|^2, w_k, sigma_k^2]; channel 0
    of the adjacency holds incoming gains and channel 1 outgoing ones.
    """
    def init(i, g):
        p = 1.0 if p0 is None else float(np.asarray(p0)[i])
        return np.array([np.sqrt(p), 0.0, 1.0])

    def encode(t, src, dst, a):
        v, u, alpha = src.x
        if t % 2:                      # interference received at dst
            return a[0] * v * v
        return src.z[1] * alpha * u * u * a[1]   # leakage from dst into src's receiver

    def aggregate(t, msgs):
        return float(np.sum(msgs)) if msgs else 0.0

    def update(t, node, y):
        v, u, alpha = node.x
        gkk, w, s2 = node.z
        hd = np.sqrt(gkk)
        if t % 2:
            u = hd * v / (y + gkk * v * v + s2)
            alpha = 1.0 / (1.0 - u * hd * v)
        else:
            num = w * alpha * u * hd
            den = y + w * alpha * u * u * gkk
            v = min(max(num / den, 0.0), 1.0) if den > 0 else 0.0
        return np.array([v, u, alpha])

    return DmpSpec(encode, aggregate, update, init, 2 * T + 1, "d2d")


def wmmse_dmp_powers(g: CommGraph, T: int, p0=None, rng=None) -> np.ndarray:
    states = run_dmp(wmmse_dmp_spec(T, p0), g, rng)
    return np.array([x[0] ** 2 for x in states])


# -- Riemannian gradient on the analog precoder ------------------------------------

def _step_fn(step_rule):
    if callable(step_rule):
        return step_rule
    if np.ndim(step_rule) == 0:
        return lambda t: float(step_rule)
    steps = list(step_rule)
    return lambda t: steps[t - 1]


def project_support(z, support):
    """Unit-modulus projection restricted to the support of the previous state."""
    out = np.zeros_like(z)
    out[support] = project_unit_modulus(z[support])
    return out


def riemannian_dmp_spec(T: int, step_rule, Xrf0, Xbb) -> DmpSpec:
    """Riemannian descent on the phases with the baseband held fixed.

    Antenna states are rows of F_RF (one nonzero per row); symbol states are
    rows of Xbb = F_BB^H and never change.
    """
    Xrf0 = np.asarray(Xrf0, dtype=np.complex128)
    Xbb = np.asarray(Xbb, dtype=np.complex128)
    Ns, Nrf = Xbb.shape
    alpha = _step_fn(step_rule)

    def init(i, g):
        Nt = g.meta["Nt"]
        if i < Nt:
            x = np.zeros(Nrf, dtype=np.complex128)
            x[block_index(Nt, Nrf)[i]] = Xrf0[i]
            return x
        return Xbb[i - Nt].copy()

    def encode(t, src, dst, a):
        if dst.kind != "antenna":
            return np.zeros(Nrf, dtype=np.complex128)
        fopt = a[0] - 1j * a[1]            # conjugate of A[symbol, antenna]
        return (fopt - dst.x @ src.x.conj()) * src.x

    def aggregate(t, msgs):
        return -2.0 * np.sum(msgs, axis=0)

    def update(t, node, y):
        if node.kind != "antenna":
            return node.x
        x = node.x
        rgrad = y - np.real(y * x.conj()) * x
        return project_support(x - alpha(t) * rgrad, x != 0)

    return DmpSpec(encode, aggregate, update, init, T, "hybrid")


def riemannian_direct(Fopt, Xrf0, Xbb, Nrf, steps):
    """Matrix-form iterates of the same descent, for comparison."""
    from .solvers import riemannian_rf_step
    Xrf = np.asarray(Xrf0, dtype=np.complex128)
    out = [Xrf]
    for a in steps:
        Xrf, _ = riemannian_rf_step(Fopt, Xrf, Xbb, Nrf, a)
        out.append(Xrf)
    return out
