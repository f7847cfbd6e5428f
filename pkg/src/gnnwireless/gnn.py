"""Learned architectures built on the tensor tape.

Every forward takes a :class:`~gnnwireless.graphs.CommGraph` (or a stacked
:class:`~gnnwireless.graphs.GraphBatch`) and returns tensors, so a training
loss can differentiate through it.  Power heads end in a sigmoid and hybrid
outputs go through the unit-modulus and sphere projections, so outputs are
always feasible.

Architectures: ``ecgnn``, ``pcgnn`` (D2D), ``hetgnn``, ``cfpcgnn``
(cell-free), ``unrolled`` (hybrid precoding), ``refgnn`` (generic
aggregate/combine GNN on any graph) and ``mlp`` (flattened baseline for any
family).
"""

from __future__ import annotations

import numpy as np

from . import numeric as nm
from .graphs import CommGraph, GraphBatch
from .numeric import ComplexMatrix, Tensor
from .objectives import block_index
from .serialize import decode_array, encode_array

ARCHS = ("ecgnn", "pcgnn", "hetgnn", "cfpcgnn", "unrolled", "refgnn", "mlp")
FAMILY = {"ecgnn": "d2d", "pcgnn": "d2d", "hetgnn": "cellfree", "cfpcgnn": "cellfree",
          "unrolled": "hybrid"}
DEFAULT_LAYERS = {"ecgnn": 2, "pcgnn": 2, "hetgnn": 3, "cfpcgnn": 2, "unrolled": 10, "refgnn": 2}
NEG = 1e30


class GnnModel:
    """Architecture tag, named parameter tensors and hyperparameters."""

    def __init__(self, arch: str, params: dict, hyper: dict):
        if arch not in ARCHS:
            raise ValueError(f"unknown arch {arch!r}; choose from {ARCHS}")
        self.arch = arch
        self.params = params
        self.hyper = hyper

    @property
    def family(self) -> str:
        return self.hyper.get("family", FAMILY.get(self.arch))

    def n_params(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def leaves(self) -> list:
        return [self.params[k] for k in sorted(self.params)]

    def forward(self, g):
        return FORWARD[self.arch](self, g)

    def copy(self) -> "GnnModel":
        params = {k: Tensor(v.data, requires_grad=True) for k, v in self.params.items()}
        return GnnModel(self.arch, params, _copy_hyper(self.hyper))

    def to_json(self) -> dict:
        return {"arch": self.arch, "hyper": self.hyper,
                "params": {k: encode_array(v.data) for k, v in sorted(self.params.items())}}

    @classmethod
    def from_json(cls, obj) -> "GnnModel":
        params = {k: Tensor(decode_array(v), requires_grad=True) for k, v in obj["params"].items()}
        return cls(obj["arch"], params, obj["hyper"])

    def __repr__(self):
        return f"GnnModel({self.arch}, {self.n_params()} params)"


def _copy_hyper(h):
    import copy
    return copy.deepcopy(h)


# -- construction ------------------------------------------------------------------

class _Init:
    def __init__(self, seed):
        self.rng = np.random.default_rng(seed)
        self.params = {}

    def add(self, name, fan_in, shape):
        a = 1.0 / np.sqrt(fan_in) if fan_in > 0 else 0.0
        self.params[name] = Tensor(self.rng.uniform(-a, a, size=shape), requires_grad=True)

    def linear(self, name, n_in, n_out, bias=False):
        self.add(name, n_in, (n_in, n_out))
        if bias:
            self.add(name + ".b", n_in, (n_out,))

    def head(self, n_in, hidden):
        self.linear("head.0", n_in, hidden, bias=True)
        self.linear("head.1", hidden, 1, bias=True)


def build_model(arch: str, seed: int = 0, hidden: int = 64, layers: int | None = None,
                act: str = "relu", **extra) -> GnnModel:
    """Create a model with uniform(+-1/sqrt(fan_in)) weights.

    ``extra`` carries family-specific settings: ``family`` and ``size`` for
    the MLP (``K``, ``(M, K)`` or ``(Nt, Ns, Nrf)``), ``Nrf`` for the
    unrolled GNN, ``norm`` for feature standardization.
    """
    if arch not in ARCHS:
        raise ValueError(f"unknown arch {arch!r}; choose from {ARCHS}")
    T = DEFAULT_LAYERS.get(arch, 0) if layers is None else layers
    H = hidden
    hyper = {"layers": T, "hidden": H, "act": act, "norm": extra.pop("norm", {})}
    hyper.update(extra)
    ini = _Init(seed)

    if arch == "ecgnn":
        d = 2
        for t in range(1, T + 1):
            ini.linear(f"l{t}.self", d, H)
            ini.linear(f"l{t}.edge", 1, H)
            ini.linear(f"l{t}.nbr", d, H)
            d = H
        ini.head(d, H)
    elif arch == "pcgnn":
        ini.linear("embed.node", 2, H)
        ini.linear("embed.edge", 2, H)
        for t in range(1, T + 1):
            ini.linear(f"l{t}.self", H, H)
            ini.linear(f"l{t}.edge", H, H)
            ini.linear(f"l{t}.nbr", H, H)
        ini.head(H, H)
    elif arch == "hetgnn":
        d = 0
        for t in range(1, T + 1):
            ini.linear(f"l{t}.ap2ue", d, H)
            ini.linear(f"l{t}.u_ue", 1, H)
            ini.linear(f"l{t}.ue2ap", d, H)
            ini.linear(f"l{t}.u_ap", 1, H)
            ini.linear(f"l{t}.self_ue", d, H)
            ini.linear(f"l{t}.self_ap", d, H)
            d = H
        ini.head(H, H)
    elif arch == "cfpcgnn":
        ini.linear("l1.u", 1, H)
        for t in range(2, T + 1):
            ini.linear(f"l{t}.nbr", H, H)
            ini.linear(f"l{t}.self", H, H)
        ini.head(H, H)
    elif arch == "unrolled":
        Nrf = int(hyper["Nrf"])
        for t in range(1, T + 1):
            ini.params[f"l{t}.W.re"] = Tensor(np.eye(Nrf), requires_grad=True)
            ini.params[f"l{t}.W.im"] = Tensor(np.zeros((Nrf, Nrf)), requires_grad=True)
    elif arch == "refgnn":
        dz, da = int(hyper.get("node_dim", 3)), int(hyper.get("edge_dim", 2))
        d = dz
        for t in range(1, T + 1):
            ini.linear(f"l{t}.msg.0", 2 * d + da, H, bias=True)
            ini.linear(f"l{t}.msg.1", H, H, bias=True)
            ini.linear(f"l{t}.comb", dz + 3 * H + d, H, bias=True)
            d = H
        ini.head(H, H)
    elif arch == "mlp":
        fam = hyper["family"]
        n_in, n_out = mlp_io(fam, hyper["size"])
        sizes = [n_in] + list(hyper.get("widths", (200, 80, 80)))
        for i in range(len(sizes) - 1):
            ini.linear(f"fc{i}", sizes[i], sizes[i + 1], bias=True)
        ini.linear("out", sizes[-1], n_out, bias=True)
        hyper["widths"] = sizes[1:]
    return GnnModel(arch, ini.params, hyper)


def mlp_io(family, size):
    if family == "d2d":
        K = int(size)
        return K * K + K, K
    if family == "cellfree":
        M, K = size
        return M * K, K
    if family == "hybrid":
        Nt, Ns, Nrf = size
        return 2 * Nt * Ns, Nt
    raise ValueError(f"unknown family {family!r}")


# -- helpers --------------------------------------------------------------------

def _act(x, tag):
    if tag == "relu":
        return nm.relu(x)
    if tag == "sigmoid":
        return nm.sigmoid(x)
    raise ValueError(f"unknown activation {tag!r}")


def _lin(m, name, x):
    y = x @ m.params[name]
    b = m.params.get(name + ".b")
    return y if b is None else y + b


def _head(m, d):
    h = nm.relu(_lin(m, "head.0", d))
    out = nm.sigmoid(_lin(m, "head.1", h))
    return _power_norm(m, out.reshape(out.shape[:-1]))


def _power_norm(m, p):
    """Optional per-instance peak normalization: p / max_k p_k.

    Max-min optima always have a user at full power, so this only removes
    the common scale, which otherwise drifts every output toward 1.
    """
    if m.hyper.get("power_norm", "none") == "peak":
        return p * nm.reciprocal(nm.max(p, axis=-1, keepdims=True))
    return p


def _batch(g, kind):
    if isinstance(g, CommGraph):
        g = GraphBatch.stack([g])
    if g.kind != kind:
        raise ValueError(f"expected a {kind} graph, got {g.kind}")
    return g


def _unbatch(g, out):
    if isinstance(g, CommGraph):
        if isinstance(out, tuple):
            return tuple(o[0] for o in out)
        return out[0]
    return out


def _check_arch(m, *archs):
    if m.arch not in archs:
        raise ValueError(f"model arch {m.arch!r} does not match this forward ({'/'.join(archs)})")


def feature(x, m, key):
    """Map raw positive features through the configured transform and standardize."""
    fmap = m.hyper.get("feature_map", "log1p")
    if fmap == "log1p":
        y = np.log1p(x)
    elif fmap in ("log", "log_ratio"):
        y = np.log(np.maximum(x, 1e-300))
    elif fmap == "identity":
        y = np.asarray(x, dtype=np.float64)
    else:
        raise ValueError(f"unknown feature map {fmap!r}")
    mu, sd = m.hyper.get("norm", {}).get(key, (0.0, 1.0))
    return (y - mu) / sd


def d2d_raw(batch: GraphBatch, ratio=False):
    """Noise-normalized direct gains (B,K) and cross gains (B,K,K,2).

    With ``ratio`` the cross gains are divided by the affected receiver's
    direct gain, which makes them independent of the transmit power.
    """
    s2 = batch.Z[:, :, 2]
    direct = batch.Z[:, :, 0] / s2
    inc = batch.A[..., 0] / s2[:, None, :]              # |h_jk|^2 / sigma_k^2
    out = batch.A[..., 1] / s2[:, :, None]              # |h_kj|^2 / sigma_j^2
    if ratio:
        inc = inc / direct[:, None, :]
        out = out / direct[:, :, None]
    return direct, np.stack([inc, out], axis=-1)


def _ratio(m):
    return m.hyper.get("feature_map") == "log_ratio"


def d2d_features(m, batch):
    direct, cross = d2d_raw(batch, _ratio(m))
    node = np.stack([batch.Z[:, :, 1], feature(direct, m, "node")], axis=-1)
    mask = batch.mask[..., None]
    edge = feature(cross, m, "edge") * mask
    return node, edge, mask


def _stats(x):
    """[shift, scale]; a feature that is constant in training is only centered."""
    if not x.size:
        return [0.0, 1.0]
    mu, sd = float(x.mean()), float(x.std())
    return [mu, sd if sd > 1e-9 * abs(mu) and sd > 0 else 1.0]


def fit_norm(arch, batch: GraphBatch, feature_map=None) -> dict:
    """Standardization statistics of the transformed inputs of a training set."""
    fmap = feature_map or ("identity" if batch.kind == "cellfree" else "log1p")
    probe = GnnModel("mlp", {}, {"feature_map": fmap, "family": batch.kind})
    if batch.kind == "d2d":
        direct, cross = d2d_raw(batch, _ratio(probe))
        n = feature(direct, probe, "node")
        e = feature(cross, probe, "edge")[batch.mask]
        return {"node": _stats(n), "edge": _stats(e)}
    if batch.kind == "cellfree":
        M = batch.meta["M"]
        return {"edge": _stats(feature(batch.A[:, :M, M:, 0], probe, "edge"))}
    return {}


# -- D2D ----------------------------------------------------------------------------

def _pairwise(m, t, x, e_proj):
    """Messages s(W1 x_k + We e_jk + W3 x_j) as (B, j, k, H)."""
    own = _lin(m, f"l{t}.self", x)                       # (B, K, H) receiver k
    nbr = _lin(m, f"l{t}.nbr", x)                        # sender j
    B, K, H = own.shape
    pre = own.reshape(B, 1, K, H) + nbr.reshape(B, K, 1, H) + e_proj
    return _act(pre, m.hyper.get("act", "relu"))


def ecgnn_forward(m: GnnModel, g):
    _check_arch(m, "ecgnn")
    batch = _batch(g, "d2d")
    node, edge, mask = d2d_features(m, batch)
    deg = np.maximum(batch.mask.sum(axis=1), 1)[..., None]        # (B, K, 1)
    d = Tensor._wrap(node)
    gain = Tensor._wrap(edge[..., :1])                            # |h_jk|^2 channel
    for t in range(1, m.hyper["layers"] + 1):
        msg = _pairwise(m, t, d, _lin(m, f"l{t}.edge", gain)) * mask
        d = nm.sum(msg, axis=1) * (1.0 / deg)
    return _unbatch(g, _head(m, d))


def pcgnn_forward(m: GnnModel, g):
    _check_arch(m, "pcgnn")
    batch = _batch(g, "d2d")
    node, edge, mask = d2d_features(m, batch)
    act = m.hyper.get("act", "relu")
    x = _act(_lin(m, "embed.node", Tensor._wrap(node)), act)
    e = _act(_lin(m, "embed.edge", Tensor._wrap(edge)), act)
    has_nbr = (batch.mask.sum(axis=1) > 0)[..., None].astype(float)
    off = (mask - 1.0) * NEG
    for t in range(1, m.hyper["layers"] + 1):
        msg = _pairwise(m, t, x, _lin(m, f"l{t}.edge", e))
        x = nm.max(msg * mask + off, axis=1) * has_nbr
    return _unbatch(g, _head(m, x))


# -- cell-free --------------------------------------------------------------------

def _cf_u(m, batch):
    M = batch.meta["M"]
    return feature(batch.A[:, :M, M:, 0], m, "edge")          # (B, M, K)


def hetgnn_forward(m: GnnModel, g):
    _check_arch(m, "hetgnn")
    batch = _batch(g, "cellfree")
    u = _cf_u(m, batch)
    B, M, K = u.shape
    H = m.hyper["hidden"]
    act = m.hyper.get("act", "relu")
    u_sum_ue = Tensor._wrap(u.sum(axis=1)[..., None])          # sum over APs, per UE
    u_sum_ap = Tensor._wrap(u.sum(axis=2)[..., None])          # sum over UEs, per AP
    d_ue = Tensor._wrap(np.zeros((B, K, 0)))
    d_ap = Tensor._wrap(np.zeros((B, M, 0)))
    for t in range(1, m.hyper["layers"] + 1):
        # sum_m (W1 d_m + w2 u_mk) = W1 sum_m d_m + w2 sum_m u_mk
        ap_tot = nm.sum(d_ap, axis=1, keepdims=True)
        ue_tot = nm.sum(d_ue, axis=1, keepdims=True)
        a_ue = _lin(m, f"l{t}.ap2ue", ap_tot) + _lin(m, f"l{t}.u_ue", u_sum_ue)
        a_ap = _lin(m, f"l{t}.ue2ap", ue_tot) + _lin(m, f"l{t}.u_ap", u_sum_ap)
        d_ue, d_ap = (_act(_lin(m, f"l{t}.self_ue", d_ue) + a_ue, act),
                      _act(_lin(m, f"l{t}.self_ap", d_ap) + a_ap, act))
    return _unbatch(g, _head(m, d_ue))


def cfpcgnn_forward(m: GnnModel, g):
    _check_arch(m, "cfpcgnn")
    batch = _batch(g, "cellfree")
    u = Tensor._wrap(_cf_u(m, batch)[..., None])               # (B, M, K, 1)
    act = m.hyper.get("act", "relu")
    d = nm.mean(_act(_lin(m, "l1.u", u), act), axis=1)         # (B, K, H)
    for t in range(2, m.hyper["layers"] + 1):
        a = _lin(m, f"l{t}.nbr", nm.mean(d, axis=1, keepdims=True))
        d = _act(_lin(m, f"l{t}.self", d) + a, act)
    return _unbatch(g, _head(m, d))


# -- hybrid -----------------------------------------------------------------------------

def hybrid_fopt(batch: GraphBatch) -> np.ndarray:
    Nt = batch.meta["Nt"]
    blk = batch.A[:, :Nt, Nt:, :]
    return blk[..., 0] + 1j * blk[..., 1]


def _initial_xbb(B, Ns, Nrf, Nt):
    return np.full((B, Ns, Nrf), np.sqrt(Nrf * Ns / Nt) / np.sqrt(Ns * Nrf), dtype=np.complex128)


def _baseband_t(Fc: ComplexMatrix, Xrf: ComplexMatrix, onehot, W=None):
    """sqrt(Nrf Ns / Nt) * P_S(Fopt^H F_RF W) on batched tensors."""
    B, Nt, Ns = Fc.shape
    Nrf = onehot.shape[1]
    F_rf = Xrf.reshape(B, Nt, 1) * onehot
    s = Fc.H @ F_rf
    if W is not None:
        s = s @ W
    norm = nm.sqrt(nm.sum(nm.sum(s.abs2(), axis=2), axis=1)).reshape(B, 1, 1)
    if np.any(norm.data <= 1e-12):
        raise FloatingPointError("baseband aggregate vanished; sphere projection undefined")
    return s * (np.sqrt(Nrf * Ns / Nt) * nm.reciprocal(norm))


def _phases_t(a: ComplexMatrix):
    mag = nm.sqrt(a.abs2())
    inv = nm.reciprocal(mag)
    return ComplexMatrix(a.re * inv, a.im * inv)


def unrolled_gnn_forward(m: GnnModel, g):
    """Returns (Xrf, Xbb) as complex tensors."""
    _check_arch(m, "unrolled")
    batch = _batch(g, "hybrid")
    Nrf = int(m.hyper["Nrf"])
    if batch.meta.get("Nrf", Nrf) != Nrf:
        raise ValueError(f"model built for Nrf={Nrf}, graph has Nrf={batch.meta['Nrf']}")
    F = hybrid_fopt(batch)
    B, Nt, Ns = F.shape
    if Nt % Nrf:
        raise ValueError(f"Nrf={Nrf} does not divide Nt={Nt}")
    blk = block_index(Nt, Nrf)
    onehot = np.eye(Nrf)[blk]
    Fc = ComplexMatrix(F.real, F.imag)
    Xbb = ComplexMatrix(*(lambda z: (z.real, z.imag))(_initial_xbb(B, Ns, Nrf, Nt)))
    rows = np.arange(Nt)
    Xrf = None
    for t in range(1, m.hyper["layers"] + 1):
        a = Fc @ Xbb                                           # (B, Nt, Nrf)
        Xrf = _phases_t(a[:, rows, blk])
        W = ComplexMatrix(m.params[f"l{t}.W.re"], m.params[f"l{t}.W.im"])
        Xbb = _baseband_t(Fc, Xrf, onehot, W)
    return _unbatch(g, (Xrf, Xbb))


def unrolled_numpy(m: GnnModel, Fopt: np.ndarray):
    """Inference-only unrolled forward on one Fopt (Nt, Ns) with plain numpy.

    Same iterates as unrolled_gnn_forward; works on the (Nrf, Nt/Nrf, Ns)
    block view of Fopt and keeps the baseband transposed to save copies.
    """
    Nrf = int(m.hyper["Nrf"])
    Nt, Ns = Fopt.shape
    if Nt % Nrf:
        raise ValueError(f"Nrf={Nrf} does not divide Nt={Nt}")
    Wt = m.__dict__.get("_wcache")
    if Wt is None:
        Wt = [(m.params[f"l{t}.W.re"].data + 1j * m.params[f"l{t}.W.im"].data).T.copy()
              for t in range(1, m.hyper["layers"] + 1)]
        m._wcache = Wt
    B = Fopt.reshape(Nrf, Nt // Nrf, Ns)
    Bh = B.conj()
    scale = np.sqrt(Nrf * Ns / Nt)
    xbb_t = np.full((Nrf, Ns, 1), scale / np.sqrt(Ns * Nrf), dtype=np.complex128)
    x = None
    for W in Wt:
        a = B @ xbb_t                                   # (Nrf, L, 1)
        x = a / np.abs(a)
        s = W @ (x.transpose(0, 2, 1) @ Bh)[:, 0, :]    # (W^T S^T), S = Fopt^H F_RF
        xbb_t = (s * (scale / np.linalg.norm(s)))[:, :, None]
    return x.reshape(Nt), xbb_t[:, :, 0].T


# -- generic reference GNN --------------------------------------------------------------

def refgnn_forward(m: GnnModel, g):
    """Node states after T aggregate/combine layers (B, n, H).

    Messages are a two-layer MLP of (sender, receiver, edge feature); the
    pooled vector concatenates sum, mean and max over neighbors.
    """
    _check_arch(m, "refgnn")
    batch = g if isinstance(g, GraphBatch) else GraphBatch.stack([g])
    Z, A = batch.Z, batch.A
    if batch.kind == "d2d":
        node, edge, _ = d2d_features(m, batch)
        Z = np.concatenate([node, batch.Z[:, :, 2:3] * 0.0], axis=-1)
        A = edge
    B, n, _ = Z.shape
    if Z.shape[-1] != m.hyper.get("node_dim", 3) or A.shape[-1] != m.hyper.get("edge_dim", 2):
        raise ValueError(f"graph features ({Z.shape[-1]}, {A.shape[-1]}) do not match model "
                         f"({m.hyper.get('node_dim', 3)}, {m.hyper.get('edge_dim', 2)})")
    mask = batch.mask[..., None].astype(float)
    deg = np.maximum(batch.mask.sum(axis=1), 1)[..., None]
    has_nbr = (batch.mask.sum(axis=1) > 0)[..., None].astype(float)
    z = Tensor._wrap(Z)
    a_t = Tensor._wrap(A)
    d = z
    for t in range(1, m.hyper["layers"] + 1):
        D = d.shape[-1]
        snd = nm.broadcast(d.reshape(B, n, 1, D), (B, n, n, D))   # sender j on axis 1
        rcv = nm.broadcast(d.reshape(B, 1, n, D), (B, n, n, D))   # receiver k on axis 2
        h = nm.concat([snd, rcv, a_t], axis=-1)
        msg = _lin(m, f"l{t}.msg.1", nm.relu(_lin(m, f"l{t}.msg.0", h)))
        s = nm.sum(msg * mask, axis=1)
        mx = nm.max(msg * mask + (mask - 1.0) * NEG, axis=1) * has_nbr
        pooled = nm.concat([s, s * (1.0 / deg), mx], axis=-1)
        d = nm.relu(_lin(m, f"l{t}.comb", nm.concat([z, pooled, d], axis=-1)))
    return d if isinstance(g, GraphBatch) else d[0]


def refgnn_powers(m: GnnModel, g):
    return _head(m, refgnn_forward(m, g))


# -- MLP baseline ----------------------------------------------------------------------

def mlp_inputs(m: GnnModel, batch: GraphBatch) -> np.ndarray:
    fam = m.hyper["family"]
    if batch.kind != fam:
        raise ValueError(f"MLP built for {fam} graphs, got {batch.kind}")
    B = batch.size
    if fam == "d2d":
        direct, cross = d2d_raw(batch, _ratio(m))
        K = direct.shape[1]
        full = cross[..., 0].copy()
        full[:, np.arange(K), np.arange(K)] = direct
        feats = feature(full, m, "edge")
        return np.concatenate([feats.reshape(B, -1), batch.Z[:, :, 1]], axis=1)
    if fam == "cellfree":
        return _cf_u(m, batch).reshape(B, -1)
    F = hybrid_fopt(batch)
    return np.concatenate([F.real.reshape(B, -1), F.imag.reshape(B, -1)], axis=1) * np.sqrt(F.shape[1])


def mlp_forward(m: GnnModel, g):
    _check_arch(m, "mlp")
    fam = m.hyper["family"]
    batch = _batch(g, fam)
    x = mlp_inputs(m, batch)
    n_in, _ = mlp_io(fam, m.hyper["size"])
    if x.shape[1] != n_in:
        raise ValueError(f"MLP expects input width {n_in} (size {m.hyper['size']}), "
                         f"got {x.shape[1]}: MLPs do not transfer across sizes")
    if fam == "hybrid":
        Nt, Ns, Nrf = m.hyper["size"]
        if batch.meta["Nrf"] != Nrf:
            raise ValueError(f"MLP built for Nrf={Nrf}, graph has Nrf={batch.meta['Nrf']}")
    h = Tensor._wrap(x)
    for i in range(len(m.hyper["widths"])):
        h = nm.relu(_lin(m, f"fc{i}", h))
    out = _lin(m, "out", h)
    if fam != "hybrid":
        return _unbatch(g, _power_norm(m, nm.sigmoid(out)))
    F = hybrid_fopt(batch)
    Xrf = ComplexMatrix(nm.cos(out), nm.sin(out))
    onehot = np.eye(Nrf)[block_index(Nt, Nrf)]
    Xbb = _baseband_t(ComplexMatrix(F.real, F.imag), Xrf, onehot)
    return _unbatch(g, (Xrf, Xbb))


FORWARD = {
    "ecgnn": ecgnn_forward,
    "pcgnn": pcgnn_forward,
    "hetgnn": hetgnn_forward,
    "cfpcgnn": cfpcgnn_forward,
    "unrolled": unrolled_gnn_forward,
    "refgnn": refgnn_powers,
    "mlp": mlp_forward,
}
