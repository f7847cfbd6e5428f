"""Datasets, unsupervised losses, optimizers and the training loop."""

from __future__ import annotations

import copy
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import channels as ch
from . import numeric as nm
from .gnn import FAMILY, GnnModel, hybrid_fopt
from .graphs import GraphBatch, build_graph
from .numeric import Tape
from .objectives import (
    cellfree_coefficients,
    cellfree_rates_batch,
    cellfree_rates_t,
    d2d_rates_batch,
    d2d_sum_rate_t,
    hybrid_residual_t,
    soft_min_t,
)
from .solvers import best_of_restarts_batch, maxmin_bisection_coeffs, residual_batch

# index offsets keep the splits of one master seed apart
SPLIT_OFFSET = {"train": 0, "val": 1 << 40, "test": 1 << 41}
LOSS_FAMILY = {"neg_sum_rate": "d2d", "neg_soft_min_rate": "cellfree", "hybrid_residual": "hybrid"}
SAMPLERS = {
    "gaussian_ic": ("d2d", ch.sample_gaussian_ic),
    "d2d_geometric": ("d2d", ch.sample_d2d_geometric),
    "cellfree": ("cellfree", ch.sample_cellfree),
    "mmwave": ("hybrid", ch.sample_mmwave),
}


def family_of(inst) -> str:
    if isinstance(inst, ch.D2dInstance):
        return "d2d"
    if isinstance(inst, ch.CellFreeInstance):
        return "cellfree"
    if isinstance(inst, ch.HybridInstance):
        return "hybrid"
    raise TypeError(f"not a problem instance: {type(inst).__name__}")


def model_family(model: GnnModel) -> str:
    if model.arch in FAMILY:
        return FAMILY[model.arch]
    fam = model.hyper.get("family")
    if fam is None:
        raise ValueError(f"{model.arch} model has no problem family in its hyperparameters")
    return fam


# -- datasets ---------------------------------------------------------------------

class Dataset:
    """Problem instances plus the stacked graphs and loss coefficients.

    Sample ``i`` is drawn with seed ``child_seed(master_seed, index[i])``; the
    lineage (sampler, its arguments, master seed, indices) is kept so that
    train/test overlap can be checked.
    """

    def __init__(self, split, instances, sampler, sampler_args, master_seed, indices):
        if not instances:
            raise ValueError("empty dataset")
        self.split = split
        self.instances = list(instances)
        self.sampler = sampler
        self.sampler_args = dict(sampler_args)
        self.master_seed = None if master_seed is None else int(master_seed)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.family = family_of(self.instances[0])
        if any(family_of(x) != self.family for x in self.instances):
            raise ValueError("a dataset must hold instances of one problem family")
        self.graphs = GraphBatch.stack([build_graph(x) for x in self.instances])
        self._coeffs = None
        self._baseline = None

    def __len__(self):
        return len(self.instances)

    @classmethod
    def from_instances(cls, instances, split="train") -> "Dataset":
        """Wrap externally built instances; they carry no seed lineage."""
        instances = list(instances)
        return cls(split, instances, "external", {}, None, np.arange(len(instances)))

    @property
    def seeds(self) -> list:
        if self.master_seed is None:
            return []
        return [ch.child_seed(self.master_seed, int(i)) for i in self.indices]

    @property
    def coeffs(self) -> dict:
        if self._coeffs is None:
            if self.family == "d2d":
                self._coeffs = {"G": np.stack([x.gains for x in self.instances]),
                                "sigma2": np.stack([x.sigma2 for x in self.instances]),
                                "w": np.stack([x.w for x in self.instances])}
            elif self.family == "cellfree":
                a, C, n = zip(*(cellfree_coefficients(x) for x in self.instances))
                self._coeffs = {"a": np.stack(a), "C": np.stack(C), "n": np.stack(n)}
            else:
                self._coeffs = {"Fopt": hybrid_fopt(self.graphs), "Nrf": self.graphs.meta["Nrf"]}
        return self._coeffs

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        sub = copy.copy(self)
        sub.instances = [self.instances[i] for i in idx]
        sub.indices = self.indices[idx]
        sub.graphs = self.graphs.take(idx)
        sub._coeffs = None if self._coeffs is None else {
            k: (v[idx] if isinstance(v, np.ndarray) else v) for k, v in self._coeffs.items()}
        sub._baseline = None if self._baseline is None else self._baseline[idx]
        return sub

    def lineage(self) -> dict:
        return {"split": self.split, "sampler": self.sampler, "args": self.sampler_args,
                "master_seed": self.master_seed,
                "index_range": [int(self.indices.min()), int(self.indices.max())]}


def make_dataset(sampler: str, n: int, split: str = "train", master_seed: int = 0,
                 start: int = 0, **sampler_args) -> Dataset:
    """Draw ``n`` instances; ``split`` selects a disjoint index range."""
    if sampler not in SAMPLERS:
        raise ValueError(f"unknown sampler {sampler!r}; choose from {sorted(SAMPLERS)}")
    if split not in SPLIT_OFFSET:
        raise ValueError(f"split must be one of {sorted(SPLIT_OFFSET)}")
    if n < 1:
        raise ValueError("n must be positive")
    fn = SAMPLERS[sampler][1]
    idx = SPLIT_OFFSET[split] + start + np.arange(n)
    insts = [fn(seed=ch.child_seed(master_seed, int(i)), **sampler_args) for i in idx]
    return Dataset(split, insts, sampler, sampler_args, master_seed, idx)


def check_disjoint(train: Dataset, test: Dataset):
    """Raise if any test sample seed also generated a training sample."""
    shared = set(train.seeds) & set(test.seeds)
    if shared:
        raise ValueError(f"{len(shared)} test samples share seeds with the training set "
                         f"(train {train.lineage()}, test {test.lineage()})")


# -- objectives and baselines ----------------------------------------------------

def predict(model: GnnModel, ds: Dataset, chunk: int = 256):
    """Model decisions for every sample: powers (n,K) or (Xrf, Xbb) arrays."""
    outs = []
    for s in range(0, len(ds), chunk):
        out = model.forward(ds.graphs.take(np.arange(s, min(s + chunk, len(ds)))))
        outs.append((out[0].numpy(), out[1].numpy()) if isinstance(out, tuple) else out.numpy())
    if isinstance(outs[0], tuple):
        return np.concatenate([o[0] for o in outs]), np.concatenate([o[1] for o in outs])
    return np.concatenate(outs)


def objective_values(ds: Dataset, decision) -> np.ndarray:
    """Per-sample objective: sum rate, min rate or residual."""
    c = ds.coeffs
    if ds.family == "d2d":
        return d2d_rates_batch(c["G"], c["sigma2"], c["w"], np.asarray(decision))
    if ds.family == "cellfree":
        return cellfree_rates_batch(c["a"], c["C"], c["n"], np.asarray(decision)).min(axis=1)
    Xrf, Xbb = decision
    return residual_batch(c["Fopt"], Xrf, Xbb, c["Nrf"])


def baseline_values(ds: Dataset, n_init: int = 100, T: int = 100, seed: int = 0) -> np.ndarray:
    """Best-of-restarts WMMSE, max-min bisection or converged altmin, cached."""
    if ds._baseline is None:
        c = ds.coeffs
        if ds.family == "d2d":
            _, rates = best_of_restarts_batch(c["G"], c["sigma2"], c["w"], T=T, n_init=n_init, seed=seed)
            ds._baseline = rates
        elif ds.family == "cellfree":
            ds._baseline = maxmin_bisection_coeffs(c["a"], c["C"], c["n"])[1]
        else:
            from .solvers import hybrid_altmin_batch
            ds._baseline = hybrid_altmin_batch(c["Fopt"], c["Nrf"])[2]
    return ds._baseline


def normalized(values, base) -> float:
    den = float(np.mean(base))
    if den == 0:
        raise ZeroDivisionError("baseline objective is zero; normalized performance undefined")
    return float(np.mean(values)) / den


def evaluate(model, ds: Dataset, baseline=None) -> float:
    """mean(model objective) / mean(baseline objective).

    ``model`` may be a GnnModel or a callable mapping the dataset to
    decisions; ``baseline`` may be an array of per-sample objectives.
    """
    dec = model(ds) if callable(model) and not isinstance(model, GnnModel) else predict(model, ds)
    base = baseline_values(ds) if baseline is None else np.asarray(baseline, dtype=np.float64)
    return normalized(objective_values(ds, dec), base)


# -- loss ------------------------------------------------------------------------

def unsupervised_loss(model: GnnModel, batch: Dataset, tag: str, beta: float = 20.0) -> nm.Tensor:
    if tag not in LOSS_FAMILY:
        raise ValueError(f"unknown loss tag {tag!r}; choose from {sorted(LOSS_FAMILY)}")
    fam = model_family(model)
    if LOSS_FAMILY[tag] != fam or batch.family != fam:
        raise ValueError(f"loss {tag} does not fit a {fam} model on {batch.family} data")
    c = batch.coeffs
    out = model.forward(batch.graphs)
    if tag == "neg_sum_rate":
        return -nm.mean(d2d_sum_rate_t(c["G"], c["sigma2"], c["w"], out))
    if tag == "neg_soft_min_rate":
        return -nm.mean(soft_min_t(cellfree_rates_t(c["a"], c["C"], c["n"], out), beta))
    Xrf, Xbb = out
    return nm.mean(hybrid_residual_t(c["Fopt"], Xrf, Xbb, c["Nrf"]))


def default_loss(family: str) -> str:
    return {v: k for k, v in LOSS_FAMILY.items()}[family]


# -- optimizers --------------------------------------------------------------------

class Sgd:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params: dict, grads: dict):
        for k, g in grads.items():
            params[k] = nm.Tensor(params[k].data - self.lr * g, requires_grad=True)


class Adam:
    def __init__(self, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.lr, self.betas, self.eps = lr, betas, eps
        self.m, self.v, self.t = {}, {}, 0

    def step(self, params: dict, grads: dict):
        self.t += 1
        b1, b2 = self.betas
        for k, g in grads.items():
            m = self.m.get(k, 0.0) * b1 + (1 - b1) * g
            v = self.v.get(k, 0.0) * b2 + (1 - b2) * g * g
            self.m[k], self.v[k] = m, v
            mhat = m / (1 - b1 ** self.t)
            vhat = v / (1 - b2 ** self.t)
            params[k] = nm.Tensor(params[k].data - self.lr * mhat / (np.sqrt(vhat) + self.eps),
                                  requires_grad=True)


@dataclass
class TrainConfig:
    optimizer: str = "adam"
    lr: float = 1e-3
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8
    batch_size: int = 32
    epochs: int = 50
    loss: str | None = None          # defaults to the family's loss
    seed: int = 0
    beta: float = 20.0               # soft-min sharpness
    eval_every: int = 1

    def __post_init__(self):
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"optimizer must be adam or sgd, got {self.optimizer!r}")
        if self.lr < 0 or not np.isfinite(self.lr):
            raise ValueError("learning rate must be a finite nonnegative number")
        if self.batch_size < 1 or self.epochs < 0 or self.eval_every < 1:
            raise ValueError("batch_size and eval_every must be >= 1, epochs >= 0")
        self.betas = tuple(self.betas)

    def make_optimizer(self):
        if self.optimizer == "sgd":
            return Sgd(self.lr)
        return Adam(self.lr, self.betas, self.eps)

    def to_json(self) -> dict:
        return asdict(self) | {"betas": list(self.betas)}

    @classmethod
    def from_json(cls, obj) -> "TrainConfig":
        return cls(**obj)


@dataclass
class TrainRecord:
    train_loss: list = field(default_factory=list)
    test_metric: list = field(default_factory=list)
    wall_time: list = field(default_factory=list)
    best_epoch: int = -1
    skipped_steps: int = 0

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def train(model: GnnModel, data: Dataset, cfg: TrainConfig | None = None, test: Dataset | None = None):
    """Mini-batch descent on the unsupervised loss.

    Returns a trained copy and the record.  With ``test`` given, the metric
    is the normalized performance after every ``eval_every`` epochs and the
    checkpoint with the best metric is returned; otherwise the last one.
    """
    cfg = cfg or TrainConfig()
    tag = cfg.loss or default_loss(model_family(model))
    if test is not None:
        check_disjoint(data, test)
        base = baseline_values(test)
    model = model.copy()
    opt = cfg.make_optimizer()
    rng = np.random.default_rng(cfg.seed)
    rec = TrainRecord()
    t0 = time.perf_counter()
    sign = -1.0 if model_family(model) == "hybrid" else 1.0
    best, best_score = model.copy(), -np.inf
    n = len(data)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        losses = []
        for s in range(0, n, cfg.batch_size):
            batch = data.take(order[s:s + cfg.batch_size])
            try:
                with Tape() as tape:
                    loss = unsupervised_loss(model, batch, tag, cfg.beta)
                    grads = tape.backward(loss)
            except FloatingPointError:
                rec.skipped_steps += 1          # projection undefined at the origin
                continue
            val = loss.item()
            if not np.isfinite(val) or any(not np.all(np.isfinite(g)) for g in grads.values()):
                raise FloatingPointError(f"non-finite loss or gradient ({val}) at epoch {epoch}, "
                                         f"step {s // cfg.batch_size}; try a smaller learning rate")
            losses.append(val * len(batch))
            opt.step(model.params, {k: grads.get(p, np.zeros(p.shape)) for k, p in model.params.items()})
        rec.train_loss.append(float(np.sum(losses) / n) if losses else float("nan"))
        metric = float("nan")
        if test is not None and ((epoch + 1) % cfg.eval_every == 0 or epoch == cfg.epochs - 1):
            metric = normalized(objective_values(test, predict(model, test)), base)
            if sign * metric > best_score:
                best_score, best, rec.best_epoch = sign * metric, model.copy(), epoch
        rec.test_metric.append(metric)
        rec.wall_time.append(time.perf_counter() - t0)
    if test is None or rec.best_epoch < 0:
        return model, rec
    return best, rec


def model_for(arch: str, ds: Dataset, seed: int = 0, hidden: int = 64, layers=None, **extra) -> GnnModel:
    """Build a model whose feature statistics and sizes are fitted to ``ds``."""
    from .gnn import build_model, fit_norm
    fmap = extra.pop("feature_map", "identity" if ds.family == "cellfree" else "log1p")
    hyper = {"norm": fit_norm(arch, ds.graphs, fmap), "feature_map": fmap}
    if ds.family == "cellfree":
        hyper["power_norm"] = "peak"
    x = ds.instances[0]
    if arch == "mlp":
        size = {"d2d": lambda: x.K, "cellfree": lambda: (x.M, x.K),
                "hybrid": lambda: (x.Nt, x.Ns, x.Nrf)}[ds.family]()
        hyper.update(family=ds.family, size=size)
    elif arch == "unrolled":
        hyper["Nrf"] = x.Nrf
    elif arch == "refgnn":
        if ds.family != "d2d":
            raise ValueError("refgnn has a power head for D2D graphs only")
        hyper.update(family="d2d", node_dim=3, edge_dim=2)
    elif FAMILY.get(arch) != ds.family:
        raise ValueError(f"arch {arch!r} cannot solve {ds.family} problems")
    hyper.update(extra)
    return build_model(arch, seed=seed, hidden=hidden, layers=layers, **hyper)
