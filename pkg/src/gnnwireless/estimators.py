"""scikit-learn style wrappers around graph construction, training and solvers.

``X`` is always a sequence of problem instances of one family (or a
:class:`~gnnwireless.training.Dataset`).  Training is unsupervised, so ``y``
is accepted and ignored.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .channels import CellFreeInstance, D2dInstance, HybridInstance
from .graphs import GraphBatch, build_graph
from .objectives import HybridSolution
from .solvers import best_of_restarts, hybrid_altmin, maxmin_bisection
from .training import Dataset, TrainConfig, evaluate, model_for, predict, train

_FAMILY_ARCHS = {"d2d": ("pcgnn", "ecgnn", "refgnn", "mlp"), "cellfree": ("cfpcgnn", "hetgnn", "mlp"),
                 "hybrid": ("unrolled", "mlp")}


def check_instances(X, family=None) -> Dataset:
    """Validate ``X`` and return it as a Dataset of one family and one size."""
    if isinstance(X, Dataset):
        ds = X
    else:
        if isinstance(X, (D2dInstance, CellFreeInstance, HybridInstance)):
            raise TypeError("expected a sequence of instances, got a single instance")
        X = list(X)
        if not X:
            raise ValueError("no instances given")
        ds = Dataset.from_instances(X)
    if family is not None and ds.family != family:
        raise ValueError(f"expected {family} instances, got {ds.family}")
    return ds


def check_arch(arch, family):
    if arch not in _FAMILY_ARCHS.get(family, ()):
        raise ValueError(f"arch {arch!r} cannot solve {family} problems; "
                         f"choose from {_FAMILY_ARCHS[family]}")


def check_fitted(est, attr="model_"):
    if getattr(est, attr, None) is None:
        raise NotFittedError(f"{type(est).__name__} is not fitted; call fit first")


class GraphTransformer(BaseEstimator, TransformerMixin):
    """Instances to a stacked GraphBatch."""

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return GraphBatch.stack([build_graph(x) for x in check_instances(X).instances])


class GnnOptimizer(BaseEstimator):
    """Learned resource allocation: ``fit`` trains, ``predict`` returns decisions.

    Powers come back as an (n, K) array; hybrid decisions as a list of
    :class:`~gnnwireless.objectives.HybridSolution`.
    """

    def __init__(self, arch="pcgnn", hidden=64, layers=None, epochs=50, batch_size=32, lr=1e-3,
                 optimizer="adam", seed=0, beta=20.0):
        self.arch = arch
        self.hidden = hidden
        self.layers = layers
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.optimizer = optimizer
        self.seed = seed
        self.beta = beta

    def _config(self):
        return TrainConfig(optimizer=self.optimizer, lr=self.lr, batch_size=self.batch_size,
                           epochs=self.epochs, seed=self.seed, beta=self.beta)

    def fit(self, X, y=None, eval_set=None):
        ds = check_instances(X)
        check_arch(self.arch, ds.family)
        model = model_for(self.arch, ds, seed=self.seed, hidden=self.hidden, layers=self.layers)
        test = None if eval_set is None else check_instances(eval_set, ds.family)
        self.model_, self.record_ = train(model, ds, self._config(), test)
        self.family_ = ds.family
        return self

    def predict(self, X):
        check_fitted(self)
        ds = check_instances(X, self.family_)
        out = predict(self.model_, ds)
        if self.family_ != "hybrid":
            return out
        return [HybridSolution(r, b) for r, b in zip(*out)]

    def score(self, X, y=None):
        """Normalized performance against the family's reference solver."""
        check_fitted(self)
        return evaluate(self.model_, check_instances(X, self.family_))


class SolverOptimizer(BaseEstimator):
    """The classic iterative solvers behind the same interface (fit is a no-op)."""

    def __init__(self, T=100, n_init=100, tol=1e-8, seed=0):
        self.T = T
        self.n_init = n_init
        self.tol = tol
        self.seed = seed

    def fit(self, X=None, y=None):
        self.fitted_ = True
        return self

    def predict(self, X):
        ds = check_instances(X)
        if ds.family == "d2d":
            return np.stack([best_of_restarts(x, self.T, self.n_init, self.seed, self.tol).solution
                             for x in ds.instances])
        if ds.family == "cellfree":
            return np.stack([maxmin_bisection(x).solution for x in ds.instances])
        return [hybrid_altmin(x, T=max(self.T, 1000), tol=1e-9).solution for x in ds.instances]
