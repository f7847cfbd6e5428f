import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from gnnwireless.estimators import GnnOptimizer, GraphTransformer, SolverOptimizer, check_instances
from gnnwireless.graphs import GraphBatch
from gnnwireless.objectives import HybridSolution
from gnnwireless.training import make_dataset


@pytest.fixture(scope="module")
def d2d():
    return make_dataset("gaussian_ic", 12, "train", 3, K=4)


@pytest.fixture(scope="module")
def cf():
    return make_dataset("cellfree", 6, "train", 3, M=6, K=3, tau=2, area_m=500.0)


@pytest.fixture(scope="module")
def mm():
    return make_dataset("mmwave", 3, "train", 3, Nt=16, Nr=4, Ns=2, Nrf=4)


def test_fit_predict_score_d2d(d2d):
    est = GnnOptimizer(arch="pcgnn", hidden=8, epochs=2, batch_size=4).fit(d2d.instances)
    p = est.predict(d2d.instances)
    assert p.shape == (12, 4)
    assert np.all((p >= 0) & (p <= 1))
    assert 0 < est.score(d2d) <= 1.5
    assert len(est.record_.train_loss) == 2


def test_fit_predict_cellfree(cf):
    est = GnnOptimizer(arch="cfpcgnn", hidden=8, epochs=1, batch_size=3).fit(cf)
    p = est.predict(cf)
    assert p.shape == (6, 3)
    assert np.all((p >= 0) & (p <= 1))


def test_fit_predict_hybrid(mm):
    est = GnnOptimizer(arch="unrolled", layers=3, epochs=1, batch_size=3).fit(mm)
    sols = est.predict(mm)
    assert len(sols) == 3 and all(isinstance(s, HybridSolution) for s in sols)
    assert np.allclose(np.abs(sols[0].Xrf), 1.0)


def test_not_fitted(d2d):
    with pytest.raises(NotFittedError):
        GnnOptimizer().predict(d2d)
    with pytest.raises(NotFittedError):
        GnnOptimizer().score(d2d)


def test_arch_family_mismatch(d2d, cf):
    with pytest.raises(ValueError, match="cannot solve"):
        GnnOptimizer(arch="cfpcgnn").fit(d2d)
    est = GnnOptimizer(arch="mlp", hidden=8, epochs=1).fit(d2d)
    with pytest.raises(ValueError, match="expected d2d"):
        est.predict(cf)


def test_input_validation(d2d):
    with pytest.raises(TypeError):
        check_instances(d2d.instances[0])
    with pytest.raises(ValueError):
        check_instances([])


def test_graph_transformer(d2d):
    gb = GraphTransformer().fit_transform(d2d.instances)
    assert isinstance(gb, GraphBatch)
    assert gb.size == 12 and gb.kind == "d2d"


@pytest.mark.parametrize("name", ["d2d", "cf", "mm"])
def test_solver_optimizer(name, request):
    ds = request.getfixturevalue(name)
    est = SolverOptimizer(T=30, n_init=3).fit()
    out = est.predict(ds)
    assert len(out) == len(ds)
    if name != "mm":
        assert np.all((out >= 0) & (out <= 1 + 1e-12))


def test_sklearn_params():
    est = GnnOptimizer(arch="ecgnn", hidden=16, lr=3e-3)
    assert est.get_params()["hidden"] == 16
    c = clone(est)
    assert c.get_params() == est.get_params() and c is not est
    c.set_params(epochs=5)
    assert c.epochs == 5 and est.epochs == 50
