import numpy as np
import pytest
from hypothesis import given, strategies as st

from gnnwireless import channels as ch
from gnnwireless.dmp import (
    DmpSpec,
    riemannian_direct,
    riemannian_dmp_spec,
    run_dmp,
    sum_aggregate,
    wmmse_dmp_powers,
)
from gnnwireless.graphs import build_graph
from gnnwireless.solvers import (
    armijo_rf_steps,
    initial_baseband,
    residual_batch,
    riemannian_rf_step,
    wmmse,
)


def identity_spec(T):
    return DmpSpec(encode=lambda t, s, d, a: s.x, aggregate=sum_aggregate,
                   update=lambda t, node, y: node.x, init=lambda i, g: np.array([float(i)]),
                   n_rounds=T)


def test_identity_update_keeps_states():
    g = build_graph(ch.sample_gaussian_ic(4, 0))
    out = run_dmp(identity_spec(3), g)
    assert [float(x[0]) for x in out] == [0.0, 1.0, 2.0, 3.0]


def test_message_count_and_synchrony():
    g = build_graph(ch.sample_gaussian_ic(4, 0))
    calls = []

    def encode(t, s, d, a):
        calls.append(t)
        return s.x

    spec = DmpSpec(encode, sum_aggregate, lambda t, n, y: n.x + y, lambda i, g: np.array([1.0]), 2)
    hist = run_dmp(spec, g, return_history=True)
    assert len(calls) == 2 * 4 * 3
    # round 1 sums the 3 neighbors' initial ones; round 2 sums round-1 states
    assert [float(x[0]) for x in hist[1]] == [4.0] * 4
    assert [float(x[0]) for x in hist[2]] == [16.0] * 4


def test_shape_change_is_reported():
    g = build_graph(ch.sample_gaussian_ic(3, 0))
    spec = DmpSpec(lambda t, s, d, a: s.x, sum_aggregate, lambda t, n, y: np.zeros(2),
                   lambda i, g: np.zeros(1), 1)
    with pytest.raises(ValueError, match="round 1, node 0"):
        run_dmp(spec, g)


def test_wrong_graph_kind():
    g = build_graph(ch.sample_cellfree(3, 2, 2, 500.0, 0))
    with pytest.raises(ValueError):
        wmmse_dmp_powers(g, 2)


@pytest.mark.parametrize("seed", range(50))
def test_wmmse_dmp_matches_direct(seed):
    inst = ch.sample_gaussian_ic(5, seed)
    p0 = np.random.default_rng(seed).uniform(size=5)
    direct = wmmse(inst, T=20, init=p0, tol=None).solution
    via = wmmse_dmp_powers(build_graph(inst), 20, p0)
    assert np.max(np.abs(direct - via)) <= 1e-12


@given(st.integers(0, 10 ** 6))
def test_wmmse_dmp_order_independent(seed):
    g = build_graph(ch.sample_gaussian_ic(4, seed))
    a = wmmse_dmp_powers(g, 5)
    b = wmmse_dmp_powers(g, 5, rng=np.random.default_rng(seed))
    assert np.max(np.abs(a - b)) <= 1e-12


def _hybrid_setup(seed, Nt=16, Nrf=4):
    inst = ch.sample_mmwave(Nt, 4, 2, Nrf, seed=seed)
    r = np.random.default_rng(seed)
    Xrf0 = np.exp(1j * r.uniform(0, 2 * np.pi, Nt))
    Xbb = initial_baseband(2, Nrf, Nt) * np.exp(1j * r.uniform(0, 6.28, (2, Nrf)))
    return inst, Xrf0, Xbb


def _dmp_phases(inst, Xrf0, Xbb, steps):
    states = run_dmp(riemannian_dmp_spec(len(steps), steps, Xrf0, Xbb), build_graph(inst))
    return np.array([x[x != 0][0] for x in states[: inst.Nt]])


@pytest.mark.parametrize("seed", range(50))
def test_riemannian_dmp_matches_direct(seed):
    inst, Xrf0, Xbb = _hybrid_setup(seed)
    _, steps = armijo_rf_steps(inst.Fopt, Xrf0, Xbb, inst.Nrf, 8)
    direct = riemannian_direct(inst.Fopt, Xrf0, Xbb, inst.Nrf, steps)[-1]
    assert np.max(np.abs(direct - _dmp_phases(inst, Xrf0, Xbb, steps))) <= 1e-12


def test_riemannian_step_decreases_residual():
    inst, Xrf0, Xbb = _hybrid_setup(7)
    its, steps = armijo_rf_steps(inst.Fopt, Xrf0, Xbb, inst.Nrf, 20)
    res = [residual_batch(inst.Fopt, x, Xbb, inst.Nrf) for x in its]
    assert all(b <= a + 1e-12 for a, b in zip(res, res[1:]))
    assert np.allclose(np.abs(its[-1]), 1.0)


def test_riemannian_fixed_point_at_optimum():
    # Fopt exactly factorizable: its own phases are stationary
    inst, Xrf0, Xbb = _hybrid_setup(3)
    from gnnwireless.objectives import HybridSolution
    F = HybridSolution(Xrf0, Xbb).precoder()
    nxt, grad = riemannian_rf_step(F, Xrf0, Xbb, inst.Nrf, 0.3)
    assert np.max(np.abs(grad)) < 1e-12
    assert np.max(np.abs(nxt - Xrf0)) < 1e-12


def test_riemannian_toy_single_antenna():
    # one antenna, one symbol, one chain: f(x) = |fopt - x b|^2, optimum phase(fopt/b)
    F = np.array([[np.exp(0.9j)]])
    Xbb = np.array([[1.0 + 0j]])
    x = np.array([np.exp(-1.0j)])
    for _ in range(200):
        x, _ = riemannian_rf_step(F, x, Xbb, 1, 0.2)
    assert np.angle(x[0]) == pytest.approx(0.9, abs=1e-9)
