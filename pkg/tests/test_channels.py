import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gnnwireless import channels as ch
from gnnwireless.serialize import dumps, loads


def test_gaussian_ic_unit_variance():
    # 10^5 draws of |h|^2 from K=1 instances
    g = np.array([ch.sample_gaussian_ic(1, s).gains[0, 0] for s in range(100_000)])
    assert abs(g.mean() - 1.0) < 0.02


def test_gaussian_ic_deterministic_and_unit_weights():
    a, b = ch.sample_gaussian_ic(10, 7), ch.sample_gaussian_ic(10, 7)
    assert np.array_equal(a.H, b.H) and np.array_equal(a.sigma2, b.sigma2)
    assert np.all(a.w == 1.0)
    assert np.allclose(a.sigma2, 0.1)          # 10 dB


def test_gaussian_ic_rejects_empty():
    with pytest.raises(ValueError):
        ch.sample_gaussian_ic(0, 0)


def _positions(inst_seed, **kw):
    # replay the sampler's geometry draws
    rng = np.random.default_rng(inst_seed)
    K = kw["K"]
    tx = rng.uniform(0.0, kw["area_m"], size=(K, 2))
    r = np.sqrt(rng.uniform(kw["dmin_m"] ** 2, kw["dmax_m"] ** 2, size=K))
    return tx, r


GEO = dict(area_m=250.0, dmin_m=10.0, dmax_m=50.0, tx_height_m=1.5, rx_height_m=1.5,
           carrier_ghz=2.4, K=10)


@pytest.mark.parametrize("seed", range(5))
def test_geometric_direct_links_within_annulus(seed):
    inst = ch.sample_d2d_geometric(seed=seed, **GEO)
    g = np.diag(inst.gains)
    lo = 10 ** (-ch.d2d_pathloss_db(50.0, 2.4, 1.5, 1.5) / 10)
    hi = 10 ** (-ch.d2d_pathloss_db(10.0, 2.4, 1.5, 1.5) / 10)
    assert np.all(g >= lo * (1 - 1e-12)) and np.all(g <= hi * (1 + 1e-12))
    _, r = _positions(seed, **GEO)
    assert np.all((r >= 10.0) & (r <= 50.0))


def test_fixed_distance_gives_identical_direct_gain():
    inst = ch.sample_d2d_geometric(250.0, 30.0, 30.0, 1.5, 1.5, 2.4, 10, seed=3)
    expect = 10 ** (-ch.d2d_pathloss_db(30.0, 2.4, 1.5, 1.5) / 10)
    assert np.allclose(np.diag(inst.gains), expect, rtol=1e-12)


def test_gain_decreases_with_distance():
    d = np.linspace(10.0, 50.0, 401)
    pl = ch.d2d_pathloss_db(d, 2.4, 1.5, 1.5)
    assert np.all(np.diff(pl) > 0)
    # NLoS links lose more at every distance past 1 m
    assert np.all(ch.d2d_pathloss_db(d, 2.4, 1.5, 1.5, nlos=True) > pl)


def test_free_space_segment_matches_formula():
    d = 20.0
    assert ch.d2d_pathloss_db(d, 2.4, 1.5, 1.5) == pytest.approx(
        20 * np.log10(d) + 20 * np.log10(2.4) + 32.45)


def test_geometric_rejects_bad_geometry():
    with pytest.raises(ValueError):
        ch.sample_d2d_geometric(250.0, 60.0, 50.0, 1.5, 1.5, 2.4, 4, seed=0)
    with pytest.raises(ValueError):
        ch.sample_d2d_geometric(20.0, 5.0, 25.0, 1.5, 1.5, 2.4, 4, seed=0)


def test_geometric_power_range_enters_noise():
    a = ch.sample_d2d_geometric(seed=1, tx_power_dbm=(10.0, 30.0), **GEO)
    p = a.meta["tx_power_dbm"]
    assert 10.0 <= p <= 30.0
    assert np.allclose(a.sigma2, 10 ** ((ch.D2D_NOISE_DBM - p) / 10))


def _v_oracle(U, Phi, rho):
    M, K = U.shape
    tau = Phi.shape[0]
    v = np.zeros((M, K))
    for m in range(M):
        for k in range(K):
            s = sum(U[m, k] * abs(np.vdot(Phi[:, k], Phi[:, j])) ** 2 for j in range(K))
            v[m, k] = np.sqrt(tau * rho) * U[m, k] / (tau * rho * s + 1.0)
    return v


def test_v_single_user_substitution():
    inst = ch.CellFreeInstance(np.ones((1, 1)), np.ones((1, 1)), rho=1.0)
    assert ch.compute_v_coeffs(inst)[0, 0] == pytest.approx(0.5)


@pytest.mark.parametrize("seed", range(3))
def test_v_matches_independent_oracle(seed):
    inst = ch.sample_cellfree(6, 4, 3, 500.0, seed)
    for scale in (1.0, 2.0):
        inst2 = ch.CellFreeInstance(inst.U, inst.Phi, inst.rho * scale)
        assert np.allclose(ch.compute_v_coeffs(inst2), _v_oracle(inst.U, inst.Phi, inst2.rho),
                           rtol=1e-12, atol=0)


def test_orthogonal_pilots_drop_cross_terms():
    inst = ch.sample_cellfree(5, 3, 4, 500.0, 1, pilots="orthogonal")
    tr = inst.tau * inst.rho
    expect = np.sqrt(tr) * inst.U / (tr * inst.U + 1.0)
    assert np.allclose(ch.compute_v_coeffs(inst), expect, rtol=1e-12)


def test_cellfree_orthogonal_identity_and_positivity():
    inst = ch.sample_cellfree(30, 6, 6, 500.0, 11, pilots="orthogonal")
    assert np.allclose(inst.Phi.conj().T @ inst.Phi, np.eye(6), atol=1e-12)
    assert np.all(inst.U > 0)
    again = ch.sample_cellfree(30, 6, 6, 500.0, 11, pilots="orthogonal")
    assert np.array_equal(inst.U, again.U)


def test_cellfree_pilot_modes():
    for mode in ("random", "reuse"):
        inst = ch.sample_cellfree(4, 8, 3, 500.0, 2, pilots=mode)
        assert np.allclose(np.linalg.norm(inst.Phi, axis=0), 1.0)
    with pytest.raises(ValueError):
        ch.sample_cellfree(4, 8, 3, 500.0, 2, pilots="orthogonal")


def test_cellfree_pathloss_continuous_and_monotone():
    d = np.linspace(1.0, 700.0, 2000)
    pl = ch.cellfree_pathloss_db(d)
    assert np.all(np.diff(pl) >= 0)
    for knot in (ch.CF_D0, ch.CF_D1):
        assert ch.cellfree_pathloss_db(knot * (1 + 1e-9)) == pytest.approx(
            ch.cellfree_pathloss_db(knot), abs=1e-6)


def test_mmwave_precoder_properties():
    inst = ch.sample_mmwave(144, 36, 2, 4, seed=5)
    F = inst.Fopt
    assert abs(np.vdot(F[:, 0], F[:, 1])) < 1e-10
    assert np.sum(np.abs(F) ** 2) == pytest.approx(2.0, abs=1e-10)
    # dominant right singular vectors
    s = np.linalg.svd(inst.H, compute_uv=False)
    assert np.allclose(np.linalg.norm(inst.H @ F, axis=0), s[:2])


def test_mmwave_dimension_checks():
    with pytest.raises(ValueError, match="divide"):
        ch.sample_mmwave(144, 36, 2, 7, seed=0)
    with pytest.raises(ValueError):
        ch.sample_mmwave(8, 2, 3, 4, seed=0)


def test_child_seeds_are_distinct_and_stable():
    seeds = [ch.child_seed(42, i) for i in range(1000)]
    assert len(set(seeds)) == 1000
    assert ch.child_seed(42, 7) == seeds[7]
    assert all(0 <= s < 1 << 64 for s in seeds)


@given(st.integers(0, 2 ** 32), st.sampled_from(["d2d", "cellfree", "hybrid"]))
def test_instances_round_trip_json(seed, kind):
    inst = {"d2d": lambda: ch.sample_gaussian_ic(3, seed),
            "cellfree": lambda: ch.sample_cellfree(3, 2, 2, 500.0, seed),
            "hybrid": lambda: ch.sample_mmwave(8, 4, 2, 2, seed)}[kind]()
    back = ch.instance_from_json(loads(dumps(inst.to_json())))
    for name in ("H", "U", "Phi", "Fopt", "w", "sigma2"):
        if hasattr(inst, name):
            assert np.array_equal(getattr(inst, name), getattr(back, name))


def test_json_schema_layout():
    obj = json.loads(dumps(ch.sample_gaussian_ic(2, 0).to_json()))
    assert obj["H"]["shape"] == [2, 2] and obj["H"]["dtype"] == "complex128"
    assert len(obj["H"]["data"]) == 4 and len(obj["H"]["data"][0]) == 2
    with pytest.raises(ValueError):
        ch.instance_from_json({"kind": "satellite"})
