"""Iterative baselines: WMMSE, max-min bisection and hybrid alternating minimization."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .channels import CellFreeInstance, D2dInstance, HybridInstance
from .objectives import (
    HybridSolution,
    block_index,
    cellfree_coefficients,
    d2d_rates_batch,
)


@dataclass
class SolverReport:
    solution: object
    trace: list
    iterations: int
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.trace) != self.iterations + 1:
            raise ValueError("trace must hold the initial point plus one entry per iteration")

    @property
    def objective(self) -> float:
        return float(self.trace[-1])


def _safe_div(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    return np.where(den > 0, out, 0.0)


def wmmse_u_alpha(G, sigma2, v):
    """Receiver and weight updates from the current amplitudes v."""
    hd = np.sqrt(np.diagonal(G, axis1=-2, axis2=-1))
    rx = np.einsum("...jk,...j->...k", G, v * v) + sigma2
    u = hd * v / rx
    alpha = 1.0 / (1.0 - u * hd * v)
    return u, alpha


def wmmse_v(G, w, u, alpha):
    """Amplitude update, clipped to the unit box."""
    hd = np.sqrt(np.diagonal(G, axis1=-2, axis2=-1))
    # transmitter k leaks into receiver j through G[k, j]
    den = np.einsum("...kj,...j->...k", G, w * alpha * u * u)
    return np.clip(_safe_div(w * alpha * u * hd, den), 0.0, 1.0)


def wmmse_batch(G, sigma2, w, p0, T: int = 100, tol: float | None = 1e-8):
    """Run WMMSE on stacked instances (leading batch axis).

    Each row stops on its own once its rate changes by less than ``tol``; pass
    ``tol=None`` to always run ``T`` iterations.  Returns final powers, the
    rate history (T+1, B) padded with the last value, and per-row iteration
    counts.
    """
    G = np.asarray(G, dtype=np.float64)
    sigma2 = np.asarray(sigma2, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    v = np.sqrt(np.asarray(p0, dtype=np.float64))
    B = v.shape[0]
    u, alpha = wmmse_u_alpha(G, sigma2, v)
    rate = d2d_rates_batch(G, sigma2, w, v * v)
    history = [rate]
    active = np.ones(B, dtype=bool)
    iters = np.zeros(B, dtype=int)
    for _ in range(T):
        if not active.any():
            history.append(rate)
            continue
        v_new = wmmse_v(G, w, u, alpha)
        u_new, a_new = wmmse_u_alpha(G, sigma2, v_new)
        r_new = d2d_rates_batch(G, sigma2, w, v_new * v_new)
        m = active[:, None]
        v = np.where(m, v_new, v)
        u = np.where(m, u_new, u)
        alpha = np.where(m, a_new, alpha)
        iters += active
        change = np.abs(r_new - rate)
        rate = np.where(active, r_new, rate)
        history.append(rate)
        if tol is not None:
            active &= change >= tol
    return v * v, np.array(history), iters


def wmmse(inst: D2dInstance, T: int = 100, init=None, tol: float | None = 1e-8) -> SolverReport:
    """Weighted-sum-rate power control; ``init`` defaults to full power."""
    if T < 1:
        raise ValueError("T must be at least 1")
    t0 = time.perf_counter()
    p0 = np.ones(inst.K) if init is None else np.asarray(init, dtype=np.float64)
    if np.any(p0 < 0) or np.any(p0 > 1):
        raise ValueError("initial powers must lie in [0, 1]")
    p, hist, iters = wmmse_batch(inst.gains[None], inst.sigma2[None], inst.w[None], p0[None], T, tol)
    n = int(iters[0])
    return SolverReport(p[0], list(hist[: n + 1, 0]), n, time.perf_counter() - t0)


def restart_inits(K: int, n_init: int, seed: int) -> np.ndarray:
    """Uniform inits; the first n rows do not depend on n_init (nested restarts)."""
    return np.random.default_rng(seed).uniform(size=(n_init, K))


def best_of_restarts(inst: D2dInstance, T: int = 100, n_init: int = 100, seed: int = 0,
                     tol: float | None = 1e-8) -> SolverReport:
    if n_init < 1:
        raise ValueError("n_init must be at least 1")
    t0 = time.perf_counter()
    inits = restart_inits(inst.K, n_init, seed)
    tile = lambda x: np.broadcast_to(x, (n_init,) + x.shape)
    p, hist, iters = wmmse_batch(tile(inst.gains), tile(inst.sigma2), tile(inst.w), inits, T, tol)
    best = int(np.argmax(hist[-1]))
    n = int(iters[best])
    return SolverReport(p[best], list(hist[: n + 1, best]), n, time.perf_counter() - t0,
                        {"best_init": best})


def best_of_restarts_batch(G, sigma2, w, T=100, n_init=100, seed=0, tol=1e-8):
    """Best-of-restarts powers and rates for many instances at once."""
    B, K = sigma2.shape
    inits = restart_inits(K, n_init, seed)
    rep = lambda x: np.repeat(x, n_init, axis=0)
    p, hist, _ = wmmse_batch(rep(G), rep(sigma2), rep(w), np.tile(inits, (B, 1)), T, tol)
    rates = hist[-1].reshape(B, n_init)
    best = np.argmax(rates, axis=1)
    p = p.reshape(B, n_init, K)[np.arange(B), best]
    return p, rates[np.arange(B), best]


# -- max-min bisection -------------------------------------------------------------

def _feasible_fixed_point(a, C, n, gamma, max_iter=2000, rtol=1e-13):
    """Smallest powers meeting SINR >= gamma, by monotone fixed-point iteration.

    Works on stacked problems; returns (feasible mask, powers).
    """
    g = gamma[:, None] / a
    q = np.zeros_like(a)
    feasible = np.zeros(a.shape[0], dtype=bool)
    done = np.zeros(a.shape[0], dtype=bool)
    for _ in range(max_iter):
        q_new = g * (np.einsum("bkj,bj->bk", C, q) + n)
        over = np.any(q_new > 1.0, axis=1) & ~done
        conv = (np.max(np.abs(q_new - q), axis=1) <= rtol * np.max(q_new, axis=1)) & ~done & ~over
        feasible |= conv
        done |= over | conv
        q = np.where(done[:, None], q, q_new)
        if done.all():
            break
    return feasible, q


def _feasible_linear(a, C, n, gamma):
    """Same test via the closed form (I - gamma D^-1 C) p = gamma D^-1 n."""
    K = a.shape[1]
    g = gamma[:, None] / a
    M = np.eye(K)[None] - g[:, :, None] * C
    q = np.linalg.solve(M, (g * n)[:, :, None])[:, :, 0]
    # q must be the nonnegative minimal solution: spectral radius < 1
    rad = np.max(np.abs(np.linalg.eigvals(g[:, :, None] * C)), axis=1)
    feasible = (rad < 1.0) & np.all(q >= 0, axis=1) & np.all(q <= 1.0, axis=1)
    return feasible, np.clip(q, 0.0, 1.0)


def maxmin_bisection_coeffs(a, C, n, tol=1e-6, max_iter=100, method="fixed_point"):
    """Batched bisection over the common SINR target.

    Returns powers (B,K), min-rates (B,), traces (iterations+1, B).
    """
    a, C, n = (np.asarray(x, dtype=np.float64) for x in (a, C, n))
    if np.any(a <= 0):
        raise ValueError("degenerate instance: zero signal coefficient")
    test = {"fixed_point": _feasible_fixed_point, "linear": _feasible_linear}[method]
    B, K = a.shape
    diagC = np.diagonal(C, axis1=1, axis2=2)
    lo = np.zeros(B)
    hi = np.min(a / (diagC + n), axis=1)      # single-user bound on every SINR
    p = np.zeros((B, K))
    trace = [np.zeros(B)]
    for _ in range(max_iter):
        if np.all(np.log2(1 + hi) - np.log2(1 + lo) < tol):
            break
        mid = 0.5 * (lo + hi)
        ok, q = test(a, C, n, mid)
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
        p = np.where(ok[:, None], q, p)
        trace.append(np.log2(1 + lo))
    # scaling all powers up raises every SINR, so normalize the peak to 1
    peak = p.max(axis=1, keepdims=True)
    p = np.where(peak > 0, p / np.where(peak > 0, peak, 1.0), 1.0)
    sinr = a * p / (np.einsum("bkj,bj->bk", C, p) + n)
    return p, np.log2(1 + sinr).min(axis=1), np.array(trace)


def maxmin_bisection(inst: CellFreeInstance, tol: float = 1e-6, method="fixed_point") -> SolverReport:
    if tol <= 0:
        raise ValueError("tol must be positive")
    t0 = time.perf_counter()
    a, C, n = cellfree_coefficients(inst)
    p, val, trace = maxmin_bisection_coeffs(a[None], C[None], n[None], tol, method=method)
    tr = list(trace[:, 0])
    tr[-1] = max(tr[-1], float(val[0]))
    return SolverReport(p[0], tr, len(tr) - 1, time.perf_counter() - t0)


# -- hybrid precoding ---------------------------------------------------------------

def project_unit_modulus(z):
    """z / |z| elementwise, with 0 mapped to 1."""
    z = np.asarray(z, dtype=np.complex128)
    mag = np.abs(z)
    return np.where(mag > 0, z / np.where(mag > 0, mag, 1.0), 1.0 + 0j)


# antennas of one RF chain are contiguous (see block_index), so block sums are reshapes

def _blocks(Fopt, Nrf):
    Nt, Ns = Fopt.shape[-2:]
    return Fopt.reshape(Fopt.shape[:-2] + (Nrf, Nt // Nrf, Ns))


def phase_aggregate(Fopt, Xbb, Nrf):
    """a_i = sum_j Fopt[i,j] Xbb[j, b(i)]."""
    a = _blocks(Fopt, Nrf) @ np.swapaxes(Xbb, -1, -2)[..., :, :, None]     # (..., Nrf, L, 1)
    return a.reshape(a.shape[:-3] + (-1,))


def baseband_aggregate(Fopt, Xrf, Nrf):
    """s[j, r] = sum over antennas i of chain r of conj(Fopt[i,j]) x_i, i.e. (Fopt^H F_RF)[j, r]."""
    x = Xrf.reshape(Xrf.shape[:-1] + (Nrf, 1, -1))
    s = (x @ _blocks(Fopt, Nrf).conj())[..., 0, :]                            # (..., Nrf, Ns)
    return np.swapaxes(s, -1, -2)


def altmin_rf_step(Fopt, Xbb, Nrf):
    """Optimal phases for fixed baseband: x_i = P(sum_j Fopt[i,j] Xbb[j, b(i)])."""
    return project_unit_modulus(phase_aggregate(Fopt, Xbb, Nrf))


def altmin_bb_step(Fopt, Xrf, Nrf):
    """Optimal baseband for fixed phases under ||Xbb||^2 = Nrf Ns / Nt."""
    return scale_baseband(baseband_aggregate(Fopt, Xrf, Nrf), Fopt.shape[-2])


def scale_baseband(Xbb, Nt):
    Ns, Nrf = Xbb.shape[-2:]
    norm = np.sqrt(np.sum(np.abs(Xbb) ** 2, axis=(-2, -1), keepdims=True))
    target = np.sqrt(Nrf * Ns / Nt)
    safe = np.where(norm > 0, norm, 1.0)
    fallback = np.full(Xbb.shape, target / np.sqrt(Ns * Nrf), dtype=np.complex128)
    return np.where(norm > 0, Xbb * (target / safe), fallback)


def residual_batch(Fopt, Xrf, Xbb, Nrf):
    x = Xrf.reshape(Xrf.shape[:-1] + (Nrf, -1, 1))
    approx = x * np.swapaxes(Xbb, -1, -2).conj()[..., :, None, :]
    d = _blocks(Fopt, Nrf) - approx
    return np.sum(d.real ** 2 + d.imag ** 2, axis=(-3, -2, -1))


def initial_baseband(Ns, Nrf, Nt):
    return scale_baseband(np.ones((Ns, Nrf), dtype=np.complex128), Nt)


def riemannian_rf_step(Fopt, Xrf, Xbb, Nrf, alpha):
    """One Riemannian gradient step on the phases with fixed baseband."""
    Nt = Fopt.shape[0]
    blk = block_index(Nt, Nrf)
    bb = Xbb[:, blk].T.conj()                                # (Nt, Ns): F_BB[b(i), j]
    resid = Fopt - Xrf[:, None] * bb
    egrad = -2.0 * np.sum(resid * bb.conj(), axis=1)         # d f / d conj(x_i), x2
    rgrad = egrad - np.real(egrad * Xrf.conj()) * Xrf
    return project_unit_modulus(Xrf - alpha * rgrad), rgrad


def armijo_rf_steps(Fopt, Xrf, Xbb, Nrf, T, alpha0=1.0, beta=0.5, c=1e-4, max_halvings=30):
    """Riemannian descent with backtracking; returns iterates and accepted steps."""
    steps = []
    iterates = [Xrf]
    f = residual_batch(Fopt, Xrf, Xbb, Nrf)
    for _ in range(T):
        _, rgrad = riemannian_rf_step(Fopt, Xrf, Xbb, Nrf, 0.0)
        gn = np.sum(np.abs(rgrad) ** 2)
        alpha = alpha0
        for _ in range(max_halvings):
            cand, _ = riemannian_rf_step(Fopt, Xrf, Xbb, Nrf, alpha)
            fc = residual_batch(Fopt, cand, Xbb, Nrf)
            if fc <= f - c * alpha * gn:
                break
            alpha *= beta
        else:
            alpha = 0.0
            cand, fc = Xrf, f
        steps.append(alpha)
        Xrf, f = cand, fc
        iterates.append(Xrf)
    return iterates, steps


def hybrid_altmin(inst: HybridInstance, T: int = 1000, tol: float = 1e-9, rf_step: str = "closed",
                  inner: int = 10, init=None) -> SolverReport:
    """Alternating minimization for the partially connected structure.

    ``rf_step="closed"`` uses the exact phase update; ``"riemannian"`` runs
    ``inner`` Armijo-backtracked Riemannian steps instead.  Stops once the
    residual decreases by less than ``tol`` (relative) or after ``T`` rounds.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    t0 = time.perf_counter()
    Nt, Ns, Nrf = inst.Nt, inst.Ns, inst.Nrf
    Fopt = inst.Fopt
    Xbb = initial_baseband(Ns, Nrf, Nt) if init is None else np.asarray(init, dtype=np.complex128)
    Xrf = altmin_rf_step(Fopt, Xbb, Nrf)
    res = float(residual_batch(Fopt, Xrf, Xbb, Nrf))
    trace = [res]
    for _ in range(T):
        if rf_step == "closed":
            Xrf = altmin_rf_step(Fopt, Xbb, Nrf)
        else:
            Xrf = armijo_rf_steps(Fopt, Xrf, Xbb, Nrf, inner)[0][-1]
        Xbb = altmin_bb_step(Fopt, Xrf, Nrf)
        new = float(residual_batch(Fopt, Xrf, Xbb, Nrf))
        trace.append(new)
        if res - new <= tol * max(res, 1e-300):
            break
        res = new
    sol = HybridSolution(Xrf, Xbb)
    return SolverReport(sol, trace, len(trace) - 1, time.perf_counter() - t0)


def hybrid_altmin_batch(Fopt, Nrf, T=1000, tol=1e-9):
    """Closed-form alternation on stacked Fopt (B, Nt, Ns); returns Xrf, Xbb, residuals."""
    B, Nt, Ns = Fopt.shape
    Xbb = np.broadcast_to(initial_baseband(Ns, Nrf, Nt), (B, Ns, Nrf)).copy()
    Xrf = altmin_rf_step(Fopt, Xbb, Nrf)
    res = residual_batch(Fopt, Xrf, Xbb, Nrf)
    active = np.ones(B, dtype=bool)
    for _ in range(T):
        Xrf_n = altmin_rf_step(Fopt, Xbb, Nrf)
        Xbb_n = altmin_bb_step(Fopt, Xrf_n, Nrf)
        new = residual_batch(Fopt, Xrf_n, Xbb_n, Nrf)
        Xrf = np.where(active[:, None], Xrf_n, Xrf)
        Xbb = np.where(active[:, None, None], Xbb_n, Xbb)
        res_prev = res
        res = np.where(active, new, res)
        if tol is None:
            continue
        stop = (res_prev - new) <= tol * np.maximum(res_prev, 1e-300)
        active &= ~stop
        if not active.any():
            break
    return Xrf, Xbb, res
