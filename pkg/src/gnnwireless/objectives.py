"""Objectives and metrics for the three problem families.

Plain functions take instances and numpy arrays.  The ``*_t`` variants take
batched :class:`~gnnwireless.numeric.Tensor` decisions and precomputed numpy
coefficients so they can sit inside a training loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numeric as nm
from .channels import CellFreeInstance, D2dInstance, HybridInstance, compute_v_coeffs

LN2 = np.log(2.0)


@dataclass(frozen=True)
class EnergyModel:
    P_common: float = 10.0
    P_rf: float = 0.1
    P_ps: float = 0.01
    P_pa: float = 0.1

    def __post_init__(self):
        if min(self.P_common, self.P_rf, self.P_ps, self.P_pa) <= 0:
            raise ValueError("power consumption figures must be positive")


def check_power(p, K=None) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if K is not None and p.shape[-1] != K:
        raise ValueError(f"power vector has length {p.shape[-1]}, expected {K}")
    if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
        raise ValueError("powers must lie in [0, 1]")
    return p


# -- D2D ----------------------------------------------------------------------

def sinr_d2d(inst: D2dInstance, p) -> np.ndarray:
    p = check_power(p, inst.K)
    G = inst.gains
    signal = np.diag(G) * p
    interference = p @ G - signal
    return signal / (interference + inst.sigma2)


def weighted_sum_rate(inst: D2dInstance, p) -> float:
    return float(np.sum(inst.w * np.log2(1.0 + sinr_d2d(inst, p))))


def d2d_rates_batch(G, sigma2, w, p) -> np.ndarray:
    """Weighted sum rates for a stack of instances: G (B,K,K), others (B,K)."""
    diag = np.diagonal(G, axis1=1, axis2=2)
    signal = diag * p
    rx = np.einsum("bjk,bj->bk", G, p) - signal + sigma2
    return np.sum(w * np.log2(1.0 + signal / rx), axis=1)


def d2d_sum_rate_t(G, sigma2, w, p: nm.Tensor) -> nm.Tensor:
    """Per-instance weighted sum rate, differentiable in p (B, K)."""
    B, K = p.shape
    diag = np.diagonal(G, axis1=1, axis2=2)
    total = (p.reshape(B, 1, K) @ nm.Tensor._wrap(G)).reshape(B, K)
    signal = p * diag
    sinr = signal * nm.reciprocal(total - signal + sigma2)
    return nm.sum(nm.log(sinr + 1.0) * (w / LN2), axis=1)


# -- cell-free ------------------------------------------------------------------

def cellfree_coefficients(inst: CellFreeInstance, v=None):
    """Linear-fractional form SINR_k = a_k p_k / (sum_k' C[k,k'] p_k' + n_k)."""
    if np.any(inst.U <= 0):
        raise ValueError("large-scale coefficients must be positive")
    V = compute_v_coeffs(inst) if v is None else np.asarray(v, dtype=np.float64)
    U = inst.U
    a = V.sum(axis=0) ** 2
    ratio = np.einsum("mk,mj->kj", V / U, U)           # sum_m v_mk u_mj / u_mk
    C = ratio ** 2 * inst.pilot_overlap()
    np.fill_diagonal(C, 0.0)
    C = C + V.T @ U                                      # sum_m v_mk u_mk', k' = k kept
    n = V.sum(axis=0) / inst.rho
    return a, C, n


def sinr_cellfree(inst: CellFreeInstance, v, p) -> np.ndarray:
    p = check_power(p, inst.K)
    a, C, n = cellfree_coefficients(inst, v)
    return a * p / (C @ p + n)


def min_rate(inst: CellFreeInstance, v, p) -> float:
    return float(np.min(np.log2(1.0 + sinr_cellfree(inst, v, p))))


def soft_min(x, beta: float = 20.0):
    x = np.asarray(x, dtype=np.float64)
    m = x.min(axis=-1, keepdims=True)
    return (m - np.log(np.sum(np.exp(-beta * (x - m)), axis=-1, keepdims=True)) / beta)[..., 0]


def soft_min_rate(inst: CellFreeInstance, v, p, beta: float = 20.0) -> float:
    rates = np.log2(1.0 + sinr_cellfree(inst, v, p))
    return float(soft_min(rates, beta))


def cellfree_rates_batch(a, C, n, p) -> np.ndarray:
    """Per-user rates for stacked coefficients a (B,K), C (B,K,K), n (B,K)."""
    sinr = a * p / (np.einsum("bkj,bj->bk", C, p) + n)
    return np.log2(1.0 + sinr)


def cellfree_rates_t(a, C, n, p: nm.Tensor) -> nm.Tensor:
    B, K = p.shape
    den = (nm.Tensor._wrap(C) @ p.reshape(B, K, 1)).reshape(B, K) + n
    return nm.log(p * a * nm.reciprocal(den) + 1.0) * (1.0 / LN2)


def soft_min_t(x: nm.Tensor, beta: float = 20.0) -> nm.Tensor:
    """Row-wise -(1/beta) log sum exp(-beta x); the shift is a detached constant."""
    shift = x.data.min(axis=-1, keepdims=True)
    z = nm.exp((x - shift) * (-beta))
    return nm.log(nm.sum(z, axis=-1)) * (-1.0 / beta) + shift[..., 0]


# -- hybrid precoding --------------------------------------------------------------

@dataclass
class HybridSolution:
    Xrf: np.ndarray        # (Nt,) unit-modulus phases
    Xbb: np.ndarray        # (Ns, Nrf), conjugate transpose of F_BB

    def __post_init__(self):
        self.Xrf = np.asarray(self.Xrf, dtype=np.complex128).reshape(-1)
        self.Xbb = np.asarray(self.Xbb, dtype=np.complex128)

    @classmethod
    def from_precoders(cls, F_rf, F_bb, Nrf) -> "HybridSolution":
        Nt = F_rf.shape[0]
        blk = block_index(Nt, Nrf)
        return cls(F_rf[np.arange(Nt), blk], F_bb.conj().T)

    def F_rf(self) -> np.ndarray:
        Nt, Nrf = self.Xrf.shape[0], self.Xbb.shape[1]
        F = np.zeros((Nt, Nrf), dtype=np.complex128)
        F[np.arange(Nt), block_index(Nt, Nrf)] = self.Xrf
        return F

    def F_bb(self) -> np.ndarray:
        return self.Xbb.conj().T

    def precoder(self) -> np.ndarray:
        return self.F_rf() @ self.F_bb()


def block_index(Nt: int, Nrf: int) -> np.ndarray:
    """RF chain driving each antenna in the partially connected structure."""
    return np.arange(Nt) // (Nt // Nrf)


def check_hybrid_solution(inst: HybridInstance, s: HybridSolution, tol=1e-9):
    if s.Xrf.shape != (inst.Nt,) or s.Xbb.shape != (inst.Ns, inst.Nrf):
        raise ValueError(f"solution shapes {s.Xrf.shape}, {s.Xbb.shape} do not match "
                         f"Nt={inst.Nt}, Ns={inst.Ns}, Nrf={inst.Nrf}")
    if np.max(np.abs(np.abs(s.Xrf) - 1.0)) > tol:
        raise ValueError("analog phases must be unit-modulus")
    target = inst.Nrf * inst.Ns / inst.Nt
    if abs(np.sum(np.abs(s.Xbb) ** 2) - target) > tol * max(1.0, target):
        raise ValueError(f"||Xbb||_F^2 must equal Nrf*Ns/Nt = {target:.6g}")


def hybrid_residual(inst: HybridInstance, s: HybridSolution, path: str = "indexed") -> float:
    """Squared Frobenius error between Fopt and the hybrid precoder."""
    check_hybrid_solution(inst, s)
    if path == "matrix":
        return float(np.sum(np.abs(inst.Fopt - s.precoder()) ** 2))
    blk = block_index(inst.Nt, inst.Nrf)
    total = 0.0
    for i in range(inst.Nt):
        for j in range(inst.Ns):
            total += abs(inst.Fopt[i, j] - s.Xrf[i] * np.conj(s.Xbb[j, blk[i]])) ** 2
    return float(total)


def hybrid_residual_t(Fopt, Xrf: nm.ComplexMatrix, Xbb: nm.ComplexMatrix, Nrf: int) -> nm.Tensor:
    """Per-instance residual for batched Xrf (B,Nt) and Xbb (B,Ns,Nrf)."""
    Nt = Fopt.shape[1]
    blk = block_index(Nt, Nrf)
    bb = Xbb[:, :, blk].conj()                       # (B, Ns, Nt)
    approx = bb * Xrf.reshape(Xrf.shape[0], 1, Nt)    # (B, Ns, Nt)
    diff = approx - np.swapaxes(Fopt, 1, 2)
    return nm.sum(nm.sum(diff.abs2(), axis=2), axis=1)


def spectral_efficiency(inst: HybridInstance, s: HybridSolution) -> float:
    F = s.precoder()
    HF = inst.H @ F
    M = np.eye(inst.Ns) + (inst.snr / inst.Ns) * (HF.conj().T @ HF)
    sign, logdet = np.linalg.slogdet(M)
    return float(logdet / LN2)


def energy_efficiency(R: float, Nrf: int, Nt: int, em: EnergyModel = EnergyModel()) -> float:
    return float(R / (em.P_common + Nrf * em.P_rf + Nt * (em.P_pa + em.P_ps)))
