"""Seeded generators for the three physical scenarios.

Every sampler is a pure function of its arguments: the same parameters and
seed always give the same instance.  Datasets derive one child seed per
sample with :func:`child_seed`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .serialize import decode_array, encode_array

MASK64 = (1 << 64) - 1

# short-range outdoor defaults for the D2D geometric scenario
D2D_NOISE_DBM = -94.0          # thermal noise over 10 MHz incl. noise figure
D2D_TX_POWER_DBM = 20.0
NLOS_EXTRA_SLOPE_DB = 15.0     # extra dB per decade of distance on NLoS links

# cell-free large-scale fading (three-slope model)
CF_FREQ_MHZ = 1900.0
CF_H_AP = 15.0
CF_H_UE = 1.65
CF_D0 = 10.0
CF_D1 = 50.0
CF_SHADOW_DB = 8.0
CF_TAU = 10
# pilot SNR: -40 dBm over a -92 dBm noise floor; sets the max-power baseline
# near half of the max-min optimum with random pilots
CF_RHO_DB = 52.0


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def child_seed(master: int, index: int) -> int:
    """Per-sample seed derived from a master seed and a sample index."""
    return splitmix64((master & MASK64) ^ splitmix64(index & MASK64))


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(int(seed) & MASK64)


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@dataclass
class D2dInstance:
    H: np.ndarray                  # H[j, k] = channel from transmitter j to receiver k
    w: np.ndarray
    sigma2: np.ndarray
    pmax: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=np.complex128)
        K = self.H.shape[0]
        if self.H.shape != (K, K):
            raise ValueError(f"H must be square, got {self.H.shape}")
        self.w = np.broadcast_to(np.asarray(self.w, dtype=np.float64), (K,)).copy()
        self.sigma2 = np.broadcast_to(np.asarray(self.sigma2, dtype=np.float64), (K,)).copy()
        if not np.all(np.isfinite(self.H)):
            raise ValueError("H has non-finite entries")
        if np.any(self.sigma2 <= 0):
            raise ValueError("noise powers must be strictly positive")
        if np.any(self.w < 0):
            raise ValueError("weights must be non-negative")

    @property
    def K(self) -> int:
        return self.H.shape[0]

    @property
    def gains(self) -> np.ndarray:
        return np.abs(self.H) ** 2

    def permuted(self, perm) -> "D2dInstance":
        perm = np.asarray(perm)
        return D2dInstance(self.H[np.ix_(perm, perm)], self.w[perm], self.sigma2[perm],
                           self.pmax, dict(self.meta))

    def to_json(self) -> dict:
        return {"kind": "d2d", "K": self.K, "H": encode_array(self.H),
                "w": encode_array(self.w), "sigma2": encode_array(self.sigma2),
                "pmax": self.pmax, "meta": self.meta}

    @classmethod
    def from_json(cls, obj) -> "D2dInstance":
        return cls(decode_array(obj["H"]), decode_array(obj["w"]),
                   decode_array(obj["sigma2"]), obj.get("pmax", 1.0), obj.get("meta", {}))


@dataclass
class CellFreeInstance:
    U: np.ndarray                  # M x K large-scale fading
    Phi: np.ndarray                # tau x K unit-norm pilots
    rho: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.U = np.asarray(self.U, dtype=np.float64)
        self.Phi = np.asarray(self.Phi, dtype=np.complex128)
        if self.U.ndim != 2 or self.Phi.ndim != 2 or self.Phi.shape[1] != self.U.shape[1]:
            raise ValueError(f"U {self.U.shape} and Phi {self.Phi.shape} disagree on K")
        if np.any(self.U <= 0):
            raise ValueError("large-scale coefficients must be positive")
        if not np.allclose(np.linalg.norm(self.Phi, axis=0), 1.0, atol=1e-10):
            raise ValueError("pilot columns must have unit norm")
        if self.rho <= 0:
            raise ValueError("rho must be positive")

    @property
    def M(self) -> int:
        return self.U.shape[0]

    @property
    def K(self) -> int:
        return self.U.shape[1]

    @property
    def tau(self) -> int:
        return self.Phi.shape[0]

    def pilot_overlap(self) -> np.ndarray:
        """K x K matrix of |phi_k^H phi_k'|^2."""
        G = self.Phi.conj().T @ self.Phi
        return np.abs(G) ** 2

    def to_json(self) -> dict:
        return {"kind": "cellfree", "M": self.M, "K": self.K, "tau": self.tau,
                "U": encode_array(self.U), "Phi": encode_array(self.Phi),
                "rho": self.rho, "meta": self.meta}

    @classmethod
    def from_json(cls, obj) -> "CellFreeInstance":
        return cls(decode_array(obj["U"]), decode_array(obj["Phi"]), obj["rho"],
                   obj.get("meta", {}))


@dataclass
class HybridInstance:
    H: np.ndarray                  # Nr x Nt
    Fopt: np.ndarray               # Nt x Ns
    Nrf: int
    snr: float = 10.0              # linear
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=np.complex128)
        self.Fopt = np.asarray(self.Fopt, dtype=np.complex128)
        self.Nrf = int(self.Nrf)
        check_hybrid_dims(self.Nt, self.Nr, self.Ns, self.Nrf)
        if self.Fopt.shape[0] != self.H.shape[1]:
            raise ValueError(f"Fopt {self.Fopt.shape} does not match H {self.H.shape}")
        if abs(np.sum(np.abs(self.Fopt) ** 2) - self.Ns) > 1e-8:
            raise ValueError("Fopt must satisfy ||Fopt||_F^2 == Ns")

    @property
    def Nt(self) -> int:
        return self.H.shape[1]

    @property
    def Nr(self) -> int:
        return self.H.shape[0]

    @property
    def Ns(self) -> int:
        return self.Fopt.shape[1]

    def with_nrf(self, Nrf: int) -> "HybridInstance":
        return HybridInstance(self.H, self.Fopt, Nrf, self.snr, dict(self.meta))

    def to_json(self) -> dict:
        return {"kind": "hybrid", "Nt": self.Nt, "Nr": self.Nr, "Ns": self.Ns,
                "Nrf": self.Nrf, "H": encode_array(self.H), "Fopt": encode_array(self.Fopt),
                "snr": self.snr, "meta": self.meta}

    @classmethod
    def from_json(cls, obj) -> "HybridInstance":
        return cls(decode_array(obj["H"]), decode_array(obj["Fopt"]), obj["Nrf"],
                   obj.get("snr", 10.0), obj.get("meta", {}))


def instance_from_json(obj):
    kinds = {"d2d": D2dInstance, "cellfree": CellFreeInstance, "hybrid": HybridInstance}
    try:
        return kinds[obj["kind"]].from_json(obj)
    except KeyError:
        raise ValueError(f"unknown instance kind {obj.get('kind')!r}") from None


def check_hybrid_dims(Nt, Nr, Ns, Nrf):
    if min(Nt, Nr, Ns, Nrf) < 1:
        raise ValueError("antenna, stream and RF-chain counts must be positive")
    if Ns > min(Nt, Nr):
        raise ValueError(f"Ns={Ns} exceeds min(Nt, Nr)={min(Nt, Nr)}")
    if not Ns <= Nrf <= Nt:
        raise ValueError(f"need Ns <= Nrf <= Nt, got Ns={Ns}, Nrf={Nrf}, Nt={Nt}")
    if Nt % Nrf:
        raise ValueError(f"Nrf={Nrf} does not divide Nt={Nt}")


# -- D2D ----------------------------------------------------------------------

def sample_gaussian_ic(K: int, seed: int, snr_db: float = 10.0) -> D2dInstance:
    """K pairs with i.i.d. CN(0, 1) channels, unit weights and noise 10^(-snr/10)."""
    if K < 1:
        raise ValueError("K must be at least 1")
    rng = _rng(seed)
    H = _cn(rng, (K, K))
    return D2dInstance(H, np.ones(K), np.full(K, 10.0 ** (-snr_db / 10.0)),
                       meta={"scenario": "gaussian_ic", "snr_db": snr_db})


def d2d_pathloss_db(d, carrier_ghz, tx_height_m, rx_height_m, nlos=False):
    """Two-slope LoS pathloss with a breakpoint set by the antenna heights.

    Free-space slope up to ``4 ht hr / lambda``, 40 dB/decade beyond.  NLoS
    links add ``NLOS_EXTRA_SLOPE_DB`` per decade of distance.
    """
    d = np.maximum(np.asarray(d, dtype=np.float64), 1.0)
    lam = 0.299792458 / carrier_ghz
    rbp = 4.0 * np.asarray(tx_height_m) * np.asarray(rx_height_m) / lam
    fs = 20.0 * np.log10(d) + 20.0 * np.log10(carrier_ghz) + 32.45
    at_bp = 20.0 * np.log10(rbp) + 20.0 * np.log10(carrier_ghz) + 32.45
    pl = np.where(d <= rbp, fs, at_bp + 40.0 * np.log10(d / rbp))
    return pl + np.where(nlos, NLOS_EXTRA_SLOPE_DB * np.log10(d), 0.0)


def sample_d2d_geometric(area_m: float, dmin_m: float, dmax_m: float,
                         tx_height_m, rx_height_m, carrier_ghz: float, K: int, seed: int,
                         tx_power_dbm: float = D2D_TX_POWER_DBM,
                         noise_dbm: float = D2D_NOISE_DBM,
                         fading: bool = False, nlos_prob: float = 0.0) -> D2dInstance:
    """Pairs in a square area with short-range outdoor pathloss.

    Antenna heights may be scalars or ``(low, high)`` ranges drawn per node;
    ``tx_power_dbm`` may be a ``(low, high)`` range drawn per instance.  The
    transmit power enters through the noise term: sigma2 = noise / P_tx, so
    powers stay in [0, 1].  With ``nlos_prob > 0`` each link is independently
    NLoS, which adds Rayleigh fading and a steeper slope to that link.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if not 0 < dmin_m <= dmax_m < area_m:
        raise ValueError(f"need 0 < dmin <= dmax < area, got {dmin_m}, {dmax_m}, {area_m}")
    if dmax_m >= area_m * np.sqrt(2.0):
        raise ValueError("dmax exceeds the area diagonal")
    rng = _rng(seed)
    tx = rng.uniform(0.0, area_m, size=(K, 2))
    r = np.sqrt(rng.uniform(dmin_m ** 2, dmax_m ** 2, size=K))
    theta = rng.uniform(0.0, 2 * np.pi, size=K)
    rx = tx + np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)

    def height(h, n):
        if np.ndim(h) == 0:
            return np.full(n, float(h))
        lo, hi = h
        return rng.uniform(lo, hi, size=n)

    ht = height(tx_height_m, K)
    hr = height(rx_height_m, K)
    if np.ndim(tx_power_dbm) == 0:
        p_dbm = float(tx_power_dbm)
    else:
        p_dbm = float(rng.uniform(*tx_power_dbm))

    # d[j, k]: transmitter j to receiver k
    d = np.linalg.norm(tx[:, None, :] - rx[None, :, :], axis=2)
    d[np.arange(K), np.arange(K)] = r
    nlos = rng.uniform(size=(K, K)) < nlos_prob
    pl = d2d_pathloss_db(d, carrier_ghz, ht[:, None], hr[None, :], nlos)
    amp = 10.0 ** (-pl / 20.0)
    ray = _cn(rng, (K, K))
    small = np.where(nlos | fading, ray, 1.0 + 0j)
    H = amp * small
    sigma2 = 10.0 ** ((noise_dbm - p_dbm) / 10.0)
    meta = {"scenario": "d2d_geometric", "tx_power_dbm": p_dbm, "area_m": area_m,
            "dmin_m": dmin_m, "dmax_m": dmax_m}
    return D2dInstance(H, np.ones(K), np.full(K, sigma2), meta=meta)


# -- cell-free -----------------------------------------------------------------

def cellfree_pathloss_db(d_m):
    """Three-slope large-scale loss (positive dB) without shadowing."""
    f, hap, hu = CF_FREQ_MHZ, CF_H_AP, CF_H_UE
    L = (46.3 + 33.9 * np.log10(f) - 13.82 * np.log10(hap)
         - (1.1 * np.log10(f) - 0.7) * hu + (1.56 * np.log10(f) - 0.8))
    dk = np.asarray(d_m, dtype=np.float64) / 1000.0
    d0, d1 = CF_D0 / 1000.0, CF_D1 / 1000.0
    far = L + 35.0 * np.log10(np.maximum(dk, d1))
    mid = L + 15.0 * np.log10(d1) + 20.0 * np.log10(np.clip(dk, d0, d1))
    near = L + 15.0 * np.log10(d1) + 20.0 * np.log10(d0)
    return np.where(dk > d1, far, np.where(dk > d0, mid, near))


def compute_v_coeffs(inst: CellFreeInstance) -> np.ndarray:
    """Combining coefficients v[m, k] from large-scale fading and pilot overlap."""
    tr = inst.tau * inst.rho
    overlap_sum = inst.pilot_overlap().sum(axis=1)       # sum_k' |phi_k^H phi_k'|^2
    return np.sqrt(tr) * inst.U / (tr * inst.U * overlap_sum[None, :] + 1.0)


def orthogonal_pilots(tau: int, K: int) -> np.ndarray:
    if K > tau:
        raise ValueError(f"cannot build {K} orthogonal pilots of length {tau}")
    F = np.fft.fft(np.eye(tau)) / np.sqrt(tau)
    return F[:, :K]


def sample_cellfree(M: int, K: int, tau: int, area_m: float, seed: int,
                    pilots: str = "random", rho_db: float = CF_RHO_DB) -> CellFreeInstance:
    """APs and users uniform in a square; three-slope fading with shadowing.

    ``pilots``: "orthogonal" (needs tau >= K), "reuse" (each user draws one
    of tau orthogonal pilots at random) or "random" (i.i.d. unit-norm complex
    vectors).
    """
    if tau < 1 or M < 1 or K < 1:
        raise ValueError("M, K and tau must be positive")
    rng = _rng(seed)
    ap = rng.uniform(0.0, area_m, size=(M, 2))
    ue = rng.uniform(0.0, area_m, size=(K, 2))
    d = np.linalg.norm(ap[:, None, :] - ue[None, :, :], axis=2)
    pl = cellfree_pathloss_db(d)
    shadow = np.where(d > CF_D1, CF_SHADOW_DB * rng.standard_normal((M, K)), 0.0)
    U = 10.0 ** (-(pl - shadow) / 10.0)
    if pilots == "orthogonal":
        Phi = orthogonal_pilots(tau, K)
    elif pilots == "reuse":
        Phi = orthogonal_pilots(tau, tau)[:, rng.integers(0, tau, size=K)]
    elif pilots == "random":
        Phi = _cn(rng, (tau, K))
        Phi /= np.linalg.norm(Phi, axis=0, keepdims=True)
    else:
        raise ValueError(f"unknown pilot mode {pilots!r}")
    rho = 10.0 ** (rho_db / 10.0)
    return CellFreeInstance(U, Phi, rho, meta={"scenario": "cellfree", "area_m": area_m,
                                               "pilots": pilots})


# -- mmWave --------------------------------------------------------------------

def ula_response(n: int, angles) -> np.ndarray:
    """Half-wavelength ULA steering vectors, one column per angle."""
    idx = np.arange(n)[:, None]
    return np.exp(1j * np.pi * idx * np.sin(np.asarray(angles))[None, :]) / np.sqrt(n)


def sample_mmwave(Nt: int, Nr: int, Ns: int, Nrf: int, seed: int, n_clusters: int = 5,
                  n_rays: int = 10, angle_spread_deg: float = 10.0,
                  snr_db: float = 10.0) -> HybridInstance:
    """Clustered narrowband channel and its Ns-stream optimal digital precoder."""
    check_hybrid_dims(Nt, Nr, Ns, Nrf)
    rng = _rng(seed)
    L = n_clusters * n_rays
    spread = np.deg2rad(angle_spread_deg) / np.sqrt(2.0)  # Laplacian std -> scale
    aod_c = rng.uniform(0.0, 2 * np.pi, size=n_clusters)
    aoa_c = rng.uniform(0.0, 2 * np.pi, size=n_clusters)
    aod = (aod_c[:, None] + rng.laplace(0.0, spread, size=(n_clusters, n_rays))).reshape(-1)
    aoa = (aoa_c[:, None] + rng.laplace(0.0, spread, size=(n_clusters, n_rays))).reshape(-1)
    alpha = _cn(rng, L)
    At = ula_response(Nt, aod)
    Ar = ula_response(Nr, aoa)
    H = np.sqrt(Nt * Nr / L) * (Ar * alpha[None, :]) @ At.conj().T
    _, _, Vh = np.linalg.svd(H)
    Fopt = Vh.conj().T[:, :Ns]
    return HybridInstance(H, Fopt, Nrf, 10.0 ** (snr_db / 10.0),
                          meta={"scenario": "mmwave", "n_clusters": n_clusters, "n_rays": n_rays})
