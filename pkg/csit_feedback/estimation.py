"""
MMSE 估計模組
UE 端後驗統計：MMSE 濾波器、後驗均值共變異數 Σ^u 與 D_mmse

所有運算都在 r 維通道特徵基底上進行：
    A = Λ^{1/2} U^H X          (r × β_tr)
    G = A A^H                  (r × r)
    W = U Λ^{1/2} (I+G)^{-1} A
    Σ^u = U Λ^{1/2} G (I+G)^{-1} Λ^{1/2} U^H
"""

from dataclasses import dataclass

import numpy as np

from .channel_model import Covariance
from .linalg import eigh_descending, hermitize, reduced_trace_error
from .training import TrainingMatrix

# λ^u 小於 EIGVAL_FLOOR * λ^u_max 時視為 0
EIGVAL_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class PosteriorModel:
    """後驗模型，對同一組 (共變異數, 訓練矩陣, snr) 只計算一次並跨試驗共用"""
    filter: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    d_mmse: float
    gram: np.ndarray
    gram_eigvals: np.ndarray
    trace_h: float

    @property
    def dim(self) -> int:
        return self.filter.shape[0]

    @property
    def beta_tr(self) -> int:
        return self.filter.shape[1]

    @property
    def sigma_u_trace(self) -> float:
        return float(np.sum(self.eigvals))

    @property
    def sigma_u(self) -> np.ndarray:
        """稠密 Σ^u，只供測試與小維度檢查使用"""
        return (self.eigvecs * self.eigvals) @ self.eigvecs.conj().T

    def to_kl(self, u: np.ndarray) -> np.ndarray:
        """KL 係數 w_ℓ = g_ℓ^H u，可帶前置試驗軸"""
        return np.asarray(u) @ self.eigvecs.conj()

    def from_kl(self, w: np.ndarray) -> np.ndarray:
        """Σ_ℓ w_ℓ g_ℓ"""
        return np.asarray(w) @ self.eigvecs.T


def posterior_stats(cov: Covariance, X: TrainingMatrix) -> PosteriorModel:
    """計算後驗模型，從不分解 MN×MN 或 β_tr×β_tr 的系統"""
    if cov.rank < 1:
        raise ValueError("通道共變異數的秩必須 >= 1")
    if cov.dim != X.base.shape[0]:
        raise ValueError(f"共變異數維度 {cov.dim} 與訓練矩陣列數 {X.base.shape[0]} 不符")

    lam = cov.eigvals
    sqrt_lam = np.sqrt(lam)
    coupling = sqrt_lam[:, None] * (cov.eigvecs.conj().T @ X.matrix)
    gram = hermitize(coupling @ coupling.conj().T)

    mu, vecs = eigh_descending(gram)
    mu = np.clip(mu, 0.0, None)

    # W = U Λ^{1/2} V diag(1/(1+μ)) V^H A
    resolvent_coupling = vecs @ ((vecs.conj().T @ coupling) / (1.0 + mu)[:, None])
    filt = cov.eigvecs @ (sqrt_lam[:, None] * resolvent_coupling)

    # 核心 Λ^{1/2} G (I+G)^{-1} Λ^{1/2}
    shrink = (vecs * (mu / (1.0 + mu))) @ vecs.conj().T
    core = sqrt_lam[:, None] * shrink * sqrt_lam[None, :]
    eigvals_u, core_vecs = eigh_descending(core)
    top = eigvals_u[0] if eigvals_u.size else 0.0
    if top <= 0:
        eigvals_u = np.zeros_like(eigvals_u)
    else:
        eigvals_u = np.where(eigvals_u < EIGVAL_FLOOR * top, 0.0, eigvals_u)

    error = reduced_trace_error(lam, gram)
    return PosteriorModel(
        filter=filt,
        eigvals=eigvals_u,
        eigvecs=cov.eigvecs @ core_vecs,
        d_mmse=error.value,
        gram=gram,
        gram_eigvals=error.gram_eigvals,
        trace_h=float(np.sum(lam)),
    )


def mmse_estimate(pm: PosteriorModel, y_tr: np.ndarray) -> np.ndarray:
    """u = W y_tr^H；y_tr 形狀 (β_tr,) 或 (n, β_tr)"""
    y_tr = np.asarray(y_tr)
    if y_tr.shape[-1] != pm.beta_tr:
        raise ValueError(f"觀測長度 {y_tr.shape[-1]} 與 β_tr={pm.beta_tr} 不符")
    return y_tr.conj() @ pm.filter.T
