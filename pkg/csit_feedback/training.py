"""
下行訓練模組
導頻樣式、區塊稀疏訓練矩陣與 UE 端訓練觀測
"""

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .channel_model import ChannelRealization, Covariance, channel_vector
from .rng import complex_normal


@dataclass(frozen=True, eq=False)
class TrainingMatrix:
    """訓練矩陣 X^tr = sqrt(snr_dl) * X_0

    X_0 形狀 (MN, β_tr)，非導頻子載波的列全為零，非零元素 ~ CN(0, 1/M)。
    """
    pattern: np.ndarray
    T_p: int
    M: int
    N: int
    base: np.ndarray
    snr_dl: float

    @property
    def beta_tr(self) -> int:
        return self.T_p * len(self.pattern)

    @property
    def N_p(self) -> int:
        return len(self.pattern)

    @property
    def matrix(self) -> np.ndarray:
        return math.sqrt(self.snr_dl) * self.base

    def with_snr(self, snr_dl: float) -> 'TrainingMatrix':
        """共用同一個 X_0，只改變 SNR"""
        if snr_dl < 0:
            raise ValueError(f"snr_dl 必須 >= 0: {snr_dl}")
        return replace(self, snr_dl=float(snr_dl))


def pilot_pattern(N: int, N_p: int, offset: int = 0) -> np.ndarray:
    """均勻導頻樣式 (0 起算)：offset, offset + ⌊N/N_p⌋, ..."""
    if N_p < 1 or N_p > N:
        raise ValueError(f"導頻子載波數 N_p 必須介於 1 與 N={N}: {N_p}")
    spacing = N // N_p
    indices = offset + spacing * np.arange(N_p)
    if offset < 0 or indices[-1] >= N:
        raise ValueError(f"導頻偏移 {offset} 使樣式超出 {N} 個子載波")
    return indices


def build_training_matrix(pattern, T_p: int, M: int, N: int, snr_dl: float,
                          rng: np.random.Generator) -> TrainingMatrix:
    """各導頻子載波放置 T_p 個等向高斯導頻向量"""
    if T_p < 1:
        raise ValueError(f"每個導頻子載波的導頻數 T_p 必須 >= 1: {T_p}")
    if snr_dl < 0:
        raise ValueError(f"snr_dl 必須 >= 0: {snr_dl}")
    pattern = np.asarray(pattern, dtype=int)
    if np.any(pattern < 0) or np.any(pattern >= N):
        raise ValueError(f"導頻樣式超出 {N} 個子載波: {pattern}")
    base = np.zeros((M * N, T_p * len(pattern)), dtype=complex)
    for ell, n in enumerate(pattern):
        base[n * M:(n + 1) * M, ell * T_p:(ell + 1) * T_p] = complex_normal(rng, (M, T_p), 1.0 / M)
    return TrainingMatrix(pattern=pattern, T_p=int(T_p), M=int(M), N=int(N),
                          base=base, snr_dl=float(snr_dl))


def observe(h: Union[ChannelRealization, np.ndarray], X: TrainingMatrix,
            rng: np.random.Generator, noise: bool = True) -> np.ndarray:
    """y_tr = h^H X^tr + z，z ~ CN(0, I)；h 可帶前置試驗軸 (n, MN)

    noise=False 僅供測試使用。
    """
    h = channel_vector(h)
    if h.shape[-1] != X.base.shape[0]:
        raise ValueError(f"通道維度 {h.shape[-1]} 與訓練矩陣列數 {X.base.shape[0]} 不符")
    y = h.conj() @ X.matrix
    if noise:
        y = y + complex_normal(rng, y.shape)
    return y


def observation_covariance(cov: Covariance, X: TrainingMatrix) -> np.ndarray:
    """Σ_{y_tr} = X^H Σ^h X + I，經由 r 維因子計算"""
    if cov.dim != X.base.shape[0]:
        raise ValueError(f"共變異數維度 {cov.dim} 與訓練矩陣列數 {X.base.shape[0]} 不符")
    coupling = np.sqrt(cov.eigvals)[:, None] * (cov.eigvecs.conj().T @ X.matrix)
    sigma = coupling.conj().T @ coupling + np.eye(X.beta_tr)
    return 0.5 * (sigma + sigma.conj().T)
