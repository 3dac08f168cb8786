"""
下行傳輸模組
由估計 CSIT 計算逐子載波 ZF 預編碼，並以蒙地卡羅估計遍歷和速率
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .channel_model import Covariance
from .errors import SingularPrecoderError
from .feedback import STRATEGIES, simulate_feedback
from .rng import StreamFactory
from .training import TrainingMatrix

logger = logging.getLogger(__name__)

# 最小奇異值小於 SINGULAR_TOLERANCE * 最大奇異值時視為秩不足
SINGULAR_TOLERANCE = 1e-10
PILOT_WEIGHTINGS = ('overhead', 'uniform')


@dataclass(frozen=True, eq=False)
class PrecoderSet:
    """逐子載波預編碼 V[n]，形狀 (N, M, K)，各行為單位向量"""
    V: np.ndarray

    @property
    def N(self) -> int:
        return self.V.shape[0]

    @property
    def K(self) -> int:
        return self.V.shape[-1]

    def __getitem__(self, n: int) -> np.ndarray:
        return self.V[n]


def channel_matrices(channels: np.ndarray, M: int) -> np.ndarray:
    """(..., K, MN) 的通道堆疊轉為 H[n]，形狀 (..., N, K, M)，第 k 列為 h~_k[n]^H"""
    channels = np.asarray(channels)
    K, dim = channels.shape[-2:]
    N = dim // M
    stacked = channels.reshape(channels.shape[:-2] + (K, N, M))
    return np.swapaxes(stacked, -3, -2).conj()


def _stacked_zf(H: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """對任意前置軸的 K×M 矩陣堆疊計算行正規化偽逆，並回傳秩不足遮罩"""
    s = np.linalg.svd(H, compute_uv=False)
    singular = s[..., -1] <= SINGULAR_TOLERANCE * s[..., 0]
    V = np.linalg.pinv(H)
    norms = np.linalg.norm(V, axis=-2, keepdims=True)
    V = V / np.where(norms > 0, norms, 1.0)
    return V, singular


def zf_precoder(H: np.ndarray, subcarrier: int = 0) -> np.ndarray:
    """單一子載波：V = pinv(Ĥ) 並將各行正規化"""
    H = np.asarray(H)
    K, M = H.shape
    if K > M:
        raise ValueError(f"UE 數 K={K} 不可大於天線數 M={M}")
    V, singular = _stacked_zf(H)
    if singular:
        raise SingularPrecoderError(subcarrier)
    return V


def zf_precoders(estimates: np.ndarray, M: int) -> PrecoderSet:
    """K 個估計通道 (K, MN) 的全部子載波 ZF 預編碼"""
    H = channel_matrices(estimates, M)
    K = H.shape[-2]
    if K > M:
        raise ValueError(f"UE 數 K={K} 不可大於天線數 M={M}")
    V, singular = _stacked_zf(H)
    if np.any(singular):
        raise SingularPrecoderError(int(np.flatnonzero(singular)[0]))
    return PrecoderSet(V=V)


def effective_gains(H_true: np.ndarray, V: np.ndarray, P: float) -> np.ndarray:
    """g_{k,k'} = sqrt(P) h~_k^H v_{k'}；H_true 第 k 列為 h~_k^H"""
    if P < 0:
        raise ValueError(f"每 UE 功率必須 >= 0: {P}")
    return math.sqrt(P) * (np.asarray(H_true) @ V)


def subcarrier_weights(N: int, pattern, T: int, T_p: int, mode: str = 'overhead') -> np.ndarray:
    """導頻子載波權重 (T - T_p)/T，資料子載波權重 1；uniform 模式全部為 1"""
    if mode not in PILOT_WEIGHTINGS:
        raise ValueError(f"未知的導頻權重模式: {mode}")
    weights = np.ones(N)
    if mode == 'overhead':
        weights[np.asarray(pattern, dtype=int)] = (T - T_p) / T
    return weights


def realization_sum_rates(channels: np.ndarray, estimates: np.ndarray, M: int, snr_dl: float,
                          weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """逐試驗和速率 Σ_k (1/N) Σ_n w_n log2(1 + |g_kk|² / (1 + Σ_{k'≠k} |g_kk'|²))

    channels 與 estimates 形狀為 (trials, K, MN)；回傳 (和速率, 秩不足遮罩)。
    """
    H_true = channel_matrices(channels, M)
    H_hat = channel_matrices(estimates, M)
    K = H_true.shape[-2]
    V, singular = _stacked_zf(H_hat)
    gains = effective_gains(H_true, V, snr_dl / K)
    power = np.abs(gains) ** 2
    signal = np.diagonal(power, axis1=-2, axis2=-1)
    interference = np.sum(power, axis=-1) - signal
    rates = np.log2(1.0 + signal / (1.0 + interference))
    per_subcarrier = np.sum(rates, axis=-1)
    sum_rates = per_subcarrier @ weights / len(weights)
    return sum_rates, np.any(singular, axis=-1)


@dataclass
class DownlinkScenario:
    """一組 UE 共變異數與共用訓練矩陣構成的下行情境"""
    covariances: List[Covariance]
    training: TrainingMatrix
    beta_fb: int
    kappa: float
    T: int
    pilot_weighting: str = 'overhead'

    @property
    def K(self) -> int:
        return len(self.covariances)

    @property
    def M(self) -> int:
        return self.training.M

    @property
    def weights(self) -> np.ndarray:
        return subcarrier_weights(self.training.N, self.training.pattern, self.T,
                                  self.training.T_p, self.pilot_weighting)


@dataclass
class SumRateEstimate:
    """蒙地卡羅和速率估計"""
    samples: np.ndarray
    discarded: int = 0
    singular_trials: List[int] = field(default_factory=list)

    @property
    def n_trials(self) -> int:
        return int(self.samples.size)

    @property
    def mean(self) -> float:
        if self.samples.size == 0:
            return 0.0
        return math.fsum(self.samples) / self.samples.size


def ergodic_sumrate(scenario: DownlinkScenario, strategy: str, snr_dl: float, trials: int,
                    streams: StreamFactory) -> SumRateEstimate:
    """在指定 snr 下模擬 trials 個訊框的和速率，秩不足的試驗捨棄並計數"""
    if strategy not in STRATEGIES:
        raise ValueError(f"未知的回饋策略: {strategy} (可用: {', '.join(STRATEGIES)})")
    if trials < 1:
        raise ValueError(f"試驗次數必須 >= 1: {trials}")
    if scenario.K > scenario.M:
        raise ValueError(f"UE 數 K={scenario.K} 不可大於天線數 M={scenario.M}")

    training = scenario.training.with_snr(snr_dl)
    channels, estimates = [], []
    for ue, cov in enumerate(scenario.covariances):
        outcome = simulate_feedback(strategy, cov, training, scenario.beta_fb, scenario.kappa,
                                    trials, streams, ue)
        channels.append(outcome.channels)
        estimates.append(outcome.estimates)

    sum_rates, singular = realization_sum_rates(np.stack(channels, axis=1),
                                                np.stack(estimates, axis=1),
                                                scenario.M, snr_dl, scenario.weights)
    dropped = np.flatnonzero(singular)
    if dropped.size:
        logger.warning(f"策略 {strategy} snr={snr_dl:.4g}: {dropped.size} 次試驗的預編碼秩不足，已捨棄")
    return SumRateEstimate(samples=sum_rates[~singular], discarded=int(dropped.size),
                           singular_trials=dropped.tolist())
