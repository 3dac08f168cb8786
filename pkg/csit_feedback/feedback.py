"""
CSIT 回饋策略模組
每種策略提供解析誤差以及由 (通道, 訓練觀測) 重建 BS 端估計 ĥ 的方法
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .analog_feedback import (
    AnalogFeedbackReceiver,
    SpreadingMatrix,
    af_transmit,
    build_spreading_matrix,
)
from .channel_model import Covariance, sample_channels
from .ecsq import BitAllocation, budget_to_allocation, ecsq_encode_decode
from .estimation import PosteriorModel, mmse_estimate, posterior_stats
from .rate_distortion import (
    distortion_rate_solution,
    feedback_capacity,
    uplink_snr,
)
from .rng import StreamFactory, complex_normal
from .training import TrainingMatrix, observation_covariance, observe

STRATEGIES = ('rd', 'ecsq', 'af', 'perfect')


class FeedbackStrategy:
    """回饋策略基底類別"""

    name = ''

    @property
    def analytic_error(self) -> float:
        raise NotImplementedError

    def reconstruct(self, channels: np.ndarray, observations: np.ndarray,
                    rng: np.random.Generator) -> np.ndarray:
        """回傳 BS 端估計，形狀與 channels 相同 (n, MN)"""
        raise NotImplementedError


class PerfectCSIT(FeedbackStrategy):
    name = 'perfect'

    @property
    def analytic_error(self) -> float:
        return 0.0

    def reconstruct(self, channels, observations, rng):
        return np.array(channels, copy=True)


class RateDistortionFeedback(FeedbackStrategy):
    """率失真界的替代模型：KL 基底上的高斯反向測試通道

    活躍係數 ŵ = (1 - γ/λ) w + CN(0, γ(1 - γ/λ))，其餘為 0，
    每個方向的誤差恰為 min(γ, λ_ℓ^u)。
    """
    name = 'rd'

    def __init__(self, posterior: PosteriorModel, budget_bits: float):
        self.posterior = posterior
        self.budget_bits = budget_bits
        self.solution = distortion_rate_solution(posterior.eigvals, budget_bits)

    @property
    def analytic_error(self) -> float:
        return self.posterior.d_mmse + self.solution.distortion_excess

    def reconstruct(self, channels, observations, rng):
        pm = self.posterior
        w = pm.to_kl(mmse_estimate(pm, observations))
        w_hat = np.zeros(w.shape, dtype=complex)
        active = self.solution.active_set
        if active.size:
            lam = pm.eigvals[active]
            shrink = 1.0 - self.solution.gamma / lam
            noise = complex_normal(rng, w[..., active].shape, 1.0) * np.sqrt(self.solution.gamma * shrink)
            w_hat[..., active] = shrink * w[..., active] + noise
        return pm.from_kl(w_hat)


class ECSQFeedback(FeedbackStrategy):
    name = 'ecsq'

    def __init__(self, posterior: PosteriorModel, budget_bits: float):
        self.posterior = posterior
        self.budget_bits = budget_bits
        self.allocation: BitAllocation = budget_to_allocation(posterior, budget_bits)

    @property
    def analytic_error(self) -> float:
        return self.allocation.target_D

    def reconstruct(self, channels, observations, rng):
        pm = self.posterior
        w = pm.to_kl(mmse_estimate(pm, observations))
        return pm.from_kl(ecsq_encode_decode(w, self.allocation, rng))


class AnalogFeedback(FeedbackStrategy):
    name = 'af'

    def __init__(self, cov: Covariance, training: TrainingMatrix, spreading: SpreadingMatrix):
        self.spreading = spreading
        self.receiver = AnalogFeedbackReceiver(cov, training, spreading)

    @property
    def analytic_error(self) -> float:
        return self.receiver.analytic_error

    def reconstruct(self, channels, observations, rng):
        return self.receiver.estimate(af_transmit(observations, self.spreading, rng))


def build_feedback(strategy: str, cov: Covariance, training: TrainingMatrix, beta_fb: int,
                   kappa: float, spreading_rng: np.random.Generator,
                   posterior: Optional[PosteriorModel] = None) -> FeedbackStrategy:
    """依策略名稱建立回饋物件，回饋預算為 β_fb · C_ul"""
    if strategy not in STRATEGIES:
        raise ValueError(f"未知的回饋策略: {strategy} (可用: {', '.join(STRATEGIES)})")
    if strategy == 'perfect':
        return PerfectCSIT()
    if strategy == 'af':
        sigma_y = observation_covariance(cov, training)
        spreading = build_spreading_matrix(sigma_y, beta_fb, cov.M,
                                           uplink_snr(training.snr_dl, kappa), spreading_rng)
        return AnalogFeedback(cov, training, spreading)

    if posterior is None:
        posterior = posterior_stats(cov, training)
    budget = beta_fb * feedback_capacity(training.snr_dl, kappa, cov.M)
    if strategy == 'rd':
        return RateDistortionFeedback(posterior, budget)
    return ECSQFeedback(posterior, budget)


@dataclass
class FeedbackOutcome:
    """單一 UE 在一組訓練矩陣與 snr 下的回饋模擬結果"""
    strategy: str
    channels: np.ndarray
    estimates: np.ndarray
    analytic_error: float

    @property
    def squared_errors(self) -> np.ndarray:
        """每次試驗的 ‖h - ĥ‖²"""
        return np.sum(np.abs(self.channels - self.estimates) ** 2, axis=-1)


def simulate_feedback(strategy: str, cov: Covariance, training: TrainingMatrix, beta_fb: int,
                      kappa: float, trials: int, streams: StreamFactory, ue: int,
                      posterior: Optional[PosteriorModel] = None) -> FeedbackOutcome:
    """抽樣通道與訓練雜訊並經由回饋策略重建

    通道、訓練雜訊與展頻矩陣的串流不含策略名稱，各策略看到相同的隨機數。
    """
    feedback = build_feedback(strategy, cov, training, beta_fb, kappa,
                              streams.generator('spreading', ue), posterior)
    channels = sample_channels(cov, trials, streams.generator('channel', ue))
    observations = observe(channels, training, streams.generator('training-noise', ue))
    estimates = feedback.reconstruct(channels, observations,
                                     streams.generator(f'feedback:{strategy}', ue))
    return FeedbackOutcome(strategy=strategy, channels=channels, estimates=estimates,
                           analytic_error=feedback.analytic_error)
