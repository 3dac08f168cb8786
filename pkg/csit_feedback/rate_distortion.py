"""
遠端率失真模組
反向注水、遠端率失真函數及其反函數、回饋容量誤差界與品質縮放指數
所有速率以 bits 計 (log2)
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Real

import numpy as np
import scipy.optimize

from .errors import InfeasibleDistortionError
from .estimation import PosteriorModel

# D 低於 D_mmse 的容許誤差 (相對於 Tr Σ^h)
FEASIBILITY_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class WaterfillSolution:
    """反向注水結果"""
    gamma: float
    active_set: np.ndarray
    rate_bits: float
    distortion_excess: float
    clamped: bool = False
    eigvals: np.ndarray = field(default=None, repr=False)

    @property
    def active_count(self) -> int:
        return int(self.active_set.size)


def _positive(eigvals) -> np.ndarray:
    eigvals = np.asarray(eigvals, dtype=float)
    return eigvals[eigvals > 0]


def _solution(eigvals: np.ndarray, gamma: float, clamped: bool = False) -> WaterfillSolution:
    active = np.flatnonzero(eigvals > gamma)
    rate = float(np.sum(np.log2(eigvals[active] / gamma))) if active.size else 0.0
    excess = float(np.sum(np.minimum(eigvals[eigvals > 0], gamma)))
    return WaterfillSolution(gamma=float(gamma), active_set=active, rate_bits=rate,
                             distortion_excess=excess, clamped=clamped, eigvals=eigvals)


def waterlevel_from_distortion(eigvals, excess: float) -> WaterfillSolution:
    """由 Σ min(γ, λ_ℓ) = excess 求水位 γ

    γ 是 excess 的分段線性函數，對排序後的特徵值掃描一次即可得到封閉解。
    """
    eigvals = np.asarray(eigvals, dtype=float)
    if not excess > 0:
        raise ValueError(f"失真餘量必須 > 0 (否則速率為無窮大): {excess}")
    pos = np.sort(_positive(eigvals))
    total = float(np.sum(pos))
    if pos.size == 0:
        return WaterfillSolution(gamma=float(excess), active_set=np.zeros(0, dtype=int),
                                 rate_bits=0.0, distortion_excess=0.0, clamped=True,
                                 eigvals=eigvals)
    if excess >= total:
        return _solution(eigvals, float(pos[-1]), clamped=excess > total)

    n = pos.size
    prefix = np.concatenate(([0.0], np.cumsum(pos)[:-1]))
    # breakpoints[k] = Σ min(a_k, λ)，隨 k 遞增
    breakpoints = prefix + pos * (n - np.arange(n))
    k = int(np.searchsorted(breakpoints, excess, side='right'))
    gamma = (excess - prefix[k]) / (n - k)
    return _solution(eigvals, gamma)


def distortion_rate_solution(eigvals, rate_bits: float) -> WaterfillSolution:
    """由速率 R 求水位：逐一嘗試活躍係數個數 k，γ_k = 2^{(Σ_{i<k} log2 λ_i - R)/k}"""
    eigvals = np.asarray(eigvals, dtype=float)
    if rate_bits < 0:
        raise ValueError(f"速率必須 >= 0: {rate_bits}")
    pos = np.sort(_positive(eigvals))[::-1]
    if pos.size == 0:
        return WaterfillSolution(gamma=0.0, active_set=np.zeros(0, dtype=int), rate_bits=0.0,
                                 distortion_excess=0.0, eigvals=eigvals)
    if rate_bits == 0:
        return _solution(eigvals, float(pos[0]))

    log_prefix = np.cumsum(np.log2(pos))
    for k in range(1, pos.size + 1):
        gamma = 2.0 ** ((log_prefix[k - 1] - rate_bits) / k)
        upper_ok = gamma < pos[k - 1]
        lower_ok = k == pos.size or gamma >= pos[k]
        if upper_ok and lower_ok:
            return _solution(eigvals, gamma)

    # 浮點邊界情形：在 log γ 上求根
    def excess_rate(t):
        g = 2.0 ** t
        return float(np.sum(np.log2(np.maximum(pos / g, 1.0)))) - rate_bits

    top = math.log2(pos[0])
    low = top - rate_bits - 1.0
    t_star = scipy.optimize.brentq(excess_rate, low, top, xtol=1e-14)
    return _solution(eigvals, 2.0 ** t_star)


def remote_rate_from_excess(pm: PosteriorModel, excess: float) -> float:
    """以超出 D_mmse 的誤差 D - D_mmse 計算 R_h^r，避免 D 與 D_mmse 相減的消去誤差"""
    if excess < -FEASIBILITY_TOLERANCE * max(1.0, pm.trace_h):
        raise InfeasibleDistortionError(pm.d_mmse + excess, pm.d_mmse)
    if pm.sigma_u_trace == 0:
        return 0.0
    if excess <= 0:
        return math.inf
    return waterlevel_from_distortion(pm.eigvals, excess).rate_bits


def remote_rate(pm: PosteriorModel, distortion: float) -> float:
    """R_h^r(D) = Σ [log2(λ_ℓ^u / γ)]_+"""
    return remote_rate_from_excess(pm, distortion - pm.d_mmse)


def remote_distortion_excess(pm: PosteriorModel, rate_bits: float) -> float:
    """D_h^r(R) - D_mmse，即反向注水的 Σ min(γ, λ_ℓ^u)"""
    return distortion_rate_solution(pm.eigvals, rate_bits).distortion_excess


def remote_distortion(pm: PosteriorModel, rate_bits: float) -> float:
    """D_h^r(R)，R_h^r 的反函數"""
    return pm.d_mmse + remote_distortion_excess(pm, rate_bits)


def rate_offset(eigvals) -> float:
    """f(r) = Σ log2 λ_ℓ^u + r log2 r (僅計正特徵值)"""
    pos = _positive(eigvals)
    r = pos.size
    if r == 0:
        return 0.0
    return float(np.sum(np.log2(pos)) + r * math.log2(r))


def high_rate_distortion(pm: PosteriorModel, rate_bits: float) -> float:
    """高速率封閉解 D_mmse + 2^{(f(r) - R)/r}，所有係數皆活躍時成立"""
    r = _positive(pm.eigvals).size
    if r == 0:
        return pm.d_mmse
    return pm.d_mmse + 2.0 ** ((rate_offset(pm.eigvals) - rate_bits) / r)


def uplink_snr(snr_dl: float, kappa: float) -> float:
    """snr_ul = κ snr_dl"""
    if kappa <= 0:
        raise ValueError(f"κ 必須 > 0: {kappa}")
    return kappa * snr_dl


def feedback_capacity(snr_dl: float, kappa: float, M: int) -> float:
    """C_ul = log2(1 + M κ snr_dl) bits/次"""
    if snr_dl < 0:
        raise ValueError(f"snr_dl 必須 >= 0: {snr_dl}")
    return math.log1p(M * uplink_snr(snr_dl, kappa)) / math.log(2.0)


def rd_error_bound(pm: PosteriorModel, beta_fb: int, c_ul: float) -> float:
    """回饋 β_fb C_ul bits 可達到的誤差下界 D_h^r(β_fb C_ul)"""
    if beta_fb < 0:
        raise ValueError(f"β_fb 必須 >= 0: {beta_fb}")
    return remote_distortion(pm, beta_fb * c_ul)


def rd_exponent(beta_tr: int, beta_fb: int, r: int) -> Fraction:
    """α_rd = min(β_fb/r, 1) · 1{β_tr >= r}，以有理數精確計算"""
    if r < 1:
        raise ValueError(f"秩 r 必須 >= 1: {r}")
    if beta_tr < 0 or beta_fb < 0:
        raise ValueError(f"β_tr, β_fb 必須 >= 0: {beta_tr}, {beta_fb}")
    if beta_tr < r:
        return Fraction(0)
    return min(Fraction(beta_fb, r), Fraction(1))


def _check_dof_args(alpha: Real, K: int):
    if not 0 <= alpha <= 1:
        raise ValueError(f"α 必須介於 0 與 1: {alpha}")
    if K < 1:
        raise ValueError(f"UE 數 K 必須 >= 1: {K}")


def rd_dof(alpha: Real, K: int) -> Real:
    """速率分割下的系統 DoF：1 + α (K-1)"""
    _check_dof_args(alpha, K)
    return 1 + alpha * (K - 1)


def zf_dof(alpha: Real, K: int) -> Real:
    """ZF 預編碼的系統 DoF：K α"""
    _check_dof_args(alpha, K)
    return K * alpha
