"""
熵編碼純量量化 (ECSQ) 模組
對 MMSE 估計的 KL 係數做減法抖動均勻量化，並依 1.508 bits 額外負擔計算回饋位元數
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import InfeasibleDistortionError
from .estimation import PosteriorModel
from .rate_distortion import waterlevel_from_distortion

# 每個複數係數相對於率失真界的位元額外負擔
ECSQ_OVERHEAD_BITS = 1.508
# 最小可表示誤差：γ 下限為 λ_max * 2^GAMMA_FLOOR_LOG2
GAMMA_FLOOR_LOG2 = -664.0
BISECT_XTOL = 1e-12


@dataclass(frozen=True, eq=False)
class BitAllocation:
    """ECSQ 位元配置"""
    gamma: float
    quantized_set: np.ndarray
    per_coeff_bits: np.ndarray
    total_bits: float
    target_D: float
    saturated: bool = False

    @property
    def quantized_count(self) -> int:
        return int(self.quantized_set.size)

    @property
    def step(self) -> float:
        """每個實數維度的量化步階 √(6γ)"""
        return math.sqrt(6.0 * self.gamma)


def _allocation(pm: PosteriorModel, gamma: float, saturated: bool = False) -> BitAllocation:
    lam = pm.eigvals
    quantized = np.flatnonzero(lam > gamma)
    bits = np.log2(lam[quantized] / gamma) + ECSQ_OVERHEAD_BITS if quantized.size else np.zeros(0)
    target = pm.d_mmse + float(np.sum(np.minimum(lam, gamma)))
    return BitAllocation(gamma=float(gamma), quantized_set=quantized, per_coeff_bits=bits,
                         total_bits=float(np.sum(bits)), target_D=target, saturated=saturated)


def scalar_rate(pm: PosteriorModel, gamma: float) -> float:
    """R_scalar(γ) = Σ_{λ > γ} (log2(λ/γ) + 1.508)，對 γ 右連續"""
    lam = pm.eigvals[pm.eigvals > gamma]
    if lam.size == 0:
        return 0.0
    return float(np.sum(np.log2(lam / gamma)) + ECSQ_OVERHEAD_BITS * lam.size)


def allocate_bits(pm: PosteriorModel, distortion: float) -> BitAllocation:
    """只量化 λ_ℓ^u > γ 的係數，每個係數的誤差目標為 min(λ_ℓ^u, γ)"""
    excess = distortion - pm.d_mmse
    if excess <= 0:
        raise InfeasibleDistortionError(distortion, pm.d_mmse)
    solution = waterlevel_from_distortion(pm.eigvals, excess)
    return _allocation(pm, solution.gamma)


def budget_to_allocation(pm: PosteriorModel, budget_bits: float) -> BitAllocation:
    """在 R_scalar <= budget 之下誤差最小的配置

    以 t = log2 γ 做二分搜尋；預算落在 R_scalar 的跳躍區間時取跳躍點右側。
    """
    if budget_bits < 0:
        raise ValueError(f"回饋預算必須 >= 0: {budget_bits}")
    pos = pm.eigvals[pm.eigvals > 0]
    if pos.size == 0:
        return _allocation(pm, 0.0)

    t_hi = math.log2(float(pos.max()))
    t_lo = t_hi + GAMMA_FLOOR_LOG2
    if budget_bits <= ECSQ_OVERHEAD_BITS:
        return _allocation(pm, 2.0 ** t_hi)
    if scalar_rate(pm, 2.0 ** t_lo) <= budget_bits:
        return _allocation(pm, 2.0 ** t_lo, saturated=True)

    def over_budget(t):
        return scalar_rate(pm, 2.0 ** t) - budget_bits

    t_star = scipy.optimize.bisect(over_budget, t_lo, t_hi, xtol=BISECT_XTOL)
    if over_budget(t_star) > 0:
        t_star += 2 * BISECT_XTOL
    return _allocation(pm, 2.0 ** t_star)


def budget_to_error(pm: PosteriorModel, beta_fb: int, c_ul: float) -> float:
    """回饋 β_fb C_ul bits 時 ECSQ 可達到的誤差"""
    return budget_to_allocation(pm, beta_fb * c_ul).target_D


class DitheredScalarQuantizer:
    """減法抖動 mid-tread 均勻量化器，實部與虛部各自量化

    每個實數維度的誤差為 Δ²/12，與輸入無關；Δ = √(6γ) 時每個複數係數誤差為 γ。
    """

    def __init__(self, gamma: float):
        if gamma <= 0:
            raise ValueError(f"γ 必須 > 0: {gamma}")
        self.gamma = float(gamma)
        self.step = math.sqrt(6.0 * self.gamma)

    def draw_dither(self, rng: np.random.Generator, shape) -> np.ndarray:
        half = self.step / 2.0
        return rng.uniform(-half, half, size=shape) + 1j * rng.uniform(-half, half, size=shape)

    def encode(self, x: np.ndarray, dither: np.ndarray):
        """回傳 (實部索引, 虛部索引)，索引範圍不設上限"""
        shifted = np.asarray(x) + dither
        q_re = np.floor(shifted.real / self.step + 0.5).astype(np.int64)
        q_im = np.floor(shifted.imag / self.step + 0.5).astype(np.int64)
        return q_re, q_im

    def decode(self, indices, dither: np.ndarray) -> np.ndarray:
        q_re, q_im = indices
        return self.step * (q_re + 1j * q_im) - dither

    def __repr__(self):
        return f"DitheredScalarQuantizer(gamma={self.gamma:.6g}, step={self.step:.6g})"


def ecsq_encode_decode(w: np.ndarray, alloc: BitAllocation, rng: np.random.Generator,
                       dither: bool = True) -> np.ndarray:
    """量化後重建的 KL 係數 ŵ；w 形狀 (r,) 或 (n, r)

    編碼與解碼共用同一組抖動，dither=False 僅供測試使用。
    """
    w = np.asarray(w)
    w_hat = np.zeros(w.shape, dtype=complex)
    if alloc.quantized_count == 0:
        return w_hat
    quantizer = DitheredScalarQuantizer(alloc.gamma)
    selected = w[..., alloc.quantized_set]
    if dither:
        d = quantizer.draw_dither(rng, selected.shape)
    else:
        d = np.zeros(selected.shape, dtype=complex)
    w_hat[..., alloc.quantized_set] = quantizer.decode(quantizer.encode(selected, d), d)
    return w_hat
