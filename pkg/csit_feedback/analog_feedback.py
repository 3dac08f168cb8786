"""
類比回饋 (AF) 模組
展頻矩陣建構、UE 端類比傳送、BS 端 MMSE 估計與 AF 誤差的封閉解
"""

from dataclasses import dataclass
from numbers import Real

import numpy as np
import scipy.linalg
from scipy.stats import unitary_group

from .channel_model import Covariance
from .linalg import ReducedError, eigh_descending, hermitize, reduced_trace_error
from .rate_distortion import rd_dof
from .rng import complex_normal
from .training import TrainingMatrix


@dataclass(frozen=True, eq=False)
class SpreadingMatrix:
    """展頻矩陣 Ψ，第 i 行 ψ_i = sqrt(a_i) φ_i"""
    psi: np.ndarray
    directions: np.ndarray
    scales: np.ndarray
    power: float

    @property
    def beta_tr(self) -> int:
        return self.psi.shape[0]

    @property
    def beta_fb(self) -> int:
        return self.psi.shape[1]

    @property
    def zeta(self) -> float:
        return self.beta_fb / self.beta_tr

    def column_powers(self, sigma_y: np.ndarray) -> np.ndarray:
        """ψ_i^H Σ_{y_tr} ψ_i"""
        return np.real(np.sum(self.psi.conj() * (sigma_y @ self.psi), axis=0))


def _haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    if dim == 1:
        return np.exp(2j * np.pi * rng.uniform(size=(1, 1)))
    return unitary_group.rvs(dim, random_state=rng)


def build_spreading_matrix(sigma_y: np.ndarray, beta_fb: int, M: int, snr_ul: float,
                           rng: np.random.Generator) -> SpreadingMatrix:
    """φ_i 取自 Haar 隨機么正矩陣的行 (β_fb > β_tr 時循環使用)，
    a_i = M snr_ul / (φ_i^H Σ_{y_tr} φ_i)
    """
    if beta_fb < 0:
        raise ValueError(f"β_fb 必須 >= 0: {beta_fb}")
    if snr_ul < 0:
        raise ValueError(f"snr_ul 必須 >= 0: {snr_ul}")
    beta_tr = sigma_y.shape[0]
    base = _haar_unitary(beta_tr, rng)
    directions = base[:, np.arange(beta_fb) % beta_tr]
    quad = np.real(np.sum(directions.conj() * (sigma_y @ directions), axis=0))
    power = M * snr_ul
    scales = power / quad
    return SpreadingMatrix(psi=directions * np.sqrt(scales), directions=directions,
                           scales=scales, power=float(power))


def af_transmit(y_tr: np.ndarray, spreading: SpreadingMatrix, rng: np.random.Generator,
                noise: bool = True) -> np.ndarray:
    """y_af = y_tr Ψ + z~；y_tr 可帶前置試驗軸，noise=False 僅供測試使用"""
    y_tr = np.asarray(y_tr)
    if y_tr.shape[-1] != spreading.beta_tr:
        raise ValueError(f"觀測長度 {y_tr.shape[-1]} 與展頻矩陣列數 {spreading.beta_tr} 不符")
    y_af = y_tr @ spreading.psi
    if noise:
        y_af = y_af + complex_normal(rng, y_af.shape)
    return y_af


class AnalogFeedbackReceiver:
    """BS 端 AF MMSE 估計器

    A = Λ^{1/2} U^H X Ψ，N = Ψ^H Ψ + I，G = A N^{-1} A^H，
    ĥ = U Λ^{1/2} (I+G)^{-1} A N^{-1} y_af^H。
    """

    def __init__(self, cov: Covariance, X: TrainingMatrix, spreading: SpreadingMatrix):
        if cov.dim != X.base.shape[0]:
            raise ValueError(f"共變異數維度 {cov.dim} 與訓練矩陣列數 {X.base.shape[0]} 不符")
        if spreading.beta_tr != X.beta_tr:
            raise ValueError(f"展頻矩陣列數 {spreading.beta_tr} 與 β_tr={X.beta_tr} 不符")
        self.cov = cov
        self.beta_fb = spreading.beta_fb
        sqrt_lam = np.sqrt(cov.eigvals)
        coupling = sqrt_lam[:, None] * (cov.eigvecs.conj().T @ X.matrix @ spreading.psi)

        if self.beta_fb == 0:
            whitened = np.zeros((cov.rank, 0), dtype=complex)
        else:
            noise_cov = hermitize(spreading.psi.conj().T @ spreading.psi + np.eye(self.beta_fb))
            factor = scipy.linalg.cho_factor(noise_cov)
            # A N^{-1} = (N^{-1} A^H)^H
            whitened = scipy.linalg.cho_solve(factor, coupling.conj().T).conj().T
        self.gram = hermitize(whitened @ coupling.conj().T)

        mu, vecs = eigh_descending(self.gram)
        mu = np.clip(mu, 0.0, None)
        resolvent = (vecs / (1.0 + mu)) @ vecs.conj().T
        self.filter = cov.eigvecs @ (sqrt_lam[:, None] * (resolvent @ whitened))
        self.error: ReducedError = reduced_trace_error(cov.eigvals, self.gram)

    @property
    def gram_eigvals(self) -> np.ndarray:
        return self.error.gram_eigvals

    @property
    def analytic_error(self) -> float:
        return self.error.value

    def estimate(self, y_af: np.ndarray) -> np.ndarray:
        """ĥ = F y_af^H；y_af 形狀 (β_fb,) 或 (n, β_fb)"""
        y_af = np.asarray(y_af)
        if y_af.shape[-1] != self.beta_fb:
            raise ValueError(f"回饋長度 {y_af.shape[-1]} 與 β_fb={self.beta_fb} 不符")
        return y_af.conj() @ self.filter.T


def af_estimate(cov: Covariance, X: TrainingMatrix, spreading: SpreadingMatrix,
                y_af: np.ndarray) -> np.ndarray:
    return AnalogFeedbackReceiver(cov, X, spreading).estimate(y_af)


def af_error(cov: Covariance, X: TrainingMatrix, spreading: SpreadingMatrix) -> float:
    """D_af = Tr(Λ_h (I - G + G (I+G)^{-1} G))"""
    return AnalogFeedbackReceiver(cov, X, spreading).analytic_error


def af_exponent(beta_tr: int, beta_fb: int, r: int) -> int:
    """α_af = 1{min(β_tr, β_fb) >= r}"""
    if r < 1:
        raise ValueError(f"秩 r 必須 >= 1: {r}")
    if beta_tr < 0 or beta_fb < 0:
        raise ValueError(f"β_tr, β_fb 必須 >= 0: {beta_tr}, {beta_fb}")
    return 1 if min(beta_tr, beta_fb) >= r else 0


def af_dof(alpha: Real, K: int) -> Real:
    """AF 的系統 DoF，公式與率失真相同"""
    return rd_dof(alpha, K)
