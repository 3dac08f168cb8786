"""
多徑通道模型模組
產生各 UE 的多徑幾何、解析通道共變異數與區塊衰落通道實現
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
import scipy.linalg

from .rng import complex_normal

# 特徵值大於 RANK_TOLERANCE * λ_max 才計入秩
RANK_TOLERANCE = 1e-10
DEFAULT_SUBCARRIER_SPACING = 15e3


@dataclass(frozen=True)
class Path:
    """單一路徑：到達角 theta (弧度) 與延遲 tau (秒)"""
    theta: float
    tau: float


@dataclass(frozen=True)
class MultipathGeometry:
    """UE 的多徑幾何，跨訊框固定"""
    paths: Tuple[Path, ...]
    d_over_lambda: float = 0.5
    delta_f: float = DEFAULT_SUBCARRIER_SPACING
    tau_max: Optional[float] = None

    def __post_init__(self):
        if len(self.paths) < 1:
            raise ValueError("多徑幾何至少需要一條路徑 (L >= 1)")
        for path in self.paths:
            if not -math.pi / 2 <= path.theta <= math.pi / 2:
                raise ValueError(f"到達角超出 [-pi/2, pi/2]: {path.theta}")
            if path.tau < 0 or (self.tau_max is not None and path.tau > self.tau_max):
                raise ValueError(f"延遲超出 [0, tau_max]: {path.tau}")

    @property
    def L(self) -> int:
        return len(self.paths)


@dataclass(frozen=True, eq=False)
class Covariance:
    """通道共變異數 Σ^h 及其快取的特徵分解"""
    M: int
    N: int
    matrix: np.ndarray
    eigvecs: np.ndarray
    eigvals: np.ndarray

    @property
    def dim(self) -> int:
        return self.M * self.N

    @property
    def rank(self) -> int:
        return int(self.eigvals.size)

    @classmethod
    def from_factor(cls, factor: np.ndarray, M: int, N: int) -> 'Covariance':
        """由 Σ = F F^H 的因子建立，特徵分解取自 F 的精簡 SVD"""
        if factor.shape[1] == 0:
            return cls.zero(M, N)
        u, s, _ = scipy.linalg.svd(factor, full_matrices=False)
        eigvals = s ** 2
        keep = eigvals > RANK_TOLERANCE * eigvals[0]
        if eigvals[0] <= 0:
            keep[:] = False
        matrix = factor @ factor.conj().T
        matrix = 0.5 * (matrix + matrix.conj().T)
        return cls(M=M, N=N, matrix=matrix, eigvecs=u[:, keep], eigvals=eigvals[keep])

    @classmethod
    def zero(cls, M: int, N: int) -> 'Covariance':
        dim = M * N
        return cls(M=M, N=N, matrix=np.zeros((dim, dim), dtype=complex),
                   eigvecs=np.zeros((dim, 0), dtype=complex), eigvals=np.zeros(0))

    def projection_residual(self, h: np.ndarray) -> np.ndarray:
        """(I - U_h U_h^H) h"""
        h = np.asarray(h)
        return h - (h @ self.eigvecs.conj()) @ self.eigvecs.T


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """單一訊框的通道向量 h，依子載波排列 (索引 n*M + m)"""
    h: np.ndarray
    M: int

    def __post_init__(self):
        if self.h.ndim != 1 or self.h.size % self.M != 0:
            raise ValueError(f"通道向量長度 {self.h.size} 不是 M={self.M} 的倍數")

    @property
    def N(self) -> int:
        return self.h.size // self.M

    def per_subcarrier(self) -> np.ndarray:
        """形狀 (N, M)，第 n 列為 h~[n]"""
        return self.h.reshape(self.N, self.M)


def channel_vector(h: Union[ChannelRealization, np.ndarray]) -> np.ndarray:
    """接受 ChannelRealization 或陣列，回傳 ndarray"""
    if isinstance(h, ChannelRealization):
        return h.h
    return np.asarray(h)


def sample_geometry(L: int, tau_max: float, rng: np.random.Generator,
                    d_over_lambda: float = 0.5,
                    delta_f: float = DEFAULT_SUBCARRIER_SPACING) -> MultipathGeometry:
    """到達角與延遲皆均勻抽樣"""
    if L < 1:
        raise ValueError(f"路徑數 L 必須 >= 1: {L}")
    if tau_max <= 0:
        raise ValueError(f"tau_max 必須 > 0: {tau_max}")
    thetas = rng.uniform(-math.pi / 2, math.pi / 2, size=L)
    taus = rng.uniform(0.0, tau_max, size=L)
    paths = tuple(Path(float(t), float(d)) for t, d in zip(thetas, taus))
    return MultipathGeometry(paths=paths, d_over_lambda=d_over_lambda,
                             delta_f=delta_f, tau_max=tau_max)


def steering_vector(geometry: MultipathGeometry, ell: int, M: int, N: int) -> np.ndarray:
    """路徑 ell 的空頻響應 a_ell，元素 (m, n) = e^{jπ m (2d/λ) sinθ} e^{-j2π n Δf τ}"""
    path = geometry.paths[ell]
    m = np.arange(M)
    n = np.arange(1, N + 1)
    spatial = np.exp(1j * np.pi * m * 2.0 * geometry.d_over_lambda * math.sin(path.theta))
    spectral = np.exp(-2j * np.pi * n * geometry.delta_f * path.tau)
    return np.kron(spectral, spatial)


def covariance_from_geometry(geometry: MultipathGeometry, M: int, N: int) -> Covariance:
    """Σ^h = Σ_ell a_ell a_ell^H，正規化使 Tr(Σ^h) = MN"""
    steering = np.column_stack([steering_vector(geometry, ell, M, N) for ell in range(geometry.L)])
    # 每個 a_ell 的能量皆為 MN，故 Tr(A A^H) = L * MN
    factor = steering / math.sqrt(geometry.L)
    return Covariance.from_factor(factor, M, N)


def sample_channels(cov: Covariance, count: int, rng: np.random.Generator) -> np.ndarray:
    """一次抽樣 count 個通道，形狀 (count, MN)"""
    if cov.rank == 0:
        return np.zeros((count, cov.dim), dtype=complex)
    g = complex_normal(rng, (count, cov.rank))
    return (g * np.sqrt(cov.eigvals)) @ cov.eigvecs.T


def sample_channel(cov: Covariance, rng: np.random.Generator) -> ChannelRealization:
    """h = U_h diag(λ)^{1/2} g，g ~ CN(0, I_r)"""
    return ChannelRealization(h=sample_channels(cov, 1, rng)[0], M=cov.M)
