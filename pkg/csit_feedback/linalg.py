"""
線性代數輔助模組
所有在通道特徵基底 (r 維) 上的運算共用這裡的函式
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg


def hermitize(a: np.ndarray) -> np.ndarray:
    """(A + A^H) / 2，抑制浮點不對稱"""
    return 0.5 * (a + a.conj().T)


def eigh_descending(a: np.ndarray):
    """Hermitian 特徵分解，特徵值由大到小"""
    w, v = scipy.linalg.eigh(hermitize(a))
    return w[::-1].copy(), v[:, ::-1].copy()


@dataclass(frozen=True)
class ReducedError:
    """縮減形式 Tr(Λ (I - G + G (I+G)^{-1} G)) 的計算結果"""
    value: float
    g_value: float
    gram_eigvals: np.ndarray


def reduced_trace_error(lam: np.ndarray, gram: np.ndarray) -> ReducedError:
    """以 G 的特徵分解計算 Tr(Λ (I - G + G (I+G)^{-1} G))

    I - G + G (I+G)^{-1} G = (I+G)^{-1}，直接展開會在高 SNR 下相消，
    因此改以 sum_i (V^H Λ V)_ii / (1 + μ_i) 計算。
    """
    lam = np.asarray(lam, dtype=float)
    if lam.size == 0:
        return ReducedError(0.0, 0.0, np.zeros(0))
    mu, vecs = eigh_descending(gram)
    mu = np.clip(mu, 0.0, None)
    weights = np.real(np.sum(vecs.conj() * (lam[:, None] * vecs), axis=0))
    inv = 1.0 / (1.0 + mu)
    return ReducedError(
        value=float(np.sum(weights * inv)),
        g_value=float(np.sum(inv)),
        gram_eigvals=mu,
    )
