#!/usr/bin/env python3
"""
測試 UE 端 MMSE 估計與後驗統計
"""

import sys
import os

import numpy as np

# 將專案模組加入路徑
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from csit_feedback.channel_model import covariance_from_geometry, sample_channels, sample_geometry
from csit_feedback.estimation import mmse_estimate, posterior_stats
from csit_feedback.selftest import check_d_mmse, dense_d_mmse
from csit_feedback.training import build_training_matrix, observe, pilot_pattern

M, N = 4, 6


def _scenario(L=3, N_p=2, T_p=3, snr_dl=10.0, seed=0):
    rng = np.random.default_rng(seed)
    cov = covariance_from_geometry(sample_geometry(L, 1.0 / (15e3 * N), rng), M, N)
    X = build_training_matrix(pilot_pattern(N, N_p), T_p, M, N, snr_dl, rng)
    return cov, X


def test_zero_training():
    """沒有訓練時沒有任何資訊"""
    print("測試零訓練...")

    cov, X = _scenario()
    pm = posterior_stats(cov, X.with_snr(0.0))
    assert np.all(pm.filter == 0)
    assert np.all(pm.eigvals == 0)
    assert abs(pm.d_mmse - M * N) <= 1e-9 * M * N
    assert np.all(mmse_estimate(pm, np.ones(X.beta_tr)) == 0)

    print("✓ 零訓練測試通過")


def test_posterior_invariants():
    """測試後驗模型的代數關係"""
    print("測試後驗模型不變條件...")

    cov, X = _scenario(L=5)
    pm = posterior_stats(cov, X)
    trace_h = float(np.sum(cov.eigvals))
    assert abs(pm.d_mmse - (trace_h - pm.sigma_u_trace)) <= 1e-8 * pm.d_mmse
    assert pm.sigma_u_trace <= M * N * (1 + 1e-12)
    assert abs(pm.d_mmse - dense_d_mmse(cov, X)) <= 1e-8 * pm.d_mmse

    coupling = np.sqrt(cov.eigvals)[:, None] * (cov.eigvecs.conj().T @ X.matrix)
    assert np.allclose(pm.gram, coupling @ coupling.conj().T)

    # W 的稠密形式 Σ^h X (X^H Σ^h X + I)^{-1}
    sigma_y = X.matrix.conj().T @ cov.matrix @ X.matrix + np.eye(X.beta_tr)
    dense_filter = cov.matrix @ X.matrix @ np.linalg.inv(sigma_y)
    assert np.allclose(pm.filter, dense_filter, atol=1e-9)

    # λ_min g <= D_mmse <= λ_max g
    g = float(np.sum(1.0 / (1.0 + pm.gram_eigvals)))
    assert cov.eigvals.min() * g <= pm.d_mmse * (1 + 1e-12)
    assert pm.d_mmse <= cov.eigvals.max() * g * (1 + 1e-12)

    # rank(Σ^u) = min(β_tr, r)
    assert np.count_nonzero(pm.eigvals) == min(X.beta_tr, cov.rank)
    narrow, X_narrow = _scenario(L=12, N_p=1, T_p=2)
    assert np.count_nonzero(posterior_stats(narrow, X_narrow).eigvals) == 2

    # G 的非零特徵值與 snr 成正比
    low = posterior_stats(cov, X.with_snr(100.0)).gram_eigvals
    high = posterior_stats(cov, X.with_snr(400.0)).gram_eigvals
    assert np.allclose(high[low > 0] / low[low > 0], 4.0)

    assert check_d_mmse(np.random.default_rng(12), 50).passed

    print("✓ 後驗模型不變條件測試通過")


def test_d_mmse_scaling():
    """β_tr >= r 時 D_mmse = Θ(1/snr)，β_tr < r 時 D_mmse = Θ(1)"""
    print("測試 D_mmse 縮放...")

    cov, X = _scenario(L=3)
    assert X.beta_tr >= cov.rank
    d1 = posterior_stats(cov, X.with_snr(1e5)).d_mmse
    d4 = posterior_stats(cov, X.with_snr(4e5)).d_mmse
    assert abs(d4 / d1 - 0.25) <= 0.01

    wide, X_short = _scenario(L=20, N_p=1, T_p=2)
    assert X_short.beta_tr < wide.rank
    low = posterior_stats(wide, X_short.with_snr(1e2)).d_mmse
    high = posterior_stats(wide, X_short.with_snr(1e6)).d_mmse
    assert high >= 0.5 * low

    print("✓ D_mmse 縮放測試通過")


def test_mmse_estimate_monte_carlo():
    """蒙地卡羅驗證 MMSE 估計的誤差、共變異數與正交性"""
    print("測試 MMSE 估計...")

    cov, X = _scenario(L=5)
    pm = posterior_stats(cov, X)

    assert np.all(mmse_estimate(pm, np.zeros(X.beta_tr)) == 0)

    channels = sample_channels(cov, 10000, np.random.default_rng(20))
    u = mmse_estimate(pm, observe(channels, X, np.random.default_rng(21)))
    error = np.mean(np.sum(np.abs(channels - u) ** 2, axis=1))
    assert abs(error - pm.d_mmse) <= 0.03 * pm.d_mmse

    residual = cov.projection_residual(u)
    assert np.all(np.linalg.norm(residual, axis=1) <= 1e-9 * np.maximum(np.linalg.norm(u, axis=1), 1e-300))

    channels = sample_channels(cov, 100000, np.random.default_rng(22))
    u = mmse_estimate(pm, observe(channels, X, np.random.default_rng(23)))
    sigma_u = pm.sigma_u
    empirical = u.T @ u.conj() / u.shape[0]
    assert np.linalg.norm(empirical - sigma_u) <= 0.05 * np.linalg.norm(sigma_u)

    # E[(h-u) u^H] ≈ 0
    e = channels - u
    cross = e.T @ u.conj() / u.shape[0]
    scale = np.sqrt(np.outer(np.mean(np.abs(e) ** 2, axis=0), np.mean(np.abs(u) ** 2, axis=0)) / u.shape[0])
    assert np.all(np.abs(cross) <= 6 * scale + 1e-12)

    try:
        mmse_estimate(pm, np.zeros(X.beta_tr + 1))
        assert False, "維度不符應拋出 ValueError"
    except ValueError:
        pass

    print("✓ MMSE 估計測試通過")


def main():
    """主測試函數"""
    print("開始 MMSE 估計測試")
    print("=" * 40)

    try:
        test_zero_training()
        test_posterior_invariants()
        test_d_mmse_scaling()
        test_mmse_estimate_monte_carlo()

        print("=" * 40)
        print("✅ 所有 MMSE 估計測試通過！")

    except Exception as e:
        print(f"❌ 測試失敗: {e}")
        return 1

    return 0


if __name__ == "__main__":
    exit_code = main()
    sys.exit(exit_code)
