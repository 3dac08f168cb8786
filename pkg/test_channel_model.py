#!/usr/bin/env python3
"""
測試多徑通道模型：幾何抽樣、導向向量、共變異數與通道抽樣
"""

import math
import sys
import os

import numpy as np

# 將專案模組加入路徑
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from csit_feedback.channel_model import (
    ChannelRealization,
    Covariance,
    MultipathGeometry,
    Path,
    covariance_from_geometry,
    sample_channel,
    sample_channels,
    sample_geometry,
    steering_vector,
)

TAU_MAX = 1.0 / (15e3 * 24)


def test_sample_geometry():
    """測試幾何抽樣的範圍與可重現性"""
    print("測試幾何抽樣...")

    geometry = sample_geometry(1, TAU_MAX, np.random.default_rng(3))
    assert geometry.L == 1
    assert -math.pi / 2 <= geometry.paths[0].theta <= math.pi / 2
    assert 0 <= geometry.paths[0].tau <= TAU_MAX

    first = sample_geometry(30, TAU_MAX, np.random.default_rng(11))
    second = sample_geometry(30, TAU_MAX, np.random.default_rng(11))
    assert first == second

    # 10^5 個到達角的平均值在 3 個標準誤內
    many = sample_geometry(100000, TAU_MAX, np.random.default_rng(5))
    thetas = np.array([p.theta for p in many.paths])
    standard_error = (math.pi / math.sqrt(12.0)) / math.sqrt(thetas.size)
    assert abs(thetas.mean()) <= 3 * standard_error

    for bad_L in (0, -1):
        try:
            sample_geometry(bad_L, TAU_MAX, np.random.default_rng(0))
            assert False, "L < 1 應拋出 ValueError"
        except ValueError:
            pass

    try:
        MultipathGeometry(paths=(Path(theta=2.0, tau=0.0),))
        assert False, "到達角超出範圍應拋出 ValueError"
    except ValueError:
        pass

    print("✓ 幾何抽樣測試通過")


def test_steering_vector():
    """測試導向向量"""
    print("測試導向向量...")

    flat = MultipathGeometry(paths=(Path(theta=0.0, tau=0.0),))
    assert np.allclose(steering_vector(flat, 0, 4, 3), np.ones(12))

    endfire = MultipathGeometry(paths=(Path(theta=math.pi / 2, tau=0.0),))
    assert np.allclose(steering_vector(endfire, 0, 2, 1), [1.0, -1.0])

    geometry = sample_geometry(5, TAU_MAX, np.random.default_rng(7))
    for ell in range(geometry.L):
        a = steering_vector(geometry, ell, 8, 6)
        assert np.allclose(np.abs(a), 1.0)
        assert abs(np.vdot(a, a).real - 48) < 1e-9

    print("✓ 導向向量測試通過")


def _check_covariance(cov: Covariance):
    matrix = cov.matrix
    scale = np.linalg.norm(matrix)
    assert np.linalg.norm(matrix - matrix.conj().T) <= 1e-12 * scale
    assert np.all(np.linalg.eigvalsh(matrix) >= -1e-9 * scale)
    assert abs(np.trace(matrix).real - cov.dim) <= 1e-9 * cov.dim
    rebuilt = (cov.eigvecs * cov.eigvals) @ cov.eigvecs.conj().T
    assert np.linalg.norm(rebuilt - matrix) <= 1e-9 * scale
    assert np.all(np.diff(cov.eigvals) <= 0)


def test_covariance_from_geometry():
    """測試共變異數的不變條件與秩"""
    print("測試共變異數...")

    single = covariance_from_geometry(sample_geometry(1, TAU_MAX, np.random.default_rng(1)), 4, 3)
    assert single.rank == 1
    assert abs(single.eigvals[0] - 12) < 1e-9

    scalar = covariance_from_geometry(sample_geometry(7, TAU_MAX, np.random.default_rng(2)), 1, 1)
    assert scalar.matrix.shape == (1, 1)
    assert abs(scalar.matrix[0, 0] - 1.0) < 1e-12

    rng = np.random.default_rng(2024)
    full_rank = 0
    for _ in range(100):
        L = int(rng.integers(1, 21))
        cov = covariance_from_geometry(sample_geometry(L, 1.0 / (15e3 * 3), rng), 4, 3)
        _check_covariance(cov)
        if cov.rank == min(L, 12):
            full_rank += 1
    assert full_rank >= 99

    large = covariance_from_geometry(sample_geometry(30, TAU_MAX, np.random.default_rng(9)), 32, 24)
    assert large.rank == 30
    _check_covariance(large)

    print("✓ 共變異數測試通過")


def test_sample_channel():
    """測試通道抽樣的統計性質"""
    print("測試通道抽樣...")

    zero = Covariance.zero(4, 3)
    h = sample_channel(zero, np.random.default_rng(0))
    assert isinstance(h, ChannelRealization)
    assert np.all(h.h == 0)
    assert h.per_subcarrier().shape == (3, 4)

    cov = covariance_from_geometry(sample_geometry(8, 1.0 / (15e3 * 3), np.random.default_rng(4)), 4, 3)

    channels = sample_channels(cov, 10000, np.random.default_rng(5))
    energy = np.mean(np.sum(np.abs(channels) ** 2, axis=1))
    assert abs(energy - 12) <= 0.03 * 12

    residual = cov.projection_residual(channels)
    assert np.all(np.linalg.norm(residual, axis=1) <= 1e-9 * np.linalg.norm(channels, axis=1))

    many = sample_channels(cov, 100000, np.random.default_rng(6))
    empirical = many.T @ many.conj() / many.shape[0]
    assert np.linalg.norm(empirical - cov.matrix) <= 0.05 * np.linalg.norm(cov.matrix)

    print("✓ 通道抽樣測試通過")


def main():
    """主測試函數"""
    print("開始通道模型測試")
    print("=" * 40)

    try:
        test_sample_geometry()
        test_steering_vector()
        test_covariance_from_geometry()
        test_sample_channel()

        print("=" * 40)
        print("✅ 所有通道模型測試通過！")

    except Exception as e:
        print(f"❌ 測試失敗: {e}")
        return 1

    return 0


if __name__ == "__main__":
    exit_code = main()
    sys.exit(exit_code)
