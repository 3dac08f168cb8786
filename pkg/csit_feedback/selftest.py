"""
自我檢查模組
稠密公式與縮減公式的比對、反向注水的二分法對照、率失真反函數來回檢查
測試檔與 selftest 子命令共用這裡的對照實作
"""

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
import scipy.linalg
import scipy.optimize

from .analog_feedback import SpreadingMatrix, af_error, build_spreading_matrix
from .channel_model import Covariance, covariance_from_geometry, sample_geometry
from .ecsq import ECSQ_OVERHEAD_BITS, allocate_bits
from .estimation import posterior_stats
from .rate_distortion import (
    remote_distortion_excess,
    remote_rate,
    remote_rate_from_excess,
    waterlevel_from_distortion,
)
from .rng import StreamFactory
from .training import (
    TrainingMatrix,
    build_training_matrix,
    observation_covariance,
    pilot_pattern,
)

logger = logging.getLogger(__name__)


def dense_d_mmse(cov: Covariance, X: TrainingMatrix) -> float:
    """Tr(Σ^h - Σ^h X (X^H Σ^h X + I)^{-1} X^H Σ^h)"""
    sigma = cov.matrix
    x = X.matrix
    sigma_y = x.conj().T @ sigma @ x + np.eye(x.shape[1])
    gain = sigma @ x
    correction = gain @ scipy.linalg.solve(sigma_y, gain.conj().T, assume_a='her')
    return float(np.real(np.trace(sigma - correction)))


def dense_af_error(cov: Covariance, X: TrainingMatrix, spreading: SpreadingMatrix) -> float:
    """Tr(Σ^h - Σ^h X Ψ Σ_{y_af}^{-1} Ψ^H X^H Σ^h)"""
    sigma = cov.matrix
    coupled = X.matrix @ spreading.psi
    psi = spreading.psi
    sigma_af = coupled.conj().T @ sigma @ coupled + psi.conj().T @ psi + np.eye(psi.shape[1])
    gain = sigma @ coupled
    correction = gain @ scipy.linalg.solve(sigma_af, gain.conj().T, assume_a='her')
    return float(np.real(np.trace(sigma - correction)))


def bisection_waterlevel(eigvals, excess: float) -> float:
    """以二分法求 Σ min(γ, λ) = excess 的 γ"""
    eigvals = np.asarray(eigvals, dtype=float)
    return scipy.optimize.bisect(lambda g: float(np.sum(np.minimum(g, eigvals))) - excess,
                                 0.0, float(eigvals.max()), xtol=1e-300, rtol=8.9e-16,
                                 maxiter=2000)


def random_instance(rng: np.random.Generator, M: int, N: int, snr_range: Tuple[float, float] = (0.0, 2.0)):
    """隨機小型情境 (共變異數, 訓練矩陣)，snr 在 10^snr_range 之間"""
    L = int(rng.integers(1, 2 * M * N + 1))
    geometry = sample_geometry(L, 1.0 / (15e3 * N), rng)
    cov = covariance_from_geometry(geometry, M, N)
    N_p = int(rng.integers(1, N + 1))
    T_p = int(rng.integers(1, 5))
    snr = 10.0 ** rng.uniform(*snr_range)
    X = build_training_matrix(pilot_pattern(N, N_p), T_p, M, N, snr, rng)
    return cov, X


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    cases: int

    def line(self) -> str:
        mark = '✓' if self.passed else '✗'
        return f"{mark} {self.name}: 最大誤差 {self.worst:.3e} (容許 {self.tolerance:.0e}，{self.cases} 組)"


@dataclass
class SelftestReport:
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def lines(self) -> List[str]:
        return [check.line() for check in self.checks]


def _relative(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def check_d_mmse(rng: np.random.Generator, instances: int) -> CheckResult:
    worst = 0.0
    for _ in range(instances):
        cov, X = random_instance(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
        worst = max(worst, _relative(posterior_stats(cov, X).d_mmse, dense_d_mmse(cov, X)))
    return CheckResult('D_mmse 稠密公式 vs 縮減公式', worst <= 1e-8, worst, 1e-8, instances)


def check_af_error(rng: np.random.Generator, instances: int) -> CheckResult:
    worst = 0.0
    for _ in range(instances):
        cov, X = random_instance(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
        beta_fb = int(rng.integers(1, 2 * X.beta_tr + 1))
        spreading = build_spreading_matrix(observation_covariance(cov, X), beta_fb, X.M,
                                           X.snr_dl, rng)
        worst = max(worst, _relative(af_error(cov, X, spreading), dense_af_error(cov, X, spreading)))
    return CheckResult('AF 誤差稠密公式 vs 縮減公式', worst <= 1e-8, worst, 1e-8, instances)


def check_waterlevel(rng: np.random.Generator, sets: int) -> CheckResult:
    worst = 0.0
    for _ in range(sets):
        eigvals = np.sort(rng.exponential(size=int(rng.integers(1, 31))))[::-1]
        excess = rng.uniform(0.01, 0.99) * float(np.sum(eigvals))
        gamma = waterlevel_from_distortion(eigvals, excess).gamma
        worst = max(worst, _relative(gamma, bisection_waterlevel(eigvals, excess)),
                    _relative(float(np.sum(np.minimum(gamma, eigvals))), excess))
    return CheckResult('反向注水封閉解 vs 二分法', worst <= 1e-10, worst, 1e-10, sets)


def check_round_trip(rng: np.random.Generator, rates: int) -> CheckResult:
    worst = 0.0
    cov, X = random_instance(rng, 4, 4)
    posterior = posterior_stats(cov, X)
    for rate in rng.uniform(0.0, 100.0, size=rates):
        recovered = remote_rate_from_excess(posterior, remote_distortion_excess(posterior, rate))
        worst = max(worst, abs(recovered - rate) / max(rate, 1.0))
    return CheckResult('R -> D -> R 來回', worst <= 1e-8, worst, 1e-8, rates)


def check_ecsq_accounting(rng: np.random.Generator, points: int) -> CheckResult:
    worst = 0.0
    cov, X = random_instance(rng, 4, 4)
    posterior = posterior_stats(cov, X)
    for excess in np.linspace(0.01, 0.99, points) * posterior.sigma_u_trace:
        distortion = posterior.d_mmse + excess
        alloc = allocate_bits(posterior, distortion)
        gap = alloc.total_bits - remote_rate(posterior, alloc.target_D)
        worst = max(worst, abs(gap - ECSQ_OVERHEAD_BITS * alloc.quantized_count))
    return CheckResult('R_scalar - R = 1.508 x 量化係數數', worst <= 1e-9, worst, 1e-9, points)


def run_selftest(seed: int = 0, instances: int = 50, waterfill_sets: int = 1000,
                 rates: int = 50) -> SelftestReport:
    """執行全部對照檢查"""
    streams = StreamFactory(seed)
    report = SelftestReport()
    report.checks.append(check_d_mmse(streams.generator('selftest-dmmse'), instances))
    report.checks.append(check_af_error(streams.generator('selftest-af'), instances))
    report.checks.append(check_waterlevel(streams.generator('selftest-waterfill'), waterfill_sets))
    report.checks.append(check_round_trip(streams.generator('selftest-roundtrip'), rates))
    report.checks.append(check_ecsq_accounting(streams.generator('selftest-ecsq'), 100))
    for check in report.checks:
        logger.info(check.line())
    return report
