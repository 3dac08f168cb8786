"""
實驗排程模組
MSE 與和速率掃描、品質縮放指數擬合與理論指數表
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
import scipy.stats
from joblib import Parallel, delayed

from . import __version__
from .analog_feedback import af_dof, af_exponent
from .channel_model import Covariance, covariance_from_geometry, sample_geometry
from .config import SystemConfig
from .downlink import DownlinkScenario, ergodic_sumrate
from .errors import ConfigValidationError, CSITSimError
from .estimation import posterior_stats
from .feedback import simulate_feedback
from .rate_distortion import rd_dof, rd_exponent, zf_dof
from .results import SweepResult
from .rng import StreamFactory
from .statistics_collector import StatisticsCollector
from .training import build_training_matrix, pilot_pattern

logger = logging.getLogger(__name__)

# (策略, x 值, 指標, 樣本, 捨棄數)
UnitRecord = Tuple[str, float, str, np.ndarray, int]


@dataclass(frozen=True)
class ExponentFit:
    """擬合的品質縮放指數 α̂ 及其 95% 信賴區間"""
    alpha: float
    stderr: float
    ci_low: float
    ci_high: float
    n_points: int


@dataclass(frozen=True)
class ExponentMapEntry:
    beta_tr: int
    beta_fb: int
    region: str
    alpha_rd: float
    alpha_af: float
    dof_rd: float
    dof_af: float
    zf_dof_rd: float
    zf_dof_af: float


def fit_exponent(points: Iterable[Tuple[float, float]], window_db: float = 10.0) -> ExponentFit:
    """在最高 SNR 的 window_db 範圍內，以最小平方法擬合 -log2(mse) 對 log2(snr) 的斜率"""
    points = sorted((float(x), float(y)) for x, y in points)
    if not points:
        raise ValueError("擬合指數至少需要 3 個點")
    top = points[-1][0]
    window = [(x, y) for x, y in points if x >= top - window_db - 1e-9]
    if len(window) < 3:
        raise ValueError(f"擬合範圍內只有 {len(window)} 個點，至少需要 3 個")
    if any(y <= 0 for _, y in window):
        raise ValueError("MSE 必須 > 0 才能取對數")

    log_snr = np.array([x / 10.0 * math.log2(10.0) for x, _ in window])
    neg_log_mse = -np.log2([y for _, y in window])
    fit = scipy.stats.linregress(log_snr, neg_log_mse)
    half_width = scipy.stats.t.ppf(0.975, len(window) - 2) * fit.stderr
    return ExponentFit(alpha=float(fit.slope), stderr=float(fit.stderr),
                       ci_low=float(fit.slope - half_width), ci_high=float(fit.slope + half_width),
                       n_points=len(window))


def classify_region(beta_tr: int, beta_fb: int, r: int) -> str:
    """R1: β_tr < r；R2: β_tr >= r > β_fb；R3: min(β_tr, β_fb) >= r"""
    if beta_tr < r:
        return 'R1'
    if beta_fb < r:
        return 'R2'
    return 'R3'


def exponent_map(beta_tr_values: Sequence[int], beta_fb_values: Sequence[int], r: int,
                 K: int) -> List[ExponentMapEntry]:
    entries = []
    for beta_tr in beta_tr_values:
        for beta_fb in beta_fb_values:
            alpha_rd = rd_exponent(beta_tr, beta_fb, r)
            alpha_af = af_exponent(beta_tr, beta_fb, r)
            entries.append(ExponentMapEntry(
                beta_tr=int(beta_tr), beta_fb=int(beta_fb),
                region=classify_region(beta_tr, beta_fb, r),
                alpha_rd=float(alpha_rd), alpha_af=float(alpha_af),
                dof_rd=float(rd_dof(alpha_rd, K)), dof_af=float(af_dof(alpha_af, K)),
                zf_dof_rd=float(zf_dof(alpha_rd, K)), zf_dof_af=float(zf_dof(alpha_af, K)),
            ))
    return entries


def theoretical_summary(config: SystemConfig) -> Dict:
    """每個 β_tr 的理論指數與 DoF"""
    r = min(config.L, config.M * config.N)
    summary = {}
    for beta_tr in config.beta_tr_values:
        beta_fb = config.feedback_dimension(beta_tr)
        alpha_rd = rd_exponent(beta_tr, beta_fb, r)
        alpha_af = af_exponent(beta_tr, beta_fb, r)
        summary[str(beta_tr)] = {
            'beta_fb': beta_fb,
            'region': classify_region(beta_tr, beta_fb, r),
            'alpha_rd': str(alpha_rd),
            'alpha_af': alpha_af,
            'dof_rd': str(rd_dof(alpha_rd, config.K)),
            'dof_af': af_dof(alpha_af, config.K),
            'zf_dof_rd': str(zf_dof(alpha_rd, config.K)),
            'zf_dof_af': zf_dof(alpha_af, config.K),
        }
    return {'rank': r, 'per_beta_tr': summary}


class ExperimentHarness:
    """實驗排程器

    工作單元為 (訓練矩陣索引 i, 共變異數組索引 j)，以 joblib 執行緒平行；
    結果依單元索引順序歸併，輸出與執行緒數無關。
    """

    def __init__(self, config: SystemConfig, threads: int = 0):
        config.validate()
        if threads < 0:
            raise ValueError(f"執行緒數必須 >= 0: {threads}")
        self.config = config
        self.threads = threads
        self.streams = StreamFactory(config.seed)
        self.logger = logging.getLogger(__name__)

    @property
    def n_jobs(self) -> int:
        return -1 if self.threads == 0 else self.threads

    def _units(self) -> List[Tuple[int, int]]:
        trials = self.config.trials
        return [(i, j) for j in range(trials.covariances) for i in range(trials.matrices)]

    def covariances(self, j: int) -> List[Covariance]:
        """共變異數組 j：K 個 UE 各自的多徑幾何與共變異數"""
        cfg = self.config
        geometry_streams = self.streams.child(j)
        covs = []
        for k in range(cfg.K):
            geometry = sample_geometry(cfg.L, cfg.effective_tau_max,
                                       geometry_streams.generator('geometry', k),
                                       cfg.d_over_lambda, cfg.delta_f)
            covs.append(covariance_from_geometry(geometry, cfg.M, cfg.N))
        return covs

    def training_matrix(self, i: int, j: int, T_p: int):
        cfg = self.config
        pattern = pilot_pattern(cfg.N, cfg.N_p, cfg.pilot_offset)
        return build_training_matrix(pattern, T_p, cfg.M, cfg.N, 1.0,
                                     self.streams.child(j, i).generator('training', T_p))

    def _run_units(self, unit_fn, label: str) -> StatisticsCollector:
        units = self._units()
        collector = StatisticsCollector()
        self.logger.info(f"{label}: {len(units)} 個工作單元，執行緒設定 {self.n_jobs}")
        outputs = Parallel(n_jobs=self.n_jobs, prefer="threads")(
            delayed(self._safe_unit)(unit_fn, i, j) for i, j in units
        )

        for (i, j), output in zip(units, outputs):
            if isinstance(output, Exception):
                self.logger.error(f"工作單元 (i={i}, j={j}) 失敗: {output}")
                collector.record_failure('*', float('nan'), '*', f"(i={i}, j={j}) {output}")
                continue
            for strategy, x_value, metric, samples, discarded in output:
                collector.record_batch(strategy, x_value, metric, samples, discarded)
        self.logger.info(f"{label}完成: {collector.get_total_batches()} 批、{collector.get_total_samples()} 個樣本，"
                         f"失敗 {collector.get_failed_batches()} 個單元，耗時 {collector.get_elapsed_seconds():.1f} 秒")
        return collector

    def _safe_unit(self, unit_fn, i: int, j: int):
        try:
            return unit_fn(i, j)
        except CSITSimError as e:
            return e

    def _mse_unit(self, i: int, j: int) -> List[UnitRecord]:
        cfg = self.config
        covs = self.covariances(j)
        base = self.training_matrix(i, j, cfg.t_p_values[0])
        beta_fb = cfg.feedback_dimension(base.beta_tr)
        unit_streams = self.streams.child(j, i)
        strategies = [s for s in cfg.strategies if s != 'perfect']
        records: List[UnitRecord] = []

        for snr_db, snr in zip(cfg.snr_db_grid, cfg.snr_linear_grid):
            training = base.with_snr(snr)
            floor = []
            analytic = {s: [] for s in strategies}
            simulated = {s: [] for s in strategies}
            for k, cov in enumerate(covs):
                posterior = posterior_stats(cov, training)
                floor.append(posterior.d_mmse)
                for strategy in strategies:
                    outcome = simulate_feedback(strategy, cov, training, beta_fb, cfg.kappa,
                                                cfg.trials.channels, unit_streams, k,
                                                posterior=posterior)
                    analytic[strategy].append(outcome.analytic_error)
                    simulated[strategy].append(outcome.squared_errors)

            records.append(('mmse', snr_db, 'd_mmse', np.array([math.fsum(floor) / cfg.K]), 0))
            for strategy in strategies:
                records.append((strategy, snr_db, 'mse_analytic',
                                np.array([math.fsum(analytic[strategy]) / cfg.K]), 0))
                if strategy != 'rd':
                    per_trial = np.mean(np.stack(simulated[strategy]), axis=0)
                    records.append((strategy, snr_db, 'mse_simulated', per_trial, 0))
        self.logger.info(f"MSE 工作單元 (i={i}, j={j}) 完成")
        return records

    def _sumrate_unit(self, i: int, j: int) -> List[UnitRecord]:
        cfg = self.config
        covs = self.covariances(j)
        unit_streams = self.streams.child(j, i)
        records: List[UnitRecord] = []

        for T_p in cfg.t_p_values:
            base = self.training_matrix(i, j, T_p)
            scenario = DownlinkScenario(covariances=covs, training=base,
                                        beta_fb=cfg.feedback_dimension(base.beta_tr),
                                        kappa=cfg.kappa, T=cfg.T,
                                        pilot_weighting=cfg.pilot_weighting)
            for snr_db, snr in zip(cfg.snr_db_grid, cfg.snr_linear_grid):
                metric = f"sum_rate@{snr_db:g}dB"
                for strategy in cfg.strategies:
                    estimate = ergodic_sumrate(scenario, strategy, snr, cfg.trials.channels,
                                               unit_streams)
                    records.append((strategy, base.beta_tr, metric, estimate.samples,
                                    estimate.discarded))
        self.logger.info(f"和速率工作單元 (i={i}, j={j}) 完成")
        return records

    def _metadata(self, kind: str, collector: StatisticsCollector) -> Dict:
        cfg = self.config
        return {
            'kind': kind,
            'config': cfg.to_dict(),
            'config_hash': cfg.config_hash(),
            'seed': cfg.seed,
            'version': __version__,
            'wall_time_s': round(collector.get_elapsed_seconds(), 3),
            'discarded_trials': collector.get_discarded_trials(),
            'failed_units': collector.get_failed_batches(),
            'failures': collector.get_failure_messages(),
            'rd_reported_as': 'analytic bound D_h^r(beta_fb * C_ul)',
            'theory': theoretical_summary(cfg),
        }

    def run_mse_sweep(self) -> SweepResult:
        """各策略在 SNR 網格上的平均 CSIT 誤差"""
        if len(self.config.t_p_values) != 1:
            raise ConfigValidationError(["single T_p for mse-sweep"])
        collector = self._run_units(self._mse_unit, "MSE 掃描")
        result = SweepResult.from_collector(collector, 'snr_db',
                                            self._metadata('mse', collector))
        result.metadata['fitted_exponents'] = fitted_exponents(result, self.config.fit_window_db)
        return result

    def run_sumrate_sweep(self) -> SweepResult:
        """各策略在 β_tr 網格上的遍歷和速率"""
        collector = self._run_units(self._sumrate_unit, "和速率掃描")
        return SweepResult.from_collector(collector, 'beta_tr',
                                          self._metadata('sumrate', collector))


def fitted_exponents(result: SweepResult, window_db: float) -> Dict[str, Dict]:
    """對結果中每條 MSE 曲線擬合指數；點數不足的曲線略過"""
    fits = {}
    for strategy in result.strategies():
        for metric in ('d_mmse', 'mse_analytic', 'mse_simulated'):
            curve = result.curve(strategy, metric)
            if not curve:
                continue
            try:
                fit = fit_exponent(curve, window_db)
            except ValueError as e:
                logger.warning(f"{strategy}/{metric} 無法擬合指數: {e}")
                continue
            fits[f"{strategy}/{metric}"] = {
                'alpha': fit.alpha, 'stderr': fit.stderr,
                'ci_low': fit.ci_low, 'ci_high': fit.ci_high, 'n_points': fit.n_points,
            }
    return fits


def run_mse_sweep(config: SystemConfig, threads: int = 0) -> SweepResult:
    return ExperimentHarness(config, threads).run_mse_sweep()


def run_sumrate_sweep(config: SystemConfig, threads: int = 0) -> SweepResult:
    return ExperimentHarness(config, threads).run_sumrate_sweep()
