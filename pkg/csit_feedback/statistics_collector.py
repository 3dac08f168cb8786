"""
統計資料收集模組
用於累積蒙地卡羅試驗結果並計算平均值與標準誤
"""

import math
import time
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np


@dataclass
class BatchResult:
    """單一工作單元的一批結果"""
    success: bool
    strategy: str
    x_value: float
    metric: str
    n_samples: int = 0
    discarded: int = 0
    error_message: Optional[str] = None


@dataclass
class MetricStats:
    """單一 (策略, x 值, 指標) 的統計資料"""
    strategy: str
    x_value: float
    metric: str
    samples: List[np.ndarray] = field(default_factory=list)
    discarded: int = 0

    @property
    def values(self) -> np.ndarray:
        if not self.samples:
            return np.zeros(0)
        return np.concatenate(self.samples)

    @property
    def n_trials(self) -> int:
        return sum(int(s.size) for s in self.samples)

    @property
    def mean(self) -> float:
        """平均值 (補償求和，與加總順序無關)"""
        n = self.n_trials
        if n == 0:
            return 0.0
        return math.fsum(self.values) / n

    @property
    def stderr(self) -> float:
        """平均值的標準誤"""
        n = self.n_trials
        if n < 2:
            return 0.0
        values = self.values
        mean = self.mean
        variance = math.fsum((values - mean) ** 2) / (n - 1)
        return math.sqrt(variance / n)


class StatisticsCollector:
    """統計資料收集器

    依記錄順序保存各鍵值，結果與工作單元的執行順序無關，
    只要呼叫端依工作單元索引順序記錄即可。
    """

    def __init__(self):
        self.batch_results: List[BatchResult] = []
        self.metric_stats: Dict[Tuple[str, float, str], MetricStats] = OrderedDict()
        self.start_time: float = time.time()

    def record_batch(self, strategy: str, x_value: float, metric: str, samples,
                     discarded: int = 0):
        """記錄一批樣本"""
        samples = np.atleast_1d(np.asarray(samples, dtype=float))
        key = (strategy, float(x_value), metric)
        if key not in self.metric_stats:
            self.metric_stats[key] = MetricStats(strategy=strategy, x_value=float(x_value),
                                                 metric=metric)
        stats = self.metric_stats[key]
        stats.samples.append(samples)
        stats.discarded += int(discarded)

        self.batch_results.append(BatchResult(
            success=True,
            strategy=strategy,
            x_value=float(x_value),
            metric=metric,
            n_samples=int(samples.size),
            discarded=int(discarded),
        ))

    def record_failure(self, strategy: str, x_value: float, metric: str, error_message: str):
        """記錄失敗的工作單元"""
        self.batch_results.append(BatchResult(
            success=False,
            strategy=strategy,
            x_value=float(x_value),
            metric=metric,
            error_message=error_message,
        ))

    def get(self, strategy: str, x_value: float, metric: str) -> Optional[MetricStats]:
        return self.metric_stats.get((strategy, float(x_value), metric))

    def get_total_batches(self) -> int:
        return len(self.batch_results)

    def get_failed_batches(self) -> int:
        return sum(1 for result in self.batch_results if not result.success)

    def get_total_samples(self) -> int:
        return sum(result.n_samples for result in self.batch_results)

    def get_failure_messages(self) -> List[str]:
        return [result.error_message for result in self.batch_results if not result.success]

    def get_discarded_trials(self) -> int:
        """獲取捨棄的試驗總數"""
        return sum(stats.discarded for stats in self.metric_stats.values())

    def get_elapsed_seconds(self) -> float:
        return time.time() - self.start_time

    def items(self) -> List[MetricStats]:
        return list(self.metric_stats.values())
