"""
配置管理模組
情境設定 (JSON 檔) 與執行環境設定 (環境變數 / .env)
"""

import hashlib
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

from dotenv import load_dotenv

from .downlink import PILOT_WEIGHTINGS
from .errors import ConfigValidationError
from .feedback import STRATEGIES

DEFAULT_SNR_DB_GRID = (20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0, 55.0, 60.0)
LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')


def _is_int(value, minimum: int) -> bool:
    return isinstance(value, int) and not isinstance(value, bool) and value >= minimum


def _is_real(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _is_positive(value) -> bool:
    return _is_real(value) and value > 0


@dataclass(frozen=True)
class TrialCounts:
    """蒙地卡羅試驗次數：訓練矩陣數、共變異數組數、每組的通道數"""
    matrices: int = 10
    covariances: int = 1
    channels: int = 100

    @property
    def total_channels(self) -> int:
        return self.matrices * self.covariances * self.channels

    @property
    def units(self) -> int:
        return self.matrices * self.covariances


@dataclass(frozen=True)
class SystemConfig:
    """情境設定，JSON 鍵名與欄位名稱相同"""
    M: int = 32
    N: int = 24
    K: int = 6
    L: int = 30
    N_p: int = 4
    T_p: Union[int, Tuple[int, ...]] = 10
    T: int = 70
    snr_db_grid: Tuple[float, ...] = DEFAULT_SNR_DB_GRID
    kappa: float = 1.0
    zeta: Optional[float] = None
    beta_fb: Optional[int] = None
    d_over_lambda: float = 0.5
    delta_f: float = 15e3
    tau_max: Optional[float] = None
    seed: int = 1
    trials: TrialCounts = field(default_factory=TrialCounts)
    strategies: Tuple[str, ...] = ('rd', 'ecsq', 'af')
    pilot_weighting: str = 'overhead'
    pilot_offset: int = 0
    fit_window_db: float = 10.0

    @property
    def t_p_values(self) -> Tuple[int, ...]:
        if isinstance(self.T_p, (tuple, list)):
            return tuple(self.T_p)
        return (self.T_p,)

    @property
    def beta_tr_values(self) -> Tuple[int, ...]:
        return tuple(t * self.N_p for t in self.t_p_values)

    @property
    def effective_tau_max(self) -> float:
        """未指定時取 1/(Δf N)，延遲相位在整個頻寬內最多繞一圈"""
        if self.tau_max is not None:
            return self.tau_max
        return 1.0 / (self.delta_f * self.N)

    @property
    def snr_linear_grid(self) -> List[float]:
        return [10.0 ** (db / 10.0) for db in self.snr_db_grid]

    def feedback_dimension(self, beta_tr: int) -> int:
        """β_fb；以 ζ 指定時取 ⌈ζ β_tr⌉ (有理數運算)"""
        if self.beta_fb is not None:
            return int(self.beta_fb)
        ratio = Fraction(str(self.zeta)).limit_denominator(10 ** 6)
        return int(math.ceil(ratio * beta_tr))

    def validate(self):
        """檢查所有不變條件，違反者一次列出

        型別錯誤的欄位記為違反條件，只有相關欄位都合法時才檢查跨欄位條件。
        """
        violations = []

        for name in ('M', 'N', 'K', 'L', 'N_p', 'T'):
            if not _is_int(getattr(self, name), minimum=1):
                violations.append(f"{name} >= 1")
        t_p_ok = bool(self.t_p_values) and all(_is_int(t, minimum=1) for t in self.t_p_values)
        if not t_p_ok:
            violations.append("T_p >= 1")
        if not _is_int(self.pilot_offset, minimum=0):
            violations.append("pilot_offset >= 0")

        def valid(*names):
            return all(_is_int(getattr(self, name), minimum=1) for name in names)

        if valid('K', 'M') and self.K > self.M:
            violations.append("K <= M")
        if valid('N_p', 'N') and self.N_p > self.N:
            violations.append("N_p <= N")
        if valid('T') and t_p_ok and any(t > self.T for t in self.t_p_values):
            violations.append("T_p <= T")
        if (valid('N_p', 'N') and self.N_p <= self.N and _is_int(self.pilot_offset, minimum=0)
                and self.pilot_offset + (self.N // self.N_p) * (self.N_p - 1) >= self.N):
            violations.append("pilot pattern within N subcarriers")

        if (self.zeta is None) == (self.beta_fb is None):
            violations.append("exactly one of zeta/beta_fb")
        elif self.zeta is not None and not _is_positive(self.zeta):
            violations.append("zeta > 0")
        elif self.beta_fb is not None and not _is_int(self.beta_fb, minimum=0):
            violations.append("beta_fb >= 0")

        for name in ('kappa', 'd_over_lambda', 'delta_f', 'fit_window_db'):
            if not _is_positive(getattr(self, name)):
                violations.append(f"{name} > 0")
        if self.tau_max is not None and not _is_positive(self.tau_max):
            violations.append("tau_max > 0")
        if (not isinstance(self.snr_db_grid, (tuple, list)) or not self.snr_db_grid
                or not all(_is_real(v) for v in self.snr_db_grid)):
            violations.append("snr_db_grid non-empty list of numbers")
        if not _is_int(self.seed, minimum=0) or self.seed >= 2 ** 64:
            violations.append("0 <= seed < 2^64")
        if not isinstance(self.trials, TrialCounts) or not all(
                _is_int(getattr(self.trials, name), minimum=1) for name in TrialCounts.__dataclass_fields__):
            violations.append("trials >= 1")
        if (not isinstance(self.strategies, (tuple, list)) or not self.strategies
                or any(s not in STRATEGIES for s in self.strategies)):
            violations.append(f"strategies subset of {{{', '.join(STRATEGIES)}}}")
        if self.pilot_weighting not in PILOT_WEIGHTINGS:
            violations.append(f"pilot_weighting in {{{', '.join(PILOT_WEIGHTINGS)}}}")

        if violations:
            raise ConfigValidationError(violations)

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['T_p'] = list(self.T_p) if isinstance(self.T_p, (tuple, list)) else self.T_p
        data['snr_db_grid'] = list(self.snr_db_grid)
        data['strategies'] = list(self.strategies)
        return data

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def with_overrides(self, seed: Optional[int] = None,
                       strategies: Optional[Tuple[str, ...]] = None) -> 'SystemConfig':
        """命令列參數覆寫設定檔"""
        changes = {}
        if seed is not None:
            changes['seed'] = int(seed)
        if strategies is not None:
            changes['strategies'] = tuple(strategies)
        return replace(self, **changes)

    @classmethod
    def from_dict(cls, data: Dict) -> 'SystemConfig':
        """由 JSON 物件建立並驗證；未知鍵名直接視為錯誤"""
        if not isinstance(data, dict):
            raise ConfigValidationError(["config is a JSON object"])
        known = set(cls.__dataclass_fields__)
        violations = [f"unknown key '{key}'" for key in data if key not in known]

        trials_data = data.get('trials', {})
        if not isinstance(trials_data, dict):
            violations.append("trials is an object")
            trials_data = {}
        trial_keys = set(TrialCounts.__dataclass_fields__)
        violations.extend(f"unknown key 'trials.{key}'" for key in trials_data if key not in trial_keys)
        if violations:
            raise ConfigValidationError(violations)

        values = {key: value for key, value in data.items() if key != 'trials'}
        for key in ('T_p', 'snr_db_grid', 'strategies'):
            if isinstance(values.get(key), list):
                values[key] = tuple(values[key])
        grid = values.get('snr_db_grid')
        if isinstance(grid, tuple) and all(_is_real(v) for v in grid):
            values['snr_db_grid'] = tuple(float(v) for v in grid)
        config = cls(trials=TrialCounts(**trials_data), **values)
        config.validate()
        return config


def load_config(path: str) -> SystemConfig:
    """讀取 JSON 設定檔；檔案不存在時拋出 FileNotFoundError"""
    with open(path, encoding='utf-8') as file:
        try:
            data = json.load(file)
        except json.JSONDecodeError as e:
            raise ConfigValidationError([f"valid JSON ({e})"]) from e
    return SystemConfig.from_dict(data)


class RuntimeConfig:
    """執行環境設定，管理所有環境變數"""

    def __init__(self):
        # 載入 .env 檔案
        load_dotenv()

        self.threads = int(os.getenv('CSIT_THREADS', '0'))
        self.log_level = os.getenv('CSIT_LOG_LEVEL', 'INFO').upper()
        self.log_file = os.getenv('CSIT_LOG_FILE', '')
        self.output_dir = os.getenv('CSIT_OUTPUT_DIR', 'out')

    def validate(self):
        """驗證環境變數的數值"""
        invalid = []
        if self.threads < 0:
            invalid.append('CSIT_THREADS')
        if self.log_level not in LOG_LEVELS:
            invalid.append('CSIT_LOG_LEVEL')
        if not self.output_dir:
            invalid.append('CSIT_OUTPUT_DIR')
        if invalid:
            raise ValueError(f"環境變數設定錯誤: {', '.join(invalid)}")

    @property
    def level(self) -> int:
        return getattr(logging, self.log_level, logging.INFO)

    def __str__(self):
        """返回配置摘要"""
        return f"""
執行環境摘要:
- 執行緒數: {self.threads if self.threads > 0 else '自動'}
- 日誌等級: {self.log_level}
- 日誌檔案: {self.log_file or '輸出目錄/run.log'}
- 輸出目錄: {self.output_dir}
        """.strip()
