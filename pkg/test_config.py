#!/usr/bin/env python3
"""
測試情境設定檔與執行環境設定
"""

import json
import logging
import sys
import os
import tempfile

# 將專案模組加入路徑
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from csit_feedback.config import RuntimeConfig, SystemConfig, TrialCounts, load_config
from csit_feedback.errors import ConfigValidationError

ROOT = os.path.dirname(os.path.abspath(__file__))


def _violations(config: SystemConfig):
    try:
        config.validate()
    except ConfigValidationError as e:
        return e.violations
    return []


def test_runtime_config():
    """測試環境變數讀取"""
    print("測試執行環境設定...")

    saved = {key: os.environ.get(key) for key in
             ('CSIT_THREADS', 'CSIT_LOG_LEVEL', 'CSIT_LOG_FILE', 'CSIT_OUTPUT_DIR')}
    try:
        os.environ['CSIT_THREADS'] = '3'
        os.environ['CSIT_LOG_LEVEL'] = 'debug'
        os.environ['CSIT_LOG_FILE'] = ''
        os.environ['CSIT_OUTPUT_DIR'] = 'results'

        runtime = RuntimeConfig()
        runtime.validate()
        assert runtime.threads == 3
        assert runtime.log_level == 'DEBUG'
        assert runtime.level == logging.DEBUG
        assert runtime.output_dir == 'results'
        assert '執行環境摘要' in str(runtime)

        os.environ['CSIT_THREADS'] = '-1'
        os.environ['CSIT_LOG_LEVEL'] = 'LOUD'
        try:
            RuntimeConfig().validate()
            assert False, "無效的環境變數應拋出 ValueError"
        except ValueError as e:
            assert 'CSIT_THREADS' in str(e) and 'CSIT_LOG_LEVEL' in str(e)
    finally:
        for key, value in saved.items():
            if value is None:
                os.environ.pop(key, None)
            else:
                os.environ[key] = value

    print("✓ 執行環境設定測試通過")


def test_validation():
    """違反的不變條件一次全部列出"""
    print("測試設定驗證...")

    assert _violations(SystemConfig(beta_fb=40)) == []
    assert _violations(SystemConfig(K=40, beta_fb=10)) == ["K <= M"]

    violations = _violations(SystemConfig(K=40, N_p=30, T_p=80))
    assert "K <= M" in violations
    assert "N_p <= N" in violations
    assert "T_p <= T" in violations
    assert "exactly one of zeta/beta_fb" in violations

    assert "exactly one of zeta/beta_fb" in _violations(SystemConfig(zeta=1.0, beta_fb=10))
    assert "zeta > 0" in _violations(SystemConfig(zeta=0.0))
    assert "kappa > 0" in _violations(SystemConfig(beta_fb=1, kappa=0.0))
    assert "trials >= 1" in _violations(SystemConfig(beta_fb=1, trials=TrialCounts(channels=0)))
    assert any(v.startswith("strategies") for v in _violations(SystemConfig(beta_fb=1, strategies=('qq',))))
    assert "pilot pattern within N subcarriers" in _violations(SystemConfig(beta_fb=1, pilot_offset=6))
    assert "M >= 1" in _violations(SystemConfig(M=0, beta_fb=1))

    try:
        SystemConfig(K=40, beta_fb=10).validate()
        assert False, "K > M 應拋出 ConfigValidationError"
    except ValueError as e:
        assert "K <= M" in str(e)

    print("✓ 設定驗證測試通過")


def _dict_violations(data: dict):
    try:
        SystemConfig.from_dict(data)
    except ConfigValidationError as e:
        return e.violations
    return []


def test_wrong_types():
    """型別錯誤的 JSON 值記為違反條件，不會拋出 TypeError"""
    print("測試型別錯誤...")

    base = {'beta_fb': 10}
    assert "kappa > 0" in _dict_violations(dict(base, kappa="1.0"))
    assert "zeta > 0" in _dict_violations({'zeta': "0.25"})
    assert "trials >= 1" in _dict_violations(dict(base, trials={'channels': "100"}))
    assert "snr_db_grid non-empty list of numbers" in _dict_violations(dict(base, snr_db_grid=20))
    assert "snr_db_grid non-empty list of numbers" in _dict_violations(dict(base, snr_db_grid=[20, "30"]))
    assert "M >= 1" in _dict_violations(dict(base, M="32"))
    assert "M >= 1" in _dict_violations(dict(base, M=True))
    assert "T_p >= 1" in _dict_violations(dict(base, T_p="10"))
    assert "beta_fb >= 0" in _dict_violations({'beta_fb': 2.5})
    assert "0 <= seed < 2^64" in _dict_violations(dict(base, seed=-1))
    assert "fit_window_db > 0" in _dict_violations(dict(base, fit_window_db=None))
    assert any(v.startswith("strategies") for v in _dict_violations(dict(base, strategies="rd")))
    assert "pilot_offset >= 0" in _dict_violations(dict(base, pilot_offset=-1))

    # 型別錯誤與跨欄位條件同時列出
    violations = _dict_violations({'kappa': "1.0", 'zeta': "0.25", 'K': 40,
                                   'trials': {'channels': "100"}})
    assert violations == ["K <= M", "zeta > 0", "kappa > 0", "trials >= 1"], violations

    print("✓ 型別錯誤測試通過")


def test_cross_field_with_invalid_basics():
    """基本欄位無效時仍檢查其他欄位間的條件"""
    print("測試跨欄位條件...")

    violations = _violations(SystemConfig(L=0, K=40, beta_fb=1))
    assert violations == ["L >= 1", "K <= M"], violations

    violations = _violations(SystemConfig(M=0, K=40, T_p=80, beta_fb=1))
    assert "M >= 1" in violations
    assert "K <= M" not in violations
    assert "T_p <= T" in violations

    violations = _violations(SystemConfig(N=0, N_p=30, T=5, T_p=(3, 8), beta_fb=1))
    assert violations == ["N >= 1", "T_p <= T"], violations

    print("✓ 跨欄位條件測試通過")


def test_feedback_dimension():
    """β_fb = ⌈ζ β_tr⌉"""
    print("測試回饋維度...")

    assert SystemConfig(beta_fb=7).feedback_dimension(40) == 7
    assert SystemConfig(zeta=0.25).feedback_dimension(40) == 10
    assert SystemConfig(zeta=0.25).feedback_dimension(31) == 8
    assert SystemConfig(zeta=1.0 / 3.0).feedback_dimension(30) == 10
    assert SystemConfig(zeta=1).feedback_dimension(20) == 20

    config = SystemConfig(T_p=(5, 10), beta_fb=1)
    assert config.t_p_values == (5, 10)
    assert config.beta_tr_values == (20, 40)
    assert abs(config.effective_tau_max - 1.0 / (15e3 * 24)) < 1e-18
    assert abs(config.snr_linear_grid[0] - 100.0) < 1e-9

    print("✓ 回饋維度測試通過")


def test_config_files():
    """測試 JSON 設定檔的讀取與拒絕"""
    print("測試設定檔讀取...")

    case1 = load_config(os.path.join(ROOT, 'configs', 'mse_case1.json'))
    assert case1.beta_fb == 40 and case1.seed == 2017
    assert case1.trials.total_channels == 1000
    assert case1.beta_tr_values == (40,)

    zeta1 = load_config(os.path.join(ROOT, 'configs', 'sumrate_zeta1.json'))
    assert zeta1.beta_tr_values == (20, 32, 40, 60, 80, 100, 120)
    assert 'perfect' in zeta1.strategies

    for name in ('mse_case2.json', 'sumrate_zeta_quarter.json'):
        load_config(os.path.join(ROOT, 'configs', name))

    assert case1.config_hash() == load_config(os.path.join(ROOT, 'configs', 'mse_case1.json')).config_hash()
    assert case1.with_overrides(seed=2).config_hash() != case1.config_hash()
    assert case1.with_overrides(strategies=['af']).strategies == ('af',)

    with tempfile.TemporaryDirectory() as tmp:
        unknown = os.path.join(tmp, 'unknown.json')
        with open(unknown, 'w', encoding='utf-8') as file:
            json.dump({'beta_fb': 4, 'foo': 1, 'trials': {'bar': 2}}, file)
        try:
            load_config(unknown)
            assert False, "未知鍵名應拋出 ConfigValidationError"
        except ConfigValidationError as e:
            assert "unknown key 'foo'" in e.violations
            assert "unknown key 'trials.bar'" in e.violations

        broken = os.path.join(tmp, 'broken.json')
        with open(broken, 'w', encoding='utf-8') as file:
            file.write('{"M": 4,')
        try:
            load_config(broken)
            assert False, "無效 JSON 應拋出 ConfigValidationError"
        except ConfigValidationError:
            pass

        again = SystemConfig.from_dict(case1.to_dict())
        assert again.config_hash() == case1.config_hash()

    print("✓ 設定檔讀取測試通過")


def main():
    """主測試函數"""
    print("開始設定測試")
    print("=" * 40)

    try:
        test_runtime_config()
        test_validation()
        test_wrong_types()
        test_cross_field_with_invalid_basics()
        test_feedback_dimension()
        test_config_files()

        print("=" * 40)
        print("✅ 所有設定測試通過！")

    except Exception as e:
        print(f"❌ 測試失敗: {e}")
        return 1

    return 0


if __name__ == "__main__":
    exit_code = main()
    sys.exit(exit_code)
