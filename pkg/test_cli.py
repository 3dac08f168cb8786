#!/usr/bin/env python3
"""
測試命令列介面的子命令與結束碼
"""

import csv
import json
import subprocess
import sys
import os
import tempfile

# 將專案模組加入路徑
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from csit_feedback.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, cli_main

ROOT = os.path.dirname(os.path.abspath(__file__))

SMALL_CONFIG = {
    'M': 4, 'N': 3, 'K': 2, 'L': 3, 'N_p': 3, 'T_p': 3, 'T': 10,
    'snr_db_grid': [10, 20, 30], 'beta_fb': 2, 'seed': 7,
    'trials': {'matrices': 1, 'covariances': 1, 'channels': 10},
}


def _write_config(directory: str, name: str, data: dict) -> str:
    path = os.path.join(directory, name)
    with open(path, 'w', encoding='utf-8') as file:
        json.dump(data, file)
    return path


def test_validate_config():
    """validate-config：有效為 0，違反不變條件為 1，路徑錯誤為 2"""
    print("測試 validate-config...")

    with tempfile.TemporaryDirectory() as tmp:
        good = _write_config(tmp, 'good.json', SMALL_CONFIG)
        assert cli_main(['validate-config', good]) == EXIT_OK
        assert cli_main(['validate-config', '--config', good]) == EXIT_OK

        bad = _write_config(tmp, 'bad.json', dict(SMALL_CONFIG, K=5))
        process = subprocess.run(
            [sys.executable, os.path.join(ROOT, 'CSIT_sim.py'), 'validate-config', bad],
            cwd=tmp, capture_output=True, text=True, timeout=120,
        )
        assert process.returncode == EXIT_FAILURE, process.stderr
        assert "K <= M" in process.stderr

        for broken in ({'kappa': '1.0'}, {'snr_db_grid': 20}, {'trials': {'channels': '100'}}):
            path = _write_config(tmp, 'broken.json', dict(SMALL_CONFIG, **broken))
            assert cli_main(['validate-config', path]) == EXIT_FAILURE

        assert cli_main(['validate-config', os.path.join(tmp, 'missing.json')]) == EXIT_USAGE
        assert cli_main(['validate-config']) == EXIT_USAGE

    print("✓ validate-config 測試通過")


def test_usage_errors():
    """參數錯誤的結束碼為 2"""
    print("測試參數錯誤...")

    assert cli_main([]) == EXIT_USAGE
    assert cli_main(['no-such-command']) == EXIT_USAGE
    assert cli_main(['mse-sweep']) == EXIT_USAGE
    with tempfile.TemporaryDirectory() as tmp:
        good = _write_config(tmp, 'good.json', SMALL_CONFIG)
        assert cli_main(['mse-sweep', '--config', good, '--strategies', 'rd,bogus']) == EXIT_USAGE
        assert cli_main(['exponent', '--out', tmp]) == EXIT_USAGE

    print("✓ 參數錯誤測試通過")


def test_sweep_and_exponent():
    """mse-sweep 寫出 CSV、meta.json 與日誌，exponent 由 CSV 擬合指數"""
    print("測試 mse-sweep 與 exponent...")

    with tempfile.TemporaryDirectory() as tmp:
        config = _write_config(tmp, 'small.json', SMALL_CONFIG)
        out = os.path.join(tmp, 'out')
        previous = os.environ.get('CSIT_LOG_LEVEL')
        os.environ['CSIT_LOG_LEVEL'] = 'DEBUG'
        try:
            assert cli_main(['mse-sweep', '--config', config, '--out', out, '--threads', '2',
                             '--strategies', 'rd,af']) == EXIT_OK
        finally:
            if previous is None:
                os.environ.pop('CSIT_LOG_LEVEL', None)
            else:
                os.environ['CSIT_LOG_LEVEL'] = previous

        for name in ('mse.csv', 'meta.json', 'run.log'):
            assert os.path.isfile(os.path.join(out, name)), name
        with open(os.path.join(out, 'run.log'), encoding='utf-8') as file:
            log_text = file.read()
        assert '執行環境摘要' in log_text
        assert 'MSE 掃描完成' in log_text
        with open(os.path.join(out, 'mse.csv'), newline='', encoding='utf-8') as file:
            rows = list(csv.DictReader(file))
        assert {row['strategy'] for row in rows} == {'mmse', 'rd', 'af'}
        with open(os.path.join(out, 'meta.json'), encoding='utf-8') as file:
            meta = json.load(file)
        assert meta['config']['strategies'] == ['rd', 'af']
        assert meta['seed'] == 7

        fitted = os.path.join(tmp, 'fit')
        assert cli_main(['exponent', '--input', os.path.join(out, 'mse.csv'), '--out', fitted,
                         '--window', '20']) == EXIT_OK
        with open(os.path.join(fitted, 'exponents.csv'), newline='', encoding='utf-8') as file:
            fits = list(csv.DictReader(file))
        assert any(row['metric'] == 'alpha:d_mmse' for row in fits)
        assert os.path.isfile(os.path.join(fitted, 'exponent_map.csv'))

        assert cli_main(['exponent', '--input', os.path.join(tmp, 'nope.csv'), '--out', fitted]) == EXIT_USAGE

    print("✓ mse-sweep 與 exponent 測試通過")


def test_selftest():
    """selftest 子命令全部通過"""
    print("測試 selftest...")

    assert cli_main(['selftest', '--seed', '3']) == EXIT_OK

    print("✓ selftest 測試通過")


def main():
    """主測試函數"""
    print("開始命令列介面測試")
    print("=" * 40)

    try:
        test_validate_config()
        test_usage_errors()
        test_sweep_and_exponent()
        test_selftest()

        print("=" * 40)
        print("✅ 所有命令列介面測試通過！")

    except Exception as e:
        print(f"❌ 測試失敗: {e}")
        return 1

    return 0


if __name__ == "__main__":
    exit_code = main()
    sys.exit(exit_code)
