"""
命令列介面模組
子命令：mse-sweep、sumrate-sweep、exponent、validate-config、selftest
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

from . import __version__
from .config import RuntimeConfig, SystemConfig, load_config
from .errors import CSITSimError
from .feedback import STRATEGIES
from .harness import (
    ExperimentHarness,
    exponent_map,
    fitted_exponents,
)
from .results import SweepResult, SweepRow, write_table
from .selftest import run_selftest

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """參數或設定檔路徑錯誤"""


def setup_logging(level: int = logging.INFO, log_file: Optional[str] = None):
    """設置日誌配置"""
    handlers = [logging.StreamHandler()]
    if log_file:
        directory = os.path.dirname(log_file)
        if directory:
            os.makedirs(directory, exist_ok=True)
        handlers.insert(0, logging.FileHandler(log_file, encoding='utf-8'))
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def _strategy_list(text: str) -> List[str]:
    strategies = [s.strip() for s in text.split(',') if s.strip()]
    unknown = [s for s in strategies if s not in STRATEGIES]
    if unknown or not strategies:
        raise argparse.ArgumentTypeError(
            f"未知的策略: {', '.join(unknown) or '(空)'} (可用: {', '.join(STRATEGIES)})")
    return strategies


def build_parser(runtime: RuntimeConfig) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='CSIT_sim',
        description='大規模 MIMO FDD 系統 CSIT 回饋策略模擬',
    )
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest='command', required=True)

    def add_run_flags(p: argparse.ArgumentParser, config_required: bool = True):
        p.add_argument('--config', required=config_required, help='JSON 情境設定檔')
        p.add_argument('--out', default=runtime.output_dir, help='輸出目錄')
        p.add_argument('--seed', type=int, default=None, help='覆寫設定檔中的種子')
        p.add_argument('--threads', type=int, default=runtime.threads, help='執行緒數 (0 = 自動)')
        p.add_argument('--strategies', type=_strategy_list, default=None,
                       help=f"逗號分隔的策略清單 ({', '.join(STRATEGIES)})")

    add_run_flags(sub.add_parser('mse-sweep', help='CSIT 誤差對 SNR 掃描'))
    add_run_flags(sub.add_parser('sumrate-sweep', help='和速率對訓練維度掃描'))

    exponent = sub.add_parser('exponent', help='擬合品質縮放指數並輸出理論指數表')
    add_run_flags(exponent, config_required=False)
    exponent.add_argument('--input', default=None, help='既有的 mse.csv，提供時不重新模擬')
    exponent.add_argument('--window', type=float, default=None, help='擬合範圍 (dB)')

    validate = sub.add_parser('validate-config', help='驗證設定檔')
    validate.add_argument('config_path', nargs='?', default=None)
    validate.add_argument('--config', default=None)

    selftest = sub.add_parser('selftest', help='執行公式對照檢查')
    selftest.add_argument('--seed', type=int, default=0)
    selftest.add_argument('--out', default=None, help='日誌輸出目錄')
    return parser


def _load(path: Optional[str]) -> SystemConfig:
    if not path:
        raise UsageError("缺少設定檔路徑 (--config)")
    if not os.path.isfile(path):
        raise UsageError(f"找不到設定檔: {path}")
    return load_config(path)


def _configure(args) -> SystemConfig:
    config = _load(args.config)
    config = config.with_overrides(seed=args.seed, strategies=args.strategies)
    config.validate()
    return config


def _log_file(runtime: RuntimeConfig, out_dir: Optional[str]) -> Optional[str]:
    if runtime.log_file:
        return runtime.log_file
    if out_dir:
        return os.path.join(out_dir, 'run.log')
    return None


def _run_sweep(args, kind: str) -> int:
    logger = logging.getLogger(__name__)
    config = _configure(args)
    logger.info(f"設定雜湊 {config.config_hash()[:12]}，種子 {config.seed}，策略 {', '.join(config.strategies)}")
    harness = ExperimentHarness(config, args.threads)
    if kind == 'mse':
        result = harness.run_mse_sweep()
        paths = result.write(args.out, 'mse.csv')
    else:
        result = harness.run_sumrate_sweep()
        paths = result.write(args.out, 'sumrate.csv')
    logger.info(f"結果已寫入 {paths['csv']}")
    print(f"{kind}-sweep 完成: {len(result.rows)} 列 -> {paths['csv']} "
          f"(捨棄 {result.metadata['discarded_trials']} 次試驗，耗時 {result.metadata['wall_time_s']} 秒)")
    return EXIT_OK


def _run_exponent(args) -> int:
    logger = logging.getLogger(__name__)
    config = _configure(args) if args.config else SystemConfig(beta_fb=0)
    window = args.window if args.window is not None else config.fit_window_db

    if args.input:
        if not os.path.isfile(args.input):
            raise UsageError(f"找不到輸入檔: {args.input}")
        result = SweepResult.read_csv(args.input)
        logger.info(f"由 {args.input} 讀取 {len(result.rows)} 列")
    elif args.config:
        result = ExperimentHarness(config, args.threads).run_mse_sweep()
    else:
        raise UsageError("exponent 需要 --config 或 --input")

    fits = fitted_exponents(result, window)
    rows = [
        SweepRow(strategy=key.split('/')[0], x_name='fit_window_db', x_value=window,
                 metric=f"alpha:{key.split('/')[1]}", value=fit['alpha'], stderr=fit['stderr'],
                 n_trials=fit['n_points'])
        for key, fit in fits.items()
    ]
    r = min(config.L, config.M * config.N)
    step = max(1, r // 10)
    grid = list(range(0, 2 * r + 1, step))
    entries = exponent_map(grid, grid, r, config.K)

    output = SweepResult(rows=rows, metadata={
        'kind': 'exponent',
        'source': args.input or 'simulated',
        'fit_window_db': window,
        'fitted_exponents': fits,
        'rank': r,
        'version': __version__,
    })
    paths = output.write(args.out, 'exponents.csv')
    write_table(os.path.join(args.out, 'exponent_map.csv'), entries)
    summary = ', '.join(f"{key}={fit['alpha']:.3f}" for key, fit in fits.items())
    print(f"exponent 完成: {summary or '無可擬合曲線'} -> {paths['csv']}")
    return EXIT_OK


def _run_validate(args) -> int:
    config = _load(args.config_path or args.config)
    print(f"設定檔有效: 雜湊 {config.config_hash()[:12]}，β_tr = {list(config.beta_tr_values)}")
    return EXIT_OK


def _run_selftest(args) -> int:
    report = run_selftest(seed=args.seed)
    for line in report.lines():
        print(line)
    print(f"selftest {'通過' if report.passed else '失敗'}")
    return EXIT_OK if report.passed else EXIT_FAILURE


def cli_main(argv: Optional[List[str]] = None) -> int:
    """主函數，回傳結束碼"""
    runtime = RuntimeConfig()
    try:
        runtime.validate()
    except ValueError as e:
        print(f"配置錯誤: {e}", file=sys.stderr)
        print("請檢查 .env 檔案設定", file=sys.stderr)
        return EXIT_USAGE

    parser = build_parser(runtime)
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    setup_logging(runtime.level, _log_file(runtime, getattr(args, 'out', None)))
    logger = logging.getLogger(__name__)
    logger.debug(str(runtime))

    try:
        if args.command == 'mse-sweep':
            return _run_sweep(args, 'mse')
        if args.command == 'sumrate-sweep':
            return _run_sweep(args, 'sumrate')
        if args.command == 'exponent':
            return _run_exponent(args)
        if args.command == 'validate-config':
            return _run_validate(args)
        return _run_selftest(args)
    except UsageError as e:
        print(f"用法錯誤: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (CSITSimError, ValueError) as e:
        logger.error(f"{args.command} 失敗: {e}")
        print(f"錯誤: {e}", file=sys.stderr)
        return EXIT_FAILURE
