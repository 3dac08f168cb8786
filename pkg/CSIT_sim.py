#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
大規模 MIMO CSIT 回饋模擬 v1.0
用途：比較率失真最佳回饋、ECSQ 與類比回饋的 CSIT 誤差與下行和速率

功能：
1. 多徑通道共變異數與區塊衰落通道產生
2. UE 端 MMSE 估計與三種回饋策略
3. 逐子載波 ZF 預編碼的遍歷和速率
4. 品質縮放指數擬合與理論指數表

使用方式：
    python CSIT_sim.py mse-sweep --config configs/mse_case1.json --out out/mse_case1
    python CSIT_sim.py sumrate-sweep --config configs/sumrate_zeta1.json --out out/sumrate_zeta1
    python CSIT_sim.py exponent --input out/mse_case1/mse.csv --out out/mse_case1
    python CSIT_sim.py validate-config configs/mse_case2.json
    python CSIT_sim.py selftest

環境變數設定：
    請參考 .env.example 檔案
"""

import os
import sys

# 將專案模組加入路徑
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from csit_feedback.cli import cli_main


def main() -> int:
    """主函數"""
    print("大規模 MIMO CSIT 回饋模擬 v1.0")
    print("=" * 40)
    return cli_main(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
