"""
例外類別模組
"""

from typing import List, Optional


class CSITSimError(Exception):
    """模擬套件的基底例外"""


class InfeasibleDistortionError(CSITSimError, ValueError):
    """要求的誤差低於 D_mmse，任何回饋率都無法達成"""

    def __init__(self, distortion: float, d_mmse: float):
        self.distortion = distortion
        self.d_mmse = d_mmse
        super().__init__(
            f"誤差 D={distortion:.6g} 低於 D_mmse={d_mmse:.6g}，無法達成"
        )


class SingularPrecoderError(CSITSimError):
    """估計通道矩陣秩不足，無法計算 ZF 預編碼"""

    def __init__(self, subcarrier: int, message: Optional[str] = None):
        self.subcarrier = subcarrier
        super().__init__(message or f"子載波 {subcarrier} 的估計通道矩陣秩不足")


class ConfigValidationError(CSITSimError, ValueError):
    """設定檔違反一或多個不變條件"""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("設定檔驗證失敗: " + "; ".join(self.violations))
