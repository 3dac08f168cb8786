"""
隨機數串流模組
以計數器式種子衍生互相獨立的子串流，結果與執行順序及執行緒數無關
"""

import zlib
from typing import Tuple

import numpy as np


def purpose_code(purpose: str) -> int:
    """將用途標籤轉為穩定的整數"""
    return zlib.crc32(purpose.encode('utf-8'))


class StreamFactory:
    """子串流工廠

    每個 (key, purpose, index) 組合對應一個獨立的 SeedSequence，
    新增策略或調整排程都不會擾動其他串流。
    """

    def __init__(self, seed: int, key: Tuple[int, ...] = ()):
        if seed < 0:
            raise ValueError(f"seed 必須為非負整數: {seed}")
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)

    def child(self, *key: int) -> 'StreamFactory':
        return StreamFactory(self.seed, self.key + tuple(int(k) for k in key))

    def seed_sequence(self, purpose: str, *index: int) -> np.random.SeedSequence:
        spawn_key = self.key + (purpose_code(purpose),) + tuple(int(i) for i in index)
        return np.random.SeedSequence(self.seed, spawn_key=spawn_key)

    def generator(self, purpose: str, *index: int) -> np.random.Generator:
        return np.random.default_rng(self.seed_sequence(purpose, *index))

    def __repr__(self):
        return f"StreamFactory(seed={self.seed}, key={self.key})"


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """循環對稱複數高斯 CN(0, variance)"""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
