"""
結果輸出模組
掃描結果的表格列、CSV 與 JSON 中繼資料的讀寫
"""

import csv
import json
import os
from dataclasses import dataclass, field, fields
from typing import Dict, List, Tuple

from .statistics_collector import StatisticsCollector

CSV_COLUMNS = ['strategy', 'x_name', 'x_value', 'metric', 'value', 'stderr', 'n_trials']


def format_float(value: float) -> str:
    """浮點數以 17 位有效數字輸出"""
    return format(float(value), '.17g')


@dataclass(frozen=True)
class SweepRow:
    strategy: str
    x_name: str
    x_value: float
    metric: str
    value: float
    stderr: float
    n_trials: int

    def to_fields(self) -> List[str]:
        return [self.strategy, self.x_name, format_float(self.x_value), self.metric,
                format_float(self.value), format_float(self.stderr), str(self.n_trials)]

    @classmethod
    def from_fields(cls, record: Dict[str, str]) -> 'SweepRow':
        return cls(strategy=record['strategy'], x_name=record['x_name'],
                   x_value=float(record['x_value']), metric=record['metric'],
                   value=float(record['value']), stderr=float(record['stderr']),
                   n_trials=int(record['n_trials']))


@dataclass
class SweepResult:
    """掃描結果：表格列加上可重現性所需的中繼資料"""
    rows: List[SweepRow] = field(default_factory=list)
    metadata: Dict = field(default_factory=dict)

    @classmethod
    def from_collector(cls, collector: StatisticsCollector, x_name: str,
                       metadata: Dict = None) -> 'SweepResult':
        rows = [
            SweepRow(strategy=stats.strategy, x_name=x_name, x_value=stats.x_value,
                     metric=stats.metric, value=stats.mean, stderr=stats.stderr,
                     n_trials=stats.n_trials)
            for stats in collector.items()
        ]
        return cls(rows=rows, metadata=dict(metadata or {}))

    def strategies(self) -> List[str]:
        seen = []
        for row in self.rows:
            if row.strategy not in seen:
                seen.append(row.strategy)
        return seen

    def curve(self, strategy: str, metric: str) -> List[Tuple[float, float]]:
        """取出單一曲線 [(x, value), ...]，依 x 排序"""
        points = [(row.x_value, row.value) for row in self.rows
                  if row.strategy == strategy and row.metric == metric]
        return sorted(points)

    def find(self, strategy: str, x_value: float, metric: str) -> SweepRow:
        for row in self.rows:
            if row.strategy == strategy and row.metric == metric and row.x_value == x_value:
                return row
        raise KeyError(f"找不到結果列: {strategy}, {x_value}, {metric}")

    def write_csv(self, path: str):
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', newline='', encoding='utf-8') as file:
            writer = csv.writer(file, lineterminator='\n')
            writer.writerow(CSV_COLUMNS)
            for row in self.rows:
                writer.writerow(row.to_fields())

    def write_metadata(self, path: str):
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as file:
            json.dump(self.metadata, file, indent=2, sort_keys=True, ensure_ascii=False)
            file.write('\n')

    def write(self, out_dir: str, csv_name: str) -> Dict[str, str]:
        """寫出 CSV 與 meta.json，回傳檔案路徑"""
        paths = {
            'csv': os.path.join(out_dir, csv_name),
            'meta': os.path.join(out_dir, 'meta.json'),
        }
        self.write_csv(paths['csv'])
        self.write_metadata(paths['meta'])
        return paths

    @classmethod
    def read_csv(cls, path: str) -> 'SweepResult':
        with open(path, newline='', encoding='utf-8') as file:
            reader = csv.DictReader(file)
            missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or [])]
            if missing:
                raise ValueError(f"CSV 缺少欄位: {', '.join(missing)}")
            rows = [SweepRow.from_fields(record) for record in reader]
        return cls(rows=rows)


def write_table(path: str, records: List) -> str:
    """將 dataclass 紀錄寫成 CSV，欄位依 dataclass 欄位順序"""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as file:
        writer = csv.writer(file, lineterminator='\n')
        if records:
            columns = [f.name for f in fields(records[0])]
            writer.writerow(columns)
            for record in records:
                writer.writerow([format_float(v) if isinstance(v, float) else v
                                 for v in (getattr(record, c) for c in columns)])
    return path
