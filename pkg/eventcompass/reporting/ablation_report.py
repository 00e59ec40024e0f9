"""
절제 실험 보고서
L_context 유무, 컨텍스트 수 K, 학습 스텝 수 스윕 → 프로브 mIoU 비교 표와 차트
"""

import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import seaborn as sns  # noqa: E402

from ..config.settings import Settings  # noqa: E402
from ..core.data_manager import DataManager  # noqa: E402
from ..core.exceptions import ConfigError  # noqa: E402
from ..evaluation.probe import run_probe  # noqa: E402
from ..training.trainer import METRICS_COLUMNS, run_sweep  # noqa: E402
from ..utils.formatters import format_loss, format_percentage, format_signed  # noqa: E402
from ..utils.logger import get_logger  # noqa: E402

logger = get_logger(__name__)

ABLATIONS: Dict[str, tuple] = {
    'context': ('train.lambda_context', None),
    'contexts': ('train.num_contexts', [2, 4, 8, 16]),
    'steps': ('train.steps', None),
}

LOSS_COLUMNS = ['L_patch', 'L_context', 'L_image', 'L_total']


def default_values(kind: str, settings: Settings) -> list:
    """스윕 기본 값 (with/without L_context, K, 스텝 수)"""
    if kind == 'context':
        return [settings.train.lambda_context or 0.1, 0.0]
    if kind == 'steps':
        steps = settings.train.steps
        return sorted({max(1, steps // 4), max(1, steps // 2), steps})
    return list(ABLATIONS[kind][1])


@dataclass
class AblationReport:
    """스윕 결과 표"""
    kind: str
    key: str
    table: pd.DataFrame
    notes: List[str] = field(default_factory=list)

    def to_markdown(self) -> str:
        columns = list(self.table.columns)
        lines = [f"# 절제 실험: {self.kind} ({self.key})", "",
                 "| " + " | ".join(columns) + " |",
                 "|" + "|".join("---" for _ in columns) + "|"]
        for _, row in self.table.iterrows():
            cells = [f"{v:.4f}" if isinstance(v, (float, np.floating)) else str(v) for v in row]
            lines.append("| " + " | ".join(cells) + " |")
        if self.notes:
            lines.append("")
            lines.extend(f"- {note}" for note in self.notes)
        return "\n".join(lines) + "\n"

    def save(self, output_dir: str) -> Dict[str, str]:
        os.makedirs(output_dir, exist_ok=True)
        paths = {
            'csv': os.path.join(output_dir, f"ablation_{self.kind}.csv"),
            'markdown': os.path.join(output_dir, f"ablation_{self.kind}.md"),
            'chart': os.path.join(output_dir, f"ablation_{self.kind}.png"),
        }
        self.table.to_csv(paths['csv'], index=False)
        with open(paths['markdown'], 'w', encoding='utf-8') as f:
            f.write(self.to_markdown())
        plot_comparison(self.table, paths['chart'], title=f"{self.kind} 절제 실험")
        logger.info(f"💾 절제 실험 보고서 저장: {output_dir}")
        return paths


def build_table(rows: Sequence[Dict]) -> pd.DataFrame:
    columns = ['value', 'L_total_first', 'L_total_last', 'miou', 'mean_accuracy', 'baseline_miou', 'margin']
    return pd.DataFrame(list(rows), columns=columns)


def context_difference_note(table: pd.DataFrame) -> str:
    """with − without 부호 (판정하지 않고 기록만)"""
    with_row = table[table['value'] != 0].iloc[0]
    without_row = table[table['value'] == 0].iloc[0]
    difference = float(with_row['miou'] - without_row['miou'])
    sign = "양수" if difference > 0 else "음수" if difference < 0 else "0"
    return f"mIoU(with L_context) − mIoU(without) = {format_signed(difference * 100)}pt ({sign})"


def run_ablation(settings: Settings, kind: str, output_dir: str, values: Optional[Sequence] = None,
                 data_manager: Optional[DataManager] = None, threads: int = 1) -> AblationReport:
    """스윕 학습 → 각 체크포인트 프로브 → 비교 표"""
    if kind not in ABLATIONS:
        raise ConfigError(f"알 수 없는 절제 실험: {kind} (가능: {', '.join(ABLATIONS)})")
    key = ABLATIONS[kind][0]
    values = list(values) if values is not None else default_values(kind, settings)
    data_manager = data_manager or DataManager(settings.train.manifest, settings.dataset.num_bins)

    rows = []
    for run in run_sweep(settings, key, values, output_dir, data_manager=data_manager):
        summary = run_probe(run.result.checkpoint_path, settings, data_manager, run.output_dir, threads)
        reports = run.result.reports
        data = summary.to_dict()
        rows.append({
            'value': run.value,
            'L_total_first': reports[0].l_total if reports else float('nan'),
            'L_total_last': reports[-1].l_total if reports else float('nan'),
            'miou': data['mean_miou'],
            'mean_accuracy': float(np.mean([r.mean_accuracy for r in summary.pretrained])),
            'baseline_miou': data['baseline_mean_miou'],
            'margin': data['mean_miou'] - data['baseline_mean_miou'],
        })
        logger.info(f"{key}={run.value}: mIoU {format_percentage(data['mean_miou'])}, "
                    f"L_total {format_loss(rows[-1]['L_total_last'])}")

    table = build_table(rows)
    report = AblationReport(kind, key, table)
    if kind == 'context' and (table['value'] == 0).any() and (table['value'] != 0).any():
        report.notes.append(context_difference_note(table))
        logger.info(report.notes[-1])
    report.save(output_dir)
    return report


def plot_comparison(table: pd.DataFrame, save_path: str, title: str = "") -> str:
    """값별 mIoU 막대 (사전학습 vs 무작위 초기화)"""
    long = table.melt(id_vars=['value'], value_vars=['miou', 'baseline_miou'],
                      var_name='backbone', value_name='mIoU')
    long['value'] = long['value'].astype(str)
    long['backbone'] = long['backbone'].map({'miou': '사전학습', 'baseline_miou': '무작위 초기화'})

    fig, ax = plt.subplots(figsize=(8, 5))
    sns.barplot(data=long, x='value', y='mIoU', hue='backbone', ax=ax)
    ax.set_ylim(0, 1)
    ax.set_title(title)
    ax.grid(True, axis='y', alpha=0.3)
    fig.tight_layout()
    fig.savefig(save_path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    return save_path


def plot_training_curves(metrics_path: str, save_path: str) -> str:
    """metrics.csv 손실 곡선"""
    frame = pd.read_csv(metrics_path)
    missing = [c for c in METRICS_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"metrics.csv 에 없는 열: {missing}")
    long = frame.melt(id_vars=['step'], value_vars=LOSS_COLUMNS, var_name='loss', value_name='value')

    fig, (ax_loss, ax_entropy) = plt.subplots(2, 1, figsize=(10, 8), sharex=True)
    sns.lineplot(data=long, x='step', y='value', hue='loss', ax=ax_loss)
    ax_loss.set_title('학습 손실')
    ax_loss.grid(True, alpha=0.3)
    sns.lineplot(data=frame, x='step', y='teacher_entropy', ax=ax_entropy)
    ax_entropy.set_title('teacher 엔트로피')
    ax_entropy.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(save_path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    logger.info(f"📈 학습 곡선 저장: {save_path}")
    return save_path
