"""
EventCompass 명령행 진입점

    eventcompass simulate  --config cfg.toml --out data/moving_shapes
    eventcompass pretrain  --config cfg.toml --out runs/pretrain [--resume ckpt.eckp]
    eventcompass probe     --checkpoint runs/pretrain/checkpoint_final.eckp
    eventcompass render    --checkpoint ckpt.eckp --contexts
    eventcompass inspect   PATH
    eventcompass ablate    --kind context

종료 코드: 0 성공, 1 사용법 / 설정 / 인자 오류, 2 데이터 / 수치 오류
"""

import argparse
import json
import os
import sys
from typing import List, Optional

from . import __version__
from .config.settings import Settings
from .core.data_manager import DataManager, load_manifest
from .core.event_io import read_events
from .core.exceptions import ConfigError, DataError, NumericError
from .utils.formatters import format_count, format_duration_us, format_toml_value
from .utils.logger import configure_from_settings, get_logger
from .utils.seeding import derive_seed

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class CliParser(argparse.ArgumentParser):
    """사용법 오류를 ConfigError 로 변환 (종료 코드 1)"""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='TOML 설정 파일')
    common.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                        help='설정 오버라이드 (반복 가능)')
    common.add_argument('--seed', type=int, help='시드 오버라이드')
    common.add_argument('--threads', type=int, help='작업 스레드 수 (1 = 결정적 모드)')
    common.add_argument('--out', help='출력 디렉토리')
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='DEBUG 로그')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='WARNING 이상만')
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = CliParser(prog='eventcompass', description='🎞️ 이벤트 카메라 자기지도 사전학습 도구')
    parser.add_argument('--version', action='version', version=f'eventcompass {__version__}')
    sub = parser.add_subparsers(dest='command', parser_class=CliParser)
    sub.required = True

    sub.add_parser('simulate', parents=[common], help='moving-shapes / 이미지 데이터셋 생성')

    pretrain = sub.add_parser('pretrain', parents=[common], help='자기지도 사전학습')
    pretrain.add_argument('--resume', help='이어서 학습할 체크포인트')

    probe = sub.add_parser('probe', parents=[common], help='고정 특징 선형 프로브')
    probe.add_argument('--checkpoint', required=True, help='사전학습 체크포인트')

    render = sub.add_parser('render', parents=[common], help='이벤트 이미지 / 컨텍스트 PNG')
    render.add_argument('--manifest', help='데이터셋 매니페스트 (기본: train.manifest)')
    render.add_argument('--checkpoint', help='컨텍스트 마이닝용 체크포인트')
    render.add_argument('--contexts', action='store_true', help='컨텍스트 라벨 맵과 블렌드도 저장')
    render.add_argument('--split', default='test', help='렌더링할 분할')
    render.add_argument('--limit', type=int, default=8, help='최대 샘플 수')
    render.add_argument('--scale', type=int, default=4, help='확대 배율')

    inspect = sub.add_parser('inspect', parents=[common], help='체크포인트 / 매니페스트 / 이벤트 파일 요약')
    inspect.add_argument('path', help='.eckp, manifest.json 또는 .evs')

    ablate = sub.add_parser('ablate', parents=[common], help='절제 실험 (L_context 유무, K, 스텝 수)')
    ablate.add_argument('--kind', default='context', choices=['context', 'contexts', 'steps'])
    ablate.add_argument('--values', nargs='+', help='스윕 값 (기본값은 실험별)')
    return parser


def load_settings(args) -> Settings:
    """설정 파일 → --set → --seed / --threads 순서로 적용"""
    settings = Settings(args.config)
    settings.apply_overrides(args.overrides)
    if args.seed is not None:
        seed_keys = {
            'simulate': ['simulation.seed'],
            'pretrain': ['train.seed'],
            'ablate': ['train.seed'],
            'probe': ['probe.seed'],
        }.get(args.command, [])
        for key in seed_keys:
            settings.set_value(key, args.seed)
        if args.command == 'probe':
            settings.probe.seeds = [args.seed]
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads 는 1 이상이어야 합니다", key="train.threads")
        settings.train.threads = args.threads
    return settings.validate()


def _configure_logging(args, settings: Settings, output_dir: Optional[str]):
    level = 'DEBUG' if args.verbose else 'WARNING' if args.quiet else None
    configure_from_settings(settings.logging, output_dir, level_override=level)
    for item in args.overrides:
        key, _, raw = item.partition('=')
        section, _, name = key.strip().partition('.')
        logger.info(f"오버라이드 {key.strip()} = {format_toml_value(getattr(getattr(settings, section), name))}")


def cmd_simulate(args, settings: Settings, argv: List[str]) -> int:
    from .simulation.dataset import pack_dataset
    from .simulation.scenes import build_sources

    out_dir = args.out or settings.dataset.root
    settings.save_run_header(out_dir, argv)
    manifest = pack_dataset(build_sources(settings.dataset), out_dir, settings.simulation,
                            settings.dataset, seed=settings.simulation.seed, threads=settings.train.threads)
    print(f"✅ 샘플 {len(manifest)}개 생성 → {out_dir}")
    return EXIT_OK


def cmd_pretrain(args, settings: Settings, argv: List[str]) -> int:
    from .reporting.ablation_report import plot_training_curves
    from .training.trainer import train_loop

    out_dir = args.out or settings.train.output_dir
    settings.save_run_header(out_dir, argv)
    result = train_loop(settings, out_dir, resume=args.resume)
    if result.metrics_path:
        plot_training_curves(result.metrics_path, os.path.join(out_dir, 'training_curves.png'))
    if result.reports:
        first, last = result.reports[0], result.reports[-1]
        print(f"✅ L_total {first.l_total:.4f} → {last.l_total:.4f} ({len(result.reports)} steps)")
    print(f"💾 체크포인트: {result.checkpoint_path}")
    return EXIT_OK


def cmd_probe(args, settings: Settings, argv: List[str]) -> int:
    from .evaluation.probe import run_probe

    out_dir = args.out or settings.probe.output_dir
    settings.save_run_header(out_dir, argv)
    summary = run_probe(args.checkpoint, settings, output_dir=out_dir, threads=settings.train.threads)
    data = summary.to_dict()
    print(f"✅ mIoU {data['mean_miou'] * 100:.2f} (무작위 초기화 {data['baseline_mean_miou'] * 100:.2f})")
    return EXIT_OK


def cmd_render(args, settings: Settings, argv: List[str]) -> int:
    from .augmentation.patches import PatchGrid
    from .evaluation.probe import load_backbone
    from .visualization.render import mine_image_contexts, render_sample

    if args.contexts and not args.checkpoint:
        raise ConfigError("--contexts 에는 --checkpoint 가 필요합니다")
    out_dir = args.out or os.path.join(settings.train.output_dir, 'render')
    manifest_path = args.manifest or settings.train.manifest
    backbone, grid, num_bins = None, None, settings.dataset.num_bins
    if args.contexts:
        model_config, backbone = load_backbone(args.checkpoint)
        grid = PatchGrid(model_config.patch_size, model_config.image_size, model_config.image_size)
        num_bins = model_config.in_channels

    data_manager = DataManager(manifest_path, num_bins)
    records = data_manager.samples(args.split)[:max(0, args.limit)]
    written = 0
    for index, record in enumerate(records):
        stream = read_events(data_manager.resolve(record.event_path))
        contexts = None
        if backbone is not None:
            assignment = mine_image_contexts(
                backbone, data_manager.event_image(record), grid, settings.train.num_contexts,
                settings.train.kmeans_iters, derive_seed(settings.train.seed, index))
            contexts = (assignment, grid)
        written += len(render_sample(out_dir, record.sample_id, stream, args.scale, contexts))
    print(f"✅ PNG {written}개 저장 → {out_dir}")
    return EXIT_OK


def describe(path: str) -> List[str]:
    """inspect 출력 줄"""
    if path.endswith('.eckp'):
        from .training.checkpoint import load_checkpoint

        checkpoint = load_checkpoint(path)
        groups = {}
        for name, tensor in checkpoint.tensors.items():
            group = name.split('/', 1)[0]
            groups[group] = groups.get(group, 0) + int(tensor.size)
        lines = [f"📦 체크포인트: {path}",
                 f"  버전: {checkpoint.version}",
                 f"  step: {checkpoint.step}",
                 f"  텐서: {len(checkpoint.tensors)}개"]
        lines += [f"  {group}: {format_count(size)} 값" for group, size in groups.items()]
        train = checkpoint.config.get('train', {})
        if train:
            lines.append(f"  K={train.get('num_contexts')}, λ=({train.get('lambda_context')}, "
                         f"{train.get('lambda_image')}), steps={train.get('steps')}")
        return lines

    if path.endswith('.evs'):
        stats = read_events(path).get_stats()
        return [f"🎞️ 이벤트 파일: {path}",
                f"  해상도: {stats['width']}x{stats['height']}",
                f"  이벤트: {stats['count']}개 (+{stats['positive']} / -{stats['negative']})",
                f"  길이: {format_duration_us(stats['duration_us'])}"]

    manifest = load_manifest(path)
    sources = {}
    for record in manifest.samples:
        sources[record.source] = sources.get(record.source, 0) + 1
    return [f"📋 데이터셋 매니페스트: {path}",
            f"  샘플: {len(manifest)}개 (train {len(manifest.split('train'))} / test {len(manifest.split('test'))})",
            f"  시드: {manifest.seed}",
            f"  시뮬레이터: {manifest.simulator_version}",
            f"  소스: {json.dumps(sources, ensure_ascii=False)}"]


def cmd_inspect(args, settings: Settings, argv: List[str]) -> int:
    if not os.path.exists(args.path):
        raise DataError(f"파일을 찾을 수 없습니다: {args.path}")
    for line in describe(args.path):
        print(line)
    return EXIT_OK


def cmd_ablate(args, settings: Settings, argv: List[str]) -> int:
    from .config.settings import parse_override_value
    from .reporting.ablation_report import run_ablation

    out_dir = args.out or os.path.join(settings.train.output_dir, f'ablation_{args.kind}')
    settings.save_run_header(out_dir, argv)
    values = [parse_override_value(v) for v in args.values] if args.values else None
    report = run_ablation(settings, args.kind, out_dir, values, threads=settings.train.threads)
    print(report.to_markdown())
    return EXIT_OK


COMMANDS = {
    'simulate': cmd_simulate,
    'pretrain': cmd_pretrain,
    'probe': cmd_probe,
    'render': cmd_render,
    'inspect': cmd_inspect,
    'ablate': cmd_ablate,
}


def run(argv: Optional[List[str]] = None) -> int:
    """명령 실행 → 종료 코드"""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
        settings = load_settings(args)
        _configure_logging(args, settings, None)
        return COMMANDS[args.command](args, settings, ['eventcompass', *argv])
    except ConfigError as e:
        logger.error(f"설정 오류: {e}")
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, NumericError, FileNotFoundError) as e:
        logger.error(f"실행 오류: {e}")
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        # ShapeError 포함
        logger.error(f"인자 오류: {e}")
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help / --version
        return int(e.code or 0)


def main():
    sys.exit(run())


if __name__ == '__main__':
    main()
