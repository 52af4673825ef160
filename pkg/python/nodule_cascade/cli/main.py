import argparse
import logging
import sys
from typing import Any, Callable, Dict, List, Optional

import structlog

from .commands import cmd_build_masks, cmd_describe, cmd_eval, cmd_gen_phantom, cmd_infer, cmd_screen, \
    cmd_train_cls, cmd_train_seg
from .run_config import RunConfig
from ..annotations import MaskShape
from ..cascade import Aggregation
from ..evaluation import Averaging, EvalLevel
from ..interfaces import ArchID, CascadeError, ConfigError, globals
from ..models import UpsampleMode
from ..utils import init_globals

__all__ = ['build_parser', 'configure_logging', 'main']

_log = structlog.get_logger(__name__)

_GLOBAL_DESTS = {'verbose', 'quiet', 'config', 'command', 'func'}


def configure_logging(verbose: bool = False) -> None:
    """Route structlog to stderr with a console renderer, INFO by default and DEBUG when verbose."""
    structlog.configure(
        processors=[structlog.processors.add_log_level,
                    structlog.processors.format_exc_info,
                    structlog.dev.ConsoleRenderer(colors=False)],
        wrapper_class=structlog.make_filtering_bound_logger(logging.DEBUG if verbose else logging.INFO),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument('--config', help='key = value file, flags win over it')
    p.add_argument('--seed', type=int, help='root seed (default 0)')
    p.add_argument('--workers', type=int, help='worker processes for per-volume work (default 1)')
    p.add_argument('--verbose', action='store_true', help='debug logging')
    p.add_argument('--quiet', action='store_true', help='no progress bars')
    p.add_argument('--out', help='output directory')


def _data(p: argparse.ArgumentParser, *keys: str) -> None:
    p.add_argument('--data', help='dataset directory providing the default paths below')
    helps = {'volumes': 'volume directory (default DATA/volumes)',
             'masks': 'mask directory (default DATA/masks)',
             'labels': 'seriesuid,label table (default DATA/labels.csv)',
             'annotations': 'nodule table (default DATA/annotations.csv)'}
    for key in keys:
        p.add_argument(f'--{key}', help=helps[key])


def _subset(p: argparse.ArgumentParser) -> None:
    p.add_argument('--split', help='split.csv restricting the series')
    p.add_argument('--subset', choices=['train', 'val', 'test', 'all'], help='subset of --split (default all)')


def _window(p: argparse.ArgumentParser) -> None:
    p.add_argument('--window-lo', dest='window_lo', type=float, help='HU mapped to 0 (default -1000)')
    p.add_argument('--window-hi', dest='window_hi', type=float, help='HU mapped to 1 (default 400)')


def _cascade(p: argparse.ArgumentParser) -> None:
    _window(p)
    p.add_argument('--threshold', type=float, help='discriminator threshold (default 0.35)')
    p.add_argument('--aggregation', choices=[a.value for a in Aggregation], help='slice to case rule (default mean)')
    p.add_argument('--binarize', action='store_true', default=None, help='threshold the map at 0.5 before fusion')
    p.add_argument('--batch-size', dest='batch_size', type=int, help='slices per forward pass (default 16)')


def _training(p: argparse.ArgumentParser) -> None:
    p.add_argument('--epochs', type=int, help='number of epochs (default 30)')
    p.add_argument('--batch-size', dest='batch_size', type=int, help='mini-batch size (default 16)')
    p.add_argument('--lr', dest='learning_rate', type=float, help='Adam learning rate (default 1e-4)')
    p.add_argument('--split-fractions', dest='split_fractions', type=float, nargs=3,
                   metavar=('TRAIN', 'VAL', 'TEST'), help='split fractions')
    p.add_argument('--split', help='reuse this split.csv instead of drawing one')
    p.add_argument('--dropout', type=float, help='dropout rate (default 0.5)')


def _arch(p: argparse.ArgumentParser) -> None:
    p.add_argument('--width', type=int, help='U-Net base width (default 64 for the screener, 8 for the baseline)')
    p.add_argument('--upsample', choices=[m.value for m in UpsampleMode], help='decoder upsampling (default nearest)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='nodule-cascade', description='Cascaded nodule screening and classification')
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True

    p = sub.add_parser('gen-phantom', help='write a synthetic labeled dataset')
    _common(p)
    p.add_argument('--cases-per-class', dest='cases_per_class', type=int, help='cases per class (default 102)')
    p.add_argument('--dims', type=int, nargs=3, metavar=('NX', 'NY', 'NZ'), help='grid size (default 64 64 32)')
    p.add_argument('--spacing', type=float, nargs=3, metavar=('SX', 'SY', 'SZ'), help='mm (default 1 1 3)')
    p.add_argument('--benign-diameter', dest='benign_diameter', type=float, nargs=2, metavar=('LO', 'HI'))
    p.add_argument('--malignant-diameter', dest='malignant_diameter', type=float, nargs=2, metavar=('LO', 'HI'))
    p.add_argument('--spiculation', type=float, help='malignant spike amplitude (default 0.3)')
    p.add_argument('--labels-only', dest='labels_only', action='store_true', default=None,
                   help='write volumes and labels only, no masks or annotations')
    p.set_defaults(func=cmd_gen_phantom)

    p = sub.add_parser('build-masks', help='rasterize annotations into masks and slice lists')
    _common(p)
    _data(p, 'volumes', 'annotations')
    _subset(p)
    p.add_argument('--pad', type=int, help='slices kept beyond the nodule extent (default 5)')
    p.add_argument('--mask-shape', dest='mask_shape', choices=MaskShape.values(), help='default ball')
    p.add_argument('--min-diameter', dest='min_diameter', type=float, help='drop smaller findings')
    p.add_argument('--strict', action='store_true', default=None, help='fail on annotations without a volume')
    p.set_defaults(func=cmd_build_masks)

    p = sub.add_parser('train-seg', help='train the screening network')
    _common(p)
    _data(p, 'volumes', 'masks')
    _training(p)
    _arch(p)
    _window(p)
    p.add_argument('--pad', type=int, help='slices kept beyond the nodule extent (default 5)')
    p.set_defaults(func=cmd_train_seg)

    p = sub.add_parser('screen', help='run the screening network and the discriminator')
    _common(p)
    _data(p, 'volumes')
    _subset(p)
    _window(p)
    p.add_argument('--seg-ckpt', dest='seg_ckpt', help='screening checkpoint directory')
    p.add_argument('--threshold', type=float, help='discriminator threshold (default 0.35)')
    p.add_argument('--batch-size', dest='batch_size', type=int, help='slices per forward pass (default 16)')
    p.add_argument('--save-maps', dest='save_maps', action='store_true', default=None,
                   help='also write prob_maps.h5')
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser('train-cls', help='train a classifier on screened and fused slices')
    _common(p)
    _data(p, 'volumes', 'labels')
    _training(p)
    _arch(p)
    _window(p)
    p.add_argument('--seg-ckpt', dest='seg_ckpt', help='screening checkpoint directory')
    p.add_argument('--arch', choices=[a.value for a in ArchID if a.is_classifier], help='default cascade_cls')
    p.add_argument('--threshold', type=float, help='discriminator threshold (default 0.35)')
    p.add_argument('--binarize', action='store_true', default=None, help='threshold the map at 0.5 before fusion')
    p.add_argument('--oversample', dest='oversample_factor', type=int, help='benign copies (default 3)')
    p.set_defaults(func=cmd_train_cls)

    p = sub.add_parser('infer', help='case verdicts from the full cascade')
    _common(p)
    _data(p, 'volumes')
    _subset(p)
    _cascade(p)
    p.add_argument('--seg-ckpt', dest='seg_ckpt', help='screening checkpoint directory')
    p.add_argument('--cls-ckpt', dest='cls_ckpt', action='append', help='classifier checkpoint directory')
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser('eval', help='metrics, ROC curves and network comparison')
    _common(p)
    _data(p, 'volumes', 'labels', 'masks')
    _subset(p)
    _cascade(p)
    p.add_argument('--seg-ckpt', dest='seg_ckpt', help='screening checkpoint directory')
    p.add_argument('--cls-ckpt', dest='cls_ckpt', action='append', help='classifier checkpoint, repeat to compare')
    p.add_argument('--averaging', choices=[a.value for a in Averaging], help='default positive')
    p.add_argument('--level', choices=[v.value for v in EvalLevel], help='default case')
    p.add_argument('--prob-maps', dest='prob_maps', help='prob_maps.h5 from screen --save-maps, for the pixel ROC')
    p.add_argument('--max-roc-points', dest='max_roc_points', type=int,
                   help='thin the pixel ROC file to this many points, 0 keeps all (default 10000)')
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser('describe', help='print layer tables and parameter counts')
    _common(p)
    _arch(p)
    p.add_argument('--arch', choices=ArchID.values(), help='one architecture (default all)')
    p.add_argument('--size', type=int, nargs=2, metavar=('H', 'W'), help='input size (default 64 64)')
    p.add_argument('--dropout', type=float, help='dropout rate (default 0.5)')
    p.set_defaults(func=cmd_describe)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {k: v for k, v in vars(args).items() if k not in _GLOBAL_DESTS and v is not None and v is not False}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point of the nodule-cascade command.

    :param argv: arguments without the program name, sys.argv when None
    :return: 0 on success, 1 on a runtime failure, 2 on a usage error
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    configure_logging(args.verbose)
    globals.show_progress = not args.quiet
    func: Callable[[argparse.Namespace, RunConfig], int] = args.func
    try:
        cfg = RunConfig.from_sources(args.config, _overrides(args))
        init_globals(cfg.seed, _log if args.verbose else None)
        return func(args, cfg)
    except ConfigError as e:
        _log.error('invalid_configuration', command=args.command, error=str(e))
        return 2
    except (CascadeError, OSError) as e:
        _log.error('command_failed', command=args.command, error=str(e))
        return 1
