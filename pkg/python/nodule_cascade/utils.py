import dataclasses
import hashlib
import math
import multiprocessing
import zlib
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, TypeVar, Union

import numpy as np
import torch
from structlog import BoundLogger
from tqdm import tqdm

from .interfaces import globals

__all__ = ['named_rng', 'torch_generator', 'sha256_bytes', 'sha256_file', 'round_half_up', 'shallow_asdict',
           'ordered_map', 'init_globals']

_T = TypeVar('_T')
_R = TypeVar('_R')


def named_rng(seed: int, name: str, *counters: int) -> np.random.Generator:
    """
    Derive an independent random stream from a root seed.

    Streams with different names or counters are statistically independent, and the same (seed, name, counters)
    always yields the same stream regardless of what else was drawn before.

    :param seed: root seed of the run
    :param name: stream name, e.g. 'phantom' or 'batches'
    :param counters: optional integer counters, e.g. a case index
    :return: a numpy Generator
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(name.encode('utf-8'))] + [int(c) for c in counters]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def torch_generator(rng: np.random.Generator) -> torch.Generator:
    g = torch.Generator()
    g.manual_seed(int(rng.integers(0, 2 ** 63 - 1)))
    return g


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: Union[str, Path]) -> str:
    h = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 20), b''):
            h.update(chunk)
    return h.hexdigest()


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def shallow_asdict(x: Any) -> Dict[str, Any]:
    assert dataclasses.is_dataclass(x)
    return {field.name: getattr(x, field.name) for field in dataclasses.fields(x)}


def ordered_map(fn: Callable[[_T], _R],
                items: Iterable[_T],
                workers: int = 1,
                desc: Optional[str] = None) -> List[_R]:
    """
    Map fn over items, optionally on a process pool. Results are always returned in input order.

    :param fn: a picklable top-level function
    :param items: picklable work items
    :param workers: number of worker processes, 1 runs in-process
    :param desc: progress bar label
    :return: list of results
    """
    items = list(items)
    progress = dict(total=len(items), desc=desc, disable=desc is None or not globals.show_progress)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in tqdm(items, **progress)]
    ctx = multiprocessing.get_context('spawn')
    with ctx.Pool(processes=min(workers, len(items))) as pool:
        return list(tqdm(pool.imap(fn, items), **progress))


def init_globals(seed: Optional[int] = None, log: Optional[BoundLogger] = None) -> None:
    """
    Initialize globals for a run

    :param seed: root seed of every named random stream
    :param log: optional logger
    :return: None
    """
    globals.root_seed = seed or 0
    torch.use_deterministic_algorithms(True)
    if log:
        log.info('Initialized globals', seed=globals.root_seed)
