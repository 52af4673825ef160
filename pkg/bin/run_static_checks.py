#!/usr/bin/env python3

import os
import subprocess
import sys
from pathlib import Path
from typing import Callable, Dict, List

ROOT = Path(__file__).resolve().parents[1]

CHECKED_PATHS = [
    Path('bin'),
    Path('python/nodule_cascade'),
    Path('scripts/experiments'),
    Path('test'),
]


def _run(cmd: List[str]) -> int:
    p = subprocess.run(cmd, cwd=ROOT, stdout=subprocess.PIPE)
    print(p.stdout.decode())
    return p.returncode


def flake8() -> int:
    return _run(['flake8'] + [str(x) for x in CHECKED_PATHS])


def mypy() -> int:
    # scripts have a __main__ block, hence --scripts-are-modules
    return _run(['mypy', '--show-absolute-path', '--scripts-are-modules'] + [str(x) for x in CHECKED_PATHS])


def _banner(name: str, width: int = 30) -> None:
    pad = width - len(name) - 2
    print(f'{(pad // 2) * "="} {name} {(pad - pad // 2) * "="}')


def main() -> int:
    os.chdir(str(ROOT))
    checks: Dict[str, Callable[[], int]] = {'flake8': flake8, 'mypy': mypy}
    failed = []
    for name, check in checks.items():
        _banner(name)
        subprocess.run([name, '--version'])
        if check() != 0:
            failed.append(name)
        print('=' * 30 + '\n')

    if failed:
        print(f'Static checks failed: {", ".join(failed)}')
        return 1
    print('Success!')
    return 0


if __name__ == '__main__':
    sys.exit(main())
