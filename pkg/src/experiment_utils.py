'''Utilities shared by the experiment commands.
'''

import argparse
import json
import logging
import os
import sys
from typing import Any, Optional

import numpy as np

from src.constants import DEFAULT_SEED, THREADS_ENV_VAR
from src.errors import InvalidArgumentError


LOGGER = logging.getLogger(__name__)


def trial_rng(seed: int, index: int) -> np.random.Generator:
    '''Random generator for trial ``index`` of an experiment.

    Each trial gets its own child of the experiment seed, so any single
    trial can be rerun without replaying the ones before it.

    Args:
        seed: The experiment seed.
        index: Trial number.
    Returns:
        A generator that depends only on ``(seed, index)``.
    '''
    if seed < 0 or index < 0:
        raise InvalidArgumentError(
            'seed and trial index must be non-negative')
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(index,)))


def thread_count() -> int:
    '''Parallel workers allowed by the environment, at least one.'''
    raw = os.getenv(THREADS_ENV_VAR, '1')
    try:
        threads = int(raw)
    except ValueError as error:
        raise InvalidArgumentError(
            '{} must be an integer, got {!r}'.format(
                THREADS_ENV_VAR, raw)) from error
    return max(threads, 1)


def show_progress() -> bool:
    '''Progress bars are drawn only on an interactive stderr.'''
    return sys.stderr.isatty()


def add_seed_arg(
        parser: argparse.ArgumentParser) -> argparse.ArgumentParser:
    '''Add the experiment seed argument to parser.

    Args:
        parser: Argument parser.
    Returns:
        The argument parser with the seed argument added.
    '''
    parser.add_argument(
        '--seed',
        type=int,
        default=DEFAULT_SEED,
        help='Experiment seed. Every trial derives its own generator.'
    )
    return parser


def create_dir(path: str) -> None:
    '''Create directory if it doesn't already exist.

    Also creates any intermediate directories.

    Args:
        path: Path to directory to create.
    '''
    if path and not os.path.exists(path):
        os.makedirs(path)


def dumps_report(report: Any) -> str:
    '''Serialize a report so equal reports give identical text.'''
    return json.dumps(report, sort_keys=True, indent=2) + '\n'


def write_text(path: Optional[str], text: str) -> None:
    '''Write ``text`` to ``path``, or to stdout when ``path`` is None.'''
    if path is None or path == '-':
        sys.stdout.write(text)
        return
    create_dir(os.path.dirname(path))
    with open(path, 'w') as f:
        f.write(text)
    LOGGER.info('wrote %s', path)
