'''Command-line driver for the experiments.

Every command writes one report and exits 0 if all of its checks pass, 1 if
one fails, and 2 if the configuration or an I/O operation is bad. Reports
contain the configuration and the package version and nothing that varies
between runs, so the same command line yields the same bytes.

Example::

    python -m src.cli recover --ell 16 --trials 1000 --seed 7
'''

import argparse
import itertools
import logging
import os
import sys
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.bitarray import BitArray
from src.constants import (
    DEFAULT_SEED,
    EXHAUSTIVE_WIDTH_CAP,
    MIN_N,
    OUT_DIR,
    SAMPLED_ENTROPY_MIN_SAMPLES,
    VERSION,
)
from src.distance import (
    Distance,
    l2_bruteforce,
    l2_rearrangement,
    slide_l2,
)
from src.errors import BitstreamLabError, InvalidArgumentError
from src.experiment_utils import (
    add_seed_arg,
    dumps_report,
    trial_rng,
    write_text,
)
from src.geometry import (
    check_supported,
    gap_windows_disjoint,
    interval_range_report,
    lengths_set,
    lg,
    subarray_starts,
    validate_nesting,
)
from src.hard_instance import (
    build_F_ell,
    check_ell,
    build_hard_instance,
    instance_to_json,
    is_update_string,
    sample_U,
    sample_U_ell,
)
from src.recovery import (
    entropy_certificate,
    frontier_formula,
    measured_frontier_costs,
    measured_prefix_costs,
    run_recovery_trials,
    streamed_to_slide,
)
from src.stream import (
    StreamState,
    is_aligned,
    is_warmup,
    offline_output_at,
    stream_update,
)
from src.toeplitz import (
    ToeplitzSpec,
    build_conv_F,
    check_embedding,
    exact_entropy,
    random_conv_matrices,
    random_toeplitz,
    sample_bits,
    search_rows,
    search_table,
    search_witnesses,
)
from src.types import EntropyMethod, Report, SearchStrategy, StreamMode


LOGGER = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_INVARIANT_FAILURE = 1
EXIT_CONFIG_ERROR = 2
#: Mismatches listed in a stream report before the list is cut off.
MAX_LISTED_MISMATCHES = 20


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    n: int = MIN_N
    ell: Optional[int] = None
    seed: int = DEFAULT_SEED
    trials: int = 1
    mode: StreamMode = StreamMode.L2_REARRANGEMENT
    output_path: Optional[str] = None
    format: str = 'json'
    h: int = 4
    width: int = 8
    strategy: SearchStrategy = SearchStrategy.EXHAUSTIVE
    entropy: EntropyMethod = EntropyMethod.EXHAUSTIVE
    budget: Optional[int] = None
    arrivals: Optional[int] = None

    def validate(self) -> None:
        '''Raise if the configuration cannot be run.'''
        if self.command in ('gen-instance', 'stream', 'verify',
                            'geometry-check'):
            check_supported(self.n)
        if self.command == 'recover' and self.ell is not None:
            check_ell(self.ell)
        if self.trials < 1:
            raise InvalidArgumentError(
                'trials must be at least 1, got {}'.format(self.trials))
        if self.seed < 0:
            raise InvalidArgumentError(
                'seed must be non-negative, got {}'.format(self.seed))
        if self.format == 'csv' and self.command != 'toeplitz-search':
            raise InvalidArgumentError(
                'csv output is only available for toeplitz-search')
        if self.arrivals is not None and not (
                0 < self.arrivals <= 2 * self.n):
            raise InvalidArgumentError(
                'arrivals must lie in [1, {}]'.format(2 * self.n))

    def out_path(self) -> str:
        if self.output_path is not None:
            return self.output_path
        return os.path.join(OUT_DIR, '{}.{}'.format(
            self.command, self.format))

    def to_dict(self) -> dict:
        config = asdict(self)
        config['mode'] = self.mode.value
        config['strategy'] = self.strategy.value
        config['entropy'] = self.entropy.value
        return config


def _report(config: ExperimentConfig, checks: dict, **body: object) -> Report:
    report = dict(body)
    report['config'] = config.to_dict()
    report['version'] = VERSION
    report['checks'] = checks
    report['ok'] = all(check['ok'] for check in checks.values())
    return Report(report)


def gen_instance(config: ExperimentConfig) -> Report:
    '''Build F and sample U for the configured mode.'''
    body: dict
    checks: dict
    if config.mode == StreamMode.L2_REARRANGEMENT:
        instance = build_hard_instance(config.n, config.seed)
        body = instance_to_json(instance)
        checks = {
            'update_string': {'ok': is_update_string(instance.U)},
            'balanced': {
                'ok': 2 * instance.F.ones_count() == instance.n},
        }
    else:
        rng = trial_rng(config.seed, 0)
        F, layout = build_conv_F(config.n, random_conv_matrices(
            config.n, rng))
        U = sample_bits(config.n, rng)
        body = {
            'n': config.n,
            'seed': config.seed,
            'ells': sorted(layout),
            'F': F.to_base64(),
            'U': U.to_base64(),
            'layout': [
                {'ell': ell, 'start': start, 'len': length}
                for ell, (start, length) in sorted(layout.items())
            ],
        }
        checks = {}
    starts = subarray_starts(config.n)
    checks['layout'] = {
        'ok': all(entry['start'] == starts[entry['ell']]
                  for entry in body['layout']),
    }
    return _report(config, checks, mode=config.mode.value, instance=body)


def _stream_setup(
        config: ExperimentConfig) -> Tuple[BitArray, BitArray, BitArray]:
    '''Pattern, update string and the history streamed before it.'''
    n = config.n
    if config.mode == StreamMode.L2_REARRANGEMENT:
        instance = build_hard_instance(n, config.seed)
        history = sample_U(
            n, np.random.SeedSequence(config.seed, spawn_key=(1,)))
        return instance.F, instance.U, history
    rng = trial_rng(config.seed, 0)
    F, _ = build_conv_F(n, random_conv_matrices(n, rng))
    return F, sample_bits(n, rng), sample_bits(n, trial_rng(config.seed, 1))


def _adapter_checks(
        config: ExperimentConfig,
        total: int) -> Dict[int, List[Tuple[int, int, int]]]:
    '''Arrivals at which ``U[0 .. l lg l - 1]`` sits over ``F_l[4k:]``.

    Returns:
        Map from arrival count to ``(l, k, start of F_l)`` triples.
    '''
    n = config.n
    checks: Dict[int, List[Tuple[int, int, int]]] = {}
    for ell, start in subarray_starts(n).items():
        for k in range(ell // 4):
            arrival = 2 * n - start - 4 * k
            if n <= arrival <= total and arrival >= n + ell * lg(ell):
                checks.setdefault(arrival, []).append((ell, k, start))
    return checks


def _json_output(output: object) -> object:
    if isinstance(output, Distance):
        return output.to_json()
    return output


def stream(config: ExperimentConfig) -> Report:
    '''Stream a history sample and then U, checking aligned outputs.

    Every aligned output after warm-up is compared with a recomputation
    from scratch. In L2 mode aligned outputs must be finite, and where
    ``U[0 .. l lg l - 1]`` passes over ``F_l`` the adapter's value is
    compared with ``F_l ⊙ U_l``.
    '''
    n = config.n
    F, U, history = _stream_setup(config)
    sequence = history + U
    total = config.arrivals or len(sequence)
    l2_mode = config.mode == StreamMode.L2_REARRANGEMENT
    adapter_plan = _adapter_checks(config, total) if l2_mode else {}
    direct: Dict[int, List[Distance]] = {}

    state = StreamState(F, config.mode)
    outputs = []
    mismatches = []
    infinite = []
    adapter_mismatches = []
    adapter_checked = 0
    checked = 0
    for x in sequence[:total]:
        state, output = stream_update(state, x)
        arrival = state.arrivals_seen
        if not is_aligned(arrival):
            continue
        warmup = is_warmup(state)
        outputs.append({
            'arrival': arrival,
            'output': _json_output(output),
            'warmup': warmup,
        })
        if warmup:
            continue
        checked += 1
        expected = offline_output_at(F, sequence, arrival, config.mode)
        if output != expected:
            mismatches.append(arrival)
        if l2_mode and isinstance(output, Distance) and output.is_infinite:
            infinite.append(arrival)
        for ell, k, start in adapter_plan.get(arrival, []):
            if ell not in direct:
                direct[ell] = slide_l2(
                    build_F_ell(ell), U[:ell * lg(ell)])
            value = streamed_to_slide(
                F, state.window, start + 4 * k, start, ell, k)
            adapter_checked += 1
            if value != direct[ell][k]:
                adapter_mismatches.append(
                    {'arrival': arrival, 'ell': ell, 'k': k})
    LOGGER.info('checked %d aligned outputs after warm-up', checked)

    checks = {
        'offline_agreement': {
            'ok': not mismatches,
            'checked': checked,
            'mismatches': mismatches[:MAX_LISTED_MISMATCHES],
        },
    }
    if l2_mode:
        checks['finite_aligned'] = {
            'ok': not infinite,
            'infinite': infinite[:MAX_LISTED_MISMATCHES],
        }
        checks['adapter'] = {
            'ok': not adapter_mismatches,
            'checked': adapter_checked,
            'mismatches': adapter_mismatches[:MAX_LISTED_MISMATCHES],
        }
    return _report(
        config, checks, n=n, mode=config.mode.value, arrivals=total,
        outputs=outputs)


def recover(config: ExperimentConfig) -> Report:
    '''Round-trip random update windows and certify output entropy.'''
    ell = config.ell or 16
    report = run_recovery_trials(ell, config.trials, config.seed)
    certificate = entropy_certificate(
        ell, config.trials, config.seed, trial_report=report)
    body = report.to_dict()
    body['certified_bits'] = certificate['certified_bits']
    checks = {
        'round_trip': {
            'ok': report.successes == report.trials,
            'successes': report.successes,
        },
        'certificate': {
            'ok': certificate['successes'] == certificate['configurations'],
            **certificate,
        },
    }
    return _report(config, checks, **body)


def _check_padding() -> dict:
    padding = BitArray.from_string('1001')
    costs = {
        frame: l2_rearrangement(
            padding, BitArray.from_string(frame)).finite_value()
        for frame in ('0101', '1010')
    }
    return {'ok': set(costs.values()) == {2}, 'costs': costs}


def _check_oracle(seed: int, samples: int) -> dict:
    '''Matching against brute force: exhaustive to length 6, then sampled.'''
    mismatches = []
    pairs = 0
    for length in range(1, 7):
        strings = [
            BitArray(bits) for bits in itertools.product((0, 1), repeat=length)
        ]
        for a, b in itertools.product(strings, repeat=2):
            pairs += 1
            if l2_rearrangement(a, b) != l2_bruteforce(a, b):
                mismatches.append([a.to_string(), b.to_string()])
    rng = trial_rng(seed, 0)
    for _ in range(samples):
        length = int(rng.integers(1, 11))
        a = BitArray(rng.integers(0, 2, size=length))
        b = BitArray(rng.integers(0, 2, size=length))
        pairs += 1
        if l2_rearrangement(a, b) != l2_bruteforce(a, b):
            mismatches.append([a.to_string(), b.to_string()])
    return {
        'ok': not mismatches,
        'pairs': pairs,
        'mismatches': mismatches[:MAX_LISTED_MISMATCHES],
    }


def _check_geometry(n: int) -> dict:
    nesting = validate_nesting(n)
    disjoint = {
        str(ell): gap_windows_disjoint(n, ell)[0] for ell in lengths_set(n)
    }
    return {
        'ok': nesting.ok and all(disjoint.values()),
        'nesting': nesting.to_dict(),
        'gap_windows_disjoint': disjoint,
        'intervals': interval_range_report(n),
    }


def _check_frontier(seed: int, trials: int) -> dict:
    failures = []
    for ell in (16, 64):
        for index in range(trials):
            U_ell = sample_U_ell(ell, trial_rng(seed, index))
            if (measured_frontier_costs(ell, U_ell)
                    != frontier_formula(ell, U_ell)):
                failures.append(
                    {'ell': ell, 'trial': index, 'check': 'frontier'})
            if set(measured_prefix_costs(ell, U_ell)) != {ell // 2 - 2}:
                failures.append(
                    {'ell': ell, 'trial': index, 'check': 'prefix'})
    return {
        'ok': not failures,
        'trials': trials,
        'failures': failures[:MAX_LISTED_MISMATCHES],
    }


def _check_embedding(seed: int, vectors: int) -> dict:
    rng = trial_rng(seed, 0)
    ell = 4
    m = random_toeplitz(ell, ell * lg(ell), rng)
    samples = [
        BitArray(rng.integers(0, 2, size=ell * lg(ell)))
        for _ in range(vectors)
    ]
    failures = check_embedding(m, samples)
    return {
        'ok': not failures,
        'diagonals': m.diagonal_string(),
        'vectors': vectors,
        'failures': failures,
    }


def _check_entropy() -> dict:
    h = 4
    values = {
        'identity': exact_entropy(ToeplitzSpec.identity(h)).entropy_bits,
        'zero': exact_entropy(ToeplitzSpec.zeros(h, h)).entropy_bits,
        'two_by_two': exact_entropy(ToeplitzSpec(
            2, 2, BitArray.from_string('10'),
            BitArray.from_string('11'))).entropy_bits,
    }
    expected = {'identity': h, 'zero': 0, 'two_by_two': 2}
    return {
        'ok': all(values[name] == expected[name] for name in expected),
        'entropy_bits': {name: float(value) for name, value in values.items()},
    }


def verify(config: ExperimentConfig) -> Report:
    '''Run the quick checks of every construction in one report.'''
    samples = min(config.trials, 10**4)
    trials = min(config.trials, 100)
    checks = {
        'padding_constant': _check_padding(),
        'oracle_equivalence': _check_oracle(config.seed, samples),
        'geometry': _check_geometry(config.n),
        'frontier_costs': _check_frontier(config.seed, trials),
        'embedding': _check_embedding(config.seed, 100),
        'entropy_exactness': _check_entropy(),
    }
    return _report(config, checks)


def toeplitz_search(config: ExperimentConfig) -> Report:
    result = search_witnesses(
        config.h, config.width, config.budget, config.seed, config.strategy,
        config.entropy)
    checks = {'found': {'ok': result.best is not None or config.budget == 0}}
    return _report(
        config, checks, search=result.to_dict(), rows=search_rows([result]))


def geometry_check(config: ExperimentConfig) -> Report:
    '''Validate lengths, nesting, gap windows and subarray placement.

    Configurations that run past the end of the stream are listed under
    ``intervals`` but do not fail the check.
    '''
    n = config.n
    geometry = _check_geometry(n)
    return _report(
        config, {'geometry': {'ok': geometry['ok']}},
        n=n,
        lengths=list(lengths_set(n)),
        subarray_starts={
            str(ell): start for ell, start in subarray_starts(n).items()},
        nesting=geometry['nesting'],
        gap_windows_disjoint=geometry['gap_windows_disjoint'],
        intervals=geometry['intervals'],
    )


COMMAND_MAP: Dict[str, Callable[[ExperimentConfig], Report]] = {
    'gen-instance': gen_instance,
    'stream': stream,
    'recover': recover,
    'verify': verify,
    'toeplitz-search': toeplitz_search,
    'geometry-check': geometry_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Hard instances for streaming pattern matching.')
    parser.add_argument(
        'command',
        choices=sorted(COMMAND_MAP),
        help='Experiment to run.'
    )
    parser.add_argument(
        '--n',
        type=int,
        default=MIN_N,
        help='Stream length, a power of two of at least {}.'.format(MIN_N)
    )
    parser.add_argument(
        '--ell',
        type=int,
        default=None,
        help='Subarray length for recover. Defaults to 16.'
    )
    add_seed_arg(parser)
    parser.add_argument(
        '--trials',
        type=int,
        default=1,
        help='Number of random trials.'
    )
    parser.add_argument(
        '--mode',
        choices=[mode.value for mode in StreamMode],
        default=StreamMode.L2_REARRANGEMENT.value,
        help='Distance reported by the stream.'
    )
    parser.add_argument(
        '-o', '--out',
        default=None,
        help='Report path, "-" for stdout. Defaults to out/<command>.<format>.'
    )
    parser.add_argument(
        '--format',
        choices=['json', 'csv'],
        default='json',
        help='Report format. csv is only available for toeplitz-search.'
    )
    parser.add_argument(
        '--h',
        type=int,
        default=4,
        help='Matrix height for toeplitz-search.'
    )
    parser.add_argument(
        '--width',
        type=int,
        default=8,
        help='Matrix width for toeplitz-search.'
    )
    parser.add_argument(
        '--strategy',
        choices=[strategy.value for strategy in SearchStrategy],
        default=SearchStrategy.EXHAUSTIVE.value,
        help='Search strategy for toeplitz-search.'
    )
    parser.add_argument(
        '--entropy',
        choices=[method.value for method in EntropyMethod],
        default=EntropyMethod.EXHAUSTIVE.value,
        help='Entropy of each matrix: exact, or a plug-in estimate from {} '
             'samples. Widths over {} need the estimate.'.format(
                 SAMPLED_ENTROPY_MIN_SAMPLES, EXHAUSTIVE_WIDTH_CAP)
    )
    parser.add_argument(
        '--budget',
        type=int,
        default=None,
        help='Matrices toeplitz-search may evaluate.'
    )
    parser.add_argument(
        '--arrivals',
        type=int,
        default=None,
        help='Bits to stream. Defaults to 2n: a history sample, then U.'
    )
    parser.add_argument(
        '-v', '--verbose',
        action='store_true',
        help='Log debug messages.'
    )
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    return ExperimentConfig(
        command=args.command,
        n=args.n,
        ell=args.ell,
        seed=args.seed,
        trials=args.trials,
        mode=StreamMode(args.mode),
        output_path=args.out,
        format=args.format,
        h=args.h,
        width=args.width,
        strategy=SearchStrategy(args.strategy),
        entropy=EntropyMethod(args.entropy),
        budget=args.budget,
        arrivals=args.arrivals,
    )


def render(config: ExperimentConfig, report: Report) -> str:
    if config.format == 'csv':
        return search_table(report['rows']).to_csv(index=False)
    return dumps_report(report)


def run(config: ExperimentConfig) -> int:
    '''Run one command and write its report.

    Returns:
        The process exit status.
    '''
    try:
        config.validate()
        report = COMMAND_MAP[config.command](config)
        write_text(config.out_path(), render(config, report))
    except (BitstreamLabError, OSError) as error:
        print('error: {}'.format(error), file=sys.stderr)
        return EXIT_CONFIG_ERROR
    if not report['ok']:
        failed = sorted(
            name for name, check in report['checks'].items()
            if not check['ok'])
        LOGGER.error('%s: failed checks %s', config.command, failed)
        return EXIT_INVARIANT_FAILURE
    return EXIT_PASS


def main(tokens: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(tokens)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(levelname)s %(name)s: %(message)s')
    return run(config_from_args(args))


if __name__ == '__main__':
    sys.exit(main())
