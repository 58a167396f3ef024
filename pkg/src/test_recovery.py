import numpy as np
import pytest

from src.bitarray import BitArray
from src.constants import FRAME_0101, FRAME_1010
from src.distance import Distance, contribution_profile, slide_l2
from src.errors import DecodeFailureError, InvalidArgumentError
from src.experiment_utils import trial_rng
from src.geometry import lg
from src.hard_instance import (
    assemble_U_ell,
    build_F,
    build_F_ell,
    sample_block,
    sample_U,
    sample_U_ell,
    split_blocks,
)
from src.recovery import (
    DStar,
    RecoveryInstance,
    RecoveryReport,
    compute_dstar,
    entropy_certificate,
    exhaustive_recovery,
    extract_vbits,
    frame_cost_table,
    frontier_contributions,
    frontier_formula,
    make_recovery_instance,
    measured_frontier_costs,
    measured_prefix_costs,
    odd_block_contribution,
    recover_even_blocks,
    run_recovery_trials,
    streamed_to_slide,
    true_even_blocks,
)


def block_of(frames: str) -> BitArray:
    '''Block from one letter per frame: ``a`` for 0101, ``b`` for 1010.'''
    choice = {'a': FRAME_0101, 'b': FRAME_1010}
    return BitArray.concat(BitArray(choice[c]) for c in frames)


class TestExtractVbits:

    @staticmethod
    def test_examples() -> None:
        assert extract_vbits(DStar(0, 0, 10), 3) == [1, 0, 1]
        assert extract_vbits(DStar(0, 0, 0), 3) == [0, 0, 0]
        assert extract_vbits(DStar(0, 0, 8), 3) == [0, 0, 1]

    @staticmethod
    def test_residual() -> None:
        for reduced in (16, 1, 3):
            with pytest.raises(DecodeFailureError) as info:
                extract_vbits(DStar(2, 0, reduced), 3)
            assert info.value.k == 2
            assert info.value.j is None


class TestFrameCosts:

    @staticmethod
    def test_padding_is_neutral() -> None:
        table = frame_cost_table(build_F_ell(16), 0, 64)
        assert table.shape == (16, 2)
        for frame in (0, 1, 2, 8, 9, 10):
            assert list(table[frame]) == [2, 2]

    @staticmethod
    def test_table_is_read_only() -> None:
        table = frame_cost_table(build_F_ell(16), 1, 64)
        with pytest.raises(ValueError):
            table[0, 0] = 0

    @staticmethod
    def test_frontier_formula() -> None:
        rng = np.random.default_rng(1)
        for ell in (16, 64):
            for _ in range(200):
                U_ell = sample_U_ell(ell, rng)
                for k in range(ell // 4):
                    assert measured_frontier_costs(ell, U_ell, k) == \
                        frontier_formula(ell, U_ell, k)

    @staticmethod
    def test_frontier_contributions() -> None:
        for ell in (16, 64):
            inst = make_recovery_instance(
                ell, sample_U_ell(ell, np.random.default_rng(ell)))
            expected = [
                (4**j + 2, 4**j + 2 + 2**(j + 1))
                for j in range(inst.block_count)]
            for k in range(ell // 4):
                assert frontier_contributions(inst, k) == expected

    @staticmethod
    def test_prefix_costs() -> None:
        for ell in (16, 64):
            for index in range(1000):
                U_ell = sample_U_ell(ell, trial_rng(3, index))
                costs = measured_prefix_costs(ell, U_ell)
                assert costs == [ell // 2 - 2] * len(costs)

    @staticmethod
    def test_odd_blocks() -> None:
        rng = np.random.default_rng(2)
        for ell in (16, 32, 64):
            U_ell = sample_U_ell(ell, rng)
            inst = make_recovery_instance(ell, U_ell)
            F_ell = build_F_ell(ell)
            for k in range(ell // 4):
                profile = contribution_profile(
                    F_ell[4 * k:4 * k + inst.width], U_ell)
                expected = sum(
                    int(profile[block * ell:(block + 1) * ell].sum())
                    for block in range(1, lg(ell), 2))
                assert odd_block_contribution(inst, k) == expected

    @staticmethod
    def test_odd_blocks_ignore_even_blocks() -> None:
        rng = np.random.default_rng(3)
        for ell in (16, 32, 64):
            F_ell = build_F_ell(ell)
            width = ell * lg(ell)
            odd = [sample_block(ell, rng) for _ in range(lg(ell) // 2)]
            even_count = lg(ell) - len(odd)
            windows = [
                assemble_U_ell(
                    [sample_block(ell, rng) for _ in range(even_count)], odd)
                for _ in range(5)
            ]
            for k in range(ell // 4):
                seen = set()
                for U_ell in windows:
                    profile = contribution_profile(
                        F_ell[4 * k:4 * k + width], U_ell)
                    seen.add(sum(
                        int(profile[block * ell:(block + 1) * ell].sum())
                        for block in range(1, lg(ell), 2)))
                assert len(seen) == 1
                inst = make_recovery_instance(ell, windows[0])
                assert odd_block_contribution(inst, k) in seen


class TestDStar:

    @staticmethod
    def test_single_bit() -> None:
        odd = block_of('abab')
        U_ell = assemble_U_ell(
            [block_of('aaab'), block_of('bbba')], [odd, odd])
        d = compute_dstar(make_recovery_instance(16, U_ell), 0)
        assert (d.value, d.reduced) == (11, 2)
        assert extract_vbits(d, 2) == [1, 0]

    @staticmethod
    def test_all_zeros() -> None:
        block = block_of('aaaa')
        U_ell = BitArray.concat([block] * 4)
        d = compute_dstar(make_recovery_instance(16, U_ell), 0)
        assert d.reduced == 0

    @staticmethod
    def test_matches_formula() -> None:
        rng = np.random.default_rng(4)
        for ell in (16, 64):
            for _ in range(100):
                U_ell = sample_U_ell(ell, rng)
                d = compute_dstar(make_recovery_instance(ell, U_ell), 0)
                assert d.value == sum(frontier_formula(ell, U_ell))

    @staticmethod
    def test_bad_offset() -> None:
        inst = make_recovery_instance(16, sample_U_ell(
            16, np.random.default_rng(0)))
        with pytest.raises(InvalidArgumentError):
            compute_dstar(inst, 4)
        with pytest.raises(InvalidArgumentError):
            compute_dstar(inst, 1)


class TestRecoveryInstance:

    @staticmethod
    def test_wrong_output_count() -> None:
        F_ell = build_F_ell(16)
        odd = (block_of('aaaa'), block_of('aaaa'))
        with pytest.raises(InvalidArgumentError):
            RecoveryInstance(16, F_ell, (Distance.of(0),), odd)

    @staticmethod
    def test_odd_blocks_must_be_update_frames() -> None:
        F_ell = build_F_ell(16)
        outputs = tuple(Distance.of(0) for _ in range(4))
        bad = BitArray.from_string('1001' * 4)
        with pytest.raises(InvalidArgumentError):
            RecoveryInstance(16, F_ell, outputs, (bad, bad))


class TestRecoverEvenBlocks:

    @staticmethod
    def test_round_trip() -> None:
        rng = np.random.default_rng(6)
        for ell in (16, 32, 64, 256):
            for _ in range(20):
                U_ell = sample_U_ell(ell, rng)
                inst = make_recovery_instance(ell, U_ell)
                assert recover_even_blocks(inst) == \
                    true_even_blocks(U_ell, ell)

    @staticmethod
    def test_trials() -> None:
        for ell in (16, 64):
            report = run_recovery_trials(ell, 1000, 7, threads=1)
            assert report.successes == 1000
            assert not report.failures
            assert report.distinct_outputs > 1

    @staticmethod
    def test_trials_with_residual_block() -> None:
        report = run_recovery_trials(32, 50, 7, threads=1)
        assert report.successes == 50

    @staticmethod
    def test_trials_do_not_depend_on_workers() -> None:
        one = run_recovery_trials(16, 40, 3, threads=1)
        two = run_recovery_trials(16, 40, 3, threads=2)
        assert one.to_dict() == two.to_dict()

    @staticmethod
    def test_no_trials() -> None:
        with pytest.raises(InvalidArgumentError):
            run_recovery_trials(16, 0, 7)


class TestCertificate:

    @staticmethod
    def test_exhaustive_pinned_odd_blocks() -> None:
        rng = np.random.default_rng(8)
        for _ in range(3):
            odd = [sample_block(16, rng) for _ in range(2)]
            counts = exhaustive_recovery(16, odd)
            assert counts == {
                'configurations': 256,
                'successes': 256,
                'distinct_outputs': 256,
            }

    @staticmethod
    def test_exhaustive_certificate() -> None:
        certificate = entropy_certificate(16, 1000, 7)
        assert certificate['method'] == 'exhaustive'
        assert certificate['certified_bits'] == 8
        assert certificate['max_bits'] == 8

    @staticmethod
    def test_single_trial() -> None:
        certificate = entropy_certificate(16, 1, 7)
        assert certificate['method'] == 'sampled'
        assert certificate['certified_bits'] == 0

    @staticmethod
    def test_sampled_certificate() -> None:
        certificate = entropy_certificate(64, 50, 7)
        assert certificate['method'] == 'sampled'
        assert certificate['successes'] == 50
        assert certificate['certified_bits'] == 5
        assert certificate['certified_bits'] <= certificate['max_bits'] == 48

    @staticmethod
    def test_too_large_to_enumerate() -> None:
        with pytest.raises(InvalidArgumentError):
            entropy_certificate(64, 50, 7, exhaustive=True)

    @staticmethod
    def test_large_budget_samples_instead_of_enumerating() -> None:
        trials = 2**16
        report = RecoveryReport(
            32, trials, 7, successes=trials, distinct_outputs=trials)
        certificate = entropy_certificate(32, trials, 7, trial_report=report)
        assert certificate['method'] == 'sampled'
        assert certificate['certified_bits'] == certificate['max_bits'] == 16
        with pytest.raises(InvalidArgumentError):
            entropy_certificate(32, trials, 7, exhaustive=True)

    @staticmethod
    def test_reuses_trial_report() -> None:
        report = run_recovery_trials(64, 50, 7, threads=1)
        certificate = entropy_certificate(64, 50, 7, trial_report=report)
        assert certificate == entropy_certificate(64, 50, 7)
        with pytest.raises(InvalidArgumentError):
            entropy_certificate(64, 50, 8, trial_report=report)


class TestStreamedToSlide:

    @staticmethod
    def test_matches_slide() -> None:
        n = 2**16
        ell = 16
        F, layout = build_F(n)
        start = layout[ell][0]
        width = ell * lg(ell)
        U_ell = sample_U_ell(ell, np.random.default_rng(9))
        direct = slide_l2(build_F_ell(ell), U_ell)
        for k in range(ell // 4):
            u_start = start + 4 * k
            bits = sample_U(n, k).bits.copy()
            bits[u_start:u_start + width] = U_ell.bits
            window = BitArray(bits)
            assert streamed_to_slide(
                F, window, u_start, start, ell, k) == direct[k]

    @staticmethod
    def test_misaligned() -> None:
        n = 2**16
        F, layout = build_F(n)
        start = layout[16][0]
        window = sample_U(n, 0)
        with pytest.raises(InvalidArgumentError):
            streamed_to_slide(F, window, start + 2, start, 16, 0)
        with pytest.raises(InvalidArgumentError):
            streamed_to_slide(F, window, start + 16, start, 16, 4)


def test_true_even_blocks() -> None:
    U_ell = sample_U_ell(32, np.random.default_rng(0))
    blocks = split_blocks(U_ell, 32)
    assert true_even_blocks(U_ell, 32) == [blocks[0], blocks[2]]
