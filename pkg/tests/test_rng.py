import numpy as np
import pytest

from cayleywalk import _kernels
from cayleywalk.rng import (
    GOLDEN,
    MASK64,
    SplitMixStream,
    fold_bytes,
    splitmix64,
    stream_value,
    unit_interval,
)


class TestSplitmix64:
    def test_public_reference_value(self):
        # first output of the canonical generator seeded with 1234567
        assert splitmix64(1234567) == 6457827717110365317

    def test_sequential_generator_equals_counter_form(self):
        # generator state s: i-th output is splitmix64(s + i*GOLDEN)
        state = 987654321
        outputs = []
        for _ in range(5):
            state_next = (state + GOLDEN) & MASK64
            outputs.append(splitmix64(state))  # splitmix64 includes the increment
            state = state_next
        assert outputs == [stream_value(987654321, i) for i in range(5)]

    def test_matches_kernel(self):
        for x in (0, 1, 42, 2**63, MASK64):
            assert splitmix64(x) == int(_kernels.splitmix64(np.uint64(x)))

    def test_seed_sensitivity(self):
        assert splitmix64(0) != splitmix64(1)


class TestFold:
    def test_empty(self):
        assert fold_bytes(3, b"") == splitmix64(3)

    def test_matches_kernel_fold(self):
        rs = np.random.RandomState(0)
        for _ in range(100):
            n = int(rs.randint(0, 50))
            data = bytes(rs.randint(0, 256, size=n, dtype=np.uint8))
            seed = int(rs.randint(0, 2**63))
            expected = fold_bytes(seed, data)
            got = int(_kernels.fold_serialized(
                np.uint64(seed), np.frombuffer(data, dtype=np.uint8)))
            assert expected == got

    def test_prefix_sensitivity(self):
        assert fold_bytes(1, b"\x01\x02") != fold_bytes(1, b"\x02\x01")


class TestStream:
    def test_unit_interval_open(self):
        assert 0.0 < unit_interval(0) < 1.0
        assert 0.0 < unit_interval(MASK64) < 1.0

    def test_stream_object_advances(self):
        stream = SplitMixStream(5)
        first, second = stream.next_u64(), stream.next_u64()
        assert (first, second) == (stream_value(5, 0), stream_value(5, 1))

    def test_matches_kernel_stream(self):
        for i in (0, 1, 1000):
            assert stream_value(77, i) == int(_kernels.stream_u64(np.uint64(77), i))
            assert unit_interval(stream_value(77, i)) == float(
                _kernels.stream_unit(np.uint64(77), i))

    def test_rejects_out_of_range_seed(self):
        with pytest.raises(ValueError):
            SplitMixStream(-1)
        with pytest.raises(ValueError):
            SplitMixStream(2**64)

    def test_uniformity_sanity(self):
        values = np.array([unit_interval(stream_value(9, i)) for i in range(20_000)])
        assert abs(values.mean() - 0.5) < 0.01
        assert abs(values.var() - 1 / 12) < 0.005
