"""Counter-based RNG: reference outputs, stream determinism, moments."""

import statistics

from invnets.rng import CounterRng


class TestReferenceVectors:
    def test_splitmix64_seed_zero(self):
        # canonical SplitMix64 output sequence for seed 0
        r = CounterRng(0)
        assert [r.u64() for _ in range(3)] == [
            0xE220A8397B1DCDAF,
            0x6E789E6AA1B965F4,
            0x06C45D188009454F,
        ]

    def test_wraparound_seed(self):
        assert CounterRng(2**64).u64() == CounterRng(0).u64()


class TestStreams:
    def test_same_seed_same_stream(self):
        a = CounterRng(123)
        b = CounterRng(123)
        assert a.normals(50) == b.normals(50)

    def test_different_seeds_differ(self):
        assert CounterRng(1).uniforms(8) != CounterRng(2).uniforms(8)

    def test_uniform_range(self):
        r = CounterRng(9)
        xs = r.uniforms(10000)
        assert all(0.0 <= x < 1.0 for x in xs)

    def test_below_bounds(self):
        r = CounterRng(77)
        assert all(0 <= r.below(7) < 7 for _ in range(1000))

    def test_shuffle_deterministic(self):
        a = list(range(10))
        b = list(range(10))
        CounterRng(5).shuffle(a)
        CounterRng(5).shuffle(b)
        assert a == b
        assert sorted(a) == list(range(10))

    def test_normal_moments(self):
        xs = CounterRng(7).normals(40000)
        assert abs(statistics.fmean(xs)) < 0.02
        assert abs(statistics.pvariance(xs) - 1.0) < 0.02

    def test_split_streams_independent(self):
        parent = CounterRng(3)
        child = parent.split()
        assert child.uniforms(4) != parent.uniforms(4)
