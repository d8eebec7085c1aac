import numpy as np
import pytest

from oracles import direct_fir, direct_memory_polynomial, odd_poly

from nldecomp import stats
from nldecomp.errors import BadOrder, NotSeparable, SampleOutOfRange
from nldecomp.signals import generate_filtered_noise, mean_power
from nldecomp.synth import (
    SystemKind,
    SystemSpec,
    make_memory_polynomial,
    make_system,
    simulate,
    true_static_part,
)

KINDS = list(SystemKind)


class TestMemoryPolynomial:
    def test_zero_strength_is_memoryless(self):
        spec = make_memory_polynomial(3, 5, 3, 0.0)
        assert np.all(spec.coefficients[:, 1:] == 0)

    def test_first_order_is_identity(self):
        spec = make_memory_polynomial(9, 1, 0, 0.7)
        x = generate_filtered_noise(1, 256)
        assert simulate(spec, x).samples.tobytes() == x.samples.tobytes()

    def test_linear_coefficient_fixed(self):
        assert make_memory_polynomial(5, 7, 2, 0.4).coefficients[0, 0] == 1 + 0j

    def test_taps_decay(self):
        spec = make_memory_polynomial(2, 5, 4, 1.0)
        mags = np.abs(spec.coefficients[0, 1:])
        bound = 0.5 ** np.arange(1, 5)
        assert np.all(mags <= bound + 1e-15)

    def test_seed42_output_power(self):
        spec = make_memory_polynomial(42, 5, 3, 0.3)
        x = generate_filtered_noise(42, 10**6, 1.0)
        assert 0.5 < mean_power(simulate(spec, x)) < 2.0

    @pytest.mark.parametrize("order", [0, 2, 4])
    def test_even_order(self, order):
        with pytest.raises(BadOrder):
            make_memory_polynomial(0, order, 2, 0.1)

    def test_deterministic(self):
        a = make_memory_polynomial(17, 5, 3, 0.3).coefficients
        assert a.tobytes() == make_memory_polynomial(17, 5, 3, 0.3).coefficients.tobytes()


class TestSimulate:
    def test_identity_bit_exact(self):
        x = generate_filtered_noise(2, 1000)
        assert simulate(SystemSpec.identity(), x).samples.tobytes() == x.samples.tobytes()

    def test_pure_cubic(self):
        spec = SystemSpec.memoryless([0.0, 0.1])
        y = simulate(spec, np.ones(10, complex))
        assert np.allclose(y.samples, 0.1, atol=1e-15, rtol=0)

    def test_matches_direct_evaluator(self):
        spec = make_memory_polynomial(42, 5, 3, 0.3)
        x = generate_filtered_noise(5, 4096, 0.5).samples
        ref = direct_memory_polynomial(spec.coefficients, x)
        got = simulate(spec, x).samples
        assert np.max(np.abs(got - ref)) <= 1e-12 * np.max(np.abs(ref))

    def test_hammerstein_matches_direct(self):
        spec = make_system("Hammerstein", 4, 5, 3, 0.5)
        x = generate_filtered_noise(6, 2048).samples
        ref = direct_fir(spec.fir_taps, odd_poly(spec.coefficients[:, 0], x))
        assert np.max(np.abs(simulate(spec, x).samples - ref)) <= 1e-12 * np.max(np.abs(ref))

    def test_wiener_matches_direct(self):
        spec = make_system("Wiener", 4, 5, 3, 0.5)
        x = generate_filtered_noise(6, 2048).samples
        ref = odd_poly(spec.coefficients[:, 0], direct_fir(spec.fir_taps, x))
        assert np.max(np.abs(simulate(spec, x).samples - ref)) <= 1e-12 * np.max(np.abs(ref))

    def test_same_length_zero_prehistory(self):
        spec = make_memory_polynomial(1, 3, 2, 0.5)
        x = np.zeros(8, complex)
        x[0] = 1.0
        y = simulate(spec, x).samples
        assert y.size == 8
        # an impulse at n = 0 excites exactly taps 0..2
        assert np.allclose(y[:3], spec.coefficients.sum(axis=0))
        assert np.all(y[3:] == 0)

    def test_input_range(self):
        with pytest.raises(SampleOutOfRange):
            simulate(SystemSpec.identity(), np.array([0.0, 11.0]))

    @pytest.mark.parametrize("kind", KINDS)
    def test_causal(self, kind):
        spec = make_system(kind, 8, 5, 3, 0.4)
        x = generate_filtered_noise(8, 512).samples
        y = simulate(spec, x).samples
        rng = np.random.default_rng(0)
        for m in rng.integers(1, 511, 10):
            xp = x.copy()
            xp[m] += 0.3 - 0.2j
            yp = simulate(spec, xp).samples
            assert np.array_equal(yp[:m], y[:m])
            assert not np.array_equal(yp[m:], y[m:])

    def test_bibo_100_specs(self):
        x = generate_filtered_noise(0, 8192, 1.0)
        for i in range(100):
            spec = make_system(KINDS[i % 4], i, [1, 3, 5, 7, 9][i % 5], i % 5, (i % 11) / 10)
            p = mean_power(simulate(spec, x))
            assert np.isfinite(p) and p < 1e4


class TestStaticPart:
    def test_memoryless_equals_simulate(self):
        spec = make_system("MemorylessPoly", 3, 7)
        x = generate_filtered_noise(3, 1024)
        assert true_static_part(spec, x).samples.tobytes() == simulate(spec, x).samples.tobytes()

    def test_identity(self):
        x = generate_filtered_noise(3, 64)
        assert np.array_equal(true_static_part(SystemSpec.identity(), x).samples, x.samples)

    def test_zero_strength_matches_simulate(self):
        spec = make_memory_polynomial(12, 5, 3, 0.0)
        x = generate_filtered_noise(12, 2048)
        assert np.array_equal(true_static_part(spec, x).samples, simulate(spec, x).samples)

    def test_seed42_variance(self):
        spec = make_memory_polynomial(42, 5, 3, 0.3)
        x = generate_filtered_noise(42, 65536)
        y = simulate(spec, x).samples
        g = true_static_part(spec, x).samples
        assert stats.variance(y - g) < stats.variance(y - x.samples)

    def test_wiener_not_separable(self):
        with pytest.raises(NotSeparable):
            true_static_part(make_system("Wiener", 1, 5, 2, 0.3), np.ones(32, complex))


class TestSerialization:
    @pytest.mark.parametrize("kind", KINDS)
    def test_json_round_trip(self, kind):
        spec = make_system(kind, 21, 7, 3, 0.35)
        back = SystemSpec.from_json(spec.to_json())
        assert back.kind is spec.kind
        assert back.coefficients.tobytes() == spec.coefficients.tobytes()
        assert back.fir_taps.tobytes() == spec.fir_taps.tobytes()
        assert back.seed == spec.seed

    @pytest.mark.parametrize("alias", ["memory-poly", "MP", "memory_polynomial", "MemoryPolynomial"])
    def test_kind_aliases(self, alias):
        assert SystemKind(alias) is SystemKind.MEMORY_POLYNOMIAL

    def test_memoryless_requires_zero_depth(self):
        with pytest.raises(ValueError):
            SystemSpec(SystemKind.MEMORYLESS_POLY, 3, 1, np.ones((2, 1)), [1.0, 0.0])
