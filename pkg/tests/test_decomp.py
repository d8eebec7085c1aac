import json

import numpy as np
import pytest

from nldecomp import decompose, fit_static, simulate, stats, verify_identities
from nldecomp.decomp import MAX_STATIC_ORDER, StaticModel, apply_static, select_order
from nldecomp.errors import BadOrder, IllConditioned, TooFewSamples
from nldecomp.learner.metrics import nmse_db
from nldecomp.signals import generate_filtered_noise
from nldecomp.synth import make_system, true_static_part


@pytest.fixture(scope="module")
def x():
    return generate_filtered_noise(10, 16384, 1.0)


class TestFitStatic:
    def test_identity_target(self, x):
        m = fit_static(x, x, 5)
        assert np.allclose(m.coefficients, [1, 0, 0], atol=1e-9, rtol=0)

    def test_cubic_target(self, x):
        xs = x.samples
        m = fit_static(xs, xs + 0.1 * xs * np.abs(xs) ** 2, 3)
        assert np.allclose(m.coefficients, [1, 0.1], atol=1e-9, rtol=0)

    def test_seed42_tap0_recovery(self, seed42):
        spec, x, y, _ = seed42
        m = fit_static(x, y, 5)
        true = spec.static_coefficients
        assert np.all(np.abs(m.coefficients - true) <= 0.05 * np.abs(true))

    def test_condition_number_reported(self, x):
        m = fit_static(x, x, 7)
        assert 1 <= m.fit_condition_number < 1e6

    @pytest.mark.parametrize("order", [0, 2, 15])
    def test_bad_order(self, x, order):
        with pytest.raises(BadOrder):
            fit_static(x, x, order)

    def test_too_few_samples(self):
        z = generate_filtered_noise(0, 64).samples[:39]
        with pytest.raises(TooFewSamples):
            fit_static(z, z, 7)

    def test_ill_conditioned_on_zero_input(self):
        with pytest.raises(IllConditioned):
            fit_static(np.zeros(200, complex), np.zeros(200, complex), 3)

    def test_ill_conditioned_on_constant_modulus(self):
        phase = np.exp(2j * np.pi * np.random.default_rng(0).random(500))
        with pytest.raises(IllConditioned):
            fit_static(phase, phase, 5)

    def test_nested_monotone_residual(self, seed42):
        _, x, y, _ = seed42
        prev = np.inf
        for order in range(1, 14, 2):
            m = fit_static(x, y, order)
            p = stats.power(y.samples - apply_static(m, x).samples)
            assert p <= prev * (1 + 1e-12)
            prev = p


class TestApplyStatic:
    def test_identity_model(self, x):
        assert np.array_equal(apply_static(StaticModel.identity(5), x).samples, x.samples)

    def test_zero_model(self, x):
        assert not np.any(apply_static(StaticModel(3, [0, 0]), x).samples)

    def test_holdout_vs_true_static(self, seed42):
        spec, x, y, _ = seed42
        m = fit_static(x, y, 7)
        xh = generate_filtered_noise(4242, 16384, 1.0)
        assert nmse_db(apply_static(m, xh), true_static_part(spec, xh)) <= -30

    def test_round_trip(self):
        m = StaticModel(5, [1, 0.1 - 0.2j, 1e-3j], 12.5)
        back = StaticModel.from_dict(json.loads(json.dumps(m.to_dict())))
        assert back.coefficients.tobytes() == m.coefficients.tobytes()


class TestSelectOrder:
    def test_cap(self, seed42):
        _, x, y, _ = seed42
        order, scores = select_order(x, y)
        assert order <= MAX_STATIC_ORDER and order % 2 == 1
        assert max(scores) <= MAX_STATIC_ORDER

    def test_lowest_adequate_order(self, x):
        xs = x.samples
        order, _ = select_order(xs, xs + 0.1 * xs * np.abs(xs) ** 2)
        assert order == 3


class TestDecompose:
    def test_distortionless(self, x):
        res = decompose(x, x, 5)
        for k in ("d", "h", "r"):
            assert np.max(np.abs(getattr(res, k).samples)) <= 1e-12

    def test_linear_gain_two(self, x):
        res = decompose(x, 2 * x.samples, 3, normalize_gain=False)
        xs = x.samples
        assert np.allclose(res.g.samples, 2 * xs, atol=1e-12)
        assert np.max(np.abs(res.h.samples)) <= 1e-12
        assert np.allclose(res.d.samples, xs, atol=1e-15)
        assert np.allclose(res.r.samples, xs, atol=1e-12)

    def test_seed42_variance_domination(self, seed42):
        res = seed42[3]
        assert stats.variance(res.on_support("h")) < stats.variance(res.on_support("d"))

    def test_pointwise_relations(self, seed42):
        res = seed42[3]
        y, x, g = res.y.samples, res.x.samples, res.g.samples
        assert np.array_equal(res.d.samples, y - x)
        assert np.array_equal(res.h.samples, y - g)
        assert np.array_equal(res.r.samples, g - x)

    def test_guard(self, x):
        assert decompose(x, x, 3).support == (16, len(x))
        assert decompose(x, x, 3, memory_depth=40).support == (40, len(x))

    def test_with_alignment(self, x):
        y = np.concatenate([np.zeros(3), 0.5 * x.samples[:-3]])
        res = decompose(x, y, 3, align=True)
        assert res.alignment.delay_samples == 3
        assert np.max(np.abs(res.d.samples)) <= 1e-12

    def test_export(self, tmp_path, seed42):
        res = seed42[3]
        out = res.export(tmp_path / "dec")
        man = json.loads((out / "manifest.json").read_text())
        assert set(man["files"]) == {"x", "y", "g", "d", "h", "r"}
        assert man["support"] == list(res.support)
        assert all((out / f).exists() for f in man["files"].values())


class TestVerifyIdentities:
    def test_distortionless_all_zero(self, x):
        rep = verify_identities(decompose(x, x, 5))
        assert rep.passed
        assert rep.pointwise_residual == 0 and rep.mean_identity_residual == 0

    def test_seed42_against_extended_precision(self, seed42):
        res = seed42[3]
        rep = verify_identities(res, tol=1e-9)
        assert rep.passed
        assert rep.pointwise_residual <= 1e-12

        def ld(name):
            v = res.on_support(name)
            return v.real.astype(np.longdouble), v.imag.astype(np.longdouble)

        (xr, xi), (yr, yi), (dr, di) = ld("x"), ld("y"), ld("d")
        ey2 = np.mean(yr * yr + yi * yi)
        rhs = np.mean(xr * xr + xi * xi) + 2 * np.mean(xr * dr + xi * di) + np.mean(dr * dr + di * di)
        assert abs(float(ey2 - rhs)) <= 1e-9
        assert rep.energy_residual_xd <= 1e-9 * rep.scale

    def test_sum_of_parts(self):
        spec = make_system("Hammerstein", 5, 5, 3, 0.5)
        x = generate_filtered_noise(5, 8192)
        res = decompose(x, simulate(spec, x), 7, memory_depth=3)
        d, h, r = (res.on_support(k) for k in "dhr")
        # the statistics of r and d - h come from the same samples
        assert stats.power(r) == pytest.approx(stats.power(d - h), rel=1e-12)
