import math

import numpy as np
import pytest
from scipy import integrate, stats

from birthgrowth import Ball, Box, FiniteDiscrete, LogNormal, ModelSpec, PointMass, TimeIntensity, Uniform
from birthgrowth.exposure import exposed_naive
from birthgrowth.rng import substream
from birthgrowth.sampler import (
    Realization,
    ball_intersection_integral_mc,
    count_in_influence_set,
    in_relevance_region,
    mass_of_influence_set,
    region_mass,
    sample_realization,
)
from birthgrowth.special import ball_volume

LEB = TimeIntensity.lebesgue_measure()


def draws(spec, m, seed=0):
    return [sample_realization(spec, substream(seed, r)) for r in range(m)]


class TestRegionMass:
    def test_reference(self, ref_spec):
        assert region_mass(ref_spec) == pytest.approx(2.0, rel=1e-15)

    def test_reference_by_rejection_volume(self, ref_spec, rng):
        # area of {(y, t): 0 <= t <= 1, dist(y, [0, 1]) <= 1 - t} inside [-1, 2] x [0, 1]
        y = rng.uniform(-1, 2, 1_000_000)
        t = rng.uniform(0, 1, 1_000_000)
        hit = in_relevance_region(ref_spec, y[:, None], t, np.ones_like(t))
        est = 3.0 * hit.mean()
        assert est == pytest.approx(2.0, abs=4 * 3.0 * math.sqrt(2 / 3 * (1 / 3) / 1e6))

    def test_small_horizon(self, ref_spec):
        spec = ModelSpec(1, LEB, 1e-12, Box((1.0,)), PointMass(1.0))
        assert region_mass(spec) < 1e-11

    def test_doubling_window_in_1d(self):
        one = ModelSpec(1, LEB, 1.0, Box((1.0,)), PointMass(1.0))
        two = ModelSpec(1, LEB, 1.0, Box((2.0,)), PointMass(1.0))
        # volume term 1 -> 2, boundary term 1 unchanged
        assert region_mass(two) - region_mass(one) == pytest.approx(1.0)

    def test_scaling_modes(self, ref_spec):
        assert region_mass(ref_spec.with_scale(intensity=3.0)) == pytest.approx(6.0)
        assert region_mass(ref_spec.with_scale(window_scale=5.0)) == pytest.approx(6.0)

    def test_quadrature_cross_check(self):
        # mass = int_0^a theta(dt) E_nu vol(W + B_{v (a - t)})
        spec = ModelSpec(2, TimeIntensity(0.5), 1.3, Ball(0.8, 2), FiniteDiscrete((0.5, 2.0), (0.4, 0.6)))
        f = lambda t: t**0.5 * sum(p * spec.window.minkowski_volume(v * (1.3 - t)) for v, p in [(0.5, 0.4), (2.0, 0.6)])
        assert region_mass(spec) == pytest.approx(integrate.quad(f, 0, 1.3, epsrel=1e-12)[0], rel=1e-10)


class TestSampling:
    def test_count_mean(self, ref_spec):
        counts = np.array([len(r) for r in draws(ref_spec, 10_000)])
        se = math.sqrt(2.0 / len(counts))
        assert abs(counts.mean() - 2.0) < 3 * se

    def test_time_marginal(self):
        spec = ModelSpec(2, TimeIntensity(0.5), 1.0, Box((1.0, 0.5)), Uniform(2.0))
        reals = draws(spec, 3000, seed=4)
        t = np.concatenate([r.birth_times for r in reals])
        # E_nu vol(W + B_r) with r = v (a - t): Steiner polynomial with nu moments
        iv = spec.window.intrinsic_volumes()
        dens = lambda s: s**0.5 * sum(ball_volume(i) * iv[2 - i] * spec.speed.moment(i) * (1 - s) ** i for i in range(3))
        p = integrate.quad(dens, 0, 0.5)[0] / integrate.quad(dens, 0, 1.0)[0]
        frac = np.mean(t <= 0.5)
        assert abs(frac - p) < 3 * math.sqrt(p * (1 - p) / len(t))

    def test_point_mass_speeds(self):
        spec = ModelSpec(2, LEB, 1.0, Box((1.0, 1.0)), PointMass(2.5))
        for r in draws(spec, 50):
            assert np.all(r.speeds == 2.5)

    @pytest.mark.parametrize(
        "spec",
        [
            ModelSpec(1, TimeIntensity(-0.5), 1.0, Box((1.0,)), LogNormal(0.0, 1.0)),
            ModelSpec(3, LEB, 2.0, Ball(0.5, 3), Uniform(3.0)),
        ],
    )
    def test_all_points_in_region(self, spec):
        for r in draws(spec, 200):
            assert np.all(in_relevance_region(spec, r.locations, r.birth_times, r.speeds))
            assert np.all((r.birth_times >= 0) & (r.birth_times <= spec.horizon))

    def test_determinism(self, two_point_spec):
        a = sample_realization(two_point_spec, substream(11, 3))
        b = sample_realization(two_point_spec, substream(11, 3))
        assert np.array_equal(a.locations, b.locations) and np.array_equal(a.speeds, b.speeds)


def _box_counts(reals, ylo, yhi, tlo, thi, vlo, vhi):
    out = []
    for r in reals:
        y = r.locations[:, 0]
        out.append(np.count_nonzero((y >= ylo) & (y < yhi) & (r.birth_times >= tlo) & (r.birth_times < thi)
                                    & (r.speeds >= vlo) & (r.speeds < vhi)))
    return np.array(out)


EXACT_SPEC = ModelSpec(1, LEB, 1.0, Box((1.0,)), Uniform(2.0))


@pytest.fixture(scope="module")
def exact_reals():
    return draws(EXACT_SPEC, 10_000, seed=99)


class TestExactness:
    # closed-form mu of product boxes inside the relevance region
    inside = ((0.2, 0.5, 0.1, 0.6, 0.5, 1.5), 0.3 * 0.5 * 0.5)
    outside = ((1.1, 1.3, 0.0, 0.3, 1.0, 2.0), 0.2 * 0.3 * 0.5)

    @pytest.mark.parametrize("box", ["inside", "outside"])
    def test_poisson_counts(self, exact_reals, box):
        bounds, mu = getattr(self, box)
        counts = _box_counts(exact_reals, *bounds)
        observed = np.array([np.sum(counts == 0), np.sum(counts == 1), np.sum(counts >= 2)])
        pois = stats.poisson(mu)
        expected = len(counts) * np.array([pois.pmf(0), pois.pmf(1), pois.sf(1)])
        assert stats.chisquare(observed, expected).pvalue > 1e-3

    def test_disjoint_boxes_uncorrelated(self, exact_reals):
        a = _box_counts(exact_reals, *self.inside[0])
        b = _box_counts(exact_reals, *self.outside[0])
        rho = np.corrcoef(a, b)[0, 1]
        assert abs(rho) < 3 / math.sqrt(len(exact_reals))


def test_completeness_adversarial_points(rng):
    """Seeds just outside the relevance region never flip an in-window flag."""
    for trial in range(40):
        d = 1 + trial % 3
        spec = ModelSpec(d, TimeIntensity(0.3), 1.0, Box((1.5,) * d), Uniform(2.0))
        real = sample_realization(spec, rng)
        base = exposed_naive(real).flags
        counted = (spec.window.distance(real.locations) <= 0) & (real.birth_times <= spec.horizon)
        for _ in range(5):
            t = rng.uniform(0, 1.0)
            v = rng.uniform(0.1, 3.0)
            reach = v * (spec.horizon - t)
            # point at distance reach * (1 + eps) from a face of W
            direction = rng.normal(size=d)
            direction /= np.linalg.norm(direction)
            centre = np.full(d, 0.75)
            y = centre + direction * 10.0
            # pull y in until it is just outside the dilated window
            lo, hi = 0.0, 10.0
            for _ in range(80):
                mid = (lo + hi) / 2
                if spec.window.distance(centre + direction * mid)[0] > reach * (1 + 1e-6):
                    hi = mid
                else:
                    lo = mid
            y = centre + direction * hi
            assert not in_relevance_region(spec, y[None, :], [t], [v])[0]
            late = Realization.from_arrays(
                np.vstack([real.locations, y[None, :], real.locations[:1] if len(real) else y[None, :]]),
                np.concatenate([real.birth_times, [t], [spec.horizon + 0.1]]),
                np.concatenate([real.speeds, [v], [50.0]]),
                spec=spec,
            )
            flags = exposed_naive(late).flags[: len(real)]
            assert np.array_equal(flags[counted], base[counted])


class TestInfluenceSet:
    def test_values(self, ref_spec):
        assert mass_of_influence_set(ref_spec, 0.0) == 0.0
        assert mass_of_influence_set(ref_spec, 1.0) == pytest.approx(1.0)

    def test_empirical_count(self):
        spec = ModelSpec(2, TimeIntensity(0.5), 1.0, Box((2.0, 2.0)), FiniteDiscrete((0.5, 1.5), (0.5, 0.5)))
        x = np.array([1.0, 1.0])
        counts = np.array([count_in_influence_set(r, x, 0.7) for r in draws(spec, 3000, seed=5)])
        mu = mass_of_influence_set(spec, 0.7)
        assert abs(counts.mean() - mu) < 3 * math.sqrt(mu / len(counts))


@pytest.mark.parametrize("d", [1, 2, 3])
def test_ball_intersection_identity(d, rng):
    for r1, r2 in [(1.0, 1.0), (0.5, 2.0)]:
        est, se = ball_intersection_integral_mc(d, r1, r2, 2_000_000, rng)
        exact = ball_volume(d) ** 2 * r1**d * r2**d
        assert abs(est - exact) < 4 * se
