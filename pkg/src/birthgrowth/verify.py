"""Built-in self-check battery behind ``birthgrowth verify``."""

import itertools
import math
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

from . import analytic, exposure, mc, sampler
from .geometry import Box
from .model import FiniteDiscrete, LogNormal, ModelSpec, PointMass, TimeIntensity, TruncatedPareto, Uniform
from .special import ball_volume, lower_incomplete_gamma


class Check(NamedTuple):
    name: str
    passed: bool
    detail: str


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _quad(f, lo, hi, **kw):
    return integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-12, limit=500, **kw)[0]


def _grid():
    return itertools.product((-0.5, 0.0, 1.5), (1, 2, 3), (0.3, 1.0, 2.2))


def check_big_lambda(tol=1e-8):
    worst = 0.0
    for tau, d, t in _grid():
        ref = ball_volume(d) * _quad(lambda s: (t - s) ** d, 0.0, t, weight="alg", wvar=(tau, 0.0))
        worst = max(worst, _rel(analytic.big_lambda(TimeIntensity(tau), d, t), ref))
    return Check("closed_form_big_lambda", worst <= tol, f"max rel err {worst:.2e}")


def check_Q(tol=1e-8):
    worst = 0.0
    for tau, d, y in _grid():
        ti = TimeIntensity(tau)
        for x in (0.0, float(d), 2.0 * d):
            c = y * analytic.big_lambda(ti, d, 1.0)
            k = d + tau + 1.0
            ref = _quad(lambda t: t**x * math.exp(-c * t**k), 0.0, 1.0, weight="alg", wvar=(tau, 0.0))
            ref += _quad(lambda t: t ** (x + tau) * math.exp(-c * t**k), 1.0, math.inf)
            worst = max(worst, _rel(analytic.Q_integral(x, y, ti, d), ref))
    return Check("closed_form_Q", worst <= tol, f"max rel err {worst:.2e}")


def check_l_a_tau(tol=1e-8):
    worst = 0.0
    for tau, d, x in _grid():
        for a in (0.5, 1.0, 2.0):
            k = d + tau + 1.0
            p = (tau + 1.0) / k
            z = a**k * x
            ref = _quad(lambda u: math.exp(-u), 0.0, z, weight="alg", wvar=(p - 1.0, 0.0)) * x ** (-p)
            worst = max(worst, _rel(analytic.l_a_tau(a, tau, d, x), ref))
    return Check("closed_form_l_a_tau", worst <= tol, f"max rel err {worst:.2e}")


def check_ell_kernel(tol=1e-8):
    worst = 0.0
    for tau, d, t1 in _grid():
        for t2 in (0.4, 1.0, 3.0):
            m = min(t1, t2)
            ref = ball_volume(d) ** 2 * 1.7 * _quad(
                lambda s: (t1 - s) ** d * (t2 - s) ** d, 0.0, m, weight="alg", wvar=(tau, 0.0)
            )
            worst = max(worst, _rel(analytic.ell_kernel(t1, t2, TimeIntensity(tau), d, 1.7), ref))
    return Check("closed_form_ell_kernel", worst <= tol, f"max rel err {worst:.2e}")


def check_incomplete_gamma(tol=1e-12):
    worst = 0.0
    for p in (0.05, 0.5, 1.0, 3.3, 12.0, 50.0):
        for z in (1e-3, 0.7, 4.0, 30.0, 120.0, 700.0):
            ref = special.gammainc(p, z) * special.gamma(p)
            worst = max(worst, _rel(lower_incomplete_gamma(p, z), ref))
    return Check("incomplete_gamma", worst <= 10 * tol, f"max rel err {worst:.2e}")


def check_mean_closed_form(tol=1e-8):
    # int_0^a exp(-c t^k) t^tau dt = gamma(p, c a^k) / (k c^p)
    worst = 0.0
    for tau, d in itertools.product((-0.5, 0.0, 1.0), (1, 2)):
        spec = ModelSpec(d, TimeIntensity(tau), 1.3, Box((1.0,) * d), PointMass(1.4))
        k = d + tau + 1.0
        c = 1.4**d * analytic.big_lambda(spec.time_intensity, d, 1.0)
        p = (tau + 1.0) / k
        ref = lower_incomplete_gamma(p, c * 1.3**k) / (k * c**p)
        worst = max(worst, _rel(analytic.mean_F(spec), ref))
    return Check("mean_closed_form", worst <= tol, f"max rel err {worst:.2e}")


def _box_dilation_direct(sides, r):
    # sum over faces: face volume x orthant of the complementary ball
    d = len(sides)
    total = 0.0
    for mask in itertools.product((0, 1), repeat=d):
        k = sum(mask)
        face = math.prod(s for s, m in zip(sides, mask) if m)
        total += face * ball_volume(d - k) * r ** (d - k)
    return total


def check_steiner(tol=1e-12):
    worst = 0.0
    for sides in ((1.0,), (1.0, 2.5), (0.5, 1.0, 3.0)):
        w = Box(sides)
        for r in (0.0, 0.1, 1.0, 4.0):
            worst = max(worst, _rel(w.minkowski_volume(r), _box_dilation_direct(sides, r)))
    return Check("steiner_boxes", worst <= tol, f"max rel err {worst:.2e}")


def check_bounds_ordered():
    bad = []
    for tau, d in itertools.product((-0.5, 0.0, 1.5), (1, 2)):
        spec = ModelSpec(d, TimeIntensity(tau), 1.0, Box((1.0,) * d), FiniteDiscrete((1.0, 3.0), (0.5, 0.5)))
        lo, hi = analytic.var_lower_bound(spec), analytic.var_upper_bound(spec)
        if not lo <= hi or (tau <= d - 1 and not lo > 0):
            bad.append((tau, d))
    return Check("variance_bounds_ordered", not bad, f"failing (tau, d): {bad}" if bad else "ok")


def check_exposure_equivalence(n_realizations=30):
    rng = np.random.default_rng(20240611)
    speeds = [PointMass(1.0), FiniteDiscrete((0.5, 2.0), (0.6, 0.4)), Uniform(2.0),
              TruncatedPareto(3.0, 0.5, 30.0), LogNormal(0.0, 0.8)]
    mismatches = 0
    for k in range(n_realizations):
        d = 1 + k % 3
        spec = ModelSpec(d, TimeIntensity(0.0), 1.0, Box((3.0,) * d), speeds[k % len(speeds)])
        real = sampler.sample_realization(spec, rng)
        a, b = exposure.exposed_naive(real), exposure.exposed_indexed(real)
        mismatches += not np.array_equal(a.flags, b.flags)
    return Check("exposure_equivalence", mismatches == 0, f"{mismatches} of {n_realizations} differ")


def check_mean_consistency(replications=2000, seed=7):
    spec = ModelSpec(1, TimeIntensity.lebesgue_measure(), 1.0, Box((1.0,)), PointMass(1.0))
    res = mc.run_campaign(mc.CampaignConfig(spec, replications, seed=seed), resamples=0)
    z = res.points[0].mean_z
    return Check("mean_consistency", abs(z) <= 4.0, f"z = {z:+.2f}")


CHECKS = (
    check_big_lambda,
    check_Q,
    check_l_a_tau,
    check_ell_kernel,
    check_incomplete_gamma,
    check_mean_closed_form,
    check_steiner,
    check_bounds_ordered,
    check_exposure_equivalence,
    check_mean_consistency,
)


def run_checks(checks=CHECKS):
    out = []
    for fn in checks:
        try:
            out.append(fn())
        except Exception as exc:  # a crashing check is a failing check
            out.append(Check(fn.__name__.removeprefix("check_"), False, f"{type(exc).__name__}: {exc}"))
    return out
