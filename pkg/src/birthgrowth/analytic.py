"""Closed forms and quadratures for the birth-growth model.

All functions are pure. Integrals against ``theta(dt) = t^tau dt`` go
through QUADPACK's algebraic-weight rule so that the ``t^tau`` endpoint
singularity (``tau < 0``) and the ``(t - s)^d`` kernels are integrated
exactly rather than resolved by subdivision.

An intensity multiplier ``s`` is handled by replacing ``theta`` with
``s * theta`` throughout, which is the same thing as multiplying the
Poisson intensity by ``s``.
"""

import math
import warnings
from math import comb

import numpy as np
from scipy import integrate

from .model import QuadratureSpec, TimeIntensity
from .special import ball_volume, beta, lower_incomplete_gamma


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, achieved):
        self.achieved = achieved
        super().__init__(f"{message} (achieved abs. error estimate {achieved:.3g})")


def _quad(f, lo, hi, q, weight=None, wvar=None, what="integral"):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        if weight is None:
            val, err = integrate.quad(f, lo, hi, epsabs=q.atol, epsrel=q.rtol, limit=q.max_depth)
        else:
            val, err = integrate.quad(
                f, lo, hi, weight=weight, wvar=wvar, epsabs=q.atol, epsrel=q.rtol, limit=q.max_depth
            )
    # QUADPACK warns on round-off even when the estimate is within a few
    # ulps of the target; only a real miss is an error.
    if caught and err > 100.0 * max(q.atol, q.rtol * abs(val)):
        raise QuadratureError(f"{what} on [{lo}, {hi}] did not converge", err)
    return val


def theta_integral(f, lo, hi, ti, q=None, kernel_power=0.0):
    """``int_lo^hi f(t) (hi - t)^kernel_power theta(dt)``."""
    q = q or QuadratureSpec()
    if hi <= lo:
        return 0.0
    tau = ti.tau
    if lo == 0.0:
        if tau == 0.0 and kernel_power == 0.0:
            return _quad(f, lo, hi, q)
        return _quad(f, lo, hi, q, weight="alg", wvar=(tau, kernel_power))
    if kernel_power == 0.0:
        return _quad(lambda t: f(t) * t**tau, lo, hi, q)
    return _quad(lambda t: f(t) * t**tau, lo, hi, q, weight="alg", wvar=(0.0, kernel_power))


# -- closed forms ------------------------------------------------------------


def lambda_constant(ti, d):
    """``kappa_d B(d+1, tau+1)``, so that ``Lambda(t) = const * t^(d+tau+1)``."""
    return ball_volume(d) * beta(d + 1.0, ti.tau + 1.0)


def big_lambda(ti, d, t):
    """``Lambda(t) = kappa_d int_0^t (t-s)^d theta(ds)``; vectorized in ``t``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("Lambda(t) needs t >= 0")
    out = lambda_constant(ti, d) * t ** (d + ti.tau + 1.0)
    return float(out) if out.ndim == 0 else out


def w_of_t(ti, d, nu_d, t):
    """Probability ``exp(-nu_d Lambda(t))`` that a seed born at ``t`` is exposed."""
    out = np.exp(-nu_d * np.asarray(big_lambda(ti, d, t)))
    return float(out) if np.ndim(out) == 0 else out


def l_a_tau(a, tau, d, x):
    k = d + tau + 1.0
    p = (tau + 1.0) / k
    if not (a > 0 and x > 0):
        raise ValueError("l_a_tau needs a > 0 and x > 0")
    return lower_incomplete_gamma(p, a**k * x) * x ** (-p)


def Q_integral(x, y, ti, d):
    """``int_0^inf t^x exp(-y Lambda(t)) theta(dt)`` in closed form."""
    if not (x >= 0 and y > 0):
        raise ValueError("Q_integral needs x >= 0 and y > 0")
    k = d + ti.tau + 1.0
    e = (x + ti.tau + 1.0) / k
    return (y * lambda_constant(ti, d)) ** (-e) / k * math.gamma(e)


def ell_kernel(t1, t2, ti, d, nu_2d):
    """``kappa_d^2 nu_2d int_0^{t1 ^ t2} (t1-s)^d (t2-s)^d theta(ds)``.

    Expanding ``(t2 - s)^d = sum_j C(d,j) (t2-t1)^(d-j) (t1-s)^j`` for
    ``t1 <= t2`` turns every term into a beta integral with nonnegative
    coefficients.
    """
    lo, hi = min(t1, t2), max(t1, t2)
    if lo < 0:
        raise ValueError("ell_kernel needs nonnegative times")
    if lo == 0:
        return 0.0
    tau = ti.tau
    gap = hi - lo
    total = 0.0
    for j in range(d + 1):
        total += comb(d, j) * gap ** (d - j) * lo ** (d + j + tau + 1.0) * beta(d + j + 1.0, tau + 1.0)
    return ball_volume(d) ** 2 * nu_2d * total


# -- window geometry ---------------------------------------------------------


def intrinsic_volumes(window):
    return list(window.intrinsic_volumes())


def minkowski_volume(window, rho):
    return window.minkowski_volume(rho)


def V_nu(window, nu, d):
    """Intrinsic volumes weighted by speed moments: ``sum_i V_{d-i}(W) nu_{d+i}``."""
    if nu.prob_zero() >= 1.0:
        raise ValueError("V_nu is undefined for a speed law concentrated at zero")
    iv = window.intrinsic_volumes()
    return sum(iv[d - i] * nu.moment(d + i) for i in range(d + 1))


def V_max(window):
    return max(window.intrinsic_volumes())


# -- moments of F --------------------------------------------------------------


def _rate(spec):
    # s * nu_d: exposure probability is exp(-rate * Lambda(t))
    return spec.intensity * spec.speed.moment(spec.d)


def mean_F(spec):
    """``E F = s vol(W) int_0^a w(t) theta(dt)`` by adaptive quadrature."""
    d, ti, q = spec.d, spec.time_intensity, spec.quadrature
    rate, c = _rate(spec), lambda_constant(ti, d)
    k = d + ti.tau + 1.0
    inner = theta_integral(lambda t: math.exp(-rate * c * t**k), 0.0, spec.horizon, ti, q)
    return spec.effective_window.volume() * spec.intensity * inner


def var_lower_bound(spec):
    """Lower variance bound; may be <= 0, in which case it is vacuous.

    ``vol(W) [ int_0^a w dtheta - 2 kappa_d nu_d int_0^a int_0^t (t-s)^d w(s) w(t) theta(ds) theta(dt) ]``
    """
    d, ti, q = spec.d, spec.time_intensity, spec.quadrature
    s, nu_d = spec.intensity, spec.speed.moment(spec.d)
    rate, c = s * nu_d, lambda_constant(ti, d)
    k = d + ti.tau + 1.0
    inner_q = q.tightened()

    def w(t):
        return math.exp(-rate * c * t**k)

    def shaded(t):
        # int_0^t (t-u)^d w(u) theta(du)
        return theta_integral(w, 0.0, t, ti, inner_q, kernel_power=d)

    first = theta_integral(w, 0.0, spec.horizon, ti, q)
    second = theta_integral(lambda t: w(t) * shaded(t), 0.0, spec.horizon, ti, q)
    bracket = s * first - 2.0 * ball_volume(d) * nu_d * s * s * second
    return spec.effective_window.volume() * bracket


def var_upper_bound(spec):
    """Upper variance bound from the Poincare inequality.

    The triple integral over ``s <= t1 ^ t2`` is folded into
    ``int_0^a g(s)^2 theta(ds)`` with ``g(s) = int_s^a (t-s)^d w(t)^(1/2) theta(dt)``.
    """
    d, ti, q = spec.d, spec.time_intensity, spec.quadrature
    s = spec.intensity
    nu_d, nu_2d = spec.speed.moment(d), spec.speed.moment(2 * d)
    rate, c = s * nu_d, lambda_constant(ti, d)
    k = d + ti.tau + 1.0
    a = spec.horizon
    inner_q = q.tightened()
    tau = ti.tau

    def sqrt_w(t):
        return math.exp(-0.5 * rate * c * t**k)

    def g(u):
        if u <= 0.0:
            return _quad(sqrt_w, 0.0, a, inner_q, weight="alg", wvar=(d + tau, 0.0))
        # (t - u)^d is the weight at the left endpoint
        return _quad(lambda t: sqrt_w(t) * t**tau, u, a, inner_q, weight="alg", wvar=(float(d), 0.0))

    first = theta_integral(sqrt_w, 0.0, a, ti, q)
    second = theta_integral(lambda u: g(u) ** 2, 0.0, a, ti, q)
    bracket = 2.0 * s * first + ball_volume(d) ** 2 * nu_2d * s**3 * second
    return spec.effective_window.volume() * bracket


def lower_bound_guaranteed(spec):
    """True when the lower variance bound is known to be strictly positive."""
    return spec.time_intensity.tau <= spec.d - 1


def variance_scale(spec):
    """``vol(W) s l_{a,tau}(s nu_d)``: the order of ``Var F`` for power-law ``theta``."""
    s = spec.intensity
    return (
        spec.effective_window.volume()
        * s
        * l_a_tau(spec.horizon, spec.tau, spec.d, s * spec.speed.moment(spec.d))
    )


def influence_mass(spec, t):
    """``mu(L_{x,t}) = s nu_d Lambda(t)`` for any location ``x``."""
    if not 0.0 <= t:
        raise ValueError("birth time must be nonnegative")
    return _rate(spec) * big_lambda(spec.time_intensity, spec.d, t)


def clt_rate_exponent(spec, mode):
    """Exponent of the distance bound: ``-1/2`` in window size, ``-d/(2(d+tau+1))`` in intensity."""
    if mode == "window":
        return -0.5
    if mode == "intensity":
        return -spec.d / (2.0 * (spec.d + spec.tau + 1.0))
    raise ValueError(f"unknown scaling mode {mode!r}")


__all__ = [
    "QuadratureError",
    "TimeIntensity",
    "big_lambda",
    "w_of_t",
    "l_a_tau",
    "Q_integral",
    "ell_kernel",
    "intrinsic_volumes",
    "minkowski_volume",
    "V_nu",
    "mean_F",
    "var_lower_bound",
    "var_upper_bound",
    "influence_mass",
]
