"""Special functions used by the closed forms.

Only the lower incomplete gamma function needs a hand-rolled
implementation; complete gamma and beta come from :mod:`math`.
"""

import math

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


def ball_volume(d):
    """Volume of the unit ball in ``R^d`` (``d = 0`` gives 1)."""
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def beta(x, y):
    return math.exp(math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y))


def _series(p, z):
    # gamma(p, z) = z^p e^-z sum_n z^n / (p (p+1) ... (p+n))
    term = 1.0 / p
    total = term
    ap = p
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= z / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    else:
        raise ArithmeticError(f"incomplete gamma series did not converge (p={p}, z={z})")
    return total * math.exp(p * math.log(z) - z)


def _upper_cf(p, z):
    # Lentz evaluation of the continued fraction for Gamma(p, z) e^z z^-p.
    b = z + 1.0 - p
    c = 1.0 / _TINY
    dd = 1.0 / b
    h = dd
    for i in range(1, _MAX_ITER):
        an = -i * (i - p)
        b += 2.0
        dd = an * dd + b
        if abs(dd) < _TINY:
            dd = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        dd = 1.0 / dd
        delta = dd * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    else:
        raise ArithmeticError(f"incomplete gamma continued fraction did not converge (p={p}, z={z})")
    # regularized upper tail Q(p, z)
    return math.exp(p * math.log(z) - z - math.lgamma(p)) * h


def lower_incomplete_gamma(p, z):
    """Unregularized lower incomplete gamma ``int_0^z t^(p-1) e^-t dt``.

    Uses the power series below ``z = p + 1`` and the continued fraction
    for the upper tail above it. ``z = inf`` returns ``Gamma(p)``.
    """
    p = float(p)
    z = float(z)
    if not p > 0.0:
        raise ValueError(f"lower_incomplete_gamma requires p > 0, got {p}")
    if not z >= 0.0:
        raise ValueError(f"lower_incomplete_gamma requires z >= 0, got {z}")
    if z == 0.0:
        return 0.0
    if math.isinf(z):
        return math.gamma(p)
    if z < p + 1.0:
        return _series(p, z)
    return math.gamma(p) * (1.0 - _upper_cf(p, z))
