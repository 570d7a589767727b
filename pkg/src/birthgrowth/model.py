"""Model description: seeds, time intensity, speed laws and the full spec."""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import WindowGeometry


class InfiniteMoment(ArithmeticError):
    """A requested speed moment is not finite in float64."""


class ValidationFailed(ValueError):
    """Raised with every violated model assumption at once."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class Seed:
    location: tuple
    birth_time: float
    speed: float
    id: int


@dataclass(frozen=True)
class TimeIntensity:
    """Birth-time measure ``theta(dt) = t^tau dt``.

    ``lebesgue=True`` is the ``tau = 0`` case, kept as its own kind so it
    round-trips through configs unchanged.
    """

    tau: float = 0.0
    lebesgue: bool = False

    @classmethod
    def power_law(cls, tau):
        return cls(tau=float(tau))

    @classmethod
    def lebesgue_measure(cls):
        return cls(tau=0.0, lebesgue=True)

    @property
    def kind(self):
        return "lebesgue" if self.lebesgue else "power_law"

    def density(self, t):
        if self.lebesgue:
            return np.ones_like(np.asarray(t, dtype=float))
        return np.asarray(t, dtype=float) ** self.tau

    def problems(self):
        if self.lebesgue and self.tau != 0.0:
            return ["Lebesgue time intensity must have tau = 0"]
        if not self.tau > -1.0:
            return [f"tau must exceed -1 (got {self.tau})"]
        return []


@dataclass(frozen=True)
class QuadratureSpec:
    atol: float = 1e-12
    rtol: float = 1e-10
    max_depth: int = 200

    def __post_init__(self):
        if not (self.atol > 0 and self.rtol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_depth < 10:
            raise ValueError("quadrature max_depth must be at least 10")

    def tightened(self, factor=10.0):
        return replace(self, atol=self.atol / factor, rtol=self.rtol / factor)


# -- speed distributions -----------------------------------------------------


class SpeedDistribution:
    """Law of the growth speed with exact moments and size-biased sampling.

    The size-biased law of order ``i`` has density ``v^i nu(dv) / nu_i``;
    order 0 is the law itself.
    """

    kind = ""

    def moment(self, u):
        raise NotImplementedError

    def prob_zero(self):
        return 0.0

    def parameters(self):
        raise NotImplementedError

    def size_biased_sample(self, order, rng, size=None):
        raise NotImplementedError

    def sample(self, rng, size=None):
        return self.size_biased_sample(0, rng, size)

    def problems(self):
        return []

    def _check_moment(self, u, value):
        if u < 0:
            raise ValueError(f"moment order must be nonnegative, got {u}")
        if not math.isfinite(value):
            raise InfiniteMoment(f"moment of order {u} of {self!r} is not finite")
        return value


@dataclass(frozen=True)
class PointMass(SpeedDistribution):
    value: float
    kind = "point"

    def moment(self, u):
        if u == 0:
            return 1.0
        try:
            m = float(self.value) ** u
        except OverflowError:
            m = math.inf
        return self._check_moment(u, m)

    def prob_zero(self):
        return 1.0 if self.value == 0 else 0.0

    def parameters(self):
        return {"value": self.value}

    def size_biased_sample(self, order, rng, size=None):
        if size is None:
            return float(self.value)
        return np.full(size, float(self.value))

    def problems(self):
        if self.value < 0:
            return [f"point-mass speed must be nonnegative (got {self.value})"]
        return []


@dataclass(frozen=True)
class FiniteDiscrete(SpeedDistribution):
    values: tuple
    probabilities: tuple
    kind = "discrete"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "probabilities", tuple(float(p) for p in self.probabilities))
        if len(self.values) != len(self.probabilities) or not self.values:
            raise ValueError("values and probabilities must be nonempty and of equal length")

    def moment(self, u):
        if u == 0:
            return float(sum(self.probabilities))
        m = sum(p * v**u for v, p in zip(self.values, self.probabilities))
        return self._check_moment(u, m)

    def prob_zero(self):
        return sum(p for v, p in zip(self.values, self.probabilities) if v == 0)

    def parameters(self):
        return {"values": list(self.values), "probabilities": list(self.probabilities)}

    def size_biased_sample(self, order, rng, size=None):
        v = np.asarray(self.values)
        w = np.asarray(self.probabilities) * (v**order if order else 1.0)
        return rng.choice(v, size=size, p=w / w.sum())

    def problems(self):
        out = []
        if any(v < 0 for v in self.values):
            out.append("discrete speeds must be nonnegative")
        if any(p < 0 for p in self.probabilities):
            out.append("discrete probabilities must be nonnegative")
        if abs(sum(self.probabilities) - 1.0) > 1e-12:
            out.append(f"discrete probabilities must sum to 1 (got {sum(self.probabilities)})")
        return out


@dataclass(frozen=True)
class Uniform(SpeedDistribution):
    """Uniform law on ``(0, upper]``."""

    upper: float
    kind = "uniform"

    def moment(self, u):
        return self._check_moment(u, self.upper**u / (u + 1.0))

    def parameters(self):
        return {"upper": self.upper}

    def size_biased_sample(self, order, rng, size=None):
        # density proportional to v^order on (0, upper]
        u = 1.0 - rng.random(size)
        return self.upper * u ** (1.0 / (order + 1.0))

    def problems(self):
        return [] if self.upper > 0 else [f"uniform upper bound must be positive (got {self.upper})"]


@dataclass(frozen=True)
class TruncatedPareto(SpeedDistribution):
    """Density proportional to ``v^(-alpha-1)`` on ``[scale, cap]``."""

    alpha: float
    scale: float
    cap: float
    kind = "pareto"

    def _power_integral(self, beta):
        # int_scale^cap v^(beta-1) dv
        lo, hi = self.scale, self.cap
        if beta == 0:
            return math.log(hi / lo)
        return (hi**beta - lo**beta) / beta

    def moment(self, u):
        if u == 0:
            return 1.0
        try:
            m = self._power_integral(u - self.alpha) / self._power_integral(-self.alpha)
        except OverflowError:
            m = math.inf
        return self._check_moment(u, m)

    def parameters(self):
        return {"alpha": self.alpha, "scale": self.scale, "cap": self.cap}

    def size_biased_sample(self, order, rng, size=None):
        beta = order - self.alpha
        lo, hi = self.scale, self.cap
        u = rng.random(size)
        if beta == 0:
            return lo * (hi / lo) ** u
        return (lo**beta + u * (hi**beta - lo**beta)) ** (1.0 / beta)

    def problems(self):
        out = []
        if not self.alpha > 0:
            out.append(f"Pareto exponent must be positive (got {self.alpha})")
        if not 0 < self.scale < self.cap:
            out.append(f"Pareto support needs 0 < scale < cap (got {self.scale}, {self.cap})")
        return out


@dataclass(frozen=True)
class LogNormal(SpeedDistribution):
    """``exp(N(mu, sigma^2))``; the order-i size bias shifts ``mu`` by ``i sigma^2``."""

    mu: float
    sigma: float
    kind = "lognormal"

    def moment(self, u):
        try:
            m = math.exp(u * self.mu + 0.5 * u * u * self.sigma**2)
        except OverflowError:
            m = math.inf
        return self._check_moment(u, m)

    def parameters(self):
        return {"mu": self.mu, "sigma": self.sigma}

    def size_biased_sample(self, order, rng, size=None):
        return rng.lognormal(self.mu + order * self.sigma**2, self.sigma, size)

    def problems(self):
        return [] if self.sigma > 0 else [f"lognormal sigma must be positive (got {self.sigma})"]


SPEED_KINDS = {
    cls.kind: cls for cls in (PointMass, FiniteDiscrete, Uniform, TruncatedPareto, LogNormal)
}


def moment(nu, u):
    """``nu_u = int v^u nu(dv)``; raises :class:`InfiniteMoment` if not finite."""
    return nu.moment(u)


def size_biased_sample(nu, order, rng, size=None):
    m = nu.moment(order)
    if not m > 0:
        raise InfiniteMoment(f"size-biased law of order {order} is undefined: nu_{order} = {m}")
    return nu.size_biased_sample(order, rng, size)


# -- full specification ------------------------------------------------------


@dataclass(frozen=True)
class ModelSpec:
    """Everything that determines the law of ``F``.

    ``window_scale`` dilates the window to ``n^(1/d) W`` and
    ``intensity`` multiplies the whole intensity measure.
    """

    d: int
    time_intensity: TimeIntensity
    horizon: float
    window: WindowGeometry
    speed: SpeedDistribution
    intensity: float = 1.0
    window_scale: float = 1.0
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValidationFailed(problems)

    def violations(self):
        out = []
        if not (isinstance(self.d, (int, np.integer)) and self.d >= 1):
            out.append(f"dimension must be a positive integer (got {self.d})")
        out.extend(self.time_intensity.problems())
        if not self.horizon > 0:
            out.append(f"horizon a must be positive (got {self.horizon})")
        if not isinstance(self.window, WindowGeometry):
            out.append("window must be a Box or Ball")
        elif isinstance(self.d, (int, np.integer)) and self.window.dim != self.d:
            out.append(f"window dimension {self.window.dim} does not match d = {self.d}")
        speed_problems = self.speed.problems()
        out.extend(speed_problems)
        if not speed_problems:
            if self.speed.prob_zero() >= 1.0:
                out.append("nu({0}) < 1 required: the speed law is a point mass at zero")
            elif isinstance(self.d, (int, np.integer)) and self.d >= 1:
                try:
                    self.speed.moment(7 * self.d)
                except InfiniteMoment:
                    out.append(f"speed moment of order 7d = {7 * self.d} must be finite")
        if not self.intensity >= 1.0:
            out.append(f"intensity multiplier s must be at least 1 (got {self.intensity})")
        if not self.window_scale >= 1.0:
            out.append(f"window scale n must be at least 1 (got {self.window_scale})")
        return out

    @property
    def tau(self):
        return self.time_intensity.tau

    @property
    def effective_window(self):
        """The observation window after dilation by ``n^(1/d)``."""
        if self.window_scale == 1.0:
            return self.window
        return self.window.scaled(self.window_scale ** (1.0 / self.d))

    def with_scale(self, window_scale=None, intensity=None):
        kw = {}
        if window_scale is not None:
            kw["window_scale"] = float(window_scale)
        if intensity is not None:
            kw["intensity"] = float(intensity)
        return replace(self, **kw)


def validate(spec):
    """Re-run every assumption check on ``spec``; return it or raise."""
    problems = spec.violations()
    if problems:
        raise ValidationFailed(problems)
    return spec
