"""Monte Carlo campaigns for ``F`` and its distance to the normal law."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import special, stats

from . import analytic
from .exposure import ALGORITHMS
from .rng import check_seed, substream
from .sampler import sample_realization

SCALING_MODES = ("none", "window", "intensity")
ALGORITHM_CHOICES = ("naive", "indexed", "both")
BOOTSTRAP_RESAMPLES = 200
BOOTSTRAP_KEY = 2**32 - 1


class DegenerateSample(ValueError):
    """Distances to the normal law are undefined for a constant sample."""


class AlgorithmMismatch(RuntimeError):
    pass


# -- distances ---------------------------------------------------------------


def standardize(samples):
    x = np.asarray(samples, dtype=float)
    if len(x) < 2:
        raise DegenerateSample("need at least two samples")
    sd = x.std(ddof=1)
    if not sd > 0:
        raise DegenerateSample("sample has zero variance")
    return (x - x.mean()) / sd


def kolmogorov_to_gaussian(samples):
    """``sup_t |F_m(t) - Phi(t)|`` evaluated at the jumps of the empirical CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    m = len(x)
    if m < 2 or x[0] == x[-1]:
        raise DegenerateSample("Kolmogorov distance needs a non-constant sample")
    phi = special.ndtr(x)
    i = np.arange(1, m + 1)
    return float(max(np.max(np.abs(i / m - phi)), np.max(np.abs((i - 1) / m - phi))))


def _int_cdf(t):
    # antiderivative of Phi
    return t * special.ndtr(t) + np.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)


def wasserstein_to_gaussian(samples):
    """``int |F_m(t) - Phi(t)| dt``, integrated exactly piece by piece.

    On each gap between order statistics the empirical CDF is a constant
    ``c``; the gap is split where ``Phi = c`` and both halves integrate in
    closed form through ``int Phi = t Phi(t) + phi(t)``.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    m = len(x)
    if m < 1:
        raise DegenerateSample("empty sample")
    left = float(_int_cdf(x[0]))
    right = float(np.exp(-0.5 * x[-1] ** 2) / math.sqrt(2 * math.pi) - x[-1] * special.ndtr(-x[-1]))
    if m == 1:
        return left + right
    u, v = x[:-1], x[1:]
    c = np.arange(1, m) / m
    mid = np.clip(special.ndtri(c), u, v)
    Au, Av, Am = _int_cdf(u), _int_cdf(v), _int_cdf(mid)
    below = c * (mid - u) - (Am - Au)
    above = (Av - Am) - c * (v - mid)
    return left + float(np.sum(below + above)) + right


# -- rate fits ---------------------------------------------------------------


class RateFit(NamedTuple):
    exponent: float
    intercept: float
    residual: float


def fit_rate(scales, distances):
    """Least-squares slope of ``log distance`` against ``log scale``."""
    s = np.asarray(scales, dtype=float)
    y = np.asarray(distances, dtype=float)
    if len(s) != len(y) or len(s) < 4:
        raise ValueError("fit_rate needs at least four (scale, distance) pairs")
    if np.any(y <= 0) or np.any(s <= 0):
        raise ValueError("fit_rate needs positive scales and distances")
    ls, ly = np.log(s), np.log(y)
    slope, intercept = np.polyfit(ls, ly, 1)
    res = ly - (slope * ls + intercept)
    return RateFit(float(slope), float(intercept), float(np.sum(res * res)))


# -- campaigns ---------------------------------------------------------------


@dataclass(frozen=True)
class CampaignConfig:
    spec: object
    replications: int = 1000
    scaling: str = "none"
    scales: tuple = ()
    seed: int = 0
    algorithm: str = "indexed"

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        problems = []
        if self.replications < 100:
            problems.append(f"replications must be at least 100 (got {self.replications})")
        if self.scaling not in SCALING_MODES:
            problems.append(f"scaling must be one of {SCALING_MODES} (got {self.scaling!r})")
        elif self.scaling == "none" and self.scales:
            problems.append("scales given but scaling mode is 'none'")
        elif self.scaling != "none":
            if not self.scales:
                problems.append(f"scaling mode {self.scaling!r} needs a list of scales")
            if any(b <= a for a, b in zip(self.scales, self.scales[1:])):
                problems.append("scales must be strictly increasing")
            if any(s < 1 for s in self.scales):
                problems.append("scales must be at least 1")
        if self.algorithm not in ALGORITHM_CHOICES:
            problems.append(f"algorithm must be one of {ALGORITHM_CHOICES} (got {self.algorithm!r})")
        try:
            check_seed(self.seed)
        except ValueError as exc:
            problems.append(str(exc))
        if problems:
            raise ValueError("; ".join(problems))

    def scale_points(self):
        if self.scaling == "none":
            return [(1.0, self.spec)]
        if self.scaling == "window":
            return [(s, self.spec.with_scale(window_scale=s)) for s in self.scales]
        return [(s, self.spec.with_scale(intensity=s)) for s in self.scales]


@dataclass
class ScalePoint:
    scale: float
    spec: object
    samples: np.ndarray
    mean: float
    variance: float
    d_K: float
    d_W: float
    degenerate: bool
    analytic_mean: float
    var_lower: float
    var_upper: float
    d_K_se: float = float("nan")
    d_K_boot: np.ndarray = field(default=None, repr=False)

    @property
    def standardized(self):
        return standardize(self.samples)

    @property
    def standard_error(self):
        return math.sqrt(self.variance / len(self.samples))

    @property
    def mean_z(self):
        se = self.standard_error
        return (self.mean - self.analytic_mean) / se if se > 0 else float("nan")


@dataclass
class CampaignResult:
    config: CampaignConfig
    points: list
    d_K_fit: RateFit = None
    d_W_fit: RateFit = None
    d_K_exponent_se: float = float("nan")
    target_exponent: float = float("nan")


def replicate_F(spec, seed, scale_index, replication, algorithm="indexed"):
    rng = substream(seed, scale_index, replication)
    real = sample_realization(spec, rng, seed=seed, substream=(scale_index, replication))
    if algorithm == "both":
        a = ALGORITHMS["naive"](real, spec)
        b = ALGORITHMS["indexed"](real, spec)
        if not np.array_equal(a.flags, b.flags):
            raise AlgorithmMismatch(f"naive and indexed disagree at scale {scale_index}, replication {replication}")
        return a.F
    return ALGORITHMS[algorithm](real, spec).F


def _bootstrap_dk(samples, rng, resamples):
    out = np.full(resamples, np.nan)
    m = len(samples)
    for b in range(resamples):
        x = samples[rng.integers(0, m, m)]
        try:
            out[b] = kolmogorov_to_gaussian(standardize(x))
        except DegenerateSample:
            pass
    return out


def _summarize(scale, spec, samples, boot_rng, resamples):
    mean = float(samples.mean())
    var = float(samples.var(ddof=1))
    degenerate = not var > 0
    if degenerate:
        dk = dw = float("nan")
        boot = np.full(resamples, np.nan)
    else:
        z = standardize(samples)
        dk = kolmogorov_to_gaussian(z)
        dw = wasserstein_to_gaussian(z)
        boot = _bootstrap_dk(samples, boot_rng, resamples)
    return ScalePoint(
        scale=scale,
        spec=spec,
        samples=samples,
        mean=mean,
        variance=var,
        d_K=dk,
        d_W=dw,
        degenerate=degenerate,
        analytic_mean=analytic.mean_F(spec),
        var_lower=analytic.var_lower_bound(spec),
        var_upper=analytic.var_upper_bound(spec),
        d_K_se=float(np.nanstd(boot, ddof=1)) if np.any(np.isfinite(boot)) else float("nan"),
        d_K_boot=boot,
    )


def run_campaign(config, threads=1, resamples=BOOTSTRAP_RESAMPLES):
    """Run every replication of every scale point.

    Replication ``r`` at scale index ``k`` draws from substream
    ``(seed, k, r)`` and results are collected in index order, so the
    output is the same for any ``threads``.
    """
    points = []
    m = config.replications
    threads = max(1, int(threads or 1))
    for k, (scale, spec) in enumerate(config.scale_points()):
        def one(r, spec=spec, k=k):
            return replicate_F(spec, config.seed, k, r, config.algorithm)

        if threads == 1:
            values = [one(r) for r in range(m)]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                values = list(pool.map(one, range(m), chunksize=max(1, m // (4 * threads))))
        samples = np.asarray(values, dtype=np.int64)
        points.append(_summarize(scale, spec, samples, substream(config.seed, BOOTSTRAP_KEY, k), resamples))

    result = CampaignResult(config=config, points=points)
    if config.scaling != "none":
        result.target_exponent = analytic.clt_rate_exponent(config.spec, config.scaling)
    usable = [p for p in points if not p.degenerate]
    if len(points) >= 4 and len(usable) == len(points):
        scales = [p.scale for p in points]
        result.d_K_fit = fit_rate(scales, [p.d_K for p in points])
        result.d_W_fit = fit_rate(scales, [p.d_W for p in points])
        boot = np.array([p.d_K_boot for p in points])
        slopes = [
            fit_rate(scales, boot[:, b]).exponent
            for b in range(boot.shape[1])
            if np.all(np.isfinite(boot[:, b])) and np.all(boot[:, b] > 0)
        ]
        if len(slopes) > 1:
            result.d_K_exponent_se = float(np.std(slopes, ddof=1))
    return result


# -- checks on campaign output -----------------------------------------------


@dataclass(frozen=True)
class BracketReport:
    sample_variance: float
    ci_low: float
    ci_high: float
    lower: float
    upper: float
    lower_vacuous: bool
    intersects: bool
    variance_ratio: float
    low_n_caveat: bool


def variance_bracket_check(point, spec=None, level=0.99):
    """Does the chi-square CI of the sample variance meet the analytic bracket?

    A nonpositive lower bound is vacuous and only the upper one is checked.
    ``variance_ratio`` is ``Var F / (vol(W) s l_{a,tau}(s nu_d))``.
    """
    spec = spec if spec is not None else point.spec
    samples = np.asarray(point.samples)
    m = len(samples)
    if m < 2:
        raise ValueError(f"variance bracket check needs at least two replications (got {m})")
    var = float(samples.var(ddof=1))
    alpha = 1.0 - level
    ci_low = (m - 1) * var / stats.chi2.ppf(1 - alpha / 2, m - 1)
    ci_high = (m - 1) * var / stats.chi2.ppf(alpha / 2, m - 1)
    lower, upper = point.var_lower, point.var_upper
    vacuous = not lower > 0
    if vacuous:
        intersects = ci_low <= upper
    else:
        intersects = ci_low <= upper and ci_high >= lower
    return BracketReport(
        sample_variance=var,
        ci_low=float(ci_low),
        ci_high=float(ci_high),
        lower=lower,
        upper=upper,
        lower_vacuous=vacuous,
        intersects=bool(intersects),
        variance_ratio=var / analytic.variance_scale(spec),
        low_n_caveat=m < 30 or point.mean < 5.0,
    )


def rate_monotone(result, factor=2.0):
    """``d_K`` never rises by more than ``factor`` bootstrap SEs between scale points."""
    pts = result.points
    for p, q in zip(pts, pts[1:]):
        slack = factor * math.hypot(p.d_K_se, q.d_K_se)
        if q.d_K - p.d_K > slack:
            return False
    return True


def lattice_floor_holds(point, constant=0.05):
    """Integer-valued ``F`` cannot get closer to the normal law than ``c / sd``."""
    return point.d_K >= constant / math.sqrt(point.variance)
