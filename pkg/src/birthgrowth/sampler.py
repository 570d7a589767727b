"""Exact sampling of the Poisson process on its relevance region.

A seed ``(y, t, v)`` can shade some seed of ``W`` born by ``a`` only if
``t <= a`` and ``dist(y, W) <= v (a - t)``. Points outside that region
never change an exposure flag, so sampling the restriction is enough.

Its ``mu``-mass splits by the Steiner formula,

    vol(W + B_r) = sum_i kappa_i V_{d-i}(W) r^i,   r = v (a - t),

into ``d + 1`` components. Component ``i`` has time density proportional
to ``(a - t)^i t^tau`` (a scaled beta law) and speed law ``v^i nu(dv)/nu_i``.
Given ``(t, v)`` the location is uniform on ``W + B_r`` whatever the
component, which is done by rejection from the bounding box.
"""

from dataclasses import dataclass

import numpy as np

from . import analytic
from .model import Seed, size_biased_sample
from .special import ball_volume, beta

MAX_REJECTION_ROUNDS = 10_000


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Realization:
    """Seeds of one sample, stored column-wise.

    ``locations`` has shape ``(n, d)``; row ``k`` is the seed with id ``ids[k]``.
    """

    locations: np.ndarray
    birth_times: np.ndarray
    speeds: np.ndarray
    ids: np.ndarray
    spec: object = None
    region_mass: float = float("nan")
    seed: int = None
    substream: tuple = ()

    def __len__(self):
        return len(self.birth_times)

    @property
    def dim(self):
        return self.locations.shape[1]

    def seeds(self):
        for k in range(len(self)):
            yield Seed(tuple(self.locations[k]), float(self.birth_times[k]), float(self.speeds[k]), int(self.ids[k]))

    @classmethod
    def from_seeds(cls, seeds, spec=None, dim=None):
        seeds = list(seeds)
        if dim is None:
            dim = len(seeds[0].location) if seeds else (spec.d if spec is not None else 1)
        loc = np.array([s.location for s in seeds], dtype=float).reshape(len(seeds), dim)
        return cls(
            locations=loc,
            birth_times=np.array([s.birth_time for s in seeds], dtype=float),
            speeds=np.array([s.speed for s in seeds], dtype=float),
            ids=np.array([s.id for s in seeds], dtype=np.int64),
            spec=spec,
        )

    @classmethod
    def from_arrays(cls, locations, birth_times, speeds, spec=None):
        t = np.asarray(birth_times, dtype=float)
        loc = np.asarray(locations, dtype=float)
        if loc.ndim != 2:
            loc = loc.reshape(len(t), -1)
        return cls(loc, t, np.asarray(speeds, dtype=float), np.arange(len(t), dtype=np.int64), spec)


def component_weights(spec):
    """Unnormalized masses of the Steiner components, one per ``i = 0..d``."""
    d, tau, a = spec.d, spec.tau, spec.horizon
    iv = spec.effective_window.intrinsic_volumes()
    return np.array(
        [
            spec.intensity
            * ball_volume(i)
            * iv[d - i]
            * spec.speed.moment(i)
            * a ** (i + tau + 1.0)
            * beta(i + 1.0, tau + 1.0)
            for i in range(d + 1)
        ]
    )


def region_mass(spec):
    """``mu`` of the relevance region (intensity and window scaling included)."""
    return float(component_weights(spec).sum())


def uniform_in_parallel_body(window, radii, rng):
    """One uniform point of ``W + B_r`` per entry of ``radii``."""
    radii = np.asarray(radii, dtype=float)
    n, d = len(radii), window.dim
    out = np.empty((n, d))
    todo = np.arange(n)
    for _ in range(MAX_REJECTION_ROUNDS):
        if len(todo) == 0:
            return out
        r = radii[todo]
        lo, hi = window.bounding_box(0.0)
        lo = lo[None, :] - r[:, None]
        hi = hi[None, :] + r[:, None]
        cand = lo + (hi - lo) * rng.random((len(todo), d))
        ok = window.distance(cand) <= r
        out[todo[ok]] = cand[ok]
        todo = todo[~ok]
    if len(todo):
        raise SamplingError(f"rejection sampling exhausted {MAX_REJECTION_ROUNDS} rounds")
    return out


def sample_realization(spec, rng, seed=None, substream=()):
    """Draw the process restricted to the relevance region of ``spec``."""
    weights = component_weights(spec)
    mass = float(weights.sum())
    n = int(rng.poisson(mass))
    d, tau, a = spec.d, spec.tau, spec.horizon
    comp = rng.choice(d + 1, size=n, p=weights / mass) if n else np.empty(0, dtype=int)
    times = np.empty(n)
    speeds = np.empty(n)
    for i in range(d + 1):
        idx = np.flatnonzero(comp == i)
        if len(idx) == 0:
            continue
        times[idx] = a * rng.beta(tau + 1.0, i + 1.0, size=len(idx))
        speeds[idx] = size_biased_sample(spec.speed, i, rng, size=len(idx))
    locations = uniform_in_parallel_body(spec.effective_window, speeds * (a - times), rng)
    return Realization(
        locations=locations,
        birth_times=times,
        speeds=speeds,
        ids=np.arange(n, dtype=np.int64),
        spec=spec,
        region_mass=mass,
        seed=seed,
        substream=tuple(substream),
    )


def in_relevance_region(spec, locations, birth_times, speeds):
    locations = np.atleast_2d(locations)
    reach = np.asarray(speeds) * (spec.horizon - np.asarray(birth_times))
    return (np.asarray(birth_times) <= spec.horizon) & (spec.effective_window.distance(locations) <= reach)


def mass_of_influence_set(spec, t):
    """``mu(L_{x,t}) = s nu_d Lambda(t)``, independent of ``x``."""
    if not 0.0 <= t <= spec.horizon:
        raise ValueError(f"t must lie in [0, a], got {t}")
    return analytic.influence_mass(spec, t)


def count_in_influence_set(realization, x, t):
    """Number of sampled seeds ``(y, t_y, v_y)`` with ``|x - y| <= v_y (t - t_y)``."""
    x = np.asarray(x, dtype=float)
    diff = realization.locations - x[None, :]
    dist = np.sqrt(np.sum(diff * diff, axis=1))
    tb = realization.birth_times
    return int(np.count_nonzero((tb <= t) & (dist <= realization.speeds * (t - tb))))


def ball_intersection_integral_mc(d, r1, r2, n_samples, rng, chunk=1_000_000):
    """Monte Carlo estimate of ``int vol(B_r1(0) & B_r2(x)) dx``.

    ``x`` is uniform on the cube of half-width ``r1 + r2`` (outside of which
    the integrand vanishes) and ``y`` uniform on the cube of half-width
    ``r1``; the estimate is the product of both cube volumes and the hit rate.
    """
    hx, hy = r1 + r2, r1
    hits = 0
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        x = rng.uniform(-hx, hx, size=(m, d))
        y = rng.uniform(-hy, hy, size=(m, d))
        in1 = np.sum(y * y, axis=1) <= r1 * r1
        in2 = np.sum((y - x) ** 2, axis=1) <= r2 * r2
        hits += int(np.count_nonzero(in1 & in2))
        done += m
    p = hits / n_samples
    scale = (2 * hx) ** d * (2 * hy) ** d
    return scale * p, scale * np.sqrt(p * (1 - p) / n_samples)
