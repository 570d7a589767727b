"""Observation windows: axis-aligned boxes and balls.

Both shapes have closed-form intrinsic volumes, so the Steiner polynomial
``vol(W + B_r) = sum_j kappa_j r^j V_{d-j}(W)`` is exact for them.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from .special import ball_volume


def elementary_symmetric(values):
    """Return ``[e_0, ..., e_n]`` of the given numbers."""
    e = [1.0] + [0.0] * len(values)
    for x in values:
        for j in range(len(e) - 1, 0, -1):
            e[j] += e[j - 1] * x
    return e


class WindowGeometry:
    """Common interface of the supported convex windows."""

    dim: int

    def volume(self):
        return self.intrinsic_volumes()[-1]

    def intrinsic_volumes(self):
        raise NotImplementedError

    def intrinsic_volume(self, j):
        return self.intrinsic_volumes()[j]

    def minkowski_volume(self, rho):
        """Volume of the parallel body ``W + B_rho`` via the Steiner formula."""
        if rho < 0:
            raise ValueError("rho must be nonnegative")
        iv = self.intrinsic_volumes()
        d = self.dim
        return sum(ball_volume(i) * rho**i * iv[d - i] for i in range(d + 1))

    def distance(self, points):
        """Euclidean distance from each row of ``points`` to the window."""
        raise NotImplementedError

    def contains(self, points):
        return self.distance(points) <= 0.0

    def bounding_box(self, rho=0.0):
        """``(lo, hi)`` corners of the tight box around ``W + B_rho``."""
        raise NotImplementedError

    def scaled(self, factor):
        raise NotImplementedError

    def diameter(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Box(WindowGeometry):
    """The box ``[0, l_1] x ... x [0, l_d]``."""

    sides: tuple

    def __post_init__(self):
        object.__setattr__(self, "sides", tuple(float(s) for s in self.sides))
        if not self.sides:
            raise ValueError("box needs at least one side length")
        if any(not s > 0 for s in self.sides):
            raise ValueError(f"box side lengths must be positive, got {self.sides}")

    @property
    def dim(self):
        return len(self.sides)

    def intrinsic_volumes(self):
        return elementary_symmetric(self.sides)

    def distance(self, points):
        points = np.atleast_2d(points)
        hi = np.asarray(self.sides)
        excess = np.maximum(np.maximum(-points, points - hi), 0.0)
        return np.sqrt(np.sum(excess * excess, axis=1))

    def bounding_box(self, rho=0.0):
        hi = np.asarray(self.sides)
        return np.full(self.dim, -rho), hi + rho

    def scaled(self, factor):
        return Box(tuple(s * factor for s in self.sides))

    def diameter(self):
        return float(np.sqrt(sum(s * s for s in self.sides)))


@dataclass(frozen=True)
class Ball(WindowGeometry):
    """Closed ball of the given radius centred at the origin."""

    radius: float
    dim: int = 1

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        if self.dim < 1:
            raise ValueError("dimension must be at least 1")

    def intrinsic_volumes(self):
        d, r = self.dim, self.radius
        kd = ball_volume(d)
        return [comb(d, j) * kd / ball_volume(d - j) * r**j for j in range(d + 1)]

    def distance(self, points):
        points = np.atleast_2d(points)
        return np.maximum(np.sqrt(np.sum(points * points, axis=1)) - self.radius, 0.0)

    def bounding_box(self, rho=0.0):
        r = self.radius + rho
        return np.full(self.dim, -r), np.full(self.dim, r)

    def scaled(self, factor):
        return Ball(self.radius * factor, self.dim)

    def diameter(self):
        return 2.0 * self.radius
