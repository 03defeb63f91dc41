"""Closed-form predictions for the ECD measure in an isotropic quadratic basin.

All functions are pure; the Monte-Carlo estimators take an explicit
:class:`~ecdsep.core.RngStream`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ecdsep.core import DomainError, RngStream


@dataclass(frozen=True)
class BasinSpec:
    """Isotropic basin ``F = f2 |theta|^2 + f_min`` seen by ECD with offset ``f0``.

    Attributes:
        n: Dimension.
        f2: Curvature, positive.
        f_min: Value at the bottom of the basin.
        f0: Loss offset, at most ``f_min``.
        eta: Concentration exponent, at least 1.
        energy: Conserved energy E.
        f_init: Objective at initialization (used by :func:`nu_star`).
    """

    n: int
    f2: float
    f_min: float
    f0: float = 0.0
    eta: float = 1.0
    energy: float = 1.0
    f_init: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("n must be positive")
        if not self.f2 > 0:
            raise DomainError("f2 must be positive")
        if not self.eta >= 1:
            raise DomainError("eta must be >= 1")
        if not self.energy > 0:
            raise DomainError("energy must be positive")
        if self.f_min < self.f0:
            raise DomainError("f_min must not lie below f0")

    @property
    def gap(self) -> float:
        return self.f_min - self.f0


def log_measure_density(v: float, n: int, energy: float) -> float:
    """Natural log of :func:`measure_density`, safe for large ``n``."""
    if not v > 0:
        raise DomainError("V must be positive")
    if not energy > 0:
        raise DomainError("energy must be positive")
    if n < 1:
        raise DomainError("n must be positive")
    return (
        0.5 * (n - 2) * math.log(energy)
        + 0.5 * n * math.log(math.pi)
        - math.lgamma(0.5 * n)
        - 0.5 * n * math.log(v)
    )


def measure_density(v: float, n: int, energy: float) -> float:
    """Microcanonical weight of a point with potential ``v``.

    E^((n-2)/2) * pi^(n/2) / Gamma(n/2) * V^(-n/2), obtained by integrating
    the momentum shell of ``H = V |pi|^2`` at energy E.
    """
    return math.exp(log_measure_density(v, n, energy))


def concentration_radius_sq(b: BasinSpec) -> float:
    """Squared radius where ``|theta|^(n-1) V^(-n/2)`` peaks."""
    if b.n < 2:
        raise DomainError("the saddle-point radius needs n >= 2")
    denom = 1.0 + b.n * (b.eta - 1.0)
    return b.gap * (b.n - 1) / (b.f2 * denom)


def concentration_value(b: BasinSpec) -> float:
    """Objective value at the concentration radius, ``f2 * r*^2 + f_min``."""
    return b.f2 * concentration_radius_sq(b) + b.f_min


def speed_at_radius(b: BasinSpec) -> float:
    """Continuum speed ``sqrt(E V)`` evaluated at the concentration radius."""
    base = b.gap * b.n * b.eta / (1.0 + b.n * (b.eta - 1.0))
    if base < 0:
        raise DomainError("negative base in the speed formula")
    return math.sqrt(b.energy) * base ** (b.eta / 2.0)


def _bounce_samples(n: int, rng: RngStream, samples: int):
    # By isotropy only z . e1 and |z|^2 enter; |z|^2 - z1^2 is chi-square(n-1).
    z1 = rng.standard_normal(samples)
    rest = rng.generator.chisquare(n - 1, samples) if n > 1 else np.zeros(samples)
    return z1, z1 * z1 + rest


def bounce_cosines(nu, n: int, rng: RngStream, samples: int) -> np.ndarray:
    """Per-sample ``cos`` of the rotation angle for each ``nu``.

    ``nu`` may be a scalar or a sequence; all values share the same draws so
    comparisons across ``nu`` are not swamped by sampling noise. Returns an
    array of shape ``(len(nu), samples)`` (or ``(samples,)`` for a scalar).
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    if n < 1:
        raise ValueError("n must be positive")
    nus = np.atleast_1d(np.asarray(nu, dtype=np.float64))
    z1, z2 = _bounce_samples(n, rng, samples)
    num = 1.0 + nus[:, None] * z1
    den = np.sqrt(1.0 + 2.0 * nus[:, None] * z1 + nus[:, None] ** 2 * z2)
    out = num / den
    return out[0] if np.ndim(nu) == 0 else out


def expected_bounce_cosine(nu: float, n: int, rng: RngStream, samples: int) -> float:
    """Monte-Carlo estimate of E[cos(alpha)] for one chaos rotation."""
    if nu == 0:
        return 1.0
    return float(np.mean(bounce_cosines(nu, n, rng, samples)))


def mean_bounce_angle(nu: float, n: int, rng: RngStream, samples: int) -> float:
    """Monte-Carlo mean rotation angle in radians (about ``nu * sqrt(n)`` when small)."""
    if samples < 1:
        raise ValueError("samples must be positive")
    z1, z2 = _bounce_samples(n, rng, samples)
    along = 1.0 + nu * z1
    across = nu * np.sqrt(np.maximum(z2 - z1 * z1, 0.0))
    return float(np.mean(np.arctan2(across, along)))


def nu_star(b: BasinSpec, dt: float) -> float:
    """Suggested chaos strength: about one full bounce per orbit at the concentration radius.

    For ``eta > 1`` the relation assumes ``f0 = 0`` and ``s = 1``; for
    ``eta == 1`` it uses ``f_init - f0``. Advisory only.
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    root_n = math.sqrt(b.n)
    if b.eta == 1:
        gap = b.f_init - b.f0
        if not gap > 0:
            raise DomainError("f_init must exceed f0")
        return dt / root_n * math.sqrt(b.f2 / gap)
    if b.f0 != 0:
        raise DomainError("the eta > 1 relation is derived for f0 = 0")
    if not (b.f_min > 0 and b.f_init > 0):
        raise DomainError("the eta > 1 relation needs f_min > 0 and f_init > 0")
    eta = b.eta
    return (
        dt
        / root_n
        * math.sqrt(b.f2 / b.f_min)
        * (b.f_min / b.f_init) ** (eta / 2.0)
        * (eta / (eta - 1.0)) ** (eta / 2.0)
        * math.sqrt(eta - 1.0)
    )


def nu_star_eta_gt_one(b: BasinSpec, dt: float) -> float:
    """The ``eta > 1`` relation on its own; ``eta == 1`` is a domain error."""
    if b.eta == 1:
        raise DomainError("the eta > 1 relation divides by eta - 1")
    return nu_star(b, dt)
