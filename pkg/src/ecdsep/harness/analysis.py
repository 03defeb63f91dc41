"""Compare long ECDSep trajectories on a quadratic basin with the closed-form theory."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ecdsep import theory
from ecdsep.benchmarks import QuadraticBasin
from ecdsep.core import RngStream
from ecdsep.optimizer import EcdHyperParams, run


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b) if b != 0 else (0.0 if a == 0 else math.inf)


@dataclass
class ConcentrationReport:
    status: str
    energy: float
    samples: int
    bin_edges: np.ndarray
    counts: np.ndarray
    radius_mode: float
    f_at_radius_mode: float
    f_value_mode: float
    predicted_radius_sq: float
    predicted_f: float
    predicted_speed: float
    empirical_speed: float
    extras: dict = field(default_factory=dict)

    @property
    def f_deviation(self) -> float:
        return _rel(self.f_at_radius_mode, self.predicted_f)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "energy": self.energy,
            "samples": self.samples,
            "empirical": {
                "radius_mode": self.radius_mode,
                "radius_sq_mode": self.radius_mode**2,
                "f_at_radius_mode": self.f_at_radius_mode,
                "f_value_mode": self.f_value_mode,
                "speed_at_radius_mode": self.empirical_speed,
            },
            "theory": {
                "radius_sq": self.predicted_radius_sq,
                "f_at_radius": self.predicted_f,
                "speed_at_radius": self.predicted_speed,
            },
            "relative_deviation": {
                "f_at_radius": self.f_deviation,
                "radius_sq": _rel(self.radius_mode**2, self.predicted_radius_sq),
                "speed": _rel(self.empirical_speed, self.predicted_speed),
            },
            **self.extras,
        }

    def histogram_rows(self):
        for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
            yield float(lo), float(hi), int(c)


def concentration_report(
    problem: QuadraticBasin,
    hp: EcdHyperParams,
    steps: int,
    burn_in: int,
    bins: int,
    theta0=None,
    rng: Optional[RngStream] = None,
) -> ConcentrationReport:
    """Histogram ``|theta|`` along one chaotic run and set it against the saddle-point radius.

    The empirical mode is taken from the radial histogram and mapped back to
    F, since the predicted peak is a peak in ``|theta|``. The mode of the
    raw F-value histogram is reported alongside for reference.

    Speeds are reported in the continuum convention ``|dtheta/dt|^2 = E V``:
    one ECDSep step moves ``2 dt |pi| / (|pi|^2 + s)``, and multiplying the
    per-unit-dt displacement by ``E / 2`` converts it to that clock.
    """
    if not hp.nu > 0:
        raise ValueError("the concentration check needs chaos (nu > 0)")
    if not 0 <= burn_in < steps:
        raise ValueError("burn_in must lie in [0, steps)")
    if bins < 1:
        raise ValueError("bins must be positive")
    rng = rng if rng is not None else RngStream(0)
    theta0 = np.ones(problem.dimension) if theta0 is None else theta0
    state, log = run(problem, theta0, hp, steps, rng)
    basin = theory.BasinSpec(n=problem.dimension, f2=problem.f2, f_min=problem.f_min, f0=hp.f0,
                             eta=hp.eta, energy=state.energy)
    r_sq_pred = theory.concentration_radius_sq(basin)
    f_pred = problem.f2 * r_sq_pred + problem.f_min
    speed_pred = theory.speed_at_radius(basin)
    if len(log) <= burn_in:
        return ConcentrationReport("terminated_before_burn_in", state.energy, 0, np.zeros(bins + 1),
                                   np.zeros(bins, dtype=np.int64), math.nan, math.nan, math.nan,
                                   r_sq_pred, f_pred, speed_pred, math.nan)
    r = log.theta_norm[burn_in:]
    f = log.f[burn_in:]
    p = log.pi_norm[burn_in:]
    counts, edges = np.histogram(r, bins=bins, range=(0.0, float(r.max())))
    i = int(np.argmax(counts))
    r_mode = 0.5 * (edges[i] + edges[i + 1])
    f_counts, f_edges = np.histogram(f, bins=bins)
    j = int(np.argmax(f_counts))
    in_bin = (r >= edges[i]) & (r <= edges[i + 1])
    speed = state.energy * p[in_bin] / (p[in_bin] ** 2 + hp.s)
    return ConcentrationReport(
        status="ok" if not state.terminated else state.status,
        energy=state.energy,
        samples=int(r.size),
        bin_edges=edges,
        counts=counts,
        radius_mode=float(r_mode),
        f_at_radius_mode=float(problem.f2 * r_mode**2 + problem.f_min),
        f_value_mode=float(0.5 * (f_edges[j] + f_edges[j + 1])),
        predicted_radius_sq=r_sq_pred,
        predicted_f=f_pred,
        predicted_speed=speed_pred,
        empirical_speed=float(np.mean(speed)) if speed.size else math.nan,
    )


@dataclass
class EtaRow:
    eta: float
    tail_mean_f: float
    final_f: float
    status: str


def eta_monotonicity_report(
    problem,
    etas: Sequence[float],
    hp: EcdHyperParams,
    steps: int,
    theta0=None,
    seed: int = 0,
    tail_fraction: float = 0.5,
) -> list[EtaRow]:
    """Tail-mean F for each eta with every other setting and the seed held fixed.

    Rows come back sorted by eta, independent of the input order.
    """
    if not 0 < tail_fraction <= 1:
        raise ValueError("tail_fraction must lie in (0, 1]")
    theta0 = np.ones(problem.dimension) if theta0 is None else theta0
    rows = []
    for eta in sorted(set(float(e) for e in etas)):
        state, log = run(problem, theta0, hp.replace(eta=eta), steps, RngStream(seed))
        k = max(1, int(round(len(log) * tail_fraction)))
        rows.append(EtaRow(eta, float(np.mean(log.f[-k:])), float(log.f[-1]), state.status))
    return rows


def is_nonincreasing(values: Sequence[float]) -> bool:
    return all(b <= a for a, b in zip(values, values[1:]))
