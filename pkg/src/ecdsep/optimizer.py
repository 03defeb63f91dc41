"""ECDSep: energy-conserving descent with a separable Hamiltonian.

The state moves on the surface ``V(theta) * (|pi|^2 + s) = energy`` with
``V = (F - F0 + wd/2 |theta|^2)^eta``. Each step projects back onto that
surface (optional), kicks the momentum, drifts the parameters and applies a
small norm-preserving random rotation to the momentum.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, NamedTuple, Optional

import numpy as np

from ecdsep import _accel
from ecdsep.core import (
    DomainError,
    NumericalError,
    Objective,
    ObjectiveEvaluation,
    ParamVector,
    RngStream,
    as_param_vector,
)

logger = logging.getLogger(__name__)

RUNNING = "running"
CONVERGED = "converged"
CROSSED_F0 = "crossed_f0"


class InitializationError(DomainError):
    """The initial point does not define a positive energy surface."""


@dataclass(frozen=True)
class EcdHyperParams:
    """ECDSep hyperparameters.

    ``delta_e`` defaults to 0 for the regularized dynamics (``s=1``) and to 1
    for ``s=0``. ``f0_shift_factor`` is the multiplier applied to ``V`` when
    self-tuning lowers the offset.
    """

    eta: float
    dt: float = 0.4
    nu: float = 1e-5
    f0: float = 0.0
    delta_e: Optional[float] = None
    s: int = 1
    wd: float = 0.0
    conserve_energy: bool = True
    eps1: float = 1e-10
    eps2: float = 1e-40
    self_tune_f0: bool = False
    f0_shift_factor: float = 5.0

    def __post_init__(self):
        if self.delta_e is None:
            object.__setattr__(self, "delta_e", 0.0 if self.s == 1 else 1.0)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.eta >= 1:
            raise ValueError("eta must be >= 1")
        if not self.nu >= 0:
            raise ValueError("nu must be non-negative")
        if not self.delta_e >= 0:
            raise ValueError("delta_e must be non-negative")
        if self.s not in (0, 1):
            raise ValueError("s must be 0 or 1")
        if not self.wd >= 0:
            raise ValueError("wd must be non-negative")
        if self.s == 0 and self.delta_e == 0:
            raise ValueError("s=0 requires delta_e > 0, otherwise the energy is zero")
        if self.self_tune_f0 and not (float(self.eta).is_integer() and int(self.eta) % 2 == 1):
            raise ValueError("self-tuning of f0 requires an odd integer eta")

    def replace(self, **changes) -> "EcdHyperParams":
        return dataclasses.replace(self, **changes)


@dataclass
class EcdState:
    theta: ParamVector
    pi: ParamVector
    energy: float
    delta_f0: float = 0.0
    step: int = 0
    terminated: bool = False
    status: str = RUNNING
    # Measured V * (|pi|^2 + s) right after the projection fired in the most
    # recent step, NaN when it did not fire.
    post_projection_energy: float = math.nan

    def to_record(self) -> dict:
        """Flat record of floats and counters for checkpointing."""
        rec = {
            "n": len(self.theta),
            "energy": self.energy,
            "delta_f0": self.delta_f0,
            "step": self.step,
            "terminated": self.terminated,
            "status": self.status,
        }
        rec.update({f"theta_{i}": float(v) for i, v in enumerate(self.theta)})
        rec.update({f"pi_{i}": float(v) for i, v in enumerate(self.pi)})
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "EcdState":
        n = int(rec["n"])
        return cls(
            theta=np.array([rec[f"theta_{i}"] for i in range(n)], dtype=np.float64),
            pi=np.array([rec[f"pi_{i}"] for i in range(n)], dtype=np.float64),
            energy=float(rec["energy"]),
            delta_f0=float(rec["delta_f0"]),
            step=int(rec["step"]),
            terminated=bool(rec["terminated"]),
            status=str(rec["status"]),
        )


def _signed_power(base: float, eta: float) -> float:
    if base >= 0:
        return base**eta
    if not float(eta).is_integer():
        raise DomainError(f"negative base {base!r} raised to non-integer eta={eta}")
    return -((-base) ** eta) if int(eta) % 2 else (-base) ** eta


def potential_base(theta: ParamVector, obj_value: float, hp: EcdHyperParams, delta_f0: float = 0.0) -> float:
    """F - (F0 + delta_f0) + wd/2 |theta|^2, the quantity raised to eta."""
    base = obj_value - (hp.f0 + delta_f0)
    if hp.wd:
        base += 0.5 * hp.wd * float(np.dot(theta, theta))
    return base


def effective_potential(theta: ParamVector, obj_value: float, hp: EcdHyperParams, delta_f0: float = 0.0) -> float:
    """(F - F0_eff + wd/2 |theta|^2)^eta.

    Negative for odd integer eta when F is below the effective offset; a
    negative base with non-integer eta raises :class:`DomainError`.
    """
    return _signed_power(potential_base(theta, obj_value, hp, delta_f0), hp.eta)


def measured_energy(theta, pi, obj_value: float, hp: EcdHyperParams, delta_f0: float = 0.0) -> float:
    """V(theta) * (|pi|^2 + s), NaN where V is undefined."""
    try:
        v = effective_potential(theta, obj_value, hp, delta_f0)
    except DomainError:
        return math.nan
    return v * (float(np.dot(pi, pi)) + hp.s)


def centred_energy(theta, pi, evaluation: ObjectiveEvaluation, hp: EcdHyperParams, delta_f0: float = 0.0) -> float:
    """Energy with the momentum advanced half a kick to sit level with ``theta``.

    The stored momentum lags the parameters by half a step, so pairing it
    directly with ``V(theta)`` gives an energy error of first order in dt.
    Shifting it by half the next kick removes that lag and exposes the
    second-order oscillation of the underlying integrator.
    """
    base = potential_base(theta, evaluation.value, hp, delta_f0)
    if not base > 0:
        return math.nan
    force = evaluation.gradient + hp.wd * np.asarray(theta) if hp.wd else evaluation.gradient
    pi_bar = np.asarray(pi) - (0.5 * hp.dt * hp.eta / base) * force
    return base**hp.eta * (float(np.dot(pi_bar, pi_bar)) + hp.s)


def init(obj: Objective, theta0, hp: EcdHyperParams, batch_token=None) -> EcdState:
    theta = as_param_vector(theta0)
    ev = obj.evaluate(theta, batch_token)
    _check_finite(ev, 0)
    v = effective_potential(theta, ev.value, hp)
    energy = v * (hp.delta_e + hp.s)
    if not energy > 0:
        raise InitializationError(
            f"initial energy {energy!r} is not positive; F(theta0) must exceed f0 (F={ev.value!r}, f0={hp.f0!r})"
        )
    gnorm = float(np.linalg.norm(ev.gradient))
    if hp.delta_e == 0:
        pi = np.zeros_like(theta)
    elif gnorm == 0:
        warnings.warn("zero gradient at theta0; initial momentum set along (1, ..., 1)", RuntimeWarning, stacklevel=2)
        pi = np.full_like(theta, math.sqrt(hp.delta_e / theta.size))
    else:
        pi = -math.sqrt(hp.delta_e) * ev.gradient / gnorm
    return EcdState(theta=theta, pi=pi, energy=energy)


def _project(pi: ParamVector, v: float, energy: float, hp: EcdHyperParams) -> tuple[ParamVector, float]:
    if not v > 0:
        return pi, math.nan
    target = energy / v - hp.s
    p2 = float(np.dot(pi, pi))
    if abs(p2 - target) > hp.eps1 and target > 0:
        if p2 == 0:
            warnings.warn("projection target is positive but momentum is zero; skipping rescale", RuntimeWarning)
            return pi, math.nan
        pi = pi * math.sqrt(target / p2)
        return pi, v * (float(np.dot(pi, pi)) + hp.s)
    return pi, math.nan


def project_energy(state: EcdState, v: float, hp: EcdHyperParams) -> EcdState:
    """Rescale the momentum back onto the stored energy surface if possible.

    No-op when ``V <= 0``, when the required ``|pi|^2`` is not positive, or
    when the momentum already matches it to within ``eps1``.
    """
    pi, post = _project(state.pi, v, state.energy, hp)
    if pi is state.pi:
        return state
    return dataclasses.replace(state, pi=pi, post_projection_energy=post)


def rotate_momentum(pi: ParamVector, nu: float, rng: RngStream) -> ParamVector:
    """Randomly tilt ``pi`` by ``nu * z`` and restore its norm.

    Draws one standard normal vector whenever ``nu > 0`` (even for zero
    momentum) so the random stream advances identically on every path.
    """
    if nu == 0:
        return pi
    z = rng.standard_normal(pi.size)
    p = math.sqrt(float(np.dot(pi, pi)))
    if p == 0:
        return pi
    u = pi / p + nu * z
    m = math.sqrt(float(np.dot(u, u)))
    while m == 0:
        u = pi / p + nu * rng.standard_normal(pi.size)
        m = math.sqrt(float(np.dot(u, u)))
    return (p / m) * u


def _check_finite(ev: ObjectiveEvaluation, step: int) -> None:
    if not math.isfinite(ev.value) or not np.all(np.isfinite(ev.gradient)):
        raise NumericalError("objective returned a non-finite value or gradient", step)


def step(
    state: EcdState,
    obj: Objective,
    hp: EcdHyperParams,
    rng: RngStream,
    batch_token=None,
    evaluation: Optional[ObjectiveEvaluation] = None,
) -> EcdState:
    """Advance one iteration.

    ``evaluation`` may carry F and its gradient at ``state.theta`` when the
    caller already has them.
    """
    if state.terminated:
        raise RuntimeError("cannot step a terminated state")
    k = state.step + 1
    ev = evaluation if evaluation is not None else obj.evaluate(state.theta, batch_token)
    _check_finite(ev, k)
    theta = state.theta
    base = potential_base(theta, ev.value, hp, state.delta_f0)

    if hp.self_tune_f0:
        v = _signed_power(base, hp.eta)
        if v < hp.eps2:
            return dataclasses.replace(
                state, step=k, delta_f0=state.delta_f0 + hp.f0_shift_factor * v, post_projection_energy=math.nan
            )
    elif base <= 0:
        return dataclasses.replace(state, terminated=True, status=CROSSED_F0, post_projection_energy=math.nan)
    else:
        v = base**hp.eta

    pi = state.pi
    post = math.nan
    if hp.conserve_energy:
        pi, post = _project(pi, v, state.energy, hp)

    force = ev.gradient + hp.wd * theta if hp.wd else ev.gradient
    pi = pi - (hp.dt * hp.eta / base) * force
    theta = theta + (2.0 * hp.dt / (float(np.dot(pi, pi)) + hp.s)) * pi
    if hp.nu > 0:
        pi = rotate_momentum(pi, hp.nu, rng)
    if not np.all(np.isfinite(theta)) or not np.all(np.isfinite(pi)):
        raise NumericalError("parameters became non-finite", k)

    converged = not hp.self_tune_f0 and v < hp.eps2
    return EcdState(
        theta=theta,
        pi=pi,
        energy=state.energy,
        delta_f0=state.delta_f0,
        step=k,
        terminated=converged,
        status=CONVERGED if converged else RUNNING,
        post_projection_energy=post,
    )


class TrajectoryRecord(NamedTuple):
    step: int
    f: float
    energy: float
    pi_norm: float
    theta_norm: float


class TrajectoryLog:
    """Column store of trajectory records, optionally with parameter snapshots."""

    columns = ("step", "f", "energy", "pi_norm", "theta_norm")

    def __init__(self, data: Optional[np.ndarray] = None, thetas: Optional[np.ndarray] = None):
        self.data = np.zeros((0, 5)) if data is None else np.asarray(data, dtype=np.float64).reshape(-1, 5)
        self.thetas = thetas

    def __len__(self):
        return len(self.data)

    def __iter__(self) -> Iterator[TrajectoryRecord]:
        for row in self.data:
            yield TrajectoryRecord(int(row[0]), float(row[1]), float(row[2]), float(row[3]), float(row[4]))

    def __getitem__(self, i) -> TrajectoryRecord:
        row = self.data[i]
        return TrajectoryRecord(int(row[0]), float(row[1]), float(row[2]), float(row[3]), float(row[4]))

    @property
    def steps(self) -> np.ndarray:
        return self.data[:, 0].astype(np.int64)

    @property
    def f(self) -> np.ndarray:
        return self.data[:, 1]

    @property
    def energy(self) -> np.ndarray:
        return self.data[:, 2]

    @property
    def pi_norm(self) -> np.ndarray:
        return self.data[:, 3]

    @property
    def theta_norm(self) -> np.ndarray:
        return self.data[:, 4]


def run(
    obj: Objective,
    theta0,
    hp: EcdHyperParams,
    max_steps: int,
    rng: RngStream,
    recorder: Optional[Callable[[TrajectoryRecord], None]] = None,
    batch_tokens: Optional[Iterable[int]] = None,
    record_every: int = 1,
    keep_theta: bool = False,
    use_kernel: Optional[bool] = None,
) -> tuple[EcdState, TrajectoryLog]:
    """Iterate :func:`step` until termination or ``max_steps``.

    A record is taken after every ``record_every``-th step with F evaluated
    on the full objective (``batch_token=None``). Objectives exposing a
    ``kernel`` attribute run in the compiled loop when it is available and
    no batch tokens are given; ``use_kernel`` forces the choice.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    state = init(obj, theta0, hp)

    if use_kernel is None:
        use_kernel = _accel.available() and batch_tokens is None and hasattr(obj, "kernel")
    if use_kernel:
        if batch_tokens is not None or not hasattr(obj, "kernel"):
            raise ValueError("the compiled loop needs a closed-form objective without batch tokens")
        state, data, thetas = _accel.run_ecd(obj.kernel, state, hp, rng, max_steps, record_every, keep_theta)
        log = TrajectoryLog(data, thetas)
        if recorder is not None:
            for rec in log:
                recorder(rec)
        return state, log

    rows: list[tuple] = []
    snaps: list[np.ndarray] = []
    tokens = iter(batch_tokens) if batch_tokens is not None else None
    ev = obj.evaluate(state.theta) if tokens is None else None
    for _ in range(max_steps):
        token = next(tokens) if tokens is not None else None
        state = step(state, obj, hp, rng, token, evaluation=ev)
        if state.status == CROSSED_F0:
            break
        recording = state.step % record_every == 0
        if tokens is None or recording:
            ev = obj.evaluate(state.theta)
            _check_finite(ev, state.step)
        if recording:
            rec = TrajectoryRecord(
                state.step,
                ev.value,
                measured_energy(state.theta, state.pi, ev.value, hp, state.delta_f0),
                float(np.linalg.norm(state.pi)),
                float(np.linalg.norm(state.theta)),
            )
            rows.append(rec)
            if keep_theta:
                snaps.append(state.theta.copy())
            if recorder is not None:
                recorder(rec)
        if tokens is not None:
            ev = None
        if state.terminated:
            break
    thetas = np.array(snaps).reshape(len(snaps), len(state.theta)) if keep_theta else None
    return state, TrajectoryLog(np.array(rows, dtype=np.float64), thetas)
