"""Reference optimizers: gradient descent with momentum and Adam/AdamW."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from ecdsep.core import DimensionError, NumericalError, Objective, ParamVector, as_param_vector
from ecdsep.optimizer import TrajectoryLog


@dataclass(frozen=True)
class GdmHyperParams:
    alpha: float
    beta: float = 0.9

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")


@dataclass(frozen=True)
class AdamHyperParams:
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    wd: float = 0.0
    decoupled_wd: bool = False

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.wd >= 0:
            raise ValueError("wd must be non-negative")


def gdm_step(theta: ParamVector, pi: ParamVector, grad: ParamVector, hp: GdmHyperParams):
    """One GDM update with friction ``(1 - beta)`` on the momentum.

    Returns ``(theta', pi')``; the learning rate only scales the position
    update.
    """
    if not len(theta) == len(pi) == len(grad):
        raise DimensionError("theta, pi and grad must have equal length")
    pi = pi - (1.0 - hp.beta) * pi - grad
    return theta + hp.alpha * pi, pi


def adam_step(theta, m, v, grad, t: int, hp: AdamHyperParams):
    """Bias-corrected Adam step ``t`` (1-based).

    With ``decoupled_wd`` the decay acts on theta directly (AdamW);
    otherwise ``wd * theta`` is folded into the gradient.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    if not len(theta) == len(m) == len(v) == len(grad):
        raise DimensionError("theta, m, v and grad must have equal length")
    if hp.wd and not hp.decoupled_wd:
        grad = grad + hp.wd * theta
    m = hp.beta1 * m + (1.0 - hp.beta1) * grad
    v = hp.beta2 * v + (1.0 - hp.beta2) * grad * grad
    m_hat = m / (1.0 - hp.beta1**t)
    v_hat = v / (1.0 - hp.beta2**t)
    update = m_hat / (np.sqrt(v_hat) + hp.epsilon)
    if hp.wd and hp.decoupled_wd:
        theta = theta - hp.alpha * hp.wd * theta
    return theta - hp.alpha * update, m, v


def _record(rows, snaps, k, f, pi, theta, keep_theta):
    rows.append((k, f, math.nan, float(np.linalg.norm(pi)), float(np.linalg.norm(theta))))
    if keep_theta:
        snaps.append(theta.copy())


def _log(rows, snaps, n, keep_theta) -> TrajectoryLog:
    thetas = np.array(snaps).reshape(len(snaps), n) if keep_theta else None
    return TrajectoryLog(np.array(rows, dtype=np.float64), thetas)


def _evaluate(obj: Objective, theta, token, k):
    ev = obj.evaluate(theta, token)
    if not math.isfinite(ev.value) or not np.all(np.isfinite(ev.gradient)):
        raise NumericalError("objective returned a non-finite value or gradient", k)
    return ev


def run_gdm(
    obj: Objective,
    theta0,
    hp: GdmHyperParams,
    max_steps: int,
    record_every: int = 1,
    keep_theta: bool = False,
    batch_tokens: Optional[Iterable[int]] = None,
):
    """Run GDM from ``theta0`` with zero initial momentum.

    The log's ``pi_norm`` column holds the momentum norm and ``energy`` is NaN.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    theta = as_param_vector(theta0)
    pi = np.zeros_like(theta)
    tokens = iter(batch_tokens) if batch_tokens is not None else None
    rows, snaps = [], []
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, max_steps + 1):
            token = next(tokens) if tokens is not None else None
            ev = _evaluate(obj, theta, token, k)
            theta, pi = gdm_step(theta, pi, ev.gradient, hp)
            if not np.all(np.isfinite(theta)):
                raise NumericalError("parameters became non-finite", k)
            if k % record_every == 0:
                _record(rows, snaps, k, _evaluate(obj, theta, None, k).value, pi, theta, keep_theta)
    return theta, _log(rows, snaps, theta.size, keep_theta)


def run_adam(
    obj: Objective,
    theta0,
    hp: AdamHyperParams,
    max_steps: int,
    record_every: int = 1,
    keep_theta: bool = False,
    batch_tokens: Optional[Iterable[int]] = None,
):
    """Run Adam (or AdamW) from ``theta0``; ``pi_norm`` logs the first moment."""
    if max_steps < 1:
        raise ValueError("max_steps must be at least 1")
    theta = as_param_vector(theta0)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    tokens = iter(batch_tokens) if batch_tokens is not None else None
    rows, snaps = [], []
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, max_steps + 1):
            token = next(tokens) if tokens is not None else None
            ev = _evaluate(obj, theta, token, k)
            theta, m, v = adam_step(theta, m, v, ev.gradient, k, hp)
            if not np.all(np.isfinite(theta)):
                raise NumericalError("parameters became non-finite", k)
            if k % record_every == 0:
                _record(rows, snaps, k, _evaluate(obj, theta, None, k).value, m, theta, keep_theta)
    return theta, _log(rows, snaps, theta.size, keep_theta)
