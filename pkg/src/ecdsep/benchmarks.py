"""Objective functions: Zakharov, regularized Ackley, an isotropic quadratic
basin and a minibatch logistic-regression problem.

Objectives with a fixed closed form also carry a ``kernel`` tuple
``(kind, params)`` so the compiled run loop can evaluate them without
calling back into Python.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

from ecdsep.core import DimensionError, ObjectiveEvaluation, ParamVector

# Kind ids understood by the compiled kernel.
KIND_QUADRATIC = 0
KIND_ZAKHAROV = 1
KIND_ACKLEY = 2

_TWO_PI = 2.0 * math.pi


def zakharov(theta: ParamVector) -> ObjectiveEvaluation:
    """Zakharov function with 1-based index weights.

    F = sum(t_i^2) + S^2 + S^4 with S = 0.5 * sum(i * t_i).
    """
    theta = np.asarray(theta, dtype=np.float64)
    idx = np.arange(1, theta.size + 1, dtype=np.float64)
    s = 0.5 * float(np.dot(idx, theta))
    s2 = s * s
    value = float(np.dot(theta, theta)) + s2 + s2 * s2
    grad = 2.0 * theta + (2.0 * s + 4.0 * s2 * s) * 0.5 * idx
    return ObjectiveEvaluation(value, grad)


def ackley_regularized(theta: ParamVector) -> ObjectiveEvaluation:
    """Two-dimensional Ackley function plus a 1e-8 * r^8 confining term.

    The radial term is not differentiable at the origin; the gradient is
    reported as zero there.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if theta.size != 2:
        raise DimensionError("the regularized Ackley function is two-dimensional")
    x, y = float(theta[0]), float(theta[1])
    r2 = x * x + y * y
    rho = math.sqrt(0.5 * r2)
    e1 = math.exp(-0.2 * rho)
    cx, cy = math.cos(_TWO_PI * x), math.cos(_TWO_PI * y)
    e2 = math.exp(0.5 * (cx + cy))
    value = -20.0 * e1 - e2 + math.e + 20.0 + 1e-8 * r2**4
    if r2 == 0.0:
        return ObjectiveEvaluation(value, np.zeros(2))
    # d(-20 e1)/dx = 20 * 0.2 * e1 * d(rho)/dx, d(rho)/dx = 0.5 x / rho
    radial = 2.0 * e1 / rho
    reg = 8e-8 * r2**3
    gx = radial * x + e2 * math.pi * math.sin(_TWO_PI * x) + reg * x
    gy = radial * y + e2 * math.pi * math.sin(_TWO_PI * y) + reg * y
    return ObjectiveEvaluation(value, np.array([gx, gy]))


class Zakharov:
    def __init__(self, n: int = 10):
        if n < 1:
            raise DimensionError("n must be at least 1")
        self.dimension = n
        self.kernel = (KIND_ZAKHAROV, np.zeros(0))

    def evaluate(self, theta, batch_token=None):
        return zakharov(theta)


class AckleyRegularized:
    dimension = 2

    def __init__(self):
        self.kernel = (KIND_ACKLEY, np.zeros(0))

    def evaluate(self, theta, batch_token=None):
        return ackley_regularized(theta)


class QuadraticBasin:
    """F = f2 * |theta|^2 + f_min."""

    def __init__(self, n: int, f2: float = 1.0, f_min: float = 0.0):
        if n < 1:
            raise DimensionError("n must be at least 1")
        if not f2 > 0:
            raise ValueError("f2 must be positive")
        self.dimension = n
        self.f2 = float(f2)
        self.f_min = float(f_min)
        self.kernel = (KIND_QUADRATIC, np.array([self.f2, self.f_min]))

    def evaluate(self, theta, batch_token=None):
        theta = np.asarray(theta, dtype=np.float64)
        return ObjectiveEvaluation(self.f2 * float(np.dot(theta, theta)) + self.f_min, 2.0 * self.f2 * theta)


def quadratic_basin(theta: ParamVector, f2: float = 1.0, f_min: float = 0.0) -> ObjectiveEvaluation:
    return QuadraticBasin(len(theta), f2, f_min).evaluate(theta)


class FunctionObjective:
    """Wrap a plain ``f(theta) -> (value, gradient)`` callable."""

    def __init__(self, fn: Callable[[ParamVector], tuple], dimension: int):
        self.fn = fn
        self.dimension = dimension

    def evaluate(self, theta, batch_token=None):
        value, grad = self.fn(theta)
        return ObjectiveEvaluation(float(value), np.asarray(grad, dtype=np.float64))


class SyntheticClassification:
    """Binary logistic regression on two Gaussian blobs.

    Parameters are ``n_features`` weights followed by one bias. The data set
    and its shuffle are fixed at construction; ``batch_token`` t selects
    batch ``t mod n_batches`` and ``None`` means the full data set.
    """

    def __init__(
        self,
        n_features: int = 8,
        n_samples: int = 1024,
        batch_size: int = 64,
        separation: float = 1.0,
        noise: float = 1.0,
        seed: int = 0,
    ):
        if n_features < 1 or n_samples < 2:
            raise DimensionError("need at least one feature and two samples")
        if batch_size < 1:
            raise ValueError("batch_size must be positive")
        gen = np.random.default_rng(np.random.SeedSequence([seed, 0xDA7A]))
        labels = np.arange(n_samples) % 2
        direction = gen.standard_normal(n_features)
        direction /= np.linalg.norm(direction)
        means = np.where(labels[:, None] == 1, 0.5, -0.5) * separation * direction
        self.x = means + noise * gen.standard_normal((n_samples, n_features))
        self.y = labels.astype(np.float64)
        self.order = gen.permutation(n_samples)
        self.n_features = n_features
        self.batch_size = batch_size
        self.n_batches = max(1, math.ceil(n_samples / batch_size))
        self.dimension = n_features + 1

    def batch_indices(self, batch_token: Optional[int]) -> np.ndarray:
        if batch_token is None:
            return np.arange(len(self.y))
        b = int(batch_token) % self.n_batches
        return self.order[b * self.batch_size:(b + 1) * self.batch_size]

    def evaluate(self, theta, batch_token=None):
        theta = np.asarray(theta, dtype=np.float64)
        if theta.size != self.dimension:
            raise DimensionError(f"expected {self.dimension} parameters, got {theta.size}")
        idx = self.batch_indices(batch_token)
        if idx.size == 0:
            raise ValueError("empty batch")
        x, y = self.x[idx], self.y[idx]
        z = x @ theta[:-1] + theta[-1]
        # mean of log(1 + e^z) - y z, written stably
        loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
        p = 0.5 * (1.0 + np.tanh(0.5 * z))
        r = (p - y) / idx.size
        grad = np.empty(self.dimension)
        grad[:-1] = x.T @ r
        grad[-1] = r.sum()
        return ObjectiveEvaluation(loss, grad)


def logistic_objective(problem: SyntheticClassification, theta, batch_token=None) -> ObjectiveEvaluation:
    return problem.evaluate(theta, batch_token)
