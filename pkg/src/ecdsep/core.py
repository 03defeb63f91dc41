"""Shared numeric types, the objective contract and seeded random streams."""

from __future__ import annotations

from typing import NamedTuple, Optional, Protocol, runtime_checkable

import numpy as np
import numpy.typing as npt

ParamVector = npt.NDArray[np.float64]


class DimensionError(ValueError):
    """Vector lengths disagree or a requested dimension is invalid."""


class DomainError(ValueError):
    """A closed-form expression was evaluated outside its domain."""


class NumericalError(ArithmeticError):
    """A non-finite value appeared during an optimization run."""

    def __init__(self, message: str, step: Optional[int] = None):
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)
        self.step = step


def as_param_vector(values) -> ParamVector:
    """Copy ``values`` into a finite, non-empty 1-D float64 vector."""
    arr = np.array(values, dtype=np.float64, ndmin=1)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"expected a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("parameter vector contains NaN or Inf")
    return arr


def is_valid(vec: ParamVector) -> bool:
    return vec.ndim == 1 and vec.size > 0 and bool(np.all(np.isfinite(vec)))


def dot(a: ParamVector, b: ParamVector) -> float:
    if len(a) != len(b):
        raise DimensionError(f"length mismatch: {len(a)} vs {len(b)}")
    return float(np.dot(a, b))


def norm(a: ParamVector) -> float:
    return float(np.sqrt(np.dot(a, a)))


class ObjectiveEvaluation(NamedTuple):
    value: float
    gradient: ParamVector


@runtime_checkable
class Objective(Protocol):
    """Anything that can report F and its gradient.

    ``batch_token`` is an opaque integer. The optimizer passes it through
    untouched; a minibatch objective uses it to select its data slice, a
    deterministic objective ignores it.
    """

    dimension: int

    def evaluate(self, theta: ParamVector, batch_token: Optional[int] = None) -> ObjectiveEvaluation:
        ...


class RngStream:
    """Reproducible normal draws keyed by ``(seed, stream)``.

    Streams with different ``stream`` keys are statistically independent,
    so sweep workers can each own one keyed by their trial index.
    """

    def __init__(self, seed: int, stream: int | tuple[int, ...] = ()):
        if seed < 0 or seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        key = (stream,) if isinstance(stream, int) else tuple(stream)
        self.seed = int(seed)
        self.key = key
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, *key])))

    def standard_normal(self, shape) -> np.ndarray:
        return self._gen.standard_normal(shape)

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        return float(self._gen.uniform(low, high))

    def integers(self, low: int, high: int) -> int:
        return int(self._gen.integers(low, high))

    def spawn(self, *key: int) -> "RngStream":
        """A fresh independent stream sharing this stream's seed."""
        return RngStream(self.seed, self.key + key)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen


def draw_standard_normal(rng: RngStream, n: int) -> ParamVector:
    if n < 1:
        raise DimensionError("n must be at least 1")
    return rng.standard_normal(n)
