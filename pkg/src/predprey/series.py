"""Time-indexed grid data: constant, callable-backed, and snapshot series.

Both solvers consume coefficients as "series" objects exposing ``at(t)``.
Snapshot-backed series interpolate linearly in time and clamp outside the
stored range, matching the freezing strategy of the fixed-point coupling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import Field, Grid, VectorField, norm_l1, norm_linf, total_variation


class FieldSeries:
    def at(self, t: float) -> Field:  # pragma: no cover - interface
        raise NotImplementedError


class VectorSeries:
    def at(self, t: float) -> VectorField:  # pragma: no cover - interface
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantFieldSeries(FieldSeries):
    value: Field

    def at(self, t: float) -> Field:
        return self.value


@dataclass(frozen=True)
class FuncFieldSeries(FieldSeries):
    fn: Callable[[float], Field]

    def at(self, t: float) -> Field:
        return self.fn(t)


def _bracket(times: np.ndarray, t: float) -> tuple[int, int, float]:
    """Indices (i0, i1) and blend weight for linear interpolation, clamped."""
    if t <= times[0]:
        return 0, 0, 0.0
    if t >= times[-1]:
        return len(times) - 1, len(times) - 1, 0.0
    i1 = int(np.searchsorted(times, t, side="right"))
    i0 = i1 - 1
    span = times[i1] - times[i0]
    return i0, i1, float((t - times[i0]) / span)


@dataclass(frozen=True)
class SampledFieldSeries(FieldSeries):
    times: np.ndarray
    fields: tuple[Field, ...]

    def at(self, t: float) -> Field:
        i0, i1, lam = _bracket(self.times, t)
        if i0 == i1 or lam == 0.0:
            return self.fields[i0]
        blend = (1 - lam) * self.fields[i0].values + lam * self.fields[i1].values
        return Field(self.fields[i0].grid, blend)


@dataclass(frozen=True)
class ConstantVectorSeries(VectorSeries):
    value: VectorField

    def at(self, t: float) -> VectorField:
        return self.value


@dataclass(frozen=True)
class FuncVectorSeries(VectorSeries):
    fn: Callable[[float], VectorField]

    def at(self, t: float) -> VectorField:
        return self.fn(t)


@dataclass(frozen=True)
class SampledVectorSeries(VectorSeries):
    times: np.ndarray
    fields: tuple[VectorField, ...]

    def at(self, t: float) -> VectorField:
        i0, i1, lam = _bracket(self.times, t)
        if i0 == i1 or lam == 0.0:
            return self.fields[i0]
        blend = (1 - lam) * self.fields[i0].components + lam * self.fields[i1].components
        return VectorField(self.fields[i0].grid, blend)


def field_series(obj) -> FieldSeries:
    """Coerce a Field or callable into a series; pass series through."""
    if isinstance(obj, FieldSeries):
        return obj
    if isinstance(obj, Field):
        return ConstantFieldSeries(obj)
    if callable(obj):
        return FuncFieldSeries(obj)
    raise TypeError(f"cannot interpret {type(obj)!r} as a field series")


def vector_series(obj) -> VectorSeries:
    if isinstance(obj, VectorSeries):
        return obj
    if isinstance(obj, VectorField):
        return ConstantVectorSeries(obj)
    if callable(obj):
        return FuncVectorSeries(obj)
    raise TypeError(f"cannot interpret {type(obj)!r} as a vector series")


@dataclass(frozen=True)
class Trace:
    """Per-step solver output with running norm diagnostics."""

    times: np.ndarray
    fields: tuple[Field, ...]
    l1: np.ndarray = field(default=None)  # type: ignore[assignment]
    linf: np.ndarray = field(default=None)  # type: ignore[assignment]
    tv: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(times) <= 0):
            raise ValueError("trace times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "fields", tuple(self.fields))
        if self.l1 is None:
            object.__setattr__(self, "l1", np.array([norm_l1(f) for f in self.fields]))
            object.__setattr__(self, "linf", np.array([norm_linf(f) for f in self.fields]))
            object.__setattr__(self, "tv", np.array([total_variation(f) for f in self.fields]))

    @property
    def grid(self) -> Grid:
        return self.fields[0].grid

    def series(self) -> SampledFieldSeries:
        return SampledFieldSeries(self.times, self.fields)

    def at(self, t: float) -> Field:
        return self.series().at(t)

    def final(self) -> Field:
        return self.fields[-1]


def step_times(T: float, dt: float, t_start: float = 0.0) -> np.ndarray:
    """Uniform steps of dt landing exactly on t_start + T (short last step)."""
    n_full = int(math.floor(T / dt + 1e-9))
    times = t_start + dt * np.arange(n_full + 1)
    if T - n_full * dt > 1e-9 * dt:
        times = np.append(times, t_start + T)
    return times


def trace_l1_distance(a: Trace, b: Trace) -> float:
    """sup over shared times of the L1 distance; traces must share the time grid."""
    if len(a.times) != len(b.times) or not np.allclose(a.times, b.times):
        raise ValueError("traces are on different time grids")
    return max(
        norm_l1(Field(fa.grid, fa.values - fb.values))
        for fa, fb in zip(a.fields, b.fields)
    )
