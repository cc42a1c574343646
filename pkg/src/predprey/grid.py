"""Bounded box domains, uniform cell-centered grids, and the discrete norms.

The library works on intervals (1D) and axis-aligned rectangles (2D) with
uniform cell-centered grids.  All solution norms used by the bound checks
live here: the cell-volume weighted L1 norm, the max norm, and the total
variation counted against the zero extension outside the domain (consistent
with homogeneous Dirichlet data on both equations).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    """Invalid domain or grid construction parameters."""


@dataclass(frozen=True)
class DomainSpec:
    """Axis-aligned box: one (lo, hi) pair per axis; 1 or 2 axes."""

    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.bounds) not in (1, 2):
            raise GridError(f"only 1D/2D domains supported, got {len(self.bounds)} axes")
        for axis, (lo, hi) in enumerate(self.bounds):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise GridError(f"degenerate interval {(lo, hi)} on axis {axis}")

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def volume(self) -> float:
        return float(np.prod([hi - lo for lo, hi in self.bounds]))


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on a DomainSpec.

    Immutable after construction; shared freely.  ``axis_centers[i]`` holds
    the cell-center coordinates along axis i, ``cell_volume`` the product of
    spacings.
    """

    spec: DomainSpec
    n_cells: tuple[int, ...]
    dx: tuple[float, ...]
    axis_centers: tuple[np.ndarray, ...]
    cell_volume: float

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n_cells

    @property
    def total_cells(self) -> int:
        return int(np.prod(self.n_cells))

    def centers(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays of shape ``self.shape``, one per axis."""
        return np.meshgrid(*self.axis_centers, indexing="ij")

    def center_points(self) -> np.ndarray:
        """All cell centers as an (total_cells, dim) array, C order."""
        mesh = self.centers()
        return np.stack([m.ravel() for m in mesh], axis=-1)


def build_grid(spec: DomainSpec, n_cells) -> Grid:
    """Build a uniform grid with ``n_cells`` cells per axis (scalar or per-axis)."""
    if np.isscalar(n_cells):
        counts = (int(n_cells),) * spec.dim
    else:
        counts = tuple(int(n) for n in n_cells)
    if len(counts) != spec.dim:
        raise GridError(f"expected {spec.dim} cell counts, got {len(counts)}")
    if any(n < 4 for n in counts):
        raise GridError(f"need at least 4 cells per axis, got {counts}")
    dx = tuple((hi - lo) / n for (lo, hi), n in zip(spec.bounds, counts))
    centers = tuple(
        lo + (np.arange(n) + 0.5) * h for (lo, _), n, h in zip(spec.bounds, counts, dx)
    )
    for arr in centers:
        arr.setflags(write=False)
    return Grid(spec, counts, dx, centers, float(np.prod(dx)))


@dataclass(frozen=True)
class Field:
    """A scalar grid function: one value per cell, shape = grid.shape."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise GridError(f"field shape {vals.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise GridError("field contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def like(self, values: np.ndarray) -> "Field":
        return Field(self.grid, values)


@dataclass(frozen=True)
class VectorField:
    """A vector grid function: components stacked as (dim, *grid.shape)."""

    grid: Grid
    components: np.ndarray

    def __post_init__(self):
        comps = np.ascontiguousarray(self.components, dtype=float)
        expected = (self.grid.dim,) + self.grid.shape
        if comps.shape != expected:
            raise GridError(f"vector shape {comps.shape} != expected {expected}")
        if not np.all(np.isfinite(comps)):
            raise GridError("vector field contains non-finite values")
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.components**2, axis=0))


def zeros(grid: Grid) -> Field:
    return Field(grid, np.zeros(grid.shape))


def full(grid: Grid, value: float) -> Field:
    return Field(grid, np.full(grid.shape, float(value)))


def zero_vector(grid: Grid) -> VectorField:
    return VectorField(grid, np.zeros((grid.dim,) + grid.shape))


def norm_l1(f: Field) -> float:
    """Cell-volume weighted sum of |f|; discrete L1(Omega) norm."""
    return float(np.sum(np.abs(f.values)) * f.grid.cell_volume)


def norm_linf(f: Field) -> float:
    return float(np.max(np.abs(f.values)))


def total_variation(f: Field) -> float:
    """Discrete total variation with jumps to the exterior value 0.

    1D: sum of neighbor jumps plus the two boundary jumps |f_1|, |f_N|.
    2D: axis-direction jumps weighted by the transverse cell length, plus
    the boundary jumps to zero on each side, consistent with extending the
    field by 0 outside the domain.
    """
    v = f.values
    if f.grid.dim == 1:
        interior = np.sum(np.abs(np.diff(v)))
        return float(interior + abs(v[0]) + abs(v[-1]))
    dx, dy = f.grid.dx
    tv_x = np.sum(np.abs(np.diff(v, axis=0))) + np.sum(np.abs(v[0, :])) + np.sum(np.abs(v[-1, :]))
    tv_y = np.sum(np.abs(np.diff(v, axis=1))) + np.sum(np.abs(v[:, 0])) + np.sum(np.abs(v[:, -1]))
    return float(tv_x * dy + tv_y * dx)


def interior_variation(f: Field) -> float:
    """Variation over the open domain only, no exterior jumps.

    The right notion for coefficient fields, which need not vanish at the
    boundary; solution fields use total_variation (zero Dirichlet extension).
    """
    v = f.values
    if f.grid.dim == 1:
        return float(np.sum(np.abs(np.diff(v))))
    dx, dy = f.grid.dx
    return float(np.sum(np.abs(np.diff(v, axis=0))) * dy
                 + np.sum(np.abs(np.diff(v, axis=1))) * dx)


def interp_values(grid: Grid, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Multilinear interpolation of cell-centered values at arbitrary points.

    ``points`` has shape (m, dim).  Beyond the outermost cell centers the
    interpolation clamps to the nearest center (constant extension), which
    keeps the interpolant defined on all of closure(Omega) and slightly
    beyond, as needed by the characteristic tracer near exits.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    idx0 = []
    frac = []
    for ax in range(grid.dim):
        lo = grid.spec.bounds[ax][0]
        h = grid.dx[ax]
        n = grid.n_cells[ax]
        pos = (pts[:, ax] - lo) / h - 0.5
        i0 = np.clip(np.floor(pos), 0, n - 2).astype(int)
        fr = np.clip(pos - i0, 0.0, 1.0)
        idx0.append(i0)
        frac.append(fr)
    if grid.dim == 1:
        i0, fr = idx0[0], frac[0]
        return (1 - fr) * values[i0] + fr * values[i0 + 1]
    i0, j0 = idx0
    fx, fy = frac
    v00 = values[i0, j0]
    v10 = values[i0 + 1, j0]
    v01 = values[i0, j0 + 1]
    v11 = values[i0 + 1, j0 + 1]
    return ((1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10
            + (1 - fx) * fy * v01 + fx * fy * v11)


def interp_field(f: Field, points: np.ndarray) -> np.ndarray:
    return interp_values(f.grid, f.values, points)


def interp_vector(vf: VectorField, points: np.ndarray) -> np.ndarray:
    """Interpolate every component; returns (m, dim)."""
    return np.stack(
        [interp_values(vf.grid, vf.components[k], points) for k in range(vf.grid.dim)],
        axis=-1,
    )


def gradient_components(values: np.ndarray, grid: Grid) -> list[np.ndarray]:
    """Per-axis derivative by central differences, one-sided at the boundary."""
    if grid.dim == 1:
        return [np.gradient(values, grid.dx[0], edge_order=2)]
    return list(np.gradient(values, *grid.dx, edge_order=2))


def divergence(vf: VectorField) -> Field:
    """Discrete divergence of a sampled velocity field."""
    total = np.zeros(vf.grid.shape)
    for k in range(vf.grid.dim):
        total += gradient_components(vf.components[k], vf.grid)[k]
    return Field(vf.grid, total)
