"""Radial averaging kernel, boundary-renormalized convolution, nonlocal drift.

The drift species senses the diffusing species through a spatial average: a
compactly supported radial kernel of horizon ``ell`` is convolved with the
density, and near the boundary the average is renormalized by the kernel
mass remaining inside the domain, so the average of a constant stays that
constant at every cell.  The drift velocity points along the gradient of
the averaged density, with speed kappa * |g| / sqrt(1 + |g|^2) <= kappa.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate, ndimage

from .grid import (Field, Grid, VectorField, divergence, gradient_components,
                   norm_l1, norm_linf)


class HorizonTooSmall(ValueError):
    """Kernel horizon must span more than two cells."""


class DegenerateSample(ValueError):
    """A zero-mass sample produced a nonzero velocity."""


def radial_profile(r, ell: float, ell_bar: float):
    """Quartic bump profile: ell_bar * (ell^4 - r^4)^4 on [0, ell], 0 beyond."""
    r = np.asarray(r, dtype=float)
    inside = r <= ell
    vals = np.where(inside, ell_bar * np.clip(ell**4 - r**4, 0.0, None) ** 4, 0.0)
    return vals


def _normalization(ell: float, dim: int) -> float:
    """Normalize so the kernel integrates to 1 over R^dim (radial quadrature)."""
    if dim == 1:
        mass, _ = integrate.quad(lambda r: (ell**4 - r**4) ** 4, 0.0, ell, limit=200)
        return 1.0 / (2.0 * mass)
    mass, _ = integrate.quad(lambda r: (ell**4 - r**4) ** 4 * r, 0.0, ell, limit=200)
    return 1.0 / (2.0 * np.pi * mass)


@dataclass(frozen=True)
class Kernel:
    """Discretized averaging kernel bound to one grid.

    ``weights`` is the full stencil window (midpoint samples of the profile,
    renormalized so the window sums to exactly 1/cell_volume), and
    ``denominators`` the per-cell window mass clipped to the domain, in
    (0, 1].  Immutable; safe to share.
    """

    grid: Grid
    ell: float
    ell_bar: float
    weights: np.ndarray
    denominators: np.ndarray

    @property
    def radius_cells(self) -> tuple[int, ...]:
        return tuple((s - 1) // 2 for s in self.weights.shape)


def make_kernel(ell: float, grid: Grid) -> Kernel:
    if ell <= 2.0 * max(grid.dx):
        raise HorizonTooSmall(
            f"horizon {ell} must exceed twice the largest spacing {max(grid.dx)}"
        )
    ell_bar = _normalization(ell, grid.dim)
    radii = tuple(int(np.floor(ell / h)) for h in grid.dx)
    axes = [np.arange(-r, r + 1) * h for r, h in zip(radii, grid.dx)]
    if grid.dim == 1:
        dist = np.abs(axes[0])
    else:
        gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
        dist = np.sqrt(gx**2 + gy**2)
    weights = radial_profile(dist, ell, ell_bar)
    # Discrete renormalization: the full window then carries unit mass exactly,
    # so interior averages of a constant reproduce the constant to rounding.
    weights = weights / (weights.sum() * grid.cell_volume)
    weights.setflags(write=False)
    ones = np.ones(grid.shape)
    denominators = ndimage.correlate(ones, weights, mode="constant", cval=0.0) * grid.cell_volume
    denominators.setflags(write=False)
    return Kernel(grid, float(ell), float(ell_bar), weights, denominators)


def modified_convolution(rho: Field, kernel: Kernel) -> Field:
    """Average of rho around each cell, renormalized by the in-domain kernel mass."""
    num = ndimage.correlate(rho.values, kernel.weights, mode="constant", cval=0.0)
    return Field(rho.grid, num * rho.grid.cell_volume / kernel.denominators)


def velocity(w: Field, kernel: Kernel, kappa: float, attract: int = 1) -> VectorField:
    """Nonlocal drift: attract * kappa * g / sqrt(1 + |g|^2), g = grad(w averaged).

    attract=+1 points toward higher averaged density, -1 away from it.  The
    speed is capped by kappa by construction.
    """
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if attract not in (1, -1):
        raise ValueError("attract must be +1 or -1")
    conv = modified_convolution(w, kernel)
    grads = gradient_components(conv.values, w.grid)
    gnorm2 = np.zeros(w.grid.shape)
    for g in grads:
        gnorm2 += g**2
    scale = attract * kappa / np.sqrt(1.0 + gnorm2)
    comps = np.stack([g * scale for g in grads], axis=0)
    return VectorField(w.grid, comps)


def _max_derivative(vf: VectorField) -> float:
    """max over components and axes of |d v_k / d x_j|."""
    worst = 0.0
    for k in range(vf.grid.dim):
        for g in gradient_components(vf.components[k], vf.grid):
            worst = max(worst, float(np.max(np.abs(g))))
    return worst


def second_derivative_l1(vf: VectorField) -> float:
    """L1 norm of the max-entry second-derivative tensor of the velocity."""
    grid = vf.grid
    worst = np.zeros(grid.shape)
    for k in range(grid.dim):
        firsts = gradient_components(vf.components[k], grid)
        for g in firsts:
            for gg in gradient_components(g, grid):
                worst = np.maximum(worst, np.abs(gg))
    return float(np.sum(worst) * grid.cell_volume)


@dataclass(frozen=True)
class HypothesisVReport:
    """Empirical quotients backing the nonlocal-velocity hypothesis.

    k_v: max over samples of speed/gradient/Lipschitz quotients against the
    L1 norm of the density; c_v: max of the div-Lipschitz and second
    derivative quotients.  Both feed the coupled bound ledger.
    """

    speed_quotient: float
    gradient_quotient: float
    lipschitz_quotient: float
    div_lipschitz_quotient: float
    second_derivative_quotient: float
    n_samples: int

    @property
    def k_v(self) -> float:
        return max(self.speed_quotient, self.gradient_quotient, self.lipschitz_quotient)

    @property
    def c_v(self) -> float:
        return max(self.div_lipschitz_quotient, self.second_derivative_quotient)


def verify_hypothesis_v(kernel: Kernel, kappa: float, sample_fields: list[Field],
                        attract: int = 1) -> HypothesisVReport:
    """Measure the velocity-hypothesis quotients over the given density samples.

    Pairs of samples feed the Lipschitz and divergence-Lipschitz quotients;
    a zero-mass sample with a nonzero velocity raises DegenerateSample.
    """
    if not sample_fields:
        raise ValueError("need at least one sample field")
    vels = [velocity(w, kernel, kappa, attract) for w in sample_fields]
    masses = [norm_l1(w) for w in sample_fields]
    speed_q = grad_q = 0.0
    second_q = 0.0
    for w, v, m in zip(sample_fields, vels, masses):
        vmax = float(np.max(v.magnitude()))
        if m <= 0.0:
            if vmax > 1e-12:
                raise DegenerateSample(
                    f"zero-mass sample with velocity max {vmax}; contradicts the speed bound"
                )
            continue
        speed_q = max(speed_q, vmax / m)
        grad_q = max(grad_q, _max_derivative(v) / m)
        second_q = max(second_q, second_derivative_l1(v) / m)
    lips_q = div_q = 0.0
    for i in range(len(sample_fields)):
        for j in range(i + 1, len(sample_fields)):
            dw = norm_l1(Field(kernel.grid, sample_fields[i].values - sample_fields[j].values))
            if dw <= 0.0:
                continue
            dv = float(np.max(np.abs(vels[i].components - vels[j].components)))
            lips_q = max(lips_q, dv / dw)
            ddiv = norm_linf(
                Field(kernel.grid, divergence(vels[i]).values - divergence(vels[j]).values)
            )
            div_q = max(div_q, ddiv / dw)
    return HypothesisVReport(
        speed_quotient=speed_q,
        gradient_quotient=grad_q,
        lipschitz_quotient=lips_q,
        div_lipschitz_quotient=div_q,
        second_derivative_quotient=second_q,
        n_samples=len(sample_fields),
    )
