"""Smooth compactly supported bumps and cutoffs on periodic lattices.

These are the C-infinity mollifier-style profiles used as test data by the
orthogonality, localization and convergence studies: exactly zero outside
their stated support, infinitely differentiable inside, so their spectral
tails decay faster than any power and discretization floors shrink rapidly
under grid refinement.
"""

from __future__ import annotations

import numpy as np

from .lattice import Field, Layout, Representation, SpaceTimeLattice


def mollifier(r) -> np.ndarray:
    """exp(1 - 1/(1 - r^2)) for |r| < 1, zero outside; peak value 1 at r = 0."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    mask = np.abs(r) < 1.0
    rm = r[mask]
    out[mask] = np.exp(1.0 - 1.0 / (1.0 - rm * rm))
    return out


def smooth_step(u) -> np.ndarray:
    """C-infinity transition: 0 for u <= 0, 1 for u >= 1, monotone between."""
    u = np.asarray(u, dtype=float)
    def half(v):
        out = np.zeros_like(v)
        mask = v > 0.0
        out[mask] = np.exp(-1.0 / v[mask])
        return out
    a = half(u)
    b = half(1.0 - u)
    return a / (a + b)


def _radial2(lattice: SpaceTimeLattice, center, width) -> np.ndarray:
    """Squared scaled torus distance sum_ax ((x - c)_wrapped / w)^2."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    width = np.broadcast_to(np.asarray(width, dtype=float), (lattice.dim,))
    r2 = np.zeros(lattice.n_space, dtype=float)
    for ax in range(lattice.dim):
        L = lattice.extent[ax]
        x = lattice.space_axes()[ax]
        diff = (x - center[ax] + L / 2.0) % L - L / 2.0
        shape = [1] * lattice.dim
        shape[ax] = -1
        r2 = r2 + (diff / width[ax]).reshape(shape) ** 2
    return r2


def spatial_bump(lattice: SpaceTimeLattice, center, width, amplitude: float = 1.0) -> Field:
    """Space-only mollifier bump supported in the ellipsoid of semi-axes ``width``."""
    vals = amplitude * mollifier(np.sqrt(_radial2(lattice, center, width)))
    return Field(lattice, Representation.PHYSICAL, Layout.SPACE_ONLY,
                 vals.astype(np.complex128))


def time_profile(lattice: SpaceTimeLattice, t_center: float, t_width: float) -> np.ndarray:
    """Mollifier profile over the time slices, zero outside (t_center +- t_width)."""
    t = lattice.times()
    return mollifier((t - t_center) / t_width)


def space_time_bump(lattice: SpaceTimeLattice, t_center: float, t_width: float,
                    center, width, amplitude: float = 1.0) -> Field:
    """Product bump: mollifier in time times mollifier ellipsoid in space."""
    prof = time_profile(lattice, t_center, t_width)
    space = amplitude * mollifier(np.sqrt(_radial2(lattice, center, width)))
    vals = prof.reshape((-1,) + (1,) * lattice.dim) * space
    return Field(lattice, Representation.PHYSICAL, Layout.SPACE_TIME,
                 vals.astype(np.complex128))


def radial_cutoff(lattice: SpaceTimeLattice, center, inner_radius: float,
                  outer_radius: float) -> Field:
    """Space-only cutoff: 1 inside radius ``inner_radius`` of ``center``,
    0 outside ``outer_radius``, C-infinity transition between."""
    if not 0.0 < inner_radius < outer_radius:
        raise ValueError("need 0 < inner_radius < outer_radius")
    r = np.sqrt(_radial2(lattice, center, 1.0))
    vals = 1.0 - smooth_step((r - inner_radius) / (outer_radius - inner_radius))
    return Field(lattice, Representation.PHYSICAL, Layout.SPACE_ONLY,
                 vals.astype(np.complex128))


def broadcast_in_time(f: Field) -> Field:
    """Tile a space-only physical field across all time slices."""
    if f.layout is not Layout.SPACE_ONLY:
        raise ValueError("expected a space-only field")
    g = f if f.representation is Representation.PHYSICAL else None
    if g is None:
        raise ValueError("expected a physical-representation field")
    lat = f.lattice
    vals = np.broadcast_to(f.values, (lat.n_time + 1,) + lat.n_space).copy()
    return Field(lat, Representation.PHYSICAL, Layout.SPACE_TIME, vals)


def support_mask(f: Field, rel_tol: float = 1e-12) -> np.ndarray:
    """Boolean mask where |values| exceeds rel_tol times the field maximum."""
    a = np.abs(f.values)
    scale = float(a.max())
    if scale == 0.0:
        return np.zeros_like(a, dtype=bool)
    return a > rel_tol * scale
