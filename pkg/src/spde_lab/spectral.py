"""Radial spectral measures mu(dxi) = g(|xi|^2) dxi and their covariance kernels.

Four families are supported:

    white        g(r) = 1
    riesz        g(r) = r^(-alpha/2)            (0 < alpha < dim)
    bessel       g(r) = (1 + r)^(-alpha/2)      (alpha > 0)
    heat_kernel  g(r) = exp(-4 pi^2 alpha r)    (alpha > 0)

where r stands for |xi|^2.  The covariance kernel is the inverse Fourier
transform of the measure,

    f(x) = (2 pi)^(-d) * integral exp(i xi.x) g(|xi|^2) dxi,

evaluated here as an exact lattice sum over the discrete frequency grid
(kernel_eval), which equals the extent-periodization of the continuum kernel
truncated at the Nyquist cube.

A measure admits a function-valued solution of the forced heat equation iff
the Dalang integrability condition holds,

    integral (1 + |xi|^2)^(-1) mu(dxi) < infinity,

decided in closed form per family (dalang_condition) and cross-checkable by
radial quadrature (dalang_partial_integral).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate


class Family(str, Enum):
    WHITE = "white"
    RIESZ = "riesz"
    BESSEL = "bessel"
    HEAT_KERNEL = "heat_kernel"


_ALPHA_FREE = (Family.WHITE,)


@dataclass(frozen=True)
class SpectralMeasure:
    """A radial spectral measure g(|xi|^2) dxi on R^dim.

    ``alpha`` is ignored for the white family.  ``formal`` permits Riesz
    exponents alpha >= dim for symbol-level pipelines on low-dimensional
    lattices (the measure is then not a tempered measure near xi = 0; every
    consumer records this caveat in its report metadata).
    """

    family: Family
    alpha: float = 0.0
    dim: int = 1
    formal: bool = False

    def __post_init__(self):
        if not isinstance(self.family, Family):
            object.__setattr__(self, "family", Family(self.family))
        if self.dim < 1 or int(self.dim) != self.dim:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        a = self.alpha
        if self.family is Family.RIESZ:
            if not self.formal and not (0.0 < a < self.dim):
                raise ValueError(
                    f"riesz measure requires 0 < alpha < dim, got alpha={a}, "
                    f"dim={self.dim} (pass formal=True for symbol-level use)"
                )
            if self.formal and a <= 0.0:
                raise ValueError("riesz exponent must be positive")
        elif self.family in (Family.BESSEL, Family.HEAT_KERNEL):
            if a <= 0.0:
                raise ValueError(f"{self.family.value} measure requires alpha > 0")

    # -- density -----------------------------------------------------------

    def density(self, xi_squared):
        """g evaluated on an array of squared frequencies |xi|^2.

        The Riesz density is singular at xi = 0; the zero mode is mapped to
        the sentinel value 0.0 (the convention every multiplier/quadrature in
        this package uses: the zero frequency carries no Riesz weight).
        """
        r = np.asarray(xi_squared, dtype=float)
        if self.family is Family.WHITE:
            return np.ones_like(r)
        if self.family is Family.BESSEL:
            return (1.0 + r) ** (-self.alpha / 2.0)
        if self.family is Family.HEAT_KERNEL:
            return np.exp(-4.0 * math.pi**2 * self.alpha * r)
        # riesz: |xi|^(-alpha) with zero-mode sentinel
        with np.errstate(divide="ignore"):
            out = np.where(r > 0.0, r ** (-self.alpha / 2.0), 0.0)
        return out

    def to_dict(self) -> dict:
        d = {"family": self.family.value, "alpha": float(self.alpha), "dim": int(self.dim)}
        if self.formal:
            d["formal"] = True
        return d

    @staticmethod
    def from_dict(d: dict) -> "SpectralMeasure":
        return SpectralMeasure(
            family=Family(d["family"]),
            alpha=float(d.get("alpha", 0.0)),
            dim=int(d["dim"]),
            formal=bool(d.get("formal", False)),
        )


def density(m: SpectralMeasure, xi) -> float:
    """g(|xi|^2) for a single frequency vector xi (zero-mode sentinel applies)."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (m.dim,):
        raise ValueError(f"expected a frequency vector of length {m.dim}, got shape {xi.shape}")
    return float(m.density(np.dot(xi, xi)))


def dalang_condition(m: SpectralMeasure) -> bool:
    """Closed-form decision of integral (1+|xi|^2)^(-1) mu(dxi) < infinity.

    white: dim <= 1; riesz and bessel: alpha > dim - 2; heat_kernel: True.
    """
    if m.family is Family.WHITE:
        return m.dim <= 1
    if m.family in (Family.RIESZ, Family.BESSEL):
        return m.alpha > m.dim - 2
    return True


def _sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def dalang_partial_integral(m: SpectralMeasure, radius: float) -> float:
    """integral_{|xi| <= radius} (1+|xi|^2)^(-1) mu(dxi) by radial quadrature.

    Divergence of the full integral shows up as unbounded growth of these
    partial integrals as radius increases; convergence as saturation.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    d = m.dim

    def integrand(r):
        return r ** (d - 1) * m.density(r * r) / (1.0 + r * r)

    val, _ = integrate.quad(integrand, 0.0, radius, limit=200)
    return _sphere_area(d) * val


def truncation_tail(m: SpectralMeasure, radius: float) -> float:
    """integral_{|xi| > radius} (1+|xi|^2)^(-1) mu(dxi); inf when divergent.

    This is the quantitative truncation error of restricting the measure to a
    lattice frequency grid with Nyquist radius ``radius``; reports embed it.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if not dalang_condition(m):
        return float("inf")
    d = m.dim

    def integrand(r):
        return r ** (d - 1) * m.density(r * r) / (1.0 + r * r)

    val, _ = integrate.quad(integrand, radius, np.inf, limit=200)
    return _sphere_area(d) * val


def density_integrable(m: SpectralMeasure) -> bool:
    """Whether integral g(|xi|^2) dxi < infinity (kernel is a bounded function).

    When false the kernel is a distribution; its lattice evaluation is still
    well-defined (finite frequency grid) but carries an aliasing caveat.
    """
    if m.family is Family.HEAT_KERNEL:
        return True
    if m.family is Family.BESSEL:
        return m.alpha > m.dim
    return False  # white and riesz tails are not integrable


def kernel_eval(m: SpectralMeasure, lattice):
    """Covariance kernel f sampled on the spatial lattice.

    f(x) = (2 pi)^(-d) sum_xi g(|xi|^2) exp(i xi.x) dxi-cell
         = ifftn(g on the frequency grid) / (spatial cell volume),

    which is real, even under x -> -x (periodic wraparound), and equals the
    extent-periodization of the continuum kernel truncated at Nyquist.
    Emits a warning when the density is not absolutely integrable (kernel only
    exists as a distribution; lattice values are periodization-limited).
    """
    from . import lattice as lat  # local import to keep lattice free of this module

    if m.dim != lattice.dim:
        raise ValueError(f"measure dim {m.dim} != lattice dim {lattice.dim}")
    if not density_integrable(m):
        warnings.warn(
            f"{m.family.value} density is not absolutely integrable: kernel values "
            "are aliasing-limited lattice periodizations",
            RuntimeWarning,
            stacklevel=2,
        )
    g = m.density(lattice.xi_squared)
    values = np.fft.ifftn(g) / lattice.cell_volume
    return lat.Field(lattice, lat.Representation.PHYSICAL, lat.Layout.SPACE_ONLY,
                     values.astype(np.complex128))


def heat_kernel_closed_form(m: SpectralMeasure, lattice) -> np.ndarray:
    """Closed-form heat-family kernel on the lattice, for cross-validation.

    Under this package's conventions the heat-family measure
    g = exp(-4 pi^2 alpha |xi|^2) has kernel

        f(x) = (2 pi)^(-d) (pi / (4 pi^2 alpha))^(d/2) exp(-|x|^2 / (16 pi^2 alpha)),

    i.e. a Gaussian bump of variance proportional to alpha; returned here as
    its extent-periodization (three images per axis, enough at the tolerances
    used since the Gaussian tail is negligible for the lattices involved).
    """
    if m.family is not Family.HEAT_KERNEL:
        raise ValueError("closed form only available for the heat_kernel family")
    d = m.dim
    a = 4.0 * math.pi**2 * m.alpha
    pref = (2.0 * math.pi) ** (-d) * (math.pi / a) ** (d / 2.0)
    out = np.zeros(lattice.n_space, dtype=float)
    coords = lattice.space_axes()
    for shifts in np.ndindex(*(3,) * d):
        r2 = np.zeros(lattice.n_space, dtype=float)
        for ax in range(d):
            shifted = coords[ax] + (shifts[ax] - 1) * lattice.extent[ax]
            shape = [1] * d
            shape[ax] = -1
            r2 = r2 + shifted.reshape(shape) ** 2
        out += np.exp(-r2 / (4.0 * a))
    return pref * out
