"""Fractional Laplacian-type operators as radial Fourier multipliers.

Operator kinds and symbols (on the angular frequency grid, r = |xi|^2):

    bessel_potential(gamma)   (1 + r)^(-gamma/2)      # (1 - Lap)^(-gamma/2)
    riesz_potential(beta)     r^(-beta/2), 0 at xi=0  # I^beta
    riesz_derivative(beta)    r^(beta/2)              # D^beta
    laplacian_power(k)        r^k                     # (-Lap)^k
    identity                  1

riesz_derivative(2k) is the two-sided inverse of riesz_potential(2k) on
mean-zero fields (both kill the zero mode).  operator_J implements the
unitary J from the covariance pairing of a Riesz measure of order 4k into
plain space-time L2: F(J phi) = |xi|^(-2k) F(phi), which satisfies
||J phi||_L2 = ||phi||_0 exactly on the lattice.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .lattice import Field, Layout, apply_multiplier, l2_norm
from .spectral import Family, SpectralMeasure
from .bumps import support_mask


class OperatorKind(str, Enum):
    BESSEL_POTENTIAL = "bessel_potential"
    RIESZ_POTENTIAL = "riesz_potential"
    RIESZ_DERIVATIVE = "riesz_derivative"
    LAPLACIAN_POWER = "laplacian_power"
    IDENTITY = "identity"


@dataclass(frozen=True)
class OperatorSpec:
    kind: OperatorKind
    order: float = 0.0

    def __post_init__(self):
        if not isinstance(self.kind, OperatorKind):
            object.__setattr__(self, "kind", OperatorKind(self.kind))
        if self.kind in (OperatorKind.RIESZ_POTENTIAL, OperatorKind.RIESZ_DERIVATIVE):
            if self.order <= 0:
                raise ValueError(f"{self.kind.value} requires a positive order")
        if self.kind is OperatorKind.LAPLACIAN_POWER:
            if self.order < 0 or int(self.order) != self.order:
                raise ValueError("laplacian_power requires a nonnegative integer order")

    def symbol(self, xi_squared: np.ndarray) -> np.ndarray:
        r = np.asarray(xi_squared, dtype=float)
        if self.kind is OperatorKind.IDENTITY:
            return np.ones_like(r)
        if self.kind is OperatorKind.BESSEL_POTENTIAL:
            return (1.0 + r) ** (-self.order / 2.0)
        if self.kind is OperatorKind.LAPLACIAN_POWER:
            return r ** int(self.order)
        if self.kind is OperatorKind.RIESZ_DERIVATIVE:
            return np.where(r > 0.0, r ** (self.order / 2.0), 0.0)
        # riesz potential: zero-mode sentinel 0
        with np.errstate(divide="ignore"):
            return np.where(r > 0.0, r ** (-self.order / 2.0), 0.0)


def bessel_potential(gamma: float) -> OperatorSpec:
    return OperatorSpec(OperatorKind.BESSEL_POTENTIAL, gamma)


def riesz_potential(beta: float) -> OperatorSpec:
    return OperatorSpec(OperatorKind.RIESZ_POTENTIAL, beta)


def riesz_derivative(beta: float) -> OperatorSpec:
    return OperatorSpec(OperatorKind.RIESZ_DERIVATIVE, beta)


def laplacian_power(k: int) -> OperatorSpec:
    return OperatorSpec(OperatorKind.LAPLACIAN_POWER, k)


def apply(op: OperatorSpec, f: Field) -> Field:
    """Apply the operator's Fourier multiplier (any layout, any representation)."""
    return apply_multiplier(f, op.symbol)


def remove_mean(f: Field) -> Field:
    """Project out the spatial zero mode (per time slice)."""
    def sym(r):
        out = np.ones_like(np.asarray(r, dtype=float))
        out.flat[0] = 0.0  # FFT-order grid has xi = 0 at the flat origin
        return out
    return apply_multiplier(f, sym)


def operator_J(phi: Field, m: SpectralMeasure, formal: bool = False) -> Field:
    """The unitary J from the Riesz covariance pairing into space-time L2.

    Requires a Riesz measure with alpha = 4k.  The Sobolev-embedding
    constraint 2 < dim/(2k) is enforced unless ``formal`` is set (symbol-level
    mode on low-dimensional lattices).  F(J phi) = |xi|^(-2k) F(phi); the zero
    mode is annihilated, matching the zero-mode convention of the pairing.
    """
    if m.family is not Family.RIESZ:
        raise ValueError("operator_J is defined for Riesz measures only")
    k4 = m.alpha / 4.0
    if abs(k4 - round(k4)) > 1e-12 or round(k4) < 1:
        raise ValueError(f"operator_J requires alpha = 4k for integer k >= 1, got alpha={m.alpha}")
    k = int(round(k4))
    if not formal and not (2 * k < m.dim / 2.0):
        raise ValueError(
            f"embedding constraint 2 < dim/(2k) fails for dim={m.dim}, k={k}; "
            "pass formal=True for symbol-level use"
        )
    return apply(riesz_potential(2 * k), phi)


def localization_check(kappa: Field, chi: Field, k: int, min_sep_cells: int = 4) -> dict:
    """Commutator defect of the 2k-th Riesz derivative against a cutoff.

    For kappa = mu + nu with separated supports and chi a smooth cutoff that
    is 1 on supp(mu) and 0 near supp(nu), the continuum identity
    D^(2k)(chi * kappa) = chi * D^(2k) kappa restricted to supp-compatible
    regions holds; on the lattice the relative gap

        ||D^(2k)(chi kappa) - chi D^(2k) kappa||_L2 / ||D^(2k) kappa||_L2

    is a pure discretization floor that shrinks under refinement.  Raises if
    the transition region of chi overlaps the support of kappa by fewer than
    ``min_sep_cells`` cells (the identity then has no reason to hold).
    """
    if kappa.lattice != chi.lattice:
        raise ValueError("kappa and chi live on different lattices")
    if kappa.layout is not Layout.SPACE_ONLY or chi.layout is not Layout.SPACE_ONLY:
        raise ValueError("localization_check expects space-only fields")
    if k < 1 or int(k) != k:
        raise ValueError("k must be a positive integer")
    chi_vals = chi.values.real
    transition = (np.abs(chi_vals) > 1e-12) & (np.abs(chi_vals - 1.0) > 1e-12)
    kappa_supp = support_mask(kappa)
    if np.any(transition & kappa_supp):
        raise ValueError("cutoff transition region overlaps the support of kappa")
    op = riesz_derivative(2 * k)
    d_kappa = apply(op, kappa)
    prod = Field(kappa.lattice, kappa.representation, kappa.layout,
                 chi.values * kappa.values)
    lhs = apply(op, prod)
    rhs = Field(kappa.lattice, kappa.representation, kappa.layout,
                chi.values * d_kappa.values)
    diff = Field(kappa.lattice, kappa.representation, kappa.layout,
                 lhs.values - rhs.values)
    denom = l2_norm(d_kappa)
    gap = l2_norm(diff) / denom if denom > 0 else 0.0
    return {"gap": float(gap), "k": int(k), "denom": float(denom)}


def q_exponent(dim: int, k: int) -> float:
    """The companion integrability exponent q with 1/q = 1/2 - 2k/dim.

    Only meaningful when 2k < dim/2 (the genuine-embedding regime)."""
    inv = 0.5 - 2.0 * k / dim
    if inv <= 0:
        raise ValueError(f"1/q = 1/2 - 2k/dim must be positive; got dim={dim}, k={k}")
    return 1.0 / inv


def mixed_time_space_norm(f: Field, q: float) -> float:
    """( sum_t dt * ( sum_x |f|^q dx^d )^(2/q) )^(1/2), left endpoint in time."""
    if f.layout is not Layout.SPACE_TIME:
        raise ValueError("mixed norm is defined for space-time fields")
    if q <= 0:
        raise ValueError("q must be positive")
    from .lattice import as_physical
    lat = f.lattice
    vals = np.abs(as_physical(f).values[:-1])
    spatial = np.sum(vals**q, axis=tuple(range(1, lat.dim + 1))) * lat.cell_volume
    return float(np.sqrt(np.sum(spatial ** (2.0 / q)) * lat.dt))
