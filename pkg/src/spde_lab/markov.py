"""Numerical germ-Markov probes: covariance structure and locality experiments.

The zero-initial-data solution field is Gaussian with covariance

    R((t,x),(s,y)) = (2 pi)^-d sum_xi g(|xi|^2) dxi^d cos(xi.(x-y))
                     * (exp(-|t-s| |xi|^2) - exp(-(t+s) |xi|^2)) / (2 |xi|^2),

(time factor t ^ s at the zero mode), which matches the sampled process
exactly at grid times.  On top of it sit three experiments:

- conditional-covariance screening: condition interior and exterior point
  sets on a boundary band and measure the largest residual correlation;
- orthogonality of representer elements built from disjointly supported
  bumps (locality of the Dirichlet form for even-order Bessel measures);
- decomposition stability: cutting one element into two by a smooth spatial
  cutoff and checking Pythagoras for the pair.

All Markov-type assertions here are comparative (even order vs. fractional
control) and refinement-monotone; a finite lattice is never exactly Markov.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .bumps import support_mask
from .errors import InvariantViolation
from .lattice import Field, Layout, Representation, SpaceTimeLattice, as_physical
from .rkhs import RkhsElement, element_from_h, krylov_norm, rkhs_inner, rkhs_inner_raw
from .spectral import Family, SpectralMeasure


def _time_factor(lam: np.ndarray, t: float, s: float) -> np.ndarray:
    """(exp(-lam |t-s|) - exp(-lam (t+s))) / (2 lam), continuous value t^s at 0."""
    t_min = min(t, s)
    gap = abs(t - s)
    with np.errstate(divide="ignore", invalid="ignore"):
        body = np.exp(-lam * gap) * (-np.expm1(-2.0 * lam * t_min)) / np.where(
            lam > 0.0, 2.0 * lam, 1.0)
    return np.where(lam > 0.0, body, t_min)


def covariance_oracle(measure: SpectralMeasure, lattice: SpaceTimeLattice,
                      p, q) -> float:
    """E u(p) u(q) for p = (t, (x...)), q = (s, (y...)), coordinates physical."""
    t, x = p
    s, y = q
    if not (0.0 <= t <= lattice.t_max and 0.0 <= s <= lattice.t_max):
        raise ValueError("times must lie in [0, t_max]")
    lam = lattice.xi_squared
    phase = np.zeros(lattice.n_space)
    for ax in range(lattice.dim):
        shape = [1] * lattice.dim
        shape[ax] = -1
        phase = phase + (lattice.xi_component(ax)
                         * (x[ax] - y[ax])).reshape(shape)
    g = measure.density(lam)
    c = (2.0 * np.pi) ** (-lattice.dim)
    return float(c * lattice.freq_cell_volume
                 * np.sum(g * np.cos(phase) * _time_factor(lam, t, s)))


@dataclass
class CovarianceMatrix:
    """Dense covariance over a finite point set, validated PSD."""

    points: list              # [(t, (x...)), ...]
    values: np.ndarray        # (P, P) symmetric PSD
    measure: SpectralMeasure
    lattice: SpaceTimeLattice
    meta: dict = field(default_factory=dict)


def assemble_covariance(measure: SpectralMeasure, lattice: SpaceTimeLattice,
                        points) -> CovarianceMatrix:
    """Full covariance matrix over ``points`` via the frequency-sum oracle.

    Assembled mode by mode with exactly symmetric rank-2 updates.  The
    spectrum is then validated: eigenvalues below -1e-10 * trace abort
    (quadrature inconsistency); a tiny negative tail inside that tolerance is
    clipped to zero (PSD projection) and recorded in ``meta``.
    """
    points = [(float(t), tuple(float(c) for c in x)) for t, x in points]
    P = len(points)
    if P > 4096:
        raise ValueError("dense covariance limited to 4096 points")
    t_arr = np.array([p[0] for p in points])
    if np.any(t_arr < 0) or np.any(t_arr > lattice.t_max):
        raise ValueError("times must lie in [0, t_max]")
    x_arr = np.array([p[1] for p in points])  # (P, d)

    gap = np.abs(t_arr[:, None] - t_arr[None, :])
    t_min = np.minimum(t_arr[:, None], t_arr[None, :])

    lam_flat = lattice.xi_squared.ravel()
    g_flat = measure.density(lattice.xi_squared).ravel()
    xi_mat = np.stack([np.broadcast_to(
        lattice.xi_component(ax).reshape([1] * ax + [-1] + [1] * (lattice.dim - 1 - ax)),
        lattice.n_space).ravel() for ax in range(lattice.dim)], axis=1)  # (N, d)

    c = (2.0 * np.pi) ** (-lattice.dim) * lattice.freq_cell_volume
    R = np.zeros((P, P))
    order = np.argsort(lam_flat)  # sum low modes last: they carry most weight
    for idx in order[::-1]:
        w = c * g_flat[idx]
        if w == 0.0:
            continue
        lam = lam_flat[idx]
        if lam > 0.0:
            tf = np.exp(-lam * gap) * (-np.expm1(-2.0 * lam * t_min)) / (2.0 * lam)
        else:
            tf = t_min
        ph = x_arr @ xi_mat[idx]  # (P,)
        cp, sp = np.cos(ph), np.sin(ph)
        R += (w * tf) * (np.outer(cp, cp) + np.outer(sp, sp))

    trace = float(np.trace(R))
    eigvals, eigvecs = np.linalg.eigh(R)
    min_eig = float(eigvals[0])
    tol = 1e-10 * max(trace, 1e-300)
    if min_eig < -tol:
        raise InvariantViolation(
            f"covariance matrix indefinite: min eigenvalue {min_eig:.3e} "
            f"below -1e-10 * trace = {-tol:.3e}")
    projected = False
    if min_eig < 0.0:
        clipped = np.maximum(eigvals, 0.0)
        R = (eigvecs * clipped) @ eigvecs.T
        R = 0.5 * (R + R.T)
        projected = True
    return CovarianceMatrix(points, R, measure, lattice,
                            {"min_eig": min_eig, "trace": trace,
                             "psd_projected": projected})


@dataclass
class RegionPartition:
    """Inside / boundary-band / outside split of a point set.

    The region is an open axis-aligned rectangle in (t, x); distances are
    signed Chebyshev distances to its boundary measured in lattice-cell
    units per axis (positive inside).  The band collects every point within
    ``band_width`` of the boundary, from either side.
    """

    rect: tuple               # ((lo, hi) per axis, index units, time first)
    band_width: float
    inside: np.ndarray
    band: np.ndarray
    outside: np.ndarray

    @property
    def sizes(self) -> dict:
        return {"inside": int(self.inside.size), "band": int(self.band.size),
                "outside": int(self.outside.size)}


def region_partition(lattice: SpaceTimeLattice, points, rect_physical,
                     band_width: float) -> RegionPartition:
    """Partition ``points`` around the rectangle given in physical (t, x) coords.

    ``rect_physical`` is ((t_lo, t_hi), (x_lo, x_hi) per spatial axis);
    ``band_width`` is in cell units.
    """
    if band_width <= 0:
        raise ValueError("band width must be positive")
    cells = [lattice.dt] + [lattice.extent[ax] / lattice.n_space[ax]
                            for ax in range(lattice.dim)]
    rect_idx = tuple((lo / cell, hi / cell)
                     for (lo, hi), cell in zip(rect_physical, cells))
    signed = np.zeros(len(points))
    for i, (t, x) in enumerate(points):
        coords = [t / cells[0]] + [x[ax] / cells[1 + ax]
                                   for ax in range(lattice.dim)]
        margins = []
        deficits = []
        for c, (lo, hi) in zip(coords, rect_idx):
            margins.append(min(c - lo, hi - c))
            deficits.append(max(lo - c, c - hi, 0.0))
        if all(m > 0 for m in margins):
            signed[i] = min(margins)
        else:
            signed[i] = -max(deficits)
    inside = np.nonzero(signed > band_width)[0]
    band = np.nonzero(np.abs(signed) <= band_width)[0]
    outside = np.nonzero(signed < -band_width)[0]
    return RegionPartition(rect_idx, band_width, inside, band, outside)


def conditional_cov_screen(C: CovarianceMatrix, part: RegionPartition) -> dict:
    """Largest |conditional correlation| between inside and outside given the band.

    Computes S_IO - S_IB S_BB^{-1} S_BO with ridge 1e-10 * trace(S_BB) on the
    band block (covariances of smooth kernels are severely ill-conditioned),
    normalized by the conditional standard deviations on both sides.  The
    statistic is symmetric under swapping inside and outside.
    """
    if part.band.size == 0:
        raise ValueError("band set is empty")
    report = {"band_width": part.band_width, **part.sizes}
    if part.inside.size == 0 or part.outside.size == 0:
        report.update({"max_abs_cond_corr": 0.0, "ridge": 0.0})
        return report
    S = C.values
    I, B, O = part.inside, part.band, part.outside
    S_bb = S[np.ix_(B, B)].copy()
    ridge = 1e-10 * float(np.trace(S_bb))
    S_bb[np.diag_indices_from(S_bb)] += ridge
    try:
        chol = cho_factor(S_bb, lower=True)
    except np.linalg.LinAlgError as exc:
        raise InvariantViolation(f"band block not factorizable: {exc}") from exc
    K_bi = cho_solve(chol, S[np.ix_(B, I)])
    K_bo = cho_solve(chol, S[np.ix_(B, O)])
    cond_io = S[np.ix_(I, O)] - S[np.ix_(I, B)] @ K_bo
    var_i = np.diag(S[np.ix_(I, I)]) - np.sum(S[np.ix_(I, B)].T * K_bi, axis=0)
    var_o = np.diag(S[np.ix_(O, O)]) - np.sum(S[np.ix_(O, B)].T * K_bo, axis=0)
    floor = 1e-12 * float(np.max(np.diag(S)))
    denom = np.sqrt(np.outer(np.maximum(var_i, floor), np.maximum(var_o, floor)))
    corr = np.abs(cond_io) / denom
    bb_eigs = np.linalg.eigvalsh(S[np.ix_(B, B)])
    report.update({
        "max_abs_cond_corr": float(corr.max()),
        "ridge": ridge,
        "band_condition_number": float(bb_eigs[-1] / max(bb_eigs[0] + ridge, 1e-300)),
    })
    return report


def band_width_study(C: CovarianceMatrix, rect_physical, widths,
                     partition_lattice: SpaceTimeLattice | None = None) -> dict:
    """Screening statistic across band widths on one assembled matrix.

    ``partition_lattice`` sets the cell units in which band widths are
    measured.  It defaults to the matrix's own lattice, but should be the
    coarser observation grid whenever the covariance was assembled on a
    finer quadrature lattice.
    """
    widths = list(widths)
    if not widths:
        raise ValueError("band width list is empty")
    lattice = C.lattice if partition_lattice is None else partition_lattice
    rows = []
    for w in widths:
        part = region_partition(lattice, C.points, rect_physical, w)
        rows.append(conditional_cov_screen(C, part))
    stats = [r["max_abs_cond_corr"] for r in rows]
    return {"rows": rows,
            "non_increasing": bool(all(b <= a * (1 + 1e-12) for a, b
                                       in zip(stats, stats[1:])))}


# -- locality experiments ------------------------------------------------------


def _spatial_separation_cells(a: Field, b: Field) -> float:
    """Minimum toroidal Chebyshev distance (cells) between spatial supports."""
    lat = a.lattice
    mask_a = support_mask(as_physical(a))
    mask_b = support_mask(as_physical(b))
    # collapse time: a spatial site is occupied if any time slice uses it
    if a.layout is Layout.SPACE_TIME:
        mask_a = mask_a.any(axis=0)
    if b.layout is Layout.SPACE_TIME:
        mask_b = mask_b.any(axis=0)
    coords_a = np.argwhere(mask_a)
    coords_b = np.argwhere(mask_b)
    if coords_a.size == 0 or coords_b.size == 0:
        return math.inf
    best = math.inf
    n = np.array(lat.n_space)
    for chunk_start in range(0, coords_a.shape[0], 512):
        ca = coords_a[chunk_start:chunk_start + 512]
        diff = np.abs(ca[:, None, :] - coords_b[None, :, :])
        diff = np.minimum(diff, n[None, None, :] - diff)
        best = min(best, float(diff.max(axis=2).min()))
    return best


def kunsch_orthogonality(measure: SpectralMeasure, h_bump: Field, g_bump: Field,
                         min_sep_cells: int = 8) -> dict:
    """Normalized covariance pairing of elements built from disjoint bumps.

    Each bump is promoted to a representer element by the exact chain
    inversion (phi1 = dh/dt - Lap h discretely, then the inverse density
    multiplier).  Returns |<phi_h, phi_g>_0| / (||phi_h||_0 ||phi_g||_0),
    which vanishes in the continuum for measures whose Dirichlet form is
    local (even-order Bessel), and stays finite for fractional orders.
    """
    if h_bump.lattice != g_bump.lattice:
        raise ValueError("bumps must share one lattice")
    sep = _spatial_separation_cells(h_bump, g_bump)
    if sep < min_sep_cells:
        raise ValueError(
            f"bump supports are {sep:.1f} cells apart; need >= {min_sep_cells}")
    a = element_from_h(h_bump, measure)
    b = element_from_h(g_bump, measure)
    raw = rkhs_inner(a, b)
    na, nb = a.norm(), b.norm()
    return {"normalized_inner": abs(raw) / (na * nb),
            "raw_inner": raw, "norm_h": na, "norm_g": nb,
            "separation_cells": sep,
            "markov_guarantee": a.markov_guarantee}


def kunsch_decomposition(measure: SpectralMeasure, zeta: RkhsElement,
                         chi: Field) -> dict:
    """Split zeta.h by a smooth spatial cutoff and test Pythagoras.

    ``chi`` must be constant (0 or 1) on the support of zeta.h: its
    transition region may not touch the field.  The parts h = chi * zeta.h
    and g = (1 - chi) * zeta.h are rebuilt as elements; the report carries
    the normalized cross inner product, the relative Pythagoras residual
    | ||zeta||^2 - ||h||^2 - ||g||^2 | / ||zeta||^2, and the even-order
    parabolic norm of the cut part (finite by construction).
    """
    if chi.layout is not Layout.SPACE_ONLY:
        raise ValueError("cutoff must be a space-only field")
    if chi.lattice != zeta.h.lattice:
        raise ValueError("cutoff lives on a different lattice")
    chi_vals = chi.real_values()
    if chi_vals.min() < -1e-12 or chi_vals.max() > 1 + 1e-12:
        raise ValueError("cutoff values must lie in [0, 1]")
    zeta_h = as_physical(zeta.h)
    transition = (chi_vals > 1e-9) & (chi_vals < 1 - 1e-9)
    occupied = support_mask(zeta_h).any(axis=0)
    if np.any(transition & occupied):
        raise ValueError("cutoff transition region overlaps the field support")
    lat = zeta_h.lattice
    h_vals = zeta_h.values * chi_vals[None]
    h_part = Field(lat, Representation.PHYSICAL, Layout.SPACE_TIME, h_vals)
    g_part = Field(lat, Representation.PHYSICAL, Layout.SPACE_TIME,
                   zeta_h.values - h_vals)
    a = element_from_h(h_part, measure)
    b = element_from_h(g_part, measure)
    nz2 = rkhs_inner(zeta, zeta)
    na2 = rkhs_inner(a, a)
    nb2 = rkhs_inner(b, b)
    cross = rkhs_inner(a, b)
    kn = float("nan")
    if measure.family is Family.BESSEL and a.markov_guarantee:
        kn = krylov_norm(a)
        if not math.isfinite(kn):
            raise InvariantViolation("parabolic norm of the cut part is not finite")
    residual = abs(nz2 - na2 - nb2) / max(nz2, 1e-300)
    return {"residual": residual,
            "cross_normalized": abs(cross) / max(math.sqrt(na2 * nb2), 1e-300),
            "norm2_zeta": nz2, "norm2_h": na2, "norm2_g": nb2,
            "krylov_norm_h": kn}


def column_gram_check(measure: SpectralMeasure, lattice: SpaceTimeLattice,
                      p_idx, q_idx) -> dict:
    """Self-consistency: oracle R(p,q) vs the pairing of two covariance columns.

    ``p_idx``/``q_idx`` are grid points (time_index, space_index_tuple); the
    two numbers agree to round-off by construction of the covariance-kind
    column weights.
    """
    from .rkhs import heat_column
    def phys(pt):
        m, j = pt
        return (m * lattice.dt,
                tuple((int(ji) % lattice.n_space[ax]) * lattice.extent[ax]
                      / lattice.n_space[ax] for ax, ji in enumerate(j)))
    col_p = heat_column(measure, lattice, p_idx, kind="covariance")
    col_q = heat_column(measure, lattice, q_idx, kind="covariance")
    gram = rkhs_inner_raw(col_p.phi, col_q.phi, measure)
    oracle = covariance_oracle(measure, lattice, phys(p_idx), phys(q_idx))
    scale = max(abs(oracle), abs(gram), 1e-300)
    return {"gram": gram, "oracle": oracle,
            "rel_gap": abs(gram - oracle) / scale}
