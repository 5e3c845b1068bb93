"""High-contrast limit spectrum of the Bloch operator family.

As the contrast grows, the Bloch eigenvalue problem limits onto a fixed
spectrum.  For quasimomentum alpha != 0 the limit values (in the
reciprocal-eigenvalue variable beta = 1/omega^2) are the inverse
Dirichlet eigenvalues of the inclusion.  For alpha = 0 the constant
mode couples the phases and the limit spectrum splits into

  * inverse Dirichlet eigenvalues whose eigenfunctions have zero mean,
  * inverse positive roots nu of the spectral function

        S(nu) = nu * sum_k a_k^2 / (nu - delta*_k) - 1,

    where delta*_k runs over the distinct Dirichlet eigenvalues with
    non-zero-mean eigenfunctions and a_k = |int_D psi_k| are their mode
    averages.  S decreases between consecutive poles, so exactly one
    root lies in each gap.

Disks get closed forms: Dirichlet eigenvalues (eta_{n,k}/a)^2 with
eta_{n,k} the k-th positive zero of the Bessel function J_n, zero mean
exactly when n != 0, multiplicity two for n >= 1, and mode averages
a_{0k} = 2 sqrt(pi) a / eta_{0k}.  General shapes use a five-point
finite-difference Dirichlet eigensolver with Richardson refinement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import brentq
from scipy.special import jn_zeros, jv

from .geometry import Inclusion
from .lattice_green import QuasiMomentum


class ResolutionError(RuntimeError):
    pass


def bessel_zero(n: int, k: int) -> float:
    """k-th positive zero of J_n, bracketed and polished to ~1e-13."""
    guess = float(jn_zeros(n, k)[-1])
    lo, hi = guess - 1e-3, guess + 1e-3
    if jv(n, lo) * jv(n, hi) > 0:
        # widen conservatively; zeros of J_n are separated by more than pi/2
        lo, hi = guess - 0.5, guess + 0.5
    return float(brentq(lambda x: jv(n, x), lo, hi, xtol=1e-14, rtol=8.9e-16))


@dataclass
class DirichletMode:
    """One Dirichlet eigenvalue with its metadata."""

    eigenvalue: float
    multiplicity: int
    zero_mean: bool
    average: float  # |int_D psi| for one L2-normalized eigenfunction
    label: tuple  # (n, k) for disks, (index,) for grid modes


@dataclass
class DirichletSpectrum:
    """Ascending Dirichlet spectrum of -Delta on the inclusion."""

    inclusion: Inclusion
    modes: list
    area: float
    source: str  # "bessel" or "fd"
    grid_h: Optional[float] = None
    error_estimate: Optional[float] = None

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([m.eigenvalue for m in self.modes])

    def star_values(self) -> list:
        """Distinct eigenvalues with non-zero-mean eigenfunctions."""
        return [m for m in self.modes if not m.zero_mean]


def disk_dirichlet(a: float, n_max: int, k_max: int) -> DirichletSpectrum:
    """Closed-form disk spectrum: delta = (eta_{n,k}/a)^2.

    Radial modes (n = 0) have averages a_{0k} = 2 sqrt(pi) a / eta_{0k};
    all n >= 1 modes are zero mean with multiplicity two.
    """
    if a <= 0:
        raise ValueError("disk radius must be positive")
    modes = []
    for n in range(n_max + 1):
        for k in range(1, k_max + 1):
            eta = bessel_zero(n, k)
            if n == 0:
                avg = 2.0 * np.sqrt(np.pi) * a / eta
                modes.append(
                    DirichletMode((eta / a) ** 2, 1, False, avg, (0, k))
                )
            else:
                modes.append(DirichletMode((eta / a) ** 2, 2, True, 0.0, (n, k)))
    modes.sort(key=lambda m: m.eigenvalue)
    inc = Inclusion("disk", center=(0.5, 0.5), radius=a)
    return DirichletSpectrum(inclusion=inc, modes=modes, area=np.pi * a**2, source="bessel")


def _fd_dirichlet_once(inclusion: Inclusion, h: float, count: int):
    """Lowest Dirichlet eigenvalues of the 5-point Laplacian at spacing h."""
    n = int(round(1.0 / h))
    xs = (np.arange(1, n) * h)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    if inclusion.kind == "disk":
        c = np.asarray(inclusion.center, dtype=float)
        inside = (X - c[0]) ** 2 + (Y - c[1]) ** 2 < inclusion.radius**2
    else:
        from matplotlib.path import Path  # local import: only general shapes

        t = 2.0 * np.pi * np.arange(512) / 512
        poly = inclusion.boundary_points(t).T
        inside = (
            Path(poly)
            .contains_points(np.stack([X.ravel(), Y.ravel()], axis=1))
            .reshape(X.shape)
        )
    idx = -np.ones(X.shape, dtype=int)
    pts = np.flatnonzero(inside.ravel())
    if pts.size < 100:
        raise ResolutionError(
            "grid spacing %g leaves only %d interior points" % (h, pts.size)
        )
    idx.ravel()[pts] = np.arange(pts.size)
    rows, cols, vals = [], [], []
    ii, jj = np.nonzero(inside)
    me = idx[ii, jj]
    rows.extend(me)
    cols.extend(me)
    vals.extend(np.full(me.size, 4.0 / h**2))
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        ni, nj = ii + di, jj + dj
        ok = (ni >= 0) & (ni < idx.shape[0]) & (nj >= 0) & (nj < idx.shape[1])
        ok[ok] &= idx[ni[ok], nj[ok]] >= 0
        rows.extend(me[ok])
        cols.extend(idx[ni[ok], nj[ok]])
        vals.extend(np.full(int(ok.sum()), -1.0 / h**2))
    A = sp.csr_matrix((vals, (rows, cols)), shape=(pts.size, pts.size))
    k = min(count, pts.size - 2)
    vals_, vecs = spla.eigsh(A, k=k, sigma=0.0, which="LM")
    order = np.argsort(vals_)
    return vals_[order], vecs[:, order], pts.size


def fd_dirichlet(inclusion: Inclusion, grid_h: float, count: int) -> DirichletSpectrum:
    """Finite-difference Dirichlet spectrum with Richardson error estimate.

    Solves at spacings h and 2h; the 5-point scheme is O(h^2), so the
    extrapolated value is (4 v_h - v_{2h}) / 3 and |v_h - v_{2h}| / 3
    estimates the remaining error.  Mean flags come from the discrete
    quadrature of each eigenvector.
    """
    vals_h, vecs_h, npts = _fd_dirichlet_once(inclusion, grid_h, count)
    vals_2h, _, _ = _fd_dirichlet_once(inclusion, 2.0 * grid_h, count)
    m = min(len(vals_h), len(vals_2h))
    extrap = (4.0 * vals_h[:m] - vals_2h[:m]) / 3.0
    err = float(np.max(np.abs(vals_h[:m] - vals_2h[:m]) / 3.0))
    area = npts * grid_h**2
    modes = []
    for j in range(m):
        v = vecs_h[:, j]
        v = v / (np.linalg.norm(v) * grid_h)  # discrete L2(D) normalization
        avg = abs(np.sum(v)) * grid_h**2
        zero_mean = avg < 1e-6 * np.sqrt(area)
        modes.append(DirichletMode(float(extrap[j]), 1, zero_mean, float(avg), (j,)))
    return DirichletSpectrum(
        inclusion=inclusion,
        modes=modes,
        area=area,
        source="fd",
        grid_h=grid_h,
        error_estimate=err,
    )


def spectral_function(nu: float, spec: DirichletSpectrum):
    """Truncated S(nu) plus a tail bound from the unaccounted mass.

    The averages satisfy sum_k a_k^2 <= |D| (Parseval against the
    constant), so the neglected terms carry at most
    (|D| - sum a_k^2) * nu / dist(nu, tail poles).
    """
    stars = spec.star_values()
    if not stars:
        raise ValueError("spectrum carries no non-zero-mean modes")
    deltas = np.array([m.eigenvalue for m in stars])
    avgs = np.array([m.average for m in stars])
    if np.any(np.abs(nu - deltas) < 1e-12 * deltas):
        raise ZeroDivisionError("nu coincides with a pole of S")
    val = nu * np.sum(avgs**2 / (nu - deltas)) - 1.0
    mass_left = max(spec.area - float(np.sum(avgs**2)), 0.0)
    tail_gap = max(deltas[-1] * 1.5 - nu, deltas[-1] * 0.5)
    tail = mass_left * abs(nu) / tail_gap
    return float(val), float(tail)


def spectral_roots(spec: DirichletSpectrum, count: int) -> np.ndarray:
    """Positive roots of S(nu), one per gap between consecutive poles.

    Each term nu a^2/(nu - delta) is decreasing in nu away from its
    pole, so S decreases from +inf to -inf across every gap
    (delta*_j, delta*_{j+1}) and brentq is safe.
    """
    stars = spec.star_values()
    if len(stars) < count + 1:
        raise ResolutionError(
            "need at least %d non-zero-mean modes, have %d"
            % (count + 1, len(stars))
        )
    deltas = np.array([m.eigenvalue for m in stars])
    roots = []
    f = lambda nu: spectral_function(nu, spec)[0]
    for j in range(count):
        lo = deltas[j] * (1.0 + 1e-10)
        hi = deltas[j + 1] * (1.0 - 1e-10)
        if f(lo) < 0 or f(hi) > 0:
            raise ResolutionError("sign pattern violated in gap %d" % j)
        roots.append(float(brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16)))
    return np.array(roots)


@dataclass
class LimitValue:
    """One limit spectrum value beta(0) with provenance."""

    beta0: float
    multiplicity: int
    provenance: str  # "dirichlet" or "spectral_root"
    label: tuple


@dataclass
class LimitSpectrum:
    momentum: QuasiMomentum
    values: list  # LimitValue, descending in beta0
    dirichlet: DirichletSpectrum = field(repr=False, default=None)


def limit_spectrum(
    momentum: QuasiMomentum, spec: DirichletSpectrum, count: int
) -> LimitSpectrum:
    """The count largest limit values beta(0) at the given quasimomentum."""
    values = []
    if momentum.is_zero:
        n_star = len(spec.star_values())
        if n_star >= 2:
            roots = spectral_roots(spec, min(count, n_star - 1))
            for j, nu in enumerate(roots):
                values.append(LimitValue(1.0 / nu, 1, "spectral_root", ("nu", j + 1)))
        for m in spec.modes:
            if m.zero_mean:
                values.append(
                    LimitValue(1.0 / m.eigenvalue, m.multiplicity, "dirichlet", m.label)
                )
    else:
        for m in spec.modes:
            values.append(
                LimitValue(1.0 / m.eigenvalue, m.multiplicity, "dirichlet", m.label)
            )
    values.sort(key=lambda v: -v.beta0)
    if len(values) < count:
        raise ResolutionError(
            "resolved only %d limit values, requested %d" % (len(values), count)
        )
    return LimitSpectrum(momentum=momentum, values=values[:count], dirichlet=spec)
