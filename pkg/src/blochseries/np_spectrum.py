"""Discrete single-layer and Neumann-Poincare operators and their spectrum.

The single layer S maps a boundary density to its potential, and the
Neumann-Poincare operator Kstar is the adjoint double layer

    (Kstar rho)(x) = p.v. int_{bd D} d G^alpha(x,y)/d nu(x) rho(y) ds(y).

Nystrom discretization: the kernel of S splits into the free-space log
(handled by the spectrally accurate Kussmaul-Martensen quadrature on
equispaced nodes) plus a smooth quasi-periodic remainder (plain
trapezoid).  Kstar has a continuous kernel on smooth curves; its
diagonal is the free-space curvature limit kappa/(4 pi) plus the smooth
remainder gradient at coincidence.

The resonance spectrum {mu_i} comes from the generalized Hermitian
eigenproblem for Kstar in the inner product induced by -S (the Plemelj
symmetry K S = S Kstar makes -(W S) Kstar Hermitian in exact
arithmetic; symmetrizing and using a Cholesky-based generalized solve
enforces real eigenvalues numerically).  Eigenvalues lie in [-1/2, 1/2]
with the top value 1/2 carried by the density of the field that is
constant in D and harmonic outside.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .geometry import BoundaryMesh
from .lattice_green import GreenEvaluator, QuasiMomentum


class AssemblyError(RuntimeError):
    pass


class EigensolveError(RuntimeError):
    pass


def _log_circulant(n: int) -> np.ndarray:
    """Matrix of f -> (1/2pi) int log(4 sin^2((t-s)/2)) f(s) ds on n nodes.

    The kernel acts diagonally on trigonometric modes: the coefficient
    of exp(i m t) is multiplied by -1/|m| (0 for m = 0), so the matrix
    is the circulant realizing those multipliers on the equispaced grid.
    """
    m = np.fft.fftfreq(n, d=1.0 / n)
    sigma = np.zeros(n)
    nz = m != 0
    sigma[nz] = -1.0 / np.abs(m[nz])
    col = np.real(np.fft.ifft(sigma))
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return col[idx]


@dataclass
class LayerOperators:
    """Nystrom matrices acting on nodal density values.

    S, Kstar, K map the vector of density node values to potential /
    trace values at the same nodes (quadrature weights are folded in).
    """

    mesh: BoundaryMesh
    momentum: QuasiMomentum
    S: np.ndarray
    Kstar: np.ndarray
    K: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return self.mesh.weights

    def plemelj_residual(self) -> float:
        """|| K S - S Kstar || / || S || in the spectral norm."""
        r = self.K @ self.S - self.S @ self.Kstar
        return float(np.linalg.norm(r, 2) / np.linalg.norm(self.S, 2))

    def minus_s_gram(self) -> np.ndarray:
        """Hermitian positive matrix of the -S weighted inner product."""
        ws = self.mesh.weights[:, None] * self.S
        return -0.5 * (ws + ws.conj().T)


def assemble(mesh: BoundaryMesh, ev: GreenEvaluator) -> LayerOperators:
    """Assemble S, Kstar (and K for diagnostics) on the mesh."""
    if ev.mode != "ewald":
        raise AssemblyError("assembly requires an ewald-mode evaluator")
    n_q = mesh.n_nodes
    x = mesh.nodes
    dx = x[0][:, None] - x[0][None, :]
    dy = x[1][:, None] - x[1][None, :]
    rr = np.stack([dx.ravel(), dy.ravel()])
    off = ~np.eye(n_q, dtype=bool)

    # Smooth remainder and its gradient at every node pair (finite on
    # the diagonal), free-space parts added per block below.
    rem = ev.smooth_remainder(rr).reshape(n_q, n_q)
    grem = ev.grad_smooth_remainder(rr)
    grem_x = grem[0].reshape(n_q, n_q)
    grem_y = grem[1].reshape(n_q, n_q)

    dist = np.hypot(dx, dy)
    if np.any(dist[off] < 1e-12):
        raise AssemblyError("coincident nodes between inclusions")

    S = np.zeros((n_q, n_q), dtype=complex)
    logdist = np.zeros_like(dist)
    logdist[off] = np.log(dist[off]) / (2.0 * np.pi)
    # Off-diagonal smooth+log everywhere first (plain trapezoid), then
    # overwrite each self-interaction block with the log-corrected rule.
    S[:] = (rem + logdist) * mesh.weights[None, :]
    nincs = len(mesh.offsets) - 1
    for kk in range(nincs):
        sl = mesh.per_inclusion(kk)
        nb = sl.stop - sl.start
        t = mesh.params[sl]
        tt = t[:, None] - t[None, :]
        four_sin2 = 4.0 * np.sin(0.5 * tt) ** 2
        blk_off = ~np.eye(nb, dtype=bool)
        gs = np.array(rem[sl, sl], dtype=complex)
        gs[blk_off] += (
            np.log(dist[sl, sl][blk_off] ** 2 / four_sin2[blk_off]) / (4.0 * np.pi)
        )
        gs[np.eye(nb, dtype=bool)] += np.log(mesh.speed[sl]) / (2.0 * np.pi)
        L = _log_circulant(nb)
        S[sl, sl] = 0.5 * L * mesh.speed[sl][None, :] + gs * (
            2.0 * np.pi / nb
        ) * mesh.speed[sl][None, :]

    # Kstar: nu(x_i) . grad_r G(x_i - x_j); K: -nu(x_j) . grad_r G.
    gfree_x = np.zeros_like(dist)
    gfree_y = np.zeros_like(dist)
    gfree_x[off] = dx[off] / (2.0 * np.pi * dist[off] ** 2)
    gfree_y[off] = dy[off] / (2.0 * np.pi * dist[off] ** 2)
    gx = gfree_x + grem_x
    gy = gfree_y + grem_y
    nu = mesh.normals
    kstar_kernel = nu[0][:, None] * gx + nu[1][:, None] * gy
    k_kernel = -(nu[0][None, :] * gx + nu[1][None, :] * gy)
    diag = np.arange(n_q)
    nu_grem0 = nu[0] * grem_x[diag, diag] + nu[1] * grem_y[diag, diag]
    kstar_kernel[diag, diag] = mesh.curvature / (4.0 * np.pi) + nu_grem0
    k_kernel[diag, diag] = mesh.curvature / (4.0 * np.pi) - nu_grem0
    Kstar = kstar_kernel * mesh.weights[None, :]
    K = k_kernel * mesh.weights[None, :]

    if not (np.all(np.isfinite(S)) and np.all(np.isfinite(Kstar))):
        raise AssemblyError("non-finite entries in layer operators")
    return LayerOperators(mesh=mesh, momentum=ev.momentum, S=S, Kstar=Kstar, K=K)


@dataclass
class NPSpectrum:
    """Quasi-periodic resonance spectrum at one quasimomentum.

    mu is sorted ascending; densities holds the generalized
    eigenvectors column-wise, orthonormal in the -S inner product
    (densities^H @ gram @ densities = I).
    """

    momentum: QuasiMomentum
    mu: np.ndarray
    densities: np.ndarray
    gram: np.ndarray
    operators: LayerOperators = field(repr=False, default=None)
    imag_residual: float = 0.0

    @property
    def mu_minus(self) -> float:
        return float(self.mu[0])

    @property
    def mu_plus(self) -> float:
        """Largest eigenvalue strictly below 1/2 (discretization slack 1e-6)."""
        below = self.mu[self.mu < 0.5 - 1e-6]
        if below.size == 0:
            raise EigensolveError("no eigenvalue below 1/2 resolved")
        return float(below[-1])

    @property
    def top_index(self) -> int:
        return int(np.argmax(self.mu))

    def resonance_poles(self) -> np.ndarray:
        """Poles z_i = (mu_i + 1/2)/(mu_i - 1/2) for mu_i < 1/2."""
        mu = self.mu[self.mu < 0.5 - 1e-6]
        return (mu + 0.5) / (mu - 0.5)


def resonance_spectrum(ops: LayerOperators) -> NPSpectrum:
    """Solve the generalized symmetric eigenproblem for Kstar in -S."""
    M = ops.minus_s_gram()
    try:
        sla.cholesky(M)
    except sla.LinAlgError as exc:
        raise EigensolveError(
            "-(S + S*)/2 is not positive definite: %s" % exc
        ) from exc
    H_raw = -(ops.weights[:, None] * ops.S) @ ops.Kstar
    H = 0.5 * (H_raw + H_raw.conj().T)
    imag_residual = float(
        np.linalg.norm(H_raw - H, 2) / max(np.linalg.norm(H, 2), 1e-300)
    )
    try:
        mu, vecs = sla.eigh(H, M)
    except sla.LinAlgError as exc:
        raise EigensolveError("generalized eigensolve failed: %s" % exc) from exc
    return NPSpectrum(
        momentum=ops.momentum,
        mu=mu,
        densities=vecs,
        gram=M,
        operators=ops,
        imag_residual=imag_residual,
    )


def project_W3_density(spec: NPSpectrum, rho: np.ndarray) -> np.ndarray:
    """Remove the component along the mu = 1/2 eigendensity.

    The removal is orthogonal in the -S inner product, which is the
    discrete counterpart of dropping the constant-in-D direction from a
    field that is harmonic in both phases.
    """
    e = spec.densities[:, spec.top_index]
    c = e.conj() @ (spec.gram @ np.asarray(rho, dtype=complex))
    return np.asarray(rho, dtype=complex) - c * e
