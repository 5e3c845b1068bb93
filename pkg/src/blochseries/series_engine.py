"""Power series of Bloch eigenvalue groups in the inverse-contrast variable.

Around the infinite-contrast limit, each eigenvalue group of the Bloch
problem admits a convergent expansion

    beta_hat(z) = beta_0 + sum_{n>=1} z^n beta_n,      z = 1/contrast,

in the reciprocal eigenvalue beta = 1/omega^2.  The engine realizes the
governing operator family A(z) = T(z)^{-1} (-Delta_alpha)^{-1} on a
finite energy-orthonormal basis

    V = [zero-extended Dirichlet modes of D]  (+)  [single layers of the
         resonance eigendensities],

in which T(z)^{-1} is diagonal: 1 on the Dirichlet block and
z / ((1/2 + mu) + z(1/2 - mu)) on the density with resonance value mu.
Because the basis is orthonormal in the Dirichlet energy inner product,
the matrix of the projected inverse Laplacian is simply the L^2(Y) Gram
matrix of the basis, assembled from closed forms (Dirichlet block),
boundary quadrature (cross block, via Green's identity), and lattice
Fourier sums (density block).

Two independent coefficient paths are provided and cross-checked: a
Rayleigh-Schrodinger recursion on the matrix family (simple eigenvalues)
and the contour-trace formula integrating resolvent compositions around
the limit value (any multiplicity).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
from scipy.special import jv

from .geometry import BoundaryMesh, InclusionSet, build_mesh
from .lattice_green import GreenEvaluator, QuasiMomentum
from .limit_spectrum import DirichletSpectrum, ResolutionError, disk_dirichlet
from .np_spectrum import NPSpectrum, assemble, resonance_spectrum


class SeriesError(RuntimeError):
    pass


class ContourError(SeriesError):
    pass


class MultiplicityError(SeriesError):
    pass


# ---------------------------------------------------------------------------
# Disk Dirichlet mode data in closed form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiskMode:
    """One concrete disk Dirichlet eigenfunction (a single basis member).

    n, k index the Bessel order and radial zero eta = eta_{n,k}; parity
    picks cos(n theta) or sin(n theta) for n >= 1.  The eigenfunction is
    L^2(D)-normalized.
    """

    n: int
    k: int
    eta: float
    parity: str  # "cos" or "sin" ("cos" for n = 0)
    center: np.ndarray
    radius: float

    @property
    def eigenvalue(self) -> float:
        return (self.eta / self.radius) ** 2

    def values(self, x: np.ndarray) -> np.ndarray:
        """Mode values at points x of shape (2, K) (0 outside the disk)."""
        dx = x[0] - self.center[0]
        dy = x[1] - self.center[1]
        r = np.hypot(dx, dy)
        th = np.arctan2(dy, dx)
        a, n, eta = self.radius, self.n, self.eta
        if n == 0:
            out = jv(0, eta * r / a) / (np.sqrt(np.pi) * a * abs(jv(1, eta)))
        else:
            ang = np.cos(n * th) if self.parity == "cos" else np.sin(n * th)
            out = (
                np.sqrt(2.0 / np.pi)
                * jv(n, eta * r / a)
                * ang
                / (a * abs(jv(n + 1, eta)))
            )
        return np.where(r <= a, out, 0.0)

    def normal_derivative(self, x: np.ndarray) -> np.ndarray:
        """Interior-side outward normal derivative at boundary points x."""
        dx = x[0] - self.center[0]
        dy = x[1] - self.center[1]
        th = np.arctan2(dy, dx)
        a, n, eta = self.radius, self.n, self.eta
        if n == 0:
            # J_0'(eta) = -J_1(eta)
            return np.full(
                x.shape[1],
                -(eta / a) * np.sign(jv(1, eta)) / (np.sqrt(np.pi) * a),
            )
        ang = np.cos(n * th) if self.parity == "cos" else np.sin(n * th)
        # At a zero of J_n: J_n'(eta) = -J_{n+1}(eta)
        return (
            -(eta / a)
            * np.sqrt(2.0 / np.pi)
            * np.sign(jv(n + 1, eta))
            * ang
            / a
        )

    def fourier(self, q: np.ndarray) -> np.ndarray:
        """Fourier coefficients int_D u(x) exp(-i q.x) dx, q shape (2, K).

        Radial part is the Lommel integral
        int_0^a J_n(eta r/a) J_n(|q| r) r dr
            = -eta J_n'(eta) J_n(|q| a) / ((eta/a)^2 - |q|^2),
        the angular part contributes 2 pi (-i)^n {cos,sin}(n theta_q).
        """
        a, n, eta = self.radius, self.n, self.eta
        qa = np.hypot(q[0], q[1])
        den = (eta / a) ** 2 - qa**2
        if np.any(np.abs(den) < 1e-10 * (eta / a) ** 2):
            raise SeriesError("Fourier node resonant with the Bessel zero")
        radial = -eta * (-jv(n + 1, eta)) * jv(n, qa * a) / den
        if n == 0:
            norm = 1.0 / (np.sqrt(np.pi) * a * abs(jv(1, eta)))
            ang = 2.0 * np.pi * np.ones_like(qa)
        else:
            norm = np.sqrt(2.0 / np.pi) / (a * abs(jv(n + 1, eta)))
            thq = np.arctan2(q[1], q[0])
            base = np.cos(n * thq) if self.parity == "cos" else np.sin(n * thq)
            ang = 2.0 * np.pi * (-1j) ** n * base
        phase = np.exp(-1j * (q[0] * self.center[0] + q[1] * self.center[1]))
        return phase * ang * radial * norm


def enumerate_disk_modes(spec: DirichletSpectrum) -> list:
    """Expand a disk Dirichlet spectrum into individual DiskMode members."""
    inc = spec.inclusion
    if inc.kind != "disk":
        raise ResolutionError("series basis needs closed-form disk modes")
    c = np.asarray(inc.center, dtype=float)
    out = []
    for m in spec.modes:
        n, k = m.label
        eta = inc.radius * np.sqrt(m.eigenvalue)
        if n == 0:
            out.append(DiskMode(0, k, eta, "cos", c, inc.radius))
        else:
            out.append(DiskMode(n, k, eta, "cos", c, inc.radius))
            out.append(DiskMode(n, k, eta, "sin", c, inc.radius))
    return out


# ---------------------------------------------------------------------------
# Operator chain
# ---------------------------------------------------------------------------

@dataclass
class OperatorChain:
    """Discrete operator handles around one limit eigenfunction.

    Bundles the boundary mesh, the quasi-periodic Green evaluator, the
    layer operators with their resonance spectrum, and the chosen limit
    eigenfunction phi (a disk Dirichlet mode) together with its interior
    normal-derivative trace on the mesh nodes.
    """

    inclusion_set: InclusionSet
    momentum: QuasiMomentum
    mesh: BoundaryMesh
    evaluator: GreenEvaluator
    np_spec: NPSpectrum
    dirichlet: DirichletSpectrum
    mode: DiskMode
    beta0: float
    boundary_normal_deriv: np.ndarray  # d phi / d nu on the mesh nodes
    kstar_half_condition: float

    def phi_values(self, x: np.ndarray) -> np.ndarray:
        return self.mode.values(x)


def build_chain(
    inclusion_set: InclusionSet,
    momentum: QuasiMomentum,
    nodes_per_inclusion: int = 128,
    mode_index: int = 0,
    n_max: int = 6,
    k_max: int = 4,
) -> OperatorChain:
    """Assemble the operator chain for one limit branch of a single disk.

    mode_index selects the branch in the ascending Dirichlet spectrum
    (paired n >= 1 levels count once; the chain carries the cos member).
    """
    if momentum.is_zero:
        raise SeriesError(
            "series expansion is restricted to nonzero quasimomentum; "
            "the periodic point couples branches through the constant mode"
        )
    incs = inclusion_set.inclusions
    if len(incs) != 1 or incs[0].kind != "disk":
        raise ResolutionError("operator chains support a single disk inclusion")
    spec = disk_dirichlet(incs[0].radius, n_max, k_max)
    if mode_index >= len(spec.modes):
        raise ResolutionError("mode_index beyond the resolved spectrum")
    mesh = build_mesh(inclusion_set, nodes_per_inclusion)
    ev = GreenEvaluator(momentum)
    ops = assemble(mesh, ev)
    np_spec = resonance_spectrum(ops)
    mode_meta = spec.modes[mode_index]
    n, k = mode_meta.label
    eta = incs[0].radius * np.sqrt(mode_meta.eigenvalue)
    mode = DiskMode(n, k, eta, "cos", np.asarray(incs[0].center, float), incs[0].radius)
    g = mode.normal_derivative(mesh.nodes)
    kh = ops.Kstar + 0.5 * np.eye(mesh.n_nodes)
    cond = float(np.linalg.cond(kh))
    return OperatorChain(
        inclusion_set=inclusion_set,
        momentum=momentum,
        mesh=mesh,
        evaluator=ev,
        np_spec=np_spec,
        dirichlet=spec,
        mode=mode,
        beta0=1.0 / mode.eigenvalue,
        boundary_normal_deriv=g,
        kstar_half_condition=cond,
    )


def single_layer_on_grid(chain: OperatorChain, density: np.ndarray, x: np.ndarray):
    """Evaluate S_D[density] at off-boundary points x of shape (2, K)."""
    y = chain.mesh.nodes
    w = chain.mesh.weights
    dens = np.asarray(density, dtype=complex)
    out = np.empty(x.shape[1], dtype=complex)
    chunk = 256
    for s in range(0, x.shape[1], chunk):
        xs = x[:, s : s + chunk]
        rr = np.stack(
            [
                xs[0][:, None] - y[0][None, :],
                xs[1][:, None] - y[1][None, :],
            ]
        )
        g = chain.evaluator.green(rr.reshape(2, -1)).reshape(xs.shape[1], y.shape[1])
        out[s : s + chunk] = g @ (w * dens)
    return out


def inverse_laplacian_of_eigenfunction(chain: OperatorChain, n_sample: int = 400,
                                       clearance: float = 0.05) -> dict:
    """Decompose (-Delta_alpha)^{-1} phi into layer and interior parts.

    With g the interior outward normal derivative of phi, the jump
    relations give the exact identity

        (-Delta_alpha)^{-1} phi = beta_0 (phi + S_D[g]) :

    the interior term solves the equation inside D, the single layer is
    harmonic off the boundary, and the normal-derivative jumps of the two
    terms cancel.  The identity is verified on interior and exterior
    sample points kept a clearance away from the boundary, where both the
    trapezoid layer evaluation and the truncated Fourier synthesis of the
    left-hand side are accurate; the max residual is returned.
    """
    rng = np.random.default_rng(7)
    inc = chain.inclusion_set.inclusions[0]
    c = np.asarray(inc.center, dtype=float)
    a = inc.radius
    pts = []
    while len(pts) < n_sample:
        p = rng.uniform(0.02, 0.98, size=2)
        if abs(np.hypot(p[0] - c[0], p[1] - c[1]) - a) > clearance:
            pts.append(p)
    x = np.array(pts).T

    # Left side synthesized from the closed-form mode Fourier data.
    cutoff = 128
    r = np.arange(-cutoff, cutoff + 1)
    nx, ny = np.meshgrid(r, r, indexing="ij")
    q = 2.0 * np.pi * np.stack([nx.ravel(), ny.ravel()]) + chain.momentum.vec[:, None]
    q2 = q[0] ** 2 + q[1] ** 2
    keep = q2 > 1e-12
    q = q[:, keep]
    q2 = q2[keep]
    phih = chain.mode.fourier(q)
    lhs = (np.exp(1j * (x.T @ q)) @ (phih / q2))  # (sum phih/q2 e^{iqx}), |Y| = 1

    g = chain.boundary_normal_deriv
    rhs = chain.beta0 * (
        chain.phi_values(x) + single_layer_on_grid(chain, g, x)
    )
    residual = float(np.max(np.abs(lhs - rhs)))
    boundary_flux = float(
        np.real(np.sum(chain.mesh.weights * g))
    )
    return {
        "single_layer_density": g,
        "interior_coefficient": chain.beta0,
        "residual": residual,
        "boundary_flux": boundary_flux,
    }


# ---------------------------------------------------------------------------
# Corrector and first-order coefficient
# ---------------------------------------------------------------------------

def corrector(chain: OperatorChain) -> dict:
    """First-order corrector: boundary density psi and exterior energy E.

    psi solves (Kstar + 1/2) psi = d phi/d nu|_-, v = S_D psi matches the
    interior Neumann data from outside, and

        E = int_{Y \\ D} |grad v|^2 = - int_{bd D} (d v/d nu|_+) conj(v)

    by Green's identity in the perforated cell (the quasi-periodic outer
    boundary terms cancel in pairs).
    """
    ops = chain.np_spec.operators
    n_q = chain.mesh.n_nodes
    kh = ops.Kstar + 0.5 * np.eye(n_q)
    psi = np.linalg.solve(kh, chain.boundary_normal_deriv.astype(complex))
    v = ops.S @ psi
    dnv_plus = (ops.Kstar + 0.5 * np.eye(n_q)) @ psi
    energy_c = -np.sum(chain.mesh.weights * dnv_plus * np.conj(v))
    energy = float(np.real(energy_c))
    return {
        "psi": psi,
        "v_boundary": v,
        "energy": energy,
        "energy_imag": float(abs(np.imag(energy_c))),
        "neumann_residual": float(
            np.linalg.norm(dnv_plus - chain.boundary_normal_deriv)
            / np.linalg.norm(chain.boundary_normal_deriv)
        ),
        "condition": chain.kstar_half_condition,
    }


def coefficient_beta1(chain: OperatorChain) -> float:
    """beta_1 = beta_0^2 * exterior corrector energy (simple eigenvalue)."""
    cor = corrector(chain)
    if cor["energy"] < -1e-10:
        raise SeriesError("corrector energy came out negative: %g" % cor["energy"])
    return chain.beta0**2 * max(cor["energy"], 0.0)


# ---------------------------------------------------------------------------
# Discrete model of the operator family A(z)
# ---------------------------------------------------------------------------

@dataclass
class SeriesModel:
    """Matrix family A(z) = F(z) H on the mixed energy-orthonormal basis.

    The first n2 coordinates are Dirichlet modes, the last n3 are single
    layers of resonance eigendensities.  H is the L^2(Y) Gram matrix; the
    diagonal filter F(z) is 1 on the Dirichlet block and
    z/((1/2 + mu) + z (1/2 - mu)) on the density block, so the Taylor
    terms A_n have density-block rows x^(n-1)/(1/2 + mu) with
    x = (mu - 1/2)/(mu + 1/2).
    """

    chain: OperatorChain
    n2: int
    n3: int
    mu: np.ndarray           # resonance values of the density block
    gram: np.ndarray         # Hermitian (n2+n3) x (n2+n3)
    dirichlet_modes: list
    branch_index: int        # position of the chain's mode in the basis
    fourier_cutoff: int

    @property
    def dim(self) -> int:
        return self.n2 + self.n3

    def a_matrix(self, n: int) -> np.ndarray:
        """Taylor coefficient A_n of the family (n >= 0)."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        if n == 0:
            out[: self.n2, :] = self.gram[: self.n2, :]
            return out
        xfac = (self.mu - 0.5) / (self.mu + 0.5)
        coef = xfac ** (n - 1) / (self.mu + 0.5)
        out[self.n2 :, :] = coef[:, None] * self.gram[self.n2 :, :]
        return out

    def a_of_z(self, z: complex) -> np.ndarray:
        """Resummed A(z) (exact in z for the discrete model)."""
        f = np.ones(self.dim, dtype=complex)
        f[self.n2 :] = z / ((0.5 + self.mu) + z * (0.5 - self.mu))
        return f[:, None] * self.gram


def build_series_model(chain: OperatorChain, fourier_cutoff: int = 64) -> SeriesModel:
    """Assemble the Gram matrix blocks of the mixed basis.

    Dirichlet block: diagonal with entries 1/delta_j (exact orthogonality
    of the modes).  Cross block, by Green's identity in D:
    <S sigma_l, u_j/sqrt(delta_j)>_{L^2} =
        -(beta_j/sqrt(delta_j)) int_{bd D} (S sigma_l) d u_j/d nu ds.
    Density block via lattice Fourier sums: the single layer of sigma has
    plane-wave coefficients -sigma_hat(q)/|q|^2, so the L^2(Y) inner
    products are sums of sigma_hat pair products over |q|^4.
    """
    modes = enumerate_disk_modes(chain.dirichlet)
    n2 = len(modes)
    spec = chain.np_spec
    mesh = chain.mesh
    n3 = mesh.n_nodes
    dim = n2 + n3
    H = np.zeros((dim, dim), dtype=complex)

    deltas = np.array([m.eigenvalue for m in modes])
    H[:n2, :n2] = np.diag(1.0 / deltas)

    ops = spec.operators
    # Boundary traces of the basis single layers w_l = S sigma_l.
    W = ops.S @ spec.densities  # (n_q, n3)
    dnu = np.stack([m.normal_derivative(mesh.nodes) for m in modes])  # (n2, n_q)
    # H[j, n2+l] = int_Y w_l conj(u_j)/sqrt(delta_j)
    #            = -(beta_j/sqrt(delta_j)) sum_i wgt_i w_l(x_i) dnu_j(x_i)
    cross = -(1.0 / deltas[:, None] ** 1.5) * ((dnu * mesh.weights[None, :]) @ W)
    H[:n2, n2:] = cross
    H[n2:, :n2] = cross.conj().T

    # Density block through the lattice Fourier representation.
    r = np.arange(-fourier_cutoff, fourier_cutoff + 1)
    nx, ny = np.meshgrid(r, r, indexing="ij")
    q = (
        2.0 * np.pi * np.stack([nx.ravel(), ny.ravel()])
        + chain.momentum.vec[:, None]
    )
    q2 = q[0] ** 2 + q[1] ** 2
    keep = q2 > 1e-12
    q = q[:, keep]
    q2 = q2[keep]
    # sigma_hat[l, t] = sum_i wgt_i sigma_l(x_i) exp(-i q_t . x_i)
    phases = np.exp(-1j * (mesh.nodes.T @ q))  # (n_q, n_modes)
    sig_hat = (spec.densities * mesh.weights[:, None]).T @ phases  # (n3, nq)
    H[n2:, n2:] = (sig_hat / q2[None, :] ** 2) @ sig_hat.conj().T
    H = 0.5 * (H + H.conj().T)

    # Locate the chain's branch inside the basis (cos member).
    branch = None
    for i, m in enumerate(modes):
        if (
            m.n == chain.mode.n
            and m.k == chain.mode.k
            and m.parity == chain.mode.parity
        ):
            branch = i
            break
    if branch is None:
        raise SeriesError("chain mode missing from the series basis")
    return SeriesModel(
        chain=chain,
        n2=n2,
        n3=n3,
        mu=spec.mu.copy(),
        gram=H,
        dirichlet_modes=modes,
        branch_index=branch,
        fourier_cutoff=fourier_cutoff,
    )


# ---------------------------------------------------------------------------
# Coefficient paths
# ---------------------------------------------------------------------------

@dataclass
class SeriesExpansion:
    """Expansion beta_hat(z) = beta_0 + sum z^n beta_n for one group."""

    momentum: QuasiMomentum
    multiplicity: int
    beta0: float
    coefficients: np.ndarray  # beta_1 .. beta_N (real parts retained)
    method_tags: list
    imag_residual: float
    certificate: object = None

    @property
    def order(self) -> int:
        return len(self.coefficients)

    def to_dict(self) -> dict:
        out = {
            "alpha": list(self.momentum.alpha),
            "m": self.multiplicity,
            "beta0": self.beta0,
            "coeffs": [float(c) for c in self.coefficients],
            "method_tags": list(self.method_tags),
        }
        if self.certificate is not None:
            out["r_star"] = self.certificate.r_star
            out["z_star"] = self.certificate.z_star
            out["d"] = self.certificate.d
        return out


def coefficients_layer_rs(model: SeriesModel, order: int) -> SeriesExpansion:
    """Rayleigh-Schrodinger recursion on the matrix family (m = 1 only).

    The unperturbed matrix A_0 is block upper triangular with diagonal
    Dirichlet block, so the right eigenvector of beta_0 is a coordinate
    vector and the left eigenvector follows in closed form.  Each order
    solves a bordered system enforcing the gauge l . phi_n = 0.
    """
    if order < 1 or order > 6:
        raise SeriesError("layer path supports orders 1..6")
    chain = model.chain
    beta0 = chain.beta0
    j = model.branch_index
    deltas = np.array([m.eigenvalue for m in model.dirichlet_modes])
    degenerate = np.sum(np.abs(1.0 / deltas - beta0) < 1e-10 * beta0) > 1
    if degenerate:
        raise MultiplicityError("layer recursion requires a simple eigenvalue")

    dim = model.dim
    rvec = np.zeros(dim, dtype=complex)
    rvec[j] = 1.0
    lvec = np.zeros(dim, dtype=complex)
    lvec[j] = 1.0
    lvec[model.n2 :] = model.gram[j, model.n2 :] / beta0

    A = [model.a_matrix(n) for n in range(order + 1)]
    bordered = np.zeros((dim + 1, dim + 1), dtype=complex)
    bordered[:dim, :dim] = A[0] - beta0 * np.eye(dim)
    bordered[:dim, dim] = rvec
    bordered[dim, :dim] = lvec
    lu = sla.lu_factor(bordered)

    phis = [rvec]
    betas = []
    for n in range(1, order + 1):
        acc = np.zeros(dim, dtype=complex)
        for k in range(1, n + 1):
            acc += A[k] @ phis[n - k]
        beta_n = lvec @ acc
        betas.append(beta_n)
        if n < order:
            rhs = -acc
            for k in range(1, n + 1):
                rhs += betas[k - 1] * phis[n - k]
            sol = sla.lu_solve(lu, np.concatenate([rhs, [0.0]]))
            phis.append(sol[:dim])
    betas = np.array(betas)
    imag_res = float(np.max(np.abs(betas.imag))) if len(betas) else 0.0
    return SeriesExpansion(
        momentum=chain.momentum,
        multiplicity=1,
        beta0=beta0,
        coefficients=betas.real,
        method_tags=["layer_rs"] * order,
        imag_residual=imag_res,
    )


def _compositions(n: int):
    """All tuples of positive integers summing to n."""
    if n == 0:
        yield ()
        return
    for first in range(1, n + 1):
        for rest in _compositions(n - first):
            yield (first,) + rest


def spectral_projection(model: SeriesModel, radius: float, n_points: int = 64):
    """Contour projection P(0) = -(1/2 pi i) oint (A_0 - zeta)^{-1} d zeta."""
    beta0 = model.chain.beta0
    theta = 2.0 * np.pi * np.arange(n_points) / n_points
    zeta = beta0 + radius * np.exp(1j * theta)
    dim = model.dim
    A0 = model.a_matrix(0)
    P = np.zeros((dim, dim), dtype=complex)
    for i in range(n_points):
        R = np.linalg.inv(A0 - zeta[i] * np.eye(dim))
        P += R * (1j * radius * np.exp(1j * theta[i]))
    P *= -(1.0 / (2j * np.pi)) * (2.0 * np.pi / n_points)
    return P


def coefficients_contour(
    model: SeriesModel,
    radius: float,
    order: int,
    multiplicity: int,
    n_points: int = 64,
) -> SeriesExpansion:
    """Contour-trace coefficients: group weighted means of the expansion.

    beta_n = (1/(2 pi i m)) tr sum_{p} ((-1)^p / p)
             sum_{k_1+..+k_p = n} oint A_{k_1} R(zeta) ... A_{k_p} R(zeta) d zeta

    with R(zeta) = (A_0 - zeta)^{-1}, integrated by the trapezoid rule on
    the circle of the given radius about beta_0 (spectrally accurate).
    """
    if order < 1:
        raise SeriesError("order must be >= 1")
    beta0 = model.chain.beta0
    dim = model.dim
    A0 = model.a_matrix(0)
    A = {k: model.a_matrix(k) for k in range(1, order + 1)}
    eigs0 = np.linalg.eigvals(A0)
    dist = np.abs(eigs0 - beta0)
    inside = dist < radius
    if np.any(np.abs(dist - radius) < 1e-12):
        raise ContourError("contour touches the unperturbed spectrum")
    if int(np.sum(inside)) != multiplicity:
        raise MultiplicityError(
            "contour encloses %d eigenvalues, expected multiplicity %d"
            % (int(np.sum(inside)), multiplicity)
        )

    theta = 2.0 * np.pi * np.arange(n_points) / n_points
    acc = np.zeros(order, dtype=complex)
    eye = np.eye(dim)
    for i in range(n_points):
        zeta = beta0 + radius * np.exp(1j * theta[i])
        R = np.linalg.inv(A0 - zeta * eye)
        B = {k: A[k] @ R for k in A}
        # Memoized products over composition prefixes.
        prods = {(): eye}
        for n in range(1, order + 1):
            total = np.zeros((dim, dim), dtype=complex)
            for comp in _compositions(n):
                if comp not in prods:
                    prods[comp] = prods[comp[:-1]] @ B[comp[-1]]
                p = len(comp)
                total += ((-1) ** p / p) * prods[comp]
            acc[n - 1] += np.trace(total) * (1j * radius * np.exp(1j * theta[i]))
    acc *= (2.0 * np.pi / n_points) * (1.0 / (2j * np.pi * multiplicity))
    imag_res = float(np.max(np.abs(acc.imag)))
    return SeriesExpansion(
        momentum=model.chain.momentum,
        multiplicity=multiplicity,
        beta0=beta0,
        coefficients=acc.real,
        method_tags=["contour_trace"] * order,
        imag_residual=imag_res,
    )


# ---------------------------------------------------------------------------
# Evaluation with certified truncation bound
# ---------------------------------------------------------------------------

@dataclass
class SeriesEvaluation:
    z: complex
    beta_hat: complex
    lambda_hat: complex
    error_bound: float
    lambda_error_bound: float
    certified: bool


def evaluate_series(exp: SeriesExpansion, z: complex) -> SeriesEvaluation:
    """Partial sum, reverted eigenvalue, and the truncation-error bound.

    The bound d |z|^(N+1) / (r*^N (r* - |z|)) needs an attached
    certificate; without one the evaluation is returned uncertified with
    an infinite bound.  The eigenvalue bound is first-order propagation
    through lambda = 1/beta.
    """
    powers = z ** np.arange(1, exp.order + 1)
    beta_hat = exp.beta0 + np.sum(exp.coefficients * powers)
    cert = exp.certificate
    if cert is None:
        bound = np.inf
        certified = False
    else:
        rstar = cert.r_star
        az = abs(z)
        if az < rstar:
            bound = cert.d * az ** (exp.order + 1) / (
                rstar**exp.order * (rstar - az)
            )
            certified = True
        else:
            bound = np.inf
            certified = False
    lam = 1.0 / beta_hat
    lam_bound = bound * abs(lam) ** 2 if np.isfinite(bound) else np.inf
    return SeriesEvaluation(
        z=z,
        beta_hat=beta_hat,
        lambda_hat=lam,
        error_bound=float(bound) if np.isfinite(bound) else np.inf,
        lambda_error_bound=float(lam_bound) if np.isfinite(lam_bound) else np.inf,
        certified=certified,
    )
