"""Closed-form convergence certificates for the eigenvalue series.

The certified convergence radius of the expansion in z = 1/contrast is
built from three numbers: the resonance lower bound mu_minus of the
boundary operator, the pole bound

    z_star = (mu_minus + 1/2) / (mu_minus - 1/2)  in  [-1, 0),

and the half-gap d that isolates the target limit value from the rest of
the limit spectrum.  For buffered disk geometries mu_minus has the
closed form -a^2/(b^2 + a^2) through the annulus constant
theta = (b^2 - a^2)/(b^2 + a^2); for any geometry a computed resonance
spectrum provides a per-quasimomentum (usually sharper) value.

The certified radius is

    r_star = |alpha|^2 d |z_star| / (1/(1/2 - mu_minus) + |alpha|^2 d)

for nonzero quasimomentum, with |alpha|^2 replaced by 4 pi^2 at the
periodic point.  Inside |z| < r_star the truncation error after order p
is bounded by d |z|^(p+1) / (r_star^p (r_star - |z|)).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lattice_green import QuasiMomentum
from .limit_spectrum import LimitSpectrum, ResolutionError


class CertificateError(ValueError):
    pass


def theta_disks(a: float, b: float) -> float:
    """Annulus constant theta = (b^2 - a^2)/(b^2 + a^2) for a buffered disk."""
    if not 0 < a < b:
        raise CertificateError("need 0 < disk radius a < buffer radius b")
    return (b * b - a * a) / (b * b + a * a)


def mu_minus_from_theta(theta: float) -> float:
    """Lower resonance bound mu_minus = min(1/2, theta/2) - 1/2."""
    if not 0 < theta < 1:
        raise CertificateError("theta must lie in (0, 1)")
    rho = min(0.5, 0.5 * theta)
    return rho - 0.5


def z_star(mu_minus: float) -> float:
    """Pole bound z* = (mu_minus + 1/2)/(mu_minus - 1/2)."""
    if not -0.5 < mu_minus < 0.5:
        raise CertificateError("mu_minus must lie in (-1/2, 1/2)")
    return (mu_minus + 0.5) / (mu_minus - 0.5)


def gap_d(limit: LimitSpectrum, j: int) -> float:
    """Half the distance from limit value j to the nearest distinct one.

    Degenerate partners (equal limit values) do not count as neighbors;
    the gap is measured to the nearest value that actually differs.
    """
    betas = np.array([v.beta0 for v in limit.values])
    if j < 0 or j >= len(betas):
        raise ResolutionError("limit index %d out of the resolved range" % j)
    target = betas[j]
    distinct = np.abs(betas - target) > 1e-12 * max(abs(target), 1.0)
    if not np.any(distinct):
        raise ResolutionError(
            "no distinct neighbor resolved around limit value %d" % j
        )
    return 0.5 * float(np.min(np.abs(betas[distinct] - target)))


def radius(momentum: QuasiMomentum, d: float, mu_minus: float, zs: float) -> float:
    """Certified convergence radius r_star."""
    if d <= 0:
        raise CertificateError("spectral half-gap d must be positive")
    if not -0.5 < mu_minus < 0.5:
        raise CertificateError("mu_minus must lie in (-1/2, 1/2)")
    coupling = 4.0 * np.pi**2 if momentum.is_zero else float(
        np.dot(momentum.vec, momentum.vec)
    )
    num = coupling * d * abs(zs)
    den = 1.0 / (0.5 - mu_minus) + coupling * d
    return num / den


@dataclass(frozen=True)
class Certificate:
    """Everything needed to certify evaluations of one series branch."""

    momentum: QuasiMomentum
    d: float
    mu_minus: float
    z_star: float
    r_star: float
    theta: Optional[float] = None
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        if not -0.5 < self.mu_minus < 0.0:
            raise CertificateError(
                "certification requires -1/2 < mu_minus < 0, got %g" % self.mu_minus
            )
        if not -1.0 <= self.z_star < 0.0:
            raise CertificateError("z_star must lie in [-1, 0)")
        if not 0.0 < self.r_star < abs(self.z_star):
            raise CertificateError("need 0 < r_star < |z_star|")

    def to_dict(self) -> dict:
        out = {
            "alpha": list(self.momentum.alpha),
            "d": self.d,
            "mu_minus": self.mu_minus,
            "z_star": self.z_star,
            "r_star": self.r_star,
            "source": dict(self.source),
        }
        if self.theta is not None:
            out["theta"] = self.theta
        return out


def build_certificate(
    momentum: QuasiMomentum,
    limit: LimitSpectrum,
    j: int,
    disk_radius: Optional[float] = None,
    buffer_radius: Optional[float] = None,
    computed_mu_minus: Optional[float] = None,
) -> Certificate:
    """Assemble a certificate from geometry and/or computed resonances.

    When both the buffered closed form and a computed mu_minus are given,
    the larger (sharper) value certifies and both are tagged in source.
    """
    theta = None
    candidates = []
    source = {}
    if disk_radius is not None and buffer_radius is not None:
        theta = theta_disks(disk_radius, buffer_radius)
        mm = mu_minus_from_theta(theta)
        candidates.append(mm)
        source["mu_minus_closed_form"] = mm
    if computed_mu_minus is not None:
        candidates.append(computed_mu_minus)
        source["mu_minus_computed_np"] = computed_mu_minus
    if not candidates:
        raise CertificateError("no route to mu_minus supplied")
    mu_minus = max(candidates)
    source["mu_minus"] = (
        "computed_np"
        if computed_mu_minus is not None and mu_minus == computed_mu_minus
        else "closed_form_disk"
    )
    d = gap_d(limit, j)
    source["d"] = "closed_form_disk" if limit.dirichlet.source == "bessel" else "computed"
    zs = z_star(mu_minus)
    rs = radius(momentum, d, mu_minus, zs)
    return Certificate(
        momentum=momentum,
        d=d,
        mu_minus=mu_minus,
        z_star=zs,
        r_star=rs,
        theta=theta,
        source=source,
    )


def separation_check(cert: Certificate, z: complex) -> bool:
    """True iff the evaluation point is strictly inside the certified disk."""
    return bool(abs(z) < cert.r_star)


def truncation_bound(cert: Certificate, p: int, z: complex) -> float:
    """Tail bound d |z|^(p+1) / (r_star^p (r_star - |z|)) for order p."""
    if p < 0:
        raise CertificateError("order p must be nonnegative")
    az = abs(z)
    if az >= cert.r_star:
        raise CertificateError("truncation bound requires |z| < r_star")
    return cert.d * az ** (p + 1) / (cert.r_star**p * (cert.r_star - az))
