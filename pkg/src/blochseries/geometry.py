"""Unit cell, inclusion shapes, and boundary quadrature meshes.

The crystal lives on the unit cell Y = (0,1]^2 with Brillouin zone
Y* = (-pi,pi]^2.  Inclusions are disks or smooth closed parametric curves
strictly inside Y.  A BoundaryMesh carries equispaced-in-parameter nodes,
outward unit normals, curvatures, and trapezoidal quadrature weights in
arclength; on smooth closed curves the trapezoid rule is spectrally
accurate, which is what the layer-potential solvers downstream rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class ConfigurationError(ValueError):
    """Raised when an inclusion layout violates the cell constraints."""


#: Sentinel returned by min_separation when there is no inclusion pair.
NO_PAIR = np.inf


@dataclass(frozen=True)
class PeriodCell:
    """The unit cell Y = (0,1]^2 and its Brillouin zone (-pi,pi]^2."""

    dimension: int = 2
    side: float = 1.0

    def __post_init__(self):
        if self.dimension != 2:
            raise ConfigurationError("only dimension 2 is supported")
        if self.side != 1.0:
            raise ConfigurationError("the unit cell has side length 1")

    @staticmethod
    def contains_alpha(alpha) -> bool:
        a = np.asarray(alpha, dtype=float)
        return bool(np.all(a > -np.pi) and np.all(a <= np.pi))


@dataclass(frozen=True)
class Inclusion:
    """A single inclusion: a disk or a smooth closed curve.

    Parameters
    ----------
    kind : {"disk", "parametric_curve"}
    center, radius : disk data; center must place the closed disk
        strictly inside Y.
    curve : for parametric curves, a callable t -> (2, len(t)) array of
        points for t in [0, 2pi); it must be simple, positively oriented,
        and twice continuously differentiable.
    """

    kind: str
    center: Optional[tuple] = None
    radius: Optional[float] = None
    curve: Optional[Callable] = None

    def __post_init__(self):
        if self.kind == "disk":
            if self.center is None or self.radius is None:
                raise ConfigurationError("disk inclusion needs center and radius")
            if self.radius <= 0:
                raise ConfigurationError("disk radius must be positive")
            c = np.asarray(self.center, dtype=float)
            a = self.radius
            if np.any(c - a <= 0.0) or np.any(c + a >= 1.0):
                raise ConfigurationError(
                    "disk at %s with radius %g is not strictly inside Y" % (tuple(c), a)
                )
        elif self.kind == "parametric_curve":
            if self.curve is None:
                raise ConfigurationError("parametric inclusion needs a curve callable")
        else:
            raise ConfigurationError("unknown inclusion kind %r" % (self.kind,))

    def boundary_points(self, t: np.ndarray) -> np.ndarray:
        """Boundary points at parameter values t, shape (2, len(t))."""
        if self.kind == "disk":
            c = np.asarray(self.center, dtype=float)
            return np.stack(
                [c[0] + self.radius * np.cos(t), c[1] + self.radius * np.sin(t)]
            )
        return np.asarray(self.curve(t), dtype=float)


@dataclass(frozen=True)
class InclusionSet:
    """A collection of pairwise disjoint inclusions, optionally buffered.

    buffer_outer_radius b applies to all-disk sets only: each disk of
    radius a is surrounded by the annulus a < |x - c| < b, and the
    buffered disks must stay pairwise disjoint and inside Y.
    """

    inclusions: tuple
    buffer_outer_radius: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "inclusions", tuple(self.inclusions))
        if len(self.inclusions) == 0:
            raise ConfigurationError("need at least one inclusion")
        _check_disjoint(self.inclusions)
        b = self.buffer_outer_radius
        if b is not None:
            if not all(inc.kind == "disk" for inc in self.inclusions):
                raise ConfigurationError("buffer radius is supported for disks only")
            for i, inc in enumerate(self.inclusions):
                if b <= inc.radius:
                    raise ConfigurationError(
                        "buffer radius %g must exceed disk radius %g" % (b, inc.radius)
                    )
                c = np.asarray(inc.center, dtype=float)
                if np.any(c - b <= 0.0) or np.any(c + b >= 1.0):
                    raise ConfigurationError("buffered disk %d leaves the cell" % i)
            t_d = min_separation(self, _validated=True)
            if t_d is not NO_PAIR:
                for i, inc in enumerate(self.inclusions):
                    if 2.0 * b > t_d + 2.0 * inc.radius + 1e-14:
                        raise ConfigurationError(
                            "buffer radius %g exceeds half the gap between disks" % b
                        )


def _disk_pair_distance(inc_i: Inclusion, inc_j: Inclusion) -> float:
    ci = np.asarray(inc_i.center, dtype=float)
    cj = np.asarray(inc_j.center, dtype=float)
    return float(np.linalg.norm(ci - cj)) - inc_i.radius - inc_j.radius


def _curve_pair_distance(inc_i: Inclusion, inc_j: Inclusion, tol: float = 1e-8) -> float:
    # Coarse-to-fine search over boundary node pairs.
    n = 64
    dist = np.inf
    while True:
        t = 2.0 * np.pi * np.arange(n) / n
        pi_ = inc_i.boundary_points(t)
        pj_ = inc_j.boundary_points(t)
        d2 = (
            (pi_[0][:, None] - pj_[0][None, :]) ** 2
            + (pi_[1][:, None] - pj_[1][None, :]) ** 2
        )
        new = float(np.sqrt(d2.min()))
        if abs(dist - new) < tol or n >= 4096:
            return new
        dist = new
        n *= 2


def min_separation(inclusion_set: InclusionSet, _validated: bool = False) -> float:
    """Smallest boundary-to-boundary distance between distinct inclusions.

    Exact for disk pairs; for curves, refined mesh search to 1e-8.
    Returns the NO_PAIR sentinel (+inf) for a single inclusion.
    """
    incs = inclusion_set.inclusions
    if len(incs) < 2:
        return NO_PAIR
    best = np.inf
    for i in range(len(incs)):
        for j in range(i + 1, len(incs)):
            if incs[i].kind == "disk" and incs[j].kind == "disk":
                d = _disk_pair_distance(incs[i], incs[j])
            else:
                d = _curve_pair_distance(incs[i], incs[j])
            best = min(best, d)
    return best


def _check_disjoint(incs) -> None:
    for i in range(len(incs)):
        for j in range(i + 1, len(incs)):
            if incs[i].kind == "disk" and incs[j].kind == "disk":
                d = _disk_pair_distance(incs[i], incs[j])
            else:
                d = _curve_pair_distance(incs[i], incs[j])
            if d <= 0.0:
                raise ConfigurationError(
                    "inclusions %d and %d overlap or touch (gap %g)" % (i, j, d)
                )


@dataclass
class BoundaryMesh:
    """Discrete boundary of an inclusion set.

    All arrays are concatenated over inclusions in order.  nodes has
    shape (2, n_q); normals point from D into Y \\ D; weights are the
    trapezoidal arclength weights (2pi/n) * |x'(t)|; curvature is the
    signed curvature of the positively oriented boundary.
    """

    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    speed: np.ndarray
    curvature: np.ndarray
    params: np.ndarray
    offsets: np.ndarray  # start index of each inclusion's nodes, plus n_q
    inclusion_set: InclusionSet = field(repr=False, default=None)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[1]

    def per_inclusion(self, k: int) -> slice:
        return slice(int(self.offsets[k]), int(self.offsets[k + 1]))


def _disk_mesh(inc: Inclusion, n: int):
    t = 2.0 * np.pi * np.arange(n) / n
    c = np.asarray(inc.center, dtype=float)
    a = inc.radius
    nodes = np.stack([c[0] + a * np.cos(t), c[1] + a * np.sin(t)])
    normals = np.stack([np.cos(t), np.sin(t)])
    speed = np.full(n, a)
    weights = (2.0 * np.pi / n) * speed
    curvature = np.full(n, 1.0 / a)
    return nodes, normals, weights, speed, curvature, t


def _curve_mesh(inc: Inclusion, n: int):
    # Spectral differentiation of the parametrization gives x', x'' and
    # from them speed, normal, and curvature.
    t = 2.0 * np.pi * np.arange(n) / n
    x = inc.boundary_points(t)  # (2, n)
    freqs = np.fft.fftfreq(n, d=1.0 / n)  # integer wavenumbers
    xh = np.fft.fft(x, axis=1)
    xp = np.real(np.fft.ifft(1j * freqs * xh, axis=1))
    xpp = np.real(np.fft.ifft(-(freqs**2) * xh, axis=1))
    speed = np.hypot(xp[0], xp[1])
    if np.any(speed <= 0):
        raise ConfigurationError("degenerate curve parametrization (zero speed)")
    # Positive orientation: outward normal is the clockwise rotation of
    # the unit tangent.
    normals = np.stack([xp[1], -xp[0]]) / speed
    curvature = (xp[0] * xpp[1] - xp[1] * xpp[0]) / speed**3
    if np.mean(curvature * speed) < 0:
        raise ConfigurationError("curve must be positively oriented")
    weights = (2.0 * np.pi / n) * speed
    return x, normals, weights, speed, curvature, t


def build_mesh(inclusion_set: InclusionSet, nodes_per_inclusion: int) -> BoundaryMesh:
    """Equispaced-in-parameter Nystrom mesh on every inclusion boundary."""
    n = int(nodes_per_inclusion)
    if n < 16 or n % 2 != 0:
        raise ConfigurationError("nodes_per_inclusion must be even and >= 16")
    parts = []
    for inc in inclusion_set.inclusions:
        if inc.kind == "disk":
            parts.append(_disk_mesh(inc, n))
        else:
            parts.append(_curve_mesh(inc, n))
    offsets = np.arange(len(parts) + 1) * n
    return BoundaryMesh(
        nodes=np.concatenate([p[0] for p in parts], axis=1),
        normals=np.concatenate([p[1] for p in parts], axis=1),
        weights=np.concatenate([p[2] for p in parts]),
        speed=np.concatenate([p[3] for p in parts]),
        curvature=np.concatenate([p[4] for p in parts]),
        params=np.concatenate([p[5] for p in parts]),
        offsets=offsets,
        inclusion_set=inclusion_set,
    )
