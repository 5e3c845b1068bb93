"""Infinite-contrast limit spectrum: disk closed forms, FD fallback, roots."""

import numpy as np
import pytest

from blochseries.geometry import Inclusion
from blochseries.lattice_green import QuasiMomentum
from blochseries.limit_spectrum import (
    ResolutionError,
    bessel_zero,
    disk_dirichlet,
    fd_dirichlet,
    limit_spectrum,
    spectral_function,
    spectral_roots,
)

ETA_01 = 2.404825557695773  # first zero of J_0
ETA_11 = 3.831705970207512  # first zero of J_1


def test_bessel_zero_pins():
    assert abs(bessel_zero(0, 1) - ETA_01) < 1e-12
    assert abs(bessel_zero(1, 1) - ETA_11) < 1e-12
    assert abs(bessel_zero(0, 2) - 5.520078110286311) < 1e-12


def test_disk_spectrum_values_and_flags():
    spec = disk_dirichlet(0.3, 3, 2)
    assert abs(spec.eigenvalues[0] - (ETA_01 / 0.3) ** 2) < 1e-9
    assert abs(spec.eigenvalues[0] - 64.25762181) < 1e-6
    first = spec.modes[0]
    assert first.multiplicity == 1 and not first.zero_mean
    assert abs(first.average - 2.0 * np.sqrt(np.pi) * 0.3 / ETA_01) < 1e-12
    second = spec.modes[1]
    assert second.label == (1, 1)
    assert second.multiplicity == 2 and second.zero_mean
    assert abs(spec.area - np.pi * 0.09) < 1e-14


def test_fd_dirichlet_agrees_with_bessel():
    inc = Inclusion("disk", center=(0.5, 0.5), radius=0.3)
    fd = fd_dirichlet(inc, 1.0 / 160, 4)
    # Expand degenerate levels: the FD solver reports each eigenvalue
    # separately, the closed form lists levels with multiplicity.
    exact = []
    for m in disk_dirichlet(0.3, 4, 3).modes:
        exact.extend([m.eigenvalue] * m.multiplicity)
    exact = np.array(sorted(exact)[:4])
    rel = np.abs(fd.eigenvalues[:4] - exact) / exact
    # The boundary is staircase-approximated, so expect ~1% accuracy.
    assert rel.max() < 2e-2
    assert fd.error_estimate is not None
    # Mean flags: lowest mode non-zero-mean, second (n=1) zero-mean.
    assert not fd.modes[0].zero_mean
    assert fd.modes[1].zero_mean


def test_spectral_function_root_bracketing():
    spec = disk_dirichlet(0.3, 6, 4)
    roots = spectral_roots(spec, 2)
    d01 = (ETA_01 / 0.3) ** 2
    d02 = (bessel_zero(0, 2) / 0.3) ** 2
    assert d01 < roots[0] < d02
    val, tail = spectral_function(roots[0], spec)
    assert abs(val) < 1e-8
    assert tail >= 0
    # Pinned first root at this truncation, and its refinement limit:
    # adding radial modes moves the root down toward ~79.6153.
    assert abs(roots[0] - 79.62199341) < 1e-6
    fine = spectral_roots(disk_dirichlet(0.3, 1, 60), 1)[0]
    assert fine < roots[0]
    assert abs(fine - 79.61527) < 1e-3


def test_spectral_function_pole_rejected():
    spec = disk_dirichlet(0.3, 2, 2)
    with pytest.raises(ZeroDivisionError):
        spectral_function(spec.modes[0].eigenvalue, spec)


def test_limit_spectrum_nonzero_alpha():
    spec = disk_dirichlet(0.3, 6, 4)
    limit = limit_spectrum(QuasiMomentum((np.pi, 0.0)), spec, 4)
    betas = [v.beta0 for v in limit.values]
    assert betas == sorted(betas, reverse=True)
    assert abs(betas[0] - (0.3 / ETA_01) ** 2) < 1e-12
    assert limit.values[0].provenance == "dirichlet"
    assert limit.values[1].multiplicity == 2


def test_limit_spectrum_periodic_point():
    spec = disk_dirichlet(0.3, 6, 4)
    limit = limit_spectrum(QuasiMomentum((0.0, 0.0)), spec, 5)
    # Largest limit value comes from the first spectral root, which sits
    # above the first Dirichlet eigenvalue, so 1/nu_1 > ... check order.
    assert limit.values[0].provenance == "spectral_root"
    assert abs(1.0 / limit.values[0].beta0 - 79.62199341) < 1e-6
    # Zero-mean Dirichlet values are retained verbatim.
    provs = {v.provenance for v in limit.values}
    assert provs == {"spectral_root", "dirichlet"}
    for v in limit.values:
        if v.provenance == "dirichlet":
            n, _k = v.label
            assert n >= 1


def test_limit_spectrum_resolution_error():
    spec = disk_dirichlet(0.3, 1, 1)
    with pytest.raises(ResolutionError):
        limit_spectrum(QuasiMomentum((np.pi, 0.0)), spec, 10)
