"""Shared fixtures: the 0.3-disk testbed and its expensive assemblies."""

import numpy as np
import pytest

from blochseries.geometry import Inclusion, InclusionSet
from blochseries.lattice_green import QuasiMomentum
from blochseries.limit_spectrum import disk_dirichlet, limit_spectrum
from blochseries.series_engine import build_chain, build_series_model


@pytest.fixture(scope="session")
def disk_set():
    inc = Inclusion("disk", center=(0.5, 0.5), radius=0.3)
    return InclusionSet((inc,))


@pytest.fixture(scope="session")
def buffered_disk_set():
    inc = Inclusion("disk", center=(0.5, 0.5), radius=0.3)
    return InclusionSet((inc,), buffer_outer_radius=0.45)


@pytest.fixture(scope="session")
def alpha_pi0():
    return QuasiMomentum((np.pi, 0.0))


@pytest.fixture(scope="session")
def chain_pi0(disk_set, alpha_pi0):
    return build_chain(disk_set, alpha_pi0, nodes_per_inclusion=128)


@pytest.fixture(scope="session")
def model_pi0(chain_pi0):
    return build_series_model(chain_pi0, fourier_cutoff=64)


@pytest.fixture(scope="session")
def limit_pi0(alpha_pi0):
    return limit_spectrum(alpha_pi0, disk_dirichlet(0.3, 6, 4), 6)
