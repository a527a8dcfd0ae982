import numpy as np
import pytest

import filament_mc as fm

MASTER = 900311


@pytest.fixture(scope="session")
def cs_gauss():
    return fm.CrossSection.gaussian(0.5)


@pytest.fixture(scope="session")
def kgrid_small(cs_gauss):
    # coarse grid for unit tests; acceptance uses the 64x16x32 default
    return fm.build_kgrid(cs_gauss, n_radial=24, n_theta=8, n_phi=8)


@pytest.fixture(scope="session")
def grid_512():
    return fm.TimeGrid(1.0, 512)


@pytest.fixture(scope="session")
def bm_path(grid_512):
    return fm.sample_bm(grid_512, np.zeros(3), fm.SeedSpec(MASTER, 0))


def make_bm(i, steps=512, T=1.0, x0=(0.0, 0.0, 0.0)):
    return fm.sample_bm(fm.TimeGrid(T, steps), np.asarray(x0, float),
                        fm.SeedSpec(MASTER, i))


def make_bridge(i, steps=512, T=1.0, x0=(0.0, 0.0, 0.0)):
    return fm.sample_bridge(fm.TimeGrid(T, steps), np.asarray(x0, float),
                            fm.SeedSpec(MASTER, i))
