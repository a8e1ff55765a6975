import pytest

from resistive_walk.generate import LongRangeParams, fixture, generate_long_range


@pytest.fixture(scope="session")
def line64():
    return fixture("line", 64)


@pytest.fixture(scope="session")
def lrp128():
    return generate_long_range(LongRangeParams(128, 1.0, 3.5, seed=7))


MINI_CONFIG = """\
name = mini
model = lrp
half_width = 128
beta = 1.0
tail_exponent = 3.5
ensemble = 4
master_seed = 99
metric = line
radius_grid = 4,8,16
time_grid = 8,16,32
goodscale_radii = 4,8,16
tolerance_grid = 2,4,8
theta_grid = 2,4
theta_star = 4
n_trajectories = 32
mc_exit_radii = 4
"""


@pytest.fixture(scope="session")
def mini_config_text():
    return MINI_CONFIG
