import pytest

from paw1d.model import ModelParams, negative_spectrum
from paw1d.pawgen import PawSetup, build_sites


@pytest.fixture(scope="session")
def params():
    return ModelParams(a=0.4, Z0=10.0, Za=10.0)


@pytest.fixture(scope="session")
def setup():
    return PawSetup(eta=0.1, N=2, d=6)


@pytest.fixture(scope="session")
def E0(params):
    return negative_spectrum(params)[0].energy


@pytest.fixture(scope="session")
def sites(params, setup):
    return build_sites(params, setup, with_odd=True)


@pytest.fixture(scope="session")
def site(sites):
    return sites[0]
