import pytest

from torus_scatterer import spectrum


@pytest.fixture(scope="session")
def spec2d_500():
    return spectrum.solve_spectrum(500, spectrum.ScattererConfig(d=2, phi=0.0))


@pytest.fixture(scope="session")
def spec3d_500():
    return spectrum.solve_spectrum(500, spectrum.ScattererConfig(d=3, phi=0.0))


@pytest.fixture(scope="session")
def spec2d_2000():
    return spectrum.solve_spectrum(2000, spectrum.ScattererConfig(d=2, phi=0.0))


@pytest.fixture(scope="session")
def spec2d_5000():
    return spectrum.solve_spectrum(5000, spectrum.ScattererConfig(d=2, phi=0.0))


@pytest.fixture(scope="session")
def spec3d_2000():
    return spectrum.solve_spectrum(2000, spectrum.ScattererConfig(d=3, phi=0.0))
