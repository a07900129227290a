import warnings

import pytest

from jclattice.hilbert import build_basis
from jclattice.model import SystemParams


def make_params(**kw) -> SystemParams:
    """Dimensionless ring with g/J = 20 unless overridden."""
    base = dict(omega0=1000.0, g=20.0, J=1.0)
    base.update(kw)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return SystemParams(**base)


@pytest.fixture(scope="session")
def strong_params():
    return make_params()


@pytest.fixture(scope="session")
def jc_basis():
    return build_basis(4, 2, True, 2)


@pytest.fixture(scope="session")
def boson_basis():
    return build_basis(4, 2, False)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(line)
