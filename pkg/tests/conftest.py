import math

import pytest

from qmemsim.squeezing import lens_correct, opa_spectrum

R0_DEFAULT = math.log(3.0)


@pytest.fixture(scope="session")
def opa3():
    """Parametric-amplifier spectrum with e^r0 = 3, unit coherence length."""
    return opa_spectrum(R0_DEFAULT, 1.0)


@pytest.fixture(scope="session")
def opa3_lens(opa3):
    return lens_correct(opa3)
