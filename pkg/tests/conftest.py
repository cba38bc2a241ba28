import numpy as np
import pytest

import relaymatch as rm


@pytest.fixture(scope="session")
def sysp():
    return rm.SystemParams()


@pytest.fixture(scope="session")
def instance_a(sysp):
    """Hand-checkable 2x2 instance.

    direct = (1, 1), relay = [[2, 3], [2.5, 2.2]]:
    alpha* = [[1/4, 1/3], [3/10, 3/11]],
    cu scores = [[0.5, 1.0], [0.75, 0.6]],
    unique stable matching {CU0-D1, CU1-D0}.
    """
    rates = rm.RateTable(
        direct_rates=np.array([1.0, 1.0]),
        relay_rates=np.array([[2.0, 3.0], [2.5, 2.2]]),
        d2d_rates=np.array([5.0, 4.0]),
    )
    return rates, rm.build_preferences(rates, sysp)
