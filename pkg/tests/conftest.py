import math
import warnings

import pytest

from zetawb.catalog import RoofFunction
from zetawb.sources.fuchsian import punctured_torus_catalog
from zetawb.sources.toral import toral_suspension_catalog

CAT_MATRIX = [[2, 1], [1, 1]]
FIB_MATRIX = [[1, 1], [1, 0]]
CAT_EXPANSION = (3 + math.sqrt(5)) / 2
CAT_ENTROPY = math.log(CAT_EXPANSION)


@pytest.fixture(scope="session")
def cat14():
    """Unit-roof cat-map suspension, complete to length 14."""
    return toral_suspension_catalog(CAT_MATRIX, RoofFunction.constant(1.0), 14)


@pytest.fixture(scope="session")
def cat6():
    return toral_suspension_catalog(CAT_MATRIX, RoofFunction.constant(1.0), 6)


@pytest.fixture(scope="session")
def fib12():
    """Fibonacci-matrix suspension: both orientation signs occur."""
    return toral_suspension_catalog(FIB_MATRIX, RoofFunction.constant(1.0), 12)


@pytest.fixture(scope="session")
def mixing16():
    """Cat map under the mixing roof 1 + 0.3 cos(2 pi x1)."""
    roof = RoofFunction.trig(1.0, {(1, 0): 0.3})
    return toral_suspension_catalog(CAT_MATRIX, roof, 16, threads=2)


@pytest.fixture(scope="session")
def ptorus10():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return punctured_torus_catalog(10)


@pytest.fixture(scope="session")
def ptorus5():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return punctured_torus_catalog(5)
