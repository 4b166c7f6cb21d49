import numpy as np
import pytest

from ncidirac.liecore import LieAlgebra, SubalgebraSplit
from ncidirac.model import bundled_model_path, load_model


@pytest.fixture(scope="session")
def five_dim():
    return load_model(bundled_model_path("five_dim"))


@pytest.fixture(scope="session")
def ads3():
    return load_model(bundled_model_path("ads3"))


@pytest.fixture(scope="session")
def abelian3():
    """A three-dimensional abelian algebra with a trivial one-dim isotropy."""
    alg = LieAlgebra(3, np.zeros((3, 3, 3)))
    split = SubalgebraSplit(alg, [2], [0, 1])
    return alg, split
