import numpy as np
import pytest

from mtebounds.moments import MomentTable
from mtebounds.simulation import compliant_spec, population_moments, three_valued_spec


@pytest.fixture
def compliant_moments():
    return population_moments(compliant_spec())


@pytest.fixture
def three_valued_moments():
    return population_moments(three_valued_spec())


@pytest.fixture
def snap_moments():
    # published treatment shares with the contrast implied by the b-selection anchors
    return MomentTable(("z0", "z1"), np.array([0.44, 0.41]), np.array([0.38, 0.49]), np.array([1.0, 1.0]))
