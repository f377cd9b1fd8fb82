import numpy as np
import pytest
from hypothesis import strategies as st

from qpfaff import Quaternion

finite = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)
quaternions = st.builds(Quaternion, complexes, complexes, complexes, complexes)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_quaternion(rng):
    return Quaternion.from_array(rng.standard_normal(4) + 1j * rng.standard_normal(4))
