import numpy as np
import pytest

from wfield_ucc.fock import StateVector


def random_state(rng, n_modes):
    v = rng.normal(size=1 << n_modes) + 1j * rng.normal(size=1 << n_modes)
    return StateVector(v / np.linalg.norm(v), n_modes)


def kron_annihilator(p, n_modes):
    """Jordan-Wigner ``c_p`` built from Kronecker products; bit ``b`` of the index is mode ``b``."""
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    z = np.diag([1.0, -1.0])
    eye = np.eye(2)
    out = np.ones((1, 1))
    for q in reversed(range(n_modes)):
        out = np.kron(out, a if q == p else (z if q < p else eye))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
