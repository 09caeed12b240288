import numpy as np
import pytest
from scipy import sparse

from femfct import (
    ProblemSpec,
    build_friedrichs_keller,
)


@pytest.fixture(scope="session")
def fk0():
    return build_friedrichs_keller(0)


@pytest.fixture(scope="session")
def fk1():
    return build_friedrichs_keller(1)


@pytest.fixture(scope="session")
def fk2():
    return build_friedrichs_keller(2)


@pytest.fixture
def benchmark_spec():
    """Convection-dominated test problem: eps=1e-8, b=(2,3), c=1."""
    return ProblemSpec(
        eps=1e-8,
        b=lambda t, x, y: (np.full_like(np.asarray(x, dtype=float), 2.0),
                           np.full_like(np.asarray(x, dtype=float), 3.0)),
        c=lambda t, x, y: np.ones_like(np.asarray(x, dtype=float)),
        f=lambda t, x, y: np.zeros_like(np.asarray(x, dtype=float)),
        u0=lambda x, y: np.zeros_like(np.asarray(x, dtype=float)),
        c0=1.0,
        t_end=1.0,
        tau=1e-3,
    )


def sym2(diag, off):
    """2x2 symmetric sparse matrix [[diag, off], [off, diag]]."""
    return sparse.csr_matrix(np.array([[diag, off], [off, diag]], dtype=float))
