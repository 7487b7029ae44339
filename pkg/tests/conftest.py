import numpy as np
import pytest

from distorder import MuSpec, PsiParams

SPECIMENS = {
    "constant": lambda a: 1.0 + 0 * a,
    "linear": lambda a: a + 0.2,
    "decreasing": lambda a: 2.0 - a,
    "quadratic": lambda a: 0.3 + a**2,
    "bump": lambda a: 1.0 + 0.5 * np.sin(3 * a),
}


@pytest.fixture(scope="session")
def mu_one():
    return MuSpec.constant(1.0, 21)


@pytest.fixture(scope="session")
def mu_lin():
    return MuSpec.from_function(lambda a: a + 0.2, 21)


@pytest.fixture(scope="session")
def psi_default():
    return PsiParams(1.0, 0.4, 0.8)


@pytest.fixture(scope="session", params=sorted(SPECIMENS))
def specimen(request):
    return MuSpec.from_function(SPECIMENS[request.param], 21)


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))
