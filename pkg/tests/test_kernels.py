import numpy as np
import pytest

from conftest import random_premises
from tsfuzzy import kernels
from tsfuzzy.inference import compile_premises

try:
    CYTHON = kernels.get_backend("cython")
except ImportError:  # extension not built in this environment
    CYTHON = None
PYTHON = kernels.get_backend("python")

needs_ext = pytest.mark.skipif(CYTHON is None, reason="compiled extension not built")


def scalar_weights(premises, X, mode):
    out = np.ones((len(X), len(premises)))
    for r, x in enumerate(X):
        for i, prem in enumerate(premises):
            for v, mf in prem:
                out[r, i] *= mf.moving_rate(x[v]) if mode == kernels.MOVING else mf.grade(x[v])
    return out


@pytest.mark.parametrize("mode", [kernels.MOVING, kernels.MATCHING])
@pytest.mark.parametrize("seed", range(5))
def test_python_backend_matches_scalar_definitions(mode, seed):
    rng = np.random.default_rng(seed)
    premises = random_premises(rng, 4, 3, gauss=mode == kernels.MATCHING)
    X = rng.uniform(-1.5, 2.5, (200, 3))
    got = PYTHON.rule_weights(X, *compile_premises(premises), len(premises), mode)
    np.testing.assert_allclose(got, scalar_weights(premises, X, mode), rtol=0, atol=1e-12)


@needs_ext
@pytest.mark.parametrize("mode", [kernels.MOVING, kernels.MATCHING])
@pytest.mark.parametrize("seed", range(10))
def test_backends_agree_on_weights(mode, seed):
    rng = np.random.default_rng(100 + seed)
    premises = random_premises(rng, 5, 4, gauss=mode == kernels.MATCHING)
    X = rng.uniform(-1.5, 2.5, (300, 4))
    args = (X, *compile_premises(premises), len(premises), mode)
    np.testing.assert_allclose(CYTHON.rule_weights(*args), PYTHON.rule_weights(*args),
                               rtol=1e-14, atol=1e-15)


@needs_ext
@pytest.mark.parametrize("seed", range(10))
def test_backends_agree_on_regressors(seed):
    rng = np.random.default_rng(200 + seed)
    W = rng.uniform(0, 1, (50, 3)) * (rng.uniform(size=(50, 1)) > 0.2)
    X = rng.normal(size=(50, 2))
    mask = rng.uniform(size=(3, 3)) > 0.4
    mask[0, 0] = True
    zc, kc = CYTHON.regressor_matrix(W, X, mask)
    zp, kp = PYTHON.regressor_matrix(W, X, mask)
    np.testing.assert_array_equal(kc, kp)
    np.testing.assert_allclose(zc, zp, rtol=1e-14, atol=1e-15)


def test_rule_without_clauses_has_unit_weight():
    X = np.zeros((3, 2))
    W = kernels.rule_weights(X, *compile_premises([()]), 1, kernels.MOVING)
    np.testing.assert_array_equal(W, np.ones((3, 1)))


def test_backend_name():
    assert kernels.BACKEND in ("python", "cython")
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@pytest.mark.parametrize("backend", [PYTHON] + ([CYTHON] if CYTHON else []))
def test_regressors_when_no_row_fires(backend):
    Z, keep = backend.regressor_matrix(np.zeros((3, 2)), np.ones((3, 2)), np.ones((2, 3), bool))
    assert Z.shape == (0, 6) and not keep.any()
