import numpy as np
import pytest

from confclust.dataset import gen_blobs
from confclust.kmeans import GeneralModel


def random_spd(rng, d, scale=1.0):
    A = rng.standard_normal((d, d))
    return scale * (A @ A.T / d + 0.3 * np.eye(d))


def random_general_model(rng, k, d):
    w = rng.dirichlet(np.ones(k) * 2)
    mu = rng.normal(scale=3.0, size=(k, d))
    covs = np.stack([random_spd(rng, d, rng.uniform(0.3, 2.0)) for _ in range(k)])
    return GeneralModel(w, mu, covs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_blobs():
    return gen_blobs(2, 200, [[0, 0], [8, 0]], 1.0, seed=7)


@pytest.fixture
def four_blobs():
    centers = [[0, 0], [8, 0], [0, 8], [8, 8]]
    return gen_blobs(4, 150, centers, 1.0, noise_n=40, noise_box=([-3, -3], [11, 11]), seed=3)


# acceptance results, printed as one line per criterion at the end of the run
ACCEPTANCE = {}


def record(criterion, ok, detail):
    """Store the outcome of an acceptance criterion and fail the test if it is red."""
    ACCEPTANCE[criterion] = (bool(ok), detail)
    assert ok, f"acceptance {criterion}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda c: (int(str(c).split("[")[0]), str(c))):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
