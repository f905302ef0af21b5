import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("default")


def random_stable_model(rng, n_x, n_u=1, n_y=1, radius=0.95):
    from r2rlearn.lti import StateSpaceModel

    A = rng.normal(size=(n_x, n_x))
    A *= radius / max(1e-12, np.max(np.abs(np.linalg.eigvals(A))))
    return StateSpaceModel(A, rng.normal(size=(n_x, n_u)), rng.normal(size=(n_y, n_x)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = []   # (criterion, passed, detail), filled by test_acceptance


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
