import warnings

import numpy as np
import pytest

from lambdasim.fock_basis import EnvelopeDensityMatrix, Truncation


def random_density(trunc: Truncation, seed: int = 0) -> EnvelopeDensityMatrix:
    """Random positive unit-trace matrix on ``trunc``."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(trunc.dim, trunc.dim)) + 1j * rng.normal(size=(trunc.dim, trunc.dim))
    rho = a @ a.conj().T
    return EnvelopeDensityMatrix(trunc, rho / np.trace(rho).real)


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


# acceptance criteria report: one PASS/FAIL line per criterion, printed at the end
CRITERIA: dict = {}


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"CRITERION {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    CRITERIA[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[number])
