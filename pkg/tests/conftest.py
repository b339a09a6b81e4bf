import json
from pathlib import Path

import numpy as np
import pytest

from refocus.matcore import RngStream

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def oracles():
    return json.loads((DATA / "oracles.json").read_text())


@pytest.fixture
def gen():
    return RngStream(12345).generator()


@pytest.fixture(scope="session")
def std_gates():
    from refocus.skc import standard_gateset

    return standard_gateset()


@pytest.fixture(scope="session")
def coarse_net(std_gates):
    """Net at the qubit shrinking radius, used for inverse approximation."""
    from refocus.skc import build_net

    return build_net(std_gates, 0.25, 40, RngStream(0))


@pytest.fixture(scope="session")
def fine_net(std_gates):
    """Base net for Solovay-Kitaev."""
    from refocus.skc import build_net

    return build_net(std_gates, 0.07, 40, RngStream(0))


def su2_from(a, b, c, d):
    from refocus.qubit import Su2Params

    return Su2Params(a, b, c, d).matrix()


def random_near_identity(d, radius, gen, n):
    """n random SU(d) matrices with ||U - 1|| <= radius (exp of a scaled Hermitian)."""
    from scipy.linalg import expm

    out = []
    while len(out) < n:
        h = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
        h = (h + h.conj().T) / 2
        h -= np.trace(h) / d * np.eye(d)
        h *= gen.uniform(0, 1) * radius / np.abs(np.linalg.eigvalsh(h)).max()
        u = expm(1j * h)
        if np.linalg.norm(u - np.eye(d), 2) <= radius:
            out.append(u)
    return np.stack(out)


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
