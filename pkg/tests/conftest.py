import numpy as np
import pytest

from qbattery.hamiltonians import BatterySpec, build_battery
from qbattery.operators import SIGMA_X, SIGMA_Y, SIGMA_Z, PauliSum, PauliTerm, to_dense


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_site():
    """Two cells of sigma^z under the global sigma^x sigma^x driving."""
    H = build_battery(BatterySpec(2, 1.0))
    V = to_dense(PauliSum(2, (PauliTerm(1.0, {0: "X", 1: "X"}),)))
    return H, V


def kron_all(*ops):
    out = np.eye(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


PAULI = {"X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z, "I": np.eye(2, dtype=complex)}


def dense_oracle(p: PauliSum) -> np.ndarray:
    """Direct tensor-product assembly, independent of the bitmask kernel."""
    n = 1 << p.num_sites
    out = np.zeros((n, n), dtype=complex)
    for t in p.terms:
        out += t.coefficient * kron_all(*(PAULI[c] for c in t.label(p.num_sites)))
    return out


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for line in results.values():
            terminalreporter.write_line(line)
