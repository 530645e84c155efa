import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from equiconv.model import Coefficient, OperatorSpec, SampledFunction, bc_rows, dirichlet2

settings.register_profile("default", deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def bump(lo=0.2, hi=0.8):
    def fn(x):
        t = (np.asarray(x, dtype=float) - lo) / (hi - lo)
        out = np.zeros_like(t)
        m = (t > 0) & (t < 1)
        out[m] = np.exp(-1.0 / (t[m] * (1.0 - t[m])))
        return out
    return fn


@pytest.fixture
def hinged4():
    return OperatorSpec.model(bc_rows((0, 1, 0), (2, 1, 0), (0, 0, 1), (2, 0, 1)), "hinged4")


@pytest.fixture
def mixed2():
    # y(0) = 0 and D y(0) + D y(1) = 0, regular with chi = 1
    return OperatorSpec.model(bc_rows((0, 1, 0), (1, 1, 1)), "mixed")


@pytest.fixture
def perturbed2():
    return dirichlet2().with_coefficients({0: Coefficient.polynomial([0, 1])}, "D2+x")


@pytest.fixture
def smooth_f():
    return SampledFunction.from_callable(lambda x: x * (1 - x) * np.exp(x))


@pytest.fixture
def bump_f():
    return SampledFunction.from_callable(bump())


def sine_series(f, x, r):
    """Dirichlet eigenfunction partial sum: sum over j pi <= r."""
    from scipy.integrate import quad

    out = np.zeros(len(x), dtype=complex)
    j = 1
    while j * np.pi <= r:
        c = quad(lambda s: complex(f(np.array([s]))[0]).real * np.sin(j * np.pi * s), 0, 1, limit=200)[0]
        c += 1j * quad(lambda s: complex(f(np.array([s]))[0]).imag * np.sin(j * np.pi * s), 0, 1, limit=200)[0]
        out += 2 * c * np.sin(j * np.pi * np.asarray(x))
        j += 1
    return out


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance(capsys):
    """Record and print one pass/fail line for an acceptance criterion."""
    def record(number, ok, detail, elapsed, limit):
        in_time = elapsed < limit
        status = "PASS" if ok and in_time else "FAIL"
        line = f"criterion {number:>2}: {status}  {detail}  [{elapsed:.1f}s / limit {limit:g}s]"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok and in_time
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
