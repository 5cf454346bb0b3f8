import time

import hypothesis
import numpy as np
import pytest

from koopstab import catalog
from koopstab.system import BoxMap, find_limit_cycle, floquet_exponents, jacobian_spectrum

hypothesis.settings.register_profile("default", deadline=None, max_examples=40)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=8)
hypothesis.settings.load_profile("default")


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def build_times():
    """Wall-clock seconds spent building the expensive session fixtures."""
    return {}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def cubic_planar():
    return catalog.cubic_planar()


@pytest.fixture(scope="session")
def cubic_planar_spectrum(cubic_planar):
    return jacobian_spectrum(cubic_planar, [0.0, 0.0])


@pytest.fixture(scope="session")
def cubic_planar_taylor75(cubic_planar, cubic_planar_spectrum, build_times):
    from koopstab.taylor import solve_all_taylor

    t0 = time.perf_counter()
    out = solve_all_taylor(cubic_planar, cubic_planar_spectrum, 75)
    build_times["taylor75"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def cubic_planar_box():
    return BoxMap(np.array([-2.0, -2.0]), np.array([2.0, 2.0]))


@pytest.fixture(scope="session")
def cubic_planar_bernstein40(cubic_planar, cubic_planar_box):
    from koopstab.bernstein_fp import solve_box_eigenfunctions

    return solve_box_eigenfunctions(cubic_planar, cubic_planar_box, 40)[1]


@pytest.fixture(scope="session")
def cubic_planar_bernstein75(cubic_planar, cubic_planar_box, build_times):
    """Degree-75 solve on [-2, 2]^2 (a few minutes; shared by every test that needs it)."""
    from koopstab.bernstein_fp import solve_box_eigenfunctions

    t0 = time.perf_counter()
    out = solve_box_eigenfunctions(cubic_planar, cubic_planar_box, 75)[1]
    build_times["bernstein75"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def modulated():
    return catalog.modulated_circle()


@pytest.fixture(scope="session")
def modulated_cycle(modulated, build_times):
    t0 = time.perf_counter()
    lc = find_limit_cycle(modulated, [1.3, 0.0], er_norm=2.0)
    lam = floquet_exponents(modulated, lc)[0].real
    build_times["modulated_cycle"] = time.perf_counter() - t0
    return lc.with_floquet(lam)


@pytest.fixture(scope="session")
def modulated_solution(modulated, modulated_cycle, build_times):
    from koopstab.limit_cycle import solve_limit_cycle_eigenfunction

    lc = modulated_cycle
    t0 = time.perf_counter()
    out = solve_limit_cycle_eigenfunction(modulated, lc, lc.floquet_exponent.real, 40, 20)
    build_times["modulated"] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def circle_system():
    return catalog.circle()


@pytest.fixture(scope="session")
def circle_cycle(circle_system):
    lc = find_limit_cycle(circle_system, [1.5, 0.0], er_norm=1.0)
    return lc.with_floquet(floquet_exponents(circle_system, lc)[0].real)
