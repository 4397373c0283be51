import numpy as np
import pytest

from logdiv import make_ball_log_generator, make_quadratic_bregman_generator


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ball():
    return make_ball_log_generator(2, 4.0, [0.0, 0.0], 1.0)


@pytest.fixture
def ball2():
    return make_ball_log_generator(2, 4.0, [0.0, 0.0], 2.0)


@pytest.fixture
def quad():
    return make_quadratic_bregman_generator(2)


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance_log(request):
    def log(label, ok, detail):
        request.config._acceptance_lines.append(f"{'PASS' if ok else 'FAIL'}  criterion {label}: {detail}")
    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
