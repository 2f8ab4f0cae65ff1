import numpy as np
import pytest


def random_hermitian_pd(rng, p, floor=0.1, complex_=True):
    A = rng.standard_normal((p, p))
    if complex_:
        A = A + 1j * rng.standard_normal((p, p))
    S = A @ np.conj(A.T) / p + floor * np.eye(p)
    return 0.5 * (S + np.conj(S.T))


def random_stack(rng, M, p, floor=0.1, complex_=True):
    return np.stack([random_hermitian_pd(rng, p, floor, complex_) for _ in range(M)])


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            props = dict(getattr(rep, "user_properties", []))
            if rep.when == "call" and "verdict" in props:
                lines.append((props["criterion"], props["verdict"]))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, text in sorted(lines):
            terminalreporter.write_line(text)
