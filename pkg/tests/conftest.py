import numpy as np
import pytest

from tspmeasure import CapricepSpec, compose_structured, gen_unit_capricep

FS = 44100

_ACCEPTANCE_LINES = []


def small_units(n_units=4, length=2048, seed=0, sample_rate=FS):
    spec = CapricepSpec.for_length(length)
    return [gen_unit_capricep(CapricepSpec(**{**spec.to_dict(), "seed": seed + i}), sample_rate)
            for i in range(n_units)]


@pytest.fixture(scope="session")
def small_stimulus():
    """M=4, period 4096, R=4 with 2048-sample units."""
    return compose_structured(small_units(), 4096, 4)


@pytest.fixture(scope="session")
def random_fir():
    rng = np.random.default_rng(1234)
    return rng.standard_normal(256) * np.exp(-np.arange(256) / 60.0)


@pytest.fixture(scope="session")
def unit_fir(small_stimulus, random_fir):
    """``random_fir`` scaled so the response to ``small_stimulus`` peaks at 1."""
    return random_fir / np.max(np.abs(np.convolve(small_stimulus.waveform.samples, random_fir)))


def rel_l2_db(estimate, truth):
    estimate, truth = np.asarray(estimate, float), np.asarray(truth, float)
    err = np.sum((estimate - truth) ** 2)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(err / np.sum(truth**2))


@pytest.fixture
def criterion():
    """Record a one-line acceptance verdict; printed in the terminal summary."""

    def record(number, name, passed, detail):
        line = f"[criterion {number:>2}] {'PASS' if passed else 'FAIL'}  {name}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
