import numpy as np
import pytest

from aggdist.distributions import ZeroGammaParams
from aggdist.fitting import ActivationDump
from aggdist.simulator import SyntheticSpec, generate


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def small_block(n_images=400, seed=5, rho_pix=0.3, rho_filt=0.2):
    """Two-class dump with two filters and four pixels, positive/negative labels."""
    pos = (ZeroGammaParams(0.3, 2.0, 1.0), ZeroGammaParams(0.2, 1.5, 0.8))
    neg = (ZeroGammaParams(0.4, 1.8, 0.7), ZeroGammaParams(0.3, 1.2, 0.6))
    a = generate(SyntheticSpec(pos, rho_pix, rho_filt, 4, n_images, seed, "positive", 0))
    b = generate(SyntheticSpec(neg, rho_pix, rho_filt, 4, n_images, seed, "negative", 1))
    return ActivationDump(np.concatenate([a.values, b.values]), np.concatenate([a.labels, b.labels]))


@pytest.fixture
def two_class_dump():
    return small_block()


_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record one summary line per acceptance criterion, then assert it."""

    def report(number, title, checks):
        failed = [label for label, ok, _ in checks if not ok]
        detail = "; ".join(f"{label} {value}" for label, _, value in checks)
        status = "FAIL" if failed else "PASS"
        _CRITERIA[number] = f"criterion {number} {status}: {title} ({detail})"
        print(_CRITERIA[number])
        assert not failed, f"criterion {number} failed: {', '.join(failed)}"

    return report


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
