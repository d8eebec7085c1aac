import sys
import time
import warnings
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nldecomp import decompose, simulate  # noqa: E402
from nldecomp.signals import generate_filtered_noise  # noqa: E402
from nldecomp.synth import SystemKind, make_system  # noqa: E402

KINDS = [k.value for k in SystemKind]
ENSEMBLE_SEEDS = range(25)
ENSEMBLE_LENGTH = 65536
ENSEMBLE_STRENGTH = 0.3


def ensemble_runs():
    """100 decompositions: 4 kinds x 25 seeds at unit-power white excitation."""
    runs = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for kind in KINDS:
            for seed in ENSEMBLE_SEEDS:
                spec = make_system(kind, seed, 5, 3, ENSEMBLE_STRENGTH)
                x = generate_filtered_noise(1000 + seed, ENSEMBLE_LENGTH, 1.0)
                y = simulate(spec, x)
                runs.append((kind, seed, spec, decompose(x, y, memory_depth=spec.memory_depth)))
    return runs


ENSEMBLE_BUILD_S = []


@pytest.fixture(scope="session")
def ensemble():
    t0 = time.perf_counter()
    runs = ensemble_runs()
    ENSEMBLE_BUILD_S.append(time.perf_counter() - t0)
    return runs


@pytest.fixture(scope="session")
def seed42():
    """Reference memory-polynomial record used by several oracle comparisons."""
    spec = make_system("MemoryPolynomial", 42, 5, 3, 0.3)
    x = generate_filtered_noise(42, 65536, 1.0)
    y = simulate(spec, x)
    return spec, x, y, decompose(x, y, memory_depth=3)


_CRITERIA = {}


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records one PASS/FAIL line for the acceptance summary."""

    def record(number, ok, detail=""):
        _CRITERIA.setdefault(number, []).append((ok, detail))
        print(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip())
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entries = _CRITERIA[number]
        ok = all(e[0] for e in entries)
        parts = "; ".join(f"{d} [{'ok' if o else 'FAIL'}]" if len(entries) > 1 else d for o, d in entries)
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {parts}".rstrip())
