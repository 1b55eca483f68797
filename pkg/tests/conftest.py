import numpy as np
import pytest

from strengthcurve.dataset import COLUMNS, Dataset
from strengthcurve.synth import SynthConfig, generate


@pytest.fixture
def write_rows(tmp_path):
    def _write(rows, header=",".join(COLUMNS), name="data.csv"):
        path = tmp_path / name
        path.write_text("\n".join([header] + [",".join(str(v) for v in r) for r in rows]) + "\n")
        return path

    return _write


@pytest.fixture(scope="session")
def small_synth():
    return generate(SynthConfig(n=300, seed=11, noise_std=1.0))


def make_dataset(n, seed=0):
    rng = np.random.default_rng(seed)
    X = np.column_stack(
        [
            rng.uniform(0.3, 0.7, n),
            rng.uniform(0.1, 0.2, n),
            rng.uniform(0.0, 0.1, n),
            rng.uniform(0.25, 0.45, n),
            rng.uniform(0, 5, n),
            rng.uniform(0, 10, n),
        ]
    )
    return Dataset.from_arrays(X, rng.uniform(10, 60, n))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
