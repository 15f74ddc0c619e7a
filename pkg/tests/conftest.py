from pathlib import Path

import pytest

from polariton_rc.mnist import load_dataset

DATA = Path(__file__).resolve().parents[1] / "data"
IMAGES = DATA / "mnist5k-images-idx3-ubyte.gz"
LABELS = DATA / "mnist5k-labels-idx1-ubyte.gz"


@pytest.fixture(scope="session")
def mnist5k():
    if not IMAGES.exists():
        pytest.skip("run scripts/make_mnist_subset.py to create data/")
    return load_dataset(IMAGES, LABELS)


ACCEPTANCE = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion:2d}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
