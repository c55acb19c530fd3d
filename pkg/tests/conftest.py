import os
import runpy

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
_CRITERIA = []


def record_criterion(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    _CRITERIA.append((number, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def mnist_idx(tmp_path_factory):
    """Path to an MNIST image file with at least 1000 digits.

    ``QRPROJ_MNIST_IDX`` may point at a real ``*-images-idx3-ubyte`` file;
    otherwise 1000 class-balanced digits are taken from the MNIST sample
    bundled with mlxtend.
    """
    env = os.environ.get("QRPROJ_MNIST_IDX")
    if env:
        return env
    script = runpy.run_path(os.path.join(ROOT, "scripts", "make_mnist_idx.py"))
    csv = script["bundled_csv"]()
    if csv is None:
        pytest.skip("no MNIST source: set QRPROJ_MNIST_IDX or install mlxtend")
    path = tmp_path_factory.mktemp("mnist") / "mnist-1k-images-idx3-ubyte"
    script["convert"](csv, str(path), 1000)
    return str(path)


@pytest.fixture(scope="session")
def mnist_1000(mnist_idx):
    from qrproj import datasets

    return datasets.load_mnist(mnist_idx, 1000)
