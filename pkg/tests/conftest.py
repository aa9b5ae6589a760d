import numpy as np
import pytest

from odsandbox.datagen import Dataset, FeatureRole

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    _CRITERIA[marker.args[0]] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        status, detail = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {detail}")


def make_dataset(features, group, y, true_group=None) -> Dataset:
    """Small hand-built dataset; every column is treated as a culprit feature."""
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    group = np.asarray(group)
    return Dataset(
        features=X,
        group=group,
        true_group=group if true_group is None else np.asarray(true_group),
        y=np.asarray(y, dtype=int),
        roles=tuple(FeatureRole.INCRIMINATING for _ in range(X.shape[1])),
        meta={},
        centers=None,
        row_id=np.arange(X.shape[0]),
    )


@pytest.fixture
def tiny():
    return make_dataset
