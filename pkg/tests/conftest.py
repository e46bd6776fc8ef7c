import os

import numpy as np
import pytest

from bangladep.corpus import Corpus, Label
from bangladep.synthetic import fixture_path

# Class sizes of the public corpus.
PUBLIC_NON_DEPRESSIVE = 2930
PUBLIC_DEPRESSIVE = 984
PUBLIC_DATASET_ENV = "BANGLADEP_PUBLIC_DATASET"


def public_dataset_path():
    path = os.environ.get(PUBLIC_DATASET_ENV)
    return path if path and os.path.isfile(path) else None


def count_matched_corpus(seed: int = 7) -> Corpus:
    """Stand-in with the public class counts and shuffled label order."""
    rng = np.random.default_rng(seed)
    labels = [Label.NON_DEPRESSIVE] * PUBLIC_NON_DEPRESSIVE + [Label.DEPRESSIVE] * PUBLIC_DEPRESSIVE
    labels = [labels[i] for i in rng.permutation(len(labels))]
    return Corpus.from_records([(f"পোস্ট {i}", lab) for i, lab in enumerate(labels)])


@pytest.fixture
def fixture_csv():
    return fixture_path()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    name = item.name
    if not name.startswith("test_criterion_") or report.when != "call" and not report.failed:
        return
    number = int(name.split("_")[2])
    status = "PASS" if report.passed else "FAIL"
    if number not in _ACCEPTANCE or status == "FAIL":
        _ACCEPTANCE[number] = (status, name)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status, name = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  ({name})")
