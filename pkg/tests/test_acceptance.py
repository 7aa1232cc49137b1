"""Runs every acceptance criterion at its stated tolerance and time budget."""

import pytest

from hypkernel.acceptance import CRITERIA, load_regression, run_criterion


@pytest.fixture(scope="module")
def frozen():
    return load_regression()


@pytest.mark.parametrize("key", [c[0] for c in CRITERIA])
def test_criterion(key, frozen, capsys):
    result = run_criterion(key, frozen or None)
    with capsys.disabled():
        print("\n" + result.line)
    assert result.passed, result.details
