from __future__ import annotations

import os

import numpy as np
import pytest


def pytest_collection_modifyitems(config, items):
    if os.environ.get("VTC_SLOW", "") not in ("", "0"):
        return
    skip = pytest.mark.skip(reason="slow reproduction check; set VTC_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
