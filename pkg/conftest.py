import os

# Keep test runs from writing rotating log files
os.environ.setdefault("ENABLE_FILE_LOGGING", "false")
os.environ.setdefault("LOG_LEVEL", "WARNING")

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
