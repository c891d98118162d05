import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
# exploratory profile: PNSE_HYPOTHESIS=thorough pytest ...
settings.register_profile("thorough", max_examples=500, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("PNSE_HYPOTHESIS", "default"))

P_VALUES = (2.25, 2.5, 2.75, 3.0, 3.25, 3.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def deep_3d_enabled() -> bool:
    return os.environ.get("PNSE_RUN_3D", "") not in ("", "0")


# one summary line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
