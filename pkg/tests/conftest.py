import json

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


def make_config(**overrides):
    doc = {
        "target": {"family": "gaussian"},
        "kernel": {"family": "gaussian_rbf", "bandwidth": 1.0},
        "particles": {"n": 10, "d": 2, "seed": 0},
        "steps": 5,
        "step_policy": {"mode": "fixed", "gamma": 0.05},
        "timing": False,
    }
    for key, value in overrides.items():
        doc[key] = value
    return doc


@pytest.fixture
def config_file(tmp_path):
    def write(doc, name="config.json"):
        doc = dict(doc)
        doc.setdefault("output_dir", str(tmp_path / "out"))
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return path

    return write


ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
