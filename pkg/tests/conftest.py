import json
from pathlib import Path

import numpy as np
import pytest

from nullcurves.catalog import load_catalog

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def derived():
    return json.loads((FIXTURES / "derived.json").read_text())


@pytest.fixture(scope="session")
def catalog():
    return {e.name: e for e in load_catalog()}


def as_complex(pairs):
    return np.array(pairs, dtype=float).view(complex)[..., 0]


# acceptance criteria report: one line per criterion in the terminal summary
ACCEPTANCE = {}


def record(number, ok, detail):
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
