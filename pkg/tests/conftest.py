from __future__ import annotations

import sys
import warnings
from functools import lru_cache

import numpy as np
import pytest

from gsrc.codec import FieldSizeWarning, build_code
from gsrc.galois import FieldDesc
from gsrc.layout import CodeParams


@lru_cache(maxsize=None)
def cached_code(n: int, k: int, alpha: int, w: int = 16, level: str | None = None, seed: int = 0):
    """Builds are slow for large alpha; share them across test modules."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FieldSizeWarning)
        return build_code(CodeParams(n, k, alpha, w=w, seed=seed), FieldDesc(w), level)


@pytest.fixture(scope="session")
def code534():
    return cached_code(5, 3, 4, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 11):
        ok, detail = results.get(n, (False, "not run"))
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
