from __future__ import annotations

import numpy as np
import pytest

from approxcgp.cgp import CgpParams, Genome

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def random_genome(rng: np.random.Generator, n_i: int, n_o: int, r: int, c: int,
                  gamma=None) -> Genome:
    p = CgpParams(n_i, n_o, r, c) if gamma is None else CgpParams(n_i, n_o, r, c, 2, gamma)
    hi = p.gene_bounds()
    return Genome(p, rng.integers(0, hi))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
