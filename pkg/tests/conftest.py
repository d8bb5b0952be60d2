from __future__ import annotations

import random
from fractions import Fraction as F

import pytest

from pcafield.conditions import from_p_s
from pcafield.core import BernoulliProduct, TransitionKernel


@pytest.fixture
def xor_noise():
    return TransitionKernel.binary(F(1, 4), F(3, 4), F(3, 4), F(1, 4))


@pytest.fixture
def cond_i_only():
    return TransitionKernel.binary(F(1, 2), F(1, 2), 0, 1)


@pytest.fixture
def markov_kernel():
    return TransitionKernel.binary(F(1, 2), F(1, 4), F(3, 4), F(1, 2))


@pytest.fixture
def half():
    return BernoulliProduct.binary(F(1, 2))


def random_rational(rng: random.Random, den: int = 12, lo: int = 0, hi: int | None = None) -> F:
    hi = den if hi is None else hi
    return F(rng.randint(lo, hi), den)


def random_kernel(rng: random.Random, size: int = 2, width: int = 2, den: int = 12) -> TransitionKernel:
    """Random rational kernel; each row is a random composition of ``den``."""

    def row(_):
        cuts = sorted(rng.randint(0, den) for _ in range(size - 1))
        parts = [b - a for a, b in zip([0] + cuts, cuts + [den])]
        return [F(x, den) for x in parts]

    return TransitionKernel.from_function(size, range(width), row)


def kernel_with_condition(rng: random.Random, p: F, which: str) -> TransitionKernel:
    """Random binary kernel satisfying (i) or (ii) at p."""
    while True:
        a = random_rational(rng, 24)
        b = random_rational(rng, 24)
        # solve the two affine constraints for the partner entries
        a2 = (p - (1 - p) * a) / p
        b2 = (p - (1 - p) * b) / p
        if 0 <= a2 <= 1 and 0 <= b2 <= 1:
            break
    if which == "i":
        return TransitionKernel.binary(a, a2, b, b2)
    return TransitionKernel.binary(a, b, a2, b2)


def iid_kernel(p) -> TransitionKernel:
    return from_p_s(p=p, s=p)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
