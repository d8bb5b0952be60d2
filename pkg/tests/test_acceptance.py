"""Acceptance criteria 1 to 10, each run at its stated tolerance and time bound.

Every criterion records one PASS/FAIL line; the lines are printed in the
pytest terminal summary, or directly when this file is run as a script.
Two criteria cannot hold as stated and are marked as strict expected
failures (see the reasons on their markers).
"""

from __future__ import annotations

import math
import random
import subprocess
import sys
import time
from fractions import Fraction as F

import pytest

from pcafield.ca import (
    builtin_rule,
    enumerate_binary_rules,
    kari_taati_check,
    number_conserving_check,
    permutativity,
    surjectivity_balance,
)
from pcafield.conditions import (
    check_condition_i,
    check_condition_ii,
    check_gencond,
    from_p_s,
    phi,
    solve_markov_ab,
)
from pcafield.core import BernoulliProduct, PeriodicConfiguration, TransitionKernel
from pcafield.exact import (
    SpaceTimePattern,
    conditional_probability,
    invariance_defect,
    stationary_pattern_probability,
    tv_curve,
)
from pcafield.ring import ring_invariant
from pcafield.stats import line_battery, triangle_free_zero_event, triple_independence_scan

RESULTS: dict[int, str] = {}


def record(n: int, ok: bool, elapsed: float, bound: float, detail: str) -> bool:
    passed = ok and elapsed < bound
    RESULTS[n] = f"criterion {n:2d} {'PASS' if passed else 'FAIL'} ({elapsed:.2f}s of {bound:g}s): {detail}"
    print(RESULTS[n])
    return passed


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


# --------------------------------------------------------------------------


def criterion_1():
    def run():
        k = TransitionKernel.binary(F(1, 2), F(1, 2), 0, 1)
        pat = SpaceTimePattern({(0, 0): 0, (-1, 1): 0, (-2, 2): 0})
        return stationary_pattern_probability(k, BernoulliProduct.binary(F(1, 2)), pat)

    value, dt = timed(run)
    return record(1, value == F(19, 64), dt, 1, f"probability {value}")


RING_VALUES = {
    "0000": F(573, 8192),
    "0001": F(963, 16384),
    "0011": F(33, 512),
    "0101": F(69, 1024),
    "0111": F(957, 16384),
    "1111": F(563, 8192),
}


def criterion_2():
    k = TransitionKernel.binary(F(1, 4), F(3, 4), F(3, 4), F(1, 4))
    mu, dt = timed(lambda: ring_invariant(k, 4))
    got = {w: mu[w] for w in RING_VALUES}
    return record(2, got == RING_VALUES, dt, 5, ", ".join(f"{w}={v}" for w, v in got.items()))


def _sweep_kernels():
    rng = random.Random(2024)
    ps = [F(n, d) for n, d in ((1, 2), (1, 3), (2, 3), (1, 4), (3, 4), (1, 5), (2, 5), (3, 5), (1, 6), (5, 6))]
    kernels = []
    for idx in range(100):
        kind = idx % 3
        if kind == 0:
            kernels.append(TransitionKernel.binary(*(F(rng.randint(0, 12), 12) for _ in range(4))))
            continue
        p = rng.choice(ps)
        while True:
            a, b = F(rng.randint(0, 24), 24), F(rng.randint(0, 24), 24)
            a2, b2 = (p - (1 - p) * a) / p, (p - (1 - p) * b) / p
            if 0 <= a2 <= 1 and 0 <= b2 <= 1:
                break
        kernels.append(TransitionKernel.binary(a, a2, b, b2) if kind == 1 else TransitionKernel.binary(a, b, a2, b2))
    return kernels, ps


def criterion_3():
    def run():
        kernels, ps = _sweep_kernels()
        agree = true_cases = false_cases = 0
        for k in kernels:
            for p in ps:
                holds = check_condition_i(k, p) or check_condition_ii(k, p)
                defect = invariance_defect(k, BernoulliProduct.binary(p), 6)
                if holds:
                    true_cases += 1
                    agree += defect is None
                else:
                    false_cases += 1
                    agree += defect is not None and len(defect) <= 6
        return agree, true_cases, false_cases

    (agree, t, f), dt = timed(run)
    return record(3, agree == 1000 and t > 0 and f > 0, dt, 60,
                  f"{agree}/1000 agree ({t} invariant, {f} with a differing cylinder)")


PHI_GRID = [
    (F(1, 2), F(3, 4)), (F(1, 2), F(1, 4)), (F(1, 2), F(1)),
    (F(1, 3), F(0)), (F(1, 3), F(1, 5)), (F(1, 3), F(1, 2)),
    (F(2, 3), F(1, 2)), (F(2, 3), F(4, 5)), (F(3, 4), F(5, 6)),
]


def _theta_far(p, s, gap):
    k = from_p_s(p=p, s=s)
    given = SpaceTimePattern({(0, 0): 0, (gap, 0): 1})
    event = SpaceTimePattern({(0, gap): 1})
    return conditional_probability(k, BernoulliProduct.binary(p), event, given)


def criterion_4():
    def run():
        grid_ok = all(_theta_far(p, s, 2) == phi(p, s) for p, s in PHI_GRID)
        return grid_ok, _theta_far(F(1, 2), F(3, 4), 4)

    (grid_ok, v2), dt = timed(run)
    return record(4, grid_ok and v2 == F(513, 1024), dt, 30,
                  f"grid of 9 exact: {grid_ok}; i=2 value {v2}")


def criterion_5():
    def run():
        k = TransitionKernel.binary(0.5, 0.25, 0.75, 0.5)
        Q = solve_markov_ab(k)
        return Q, invariance_defect(k, Q, 5, 1e-10)

    (Q, defect), dt = timed(run)
    err = abs(Q.a - (2 * math.sqrt(3) - 3))
    return record(5, err < 1e-12 and defect is None, dt, 10,
                  f"a={Q.a:.15f} b={Q.b:.15f}, |a-(2*sqrt3-3)|={err:.3g}, invariant to length 5: {defect is None}")


def criterion_6():
    k = TransitionKernel.binary(F(1, 4), F(3, 4), F(3, 4), F(1, 4))
    curve, dt = timed(lambda: tv_curve(k, PeriodicConfiguration((0,), 2), 12, 3, BernoulliProduct.binary(F(1, 2))))
    decreasing = all(curve[n + 1] < curve[n] for n in range(1, 10))
    return record(6, decreasing and curve[12] < 1e-3, dt, 60,
                  f"strictly decreasing on 1..10: {decreasing}; TV at 12 = {float(curve[12]):.3e}")


def criterion_7():
    def run():
        good = line_battery(from_p_s(p=F(1, 2), s=F(3, 4)), BernoulliProduct.binary(F(1, 2)), seed=42)
        bad = line_battery(TransitionKernel.binary(F(1, 2), F(1, 2), 0, 1), BernoulliProduct.binary(F(1, 2)),
                           seed=42, directions=[(-1, 1)])
        return good, bad[0]

    (good, bad), dt = timed(run)
    ok = all(r.passed for r in good) and bad.p_pairs <= 0.01
    worst = min(min(r.p_singleton, r.p_pairs) for r in good)
    return record(7, ok, dt, 300,
                  f"5 directions pass (smallest p-value {worst:.3f}); cond-(i)-only pairs p-value {bad.p_pairs:.2e}")


def criterion_8():
    def run():
        scan = triple_independence_scan(from_p_s(p=F(1, 2), s=F(3, 4)), F(1, 2))
        return scan, triangle_free_zero_event()

    (scan, zero), dt = timed(run)
    return record(8, scan["dependent_iff_up_triangle"] and zero == 0, dt, 120,
                  f"{scan['dependent']} of {scan['subsets']} triples dependent, all up-triangles; zero event {zero}")


def criterion_9():
    def run():
        parts = {}
        xor = builtin_rule("xor")
        parts["xor permutative+balanced"] = (
            permutativity(xor) == {"left": True, "right": True} and surjectivity_balance(xor, 8).holds
        )
        parts["and counterexample '1'"] = surjectivity_balance(builtin_rule("and2"), 8).counterexample == "1"
        f0 = builtin_rule("f0")
        parts["f0 balanced"] = surjectivity_balance(f0, 8).holds
        parts["f0 number-conserving"] = number_conserving_check(f0, 8).holds
        parts["f0 kari-taati"] = all(
            kari_taati_check(f0, BernoulliProduct(p), 6).holds
            for p in ((F(1, 2), F(1, 2)), (F(1, 3), F(2, 3)))
        )
        kt = kari_taati_check(xor, BernoulliProduct((F(1, 4), F(3, 4))), 6)
        parts["xor kari-taati fails at '01'"] = not kt.holds and "01" in kt.counterexamples
        uniform = BernoulliProduct.uniform(2)
        parts["gencond iff right-permutative"] = all(
            check_gencond(r.to_kernel(), uniform, "right") == permutativity(r)["right"]
            for width in (2, 3)
            for r in enumerate_binary_rules(width)
        )
        return parts

    parts, dt = timed(run)
    failed = [name for name, ok in parts.items() if not ok]
    detail = "all parts hold" if not failed else "failing: " + "; ".join(failed)
    return record(9, not failed, dt, 120, detail)


def _cli(*args) -> bytes:
    return subprocess.run([sys.executable, "-m", "pcafield", *args], check=True, capture_output=True).stdout


def criterion_10(tmp_dir):
    def run():
        outputs = []
        for rep in range(2):
            pgm = tmp_dir / "run.pgm"
            js = tmp_dir / "run.json"
            a = _cli("sample", "--config", "xor_noise", "--width", "64", "--height", "48", "--seed", "7",
                     "--out", str(pgm))
            b = _cli("sample", "--config", "xor_noise", "--width", "16", "--height", "8", "--seed", "7",
                     "--replicas", "3", "--method", "spiral", "--out", str(js))
            c = _cli("stats", "--config", "xor_noise", "--test", "lines", "--seed", "7", "--replicas", "2000")
            d = _cli("pattern", "--config", "cond_i_only", "--pattern", "diagonal_zeros")
            outputs.append((a, b, c, d, pgm.read_bytes(), js.read_bytes()))
        return outputs

    outputs, dt = timed(run)
    same = outputs[0] == outputs[1]
    return record(10, same, dt, 120, f"JSON and PGM outputs byte-identical across runs: {same}")


# --------------------------------------------------------------------------


def test_criterion_1_pattern_19_64():
    assert criterion_1()


def test_criterion_2_ring_of_four():
    assert criterion_2()


def test_criterion_3_bernoulli_condition_sweep():
    assert criterion_3()


def test_criterion_4_phi_law():
    assert criterion_4()


@pytest.mark.xfail(
    strict=True,
    reason="the invariant Markov measure has a = 4 - 2*sqrt(3); 2*sqrt(3) - 3 is the value of b",
)
def test_criterion_5_markov_invariance():
    assert criterion_5()


def test_criterion_6_ergodicity_decay():
    assert criterion_6()


def test_criterion_7_line_battery():
    assert criterion_7()


def test_criterion_8_triple_scan():
    assert criterion_8()


@pytest.mark.xfail(
    strict=True,
    reason="with A = 10010 the literal F0 rule is not balanced: the word 00 has 252 preimages instead of 256",
)
def test_criterion_9_ca_suite():
    assert criterion_9()


def test_criterion_10_reproducibility(tmp_path):
    assert criterion_10(tmp_path)


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        checks = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
                  criterion_7, criterion_8, criterion_9, lambda: criterion_10(Path(d))]
        results = [c() for c in checks]
    sys.exit(0 if all(results) else 1)
