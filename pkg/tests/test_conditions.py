from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction as F

import pytest

from pcafield.conditions import (
    ParamIandII,
    TriangleLaw,
    bernoulli_solutions,
    check_condition_i,
    check_condition_ii,
    check_eq_bernou,
    check_eq_mbm,
    check_gencond,
    from_p_s,
    phi,
    phi_iter,
    realize_triangle,
    solve_markov_ab,
    transversal_kernel,
    triangle_law,
)
from pcafield.core import (
    Alphabet,
    BernoulliProduct,
    MarkovMeasure,
    PreconditionError,
    TransitionKernel,
)
from pcafield.exact import (
    SpaceTimePattern,
    conditional_probability,
    invariance_defect,
    stationary_pattern_probability,
)

from conftest import kernel_with_condition, random_kernel, random_rational

DHAR = TransitionKernel.binary(0.3, 0.3, 0.3, 0.7)


def test_condition_examples(cond_i_only, markov_kernel):
    assert check_condition_i(cond_i_only, F(1, 2))
    tri_free = TransitionKernel.binary(F(1, 2), 0, 0, 1)
    assert check_condition_i(tri_free, F(1, 3)) and check_condition_ii(tri_free, F(1, 3))
    assert not check_condition_i(markov_kernel, F(1, 2))


def test_condition_rejects_boundary_p(cond_i_only):
    with pytest.raises(PreconditionError):
        check_condition_i(cond_i_only, 0)


def test_bernoulli_solutions_examples(cond_i_only):
    sol = bernoulli_solutions(cond_i_only)
    assert sol.ps("i") == [F(1, 2)]
    assert sol.ps("ii") == []
    assert sol.dirac == [1]

    iid = TransitionKernel.binary(0.3, 0.3, 0.3, 0.3)
    got = bernoulli_solutions(iid)
    assert [(s.condition, round(s.p, 12)) for s in got.pairs] == [("i", 0.3), ("ii", 0.3)]

    assert bernoulli_solutions(DHAR).pairs == []
    assert not check_eq_bernou(DHAR)


def test_eq_bernou_matches_existence_of_solutions():
    rng = random.Random(11)
    for _ in range(300):
        k = random_kernel(rng, den=6)
        t00, _, _, t11 = k.theta
        if t00 == 0 or t11 == 1:
            continue  # the relation also captures degenerate boundary solutions
        assert check_eq_bernou(k) == bool(bernoulli_solutions(k).pairs), k.theta


def test_every_reported_solution_is_invariant():
    rng = random.Random(5)
    found = 0
    for _ in range(200):
        k = random_kernel(rng, den=4)
        for s in bernoulli_solutions(k).pairs:
            p = s.p if s.p is not None else F(1, 3)
            assert invariance_defect(k, BernoulliProduct.binary(p), 5) is None
            found += 1
    assert found > 5


@pytest.mark.parametrize("which", ["i", "ii"])
def test_condition_iff_bernoulli_invariant(which):
    rng = random.Random(3 if which == "i" else 4)
    for _ in range(50):
        p = random_rational(rng, 8, 1, 7)
        good = kernel_with_condition(rng, p, which)
        mu = BernoulliProduct.binary(p)
        assert invariance_defect(good, mu, 6) is None
    for _ in range(50):
        k = random_kernel(rng)
        p = random_rational(rng, 8, 1, 7)
        mu = BernoulliProduct.binary(p)
        holds = check_condition_i(k, p) or check_condition_ii(k, p)
        assert holds == (invariance_defect(k, mu, 6) is None)


def test_gencond_examples():
    shift = TransitionKernel.deterministic(3, (0, 1, 2), lambda w: w[2])
    for p in [(F(1, 3),) * 3, (F(1, 2), F(1, 4), F(1, 4))]:
        assert check_gencond(shift, BernoulliProduct(p), "right")

    a, b = F(1, 4), F(2, 3)
    middle = TransitionKernel.from_function(
        2, (0, 1, 2), lambda w: [1 - (a if w[1] == 0 else b), a if w[1] == 0 else b]
    )
    for q in (F(1, 5), F(1, 2), F(4, 5)):
        mu = BernoulliProduct.binary(q)
        assert not check_gencond(middle, mu, "right")
        assert not check_gencond(middle, mu, "left")


def test_gencond_agrees_with_condition_i_at_ell_one():
    rng = random.Random(8)
    for n in range(50):
        p = random_rational(rng, 6, 1, 5)
        k = kernel_with_condition(rng, p, "i") if n % 2 else random_kernel(rng)
        mu = BernoulliProduct.binary(p)
        assert check_gencond(k, mu, "right") == check_condition_i(k, p)
        assert check_gencond(k, mu, "left") == check_condition_ii(k, p)


def _doubly_stochastic(rng: random.Random, n: int) -> list[list[F]]:
    perms = list(itertools.permutations(range(n)))
    w = random_rational(rng, 6)
    p1, p2 = rng.choice(perms), rng.choice(perms)
    return [[w * (p1[i] == k) + (1 - w) * (p2[i] == k) for k in range(n)] for i in range(n)]


def test_gencond_is_sufficient_for_invariance():
    rng = random.Random(21)
    uniform = BernoulliProduct((F(1, 3),) * 3)
    for _ in range(3):
        blocks = {x: _doubly_stochastic(rng, 3) for x in Alphabet(3).words(2)}
        k = TransitionKernel.from_function(3, (0, 1, 2), lambda w: blocks[w[:2]][w[2]])
        assert check_gencond(k, uniform, "right")
        assert invariance_defect(k, uniform, 5) is None


def test_from_p_s_examples():
    k = from_p_s(p=F(2, 5), s=F(2, 5))
    assert k.theta == (F(2, 5),) * 4
    assert from_p_s(p=F(1, 3), s=0).theta == (F(1, 2), 0, 0, 1)
    assert from_p_s(p=F(1, 2), s=F(3, 4)).theta == (F(1, 4), F(3, 4), F(3, 4), F(1, 4))


def test_from_p_s_range():
    assert ParamIandII.s_range(F(1, 3)) == (0, F(1, 2))
    assert ParamIandII.s_range(F(3, 4)) == (F(2, 3), 1)
    with pytest.raises(PreconditionError):
        from_p_s(p=F(1, 3), s=F(3, 5))
    with pytest.raises(PreconditionError):
        from_p_s(p=F(3, 4), s=F(1, 2))


def test_from_p_s_satisfies_both_conditions():
    for pn in range(1, 8):
        p = F(pn, 8)
        lo, hi = ParamIandII.s_range(p)
        for j in range(5):
            s = lo + (hi - lo) * F(j, 4)
            k = from_p_s(p=p, s=s)
            assert check_condition_i(k, p) and check_condition_ii(k, p)


def test_transversal_examples(cond_i_only):
    t = transversal_kernel(cond_i_only, "v", F(1, 2))
    assert t.theta == (F(1, 2), 0, F(1, 2), 1)
    sym = from_p_s(p=F(1, 3), s=F(1, 4))
    assert transversal_kernel(sym, "v", F(1, 3)) == sym
    assert transversal_kernel(sym, "w", F(1, 3)) == sym
    with pytest.raises(PreconditionError):
        transversal_kernel(cond_i_only, "w", F(1, 2))


def test_transversal_is_an_involution_with_mirrored_condition():
    rng = random.Random(2)
    for _ in range(20):
        p = random_rational(rng, 6, 1, 5)
        k = kernel_with_condition(rng, p, "i")
        t = transversal_kernel(k, "v", p)
        # the swap of θ01 and θ10 exchanges (i) and (ii)
        assert check_condition_ii(t, p)
        assert transversal_kernel(t, "w", p) == k


def test_transversal_v_rates_are_conditional_laws(cond_i_only):
    p = F(1, 2)
    mu = BernoulliProduct.binary(p)
    t = transversal_kernel(cond_i_only, "v", p)
    for x, y in itertools.product((0, 1), repeat=2):
        given = SpaceTimePattern({(0, 1): x, (0, 0): y})
        event = SpaceTimePattern({(1, 0): 1})
        assert conditional_probability(cond_i_only, mu, event, given) == t.prob((x, y), 1)


def test_transversal_w_rates_are_conditional_laws():
    p = F(1, 3)
    k = kernel_with_condition(random.Random(9), p, "ii")
    mu = BernoulliProduct.binary(p)
    t = transversal_kernel(k, "w", p)
    for x, y in itertools.product((0, 1), repeat=2):
        given = SpaceTimePattern({(1, 0): x, (0, 1): y})
        event = SpaceTimePattern({(0, 0): 1})
        assert conditional_probability(k, mu, event, given) == t.prob((x, y), 1)


def test_eq_mbm_examples(markov_kernel, xor_noise):
    v = check_eq_mbm(markov_kernel)
    assert v.holds and v.lhs == v.rhs == F(3, 64)
    v = check_eq_mbm(xor_noise)
    assert (v.lhs, v.rhs) == (F(1, 256), F(81, 256))
    assert not v.holds
    assert not check_eq_mbm(DHAR).holds


def test_eq_mbm_needs_nondegenerate_rows():
    k = TransitionKernel.binary(0, 0, 0, 1)
    v = check_eq_mbm(k)
    assert v.lhs == v.rhs and not v.holds
    v = check_eq_mbm(TransitionKernel.binary(0, 0, 1, 1))
    assert v.holds and v.reversed_nondegenerate and not v.forward_nondegenerate


def test_solve_markov_ab_example(markov_kernel):
    Q = solve_markov_ab(markov_kernel)
    assert math.isclose(Q.a, 4 - 2 * math.sqrt(3), abs_tol=1e-12)
    assert math.isclose(Q.b, 2 * math.sqrt(3) - 3, abs_tol=1e-12)
    assert invariance_defect(markov_kernel, Q, 7, 1e-12) is None


def test_solve_markov_ab_swapped_root_is_not_invariant(markov_kernel):
    swapped = MarkovMeasure(2 * math.sqrt(3) - 3, 4 - 2 * math.sqrt(3))
    assert invariance_defect(markov_kernel, swapped, 2, 1e-9) is not None


def test_solve_markov_ab_reduces_to_bernoulli():
    Q = solve_markov_ab(TransitionKernel.binary(F(1, 3), F(1, 3), F(2, 3), F(2, 3)))
    assert (Q.a, Q.b) == (F(1, 2), F(1, 2))


def test_xor_noise_is_outside_the_markov_solver(xor_noise, half):
    # μ_{1/2} is invariant through (i) and (ii), yet the product relation fails
    assert invariance_defect(xor_noise, half, 6) is None
    with pytest.raises(PreconditionError):
        solve_markov_ab(xor_noise)


def test_solve_markov_ab_rejects_kernels_without_relation():
    with pytest.raises(PreconditionError):
        solve_markov_ab(DHAR)


def test_solve_markov_ab_random_instances():
    rng = random.Random(17)
    for _ in range(10):
        t00, t01, t10 = (random_rational(rng, 10, 1, 9) for _ in range(3))
        lhs = t00 * (1 - t01) * (1 - t10)
        rhs = t01 * t10 * (1 - t00)
        t11 = rhs / (lhs + rhs)
        k = TransitionKernel.binary(t00, t01, t10, t11)
        assert check_eq_mbm(k).holds
        Q = solve_markov_ab(k)
        assert invariance_defect(k, Q, 5, 1e-10) is None


def test_phi_examples():
    assert phi(F(1, 3), F(1, 3)) == F(1, 3)
    assert phi(F(1, 2), F(3, 4)) == F(9, 16)
    assert phi_iter(F(1, 2), F(3, 4), 2) == F(513, 1024)
    assert phi_iter(F(1, 2), F(3, 4), 0) == F(3, 4)
    assert phi_iter(F(2, 5), F(1, 7), 1) == phi(F(2, 5), F(1, 7))
    with pytest.raises(ValueError):
        phi_iter(F(1, 2), F(1, 2), -1)


def _two_step_rate(p, s, gap):
    k = from_p_s(p=p, s=s)
    mu = BernoulliProduct.binary(p)
    given = SpaceTimePattern({(0, 0): 0, (gap, 0): 1})
    event = SpaceTimePattern({(0, gap): 1})
    return conditional_probability(k, mu, event, given)


GRID = [
    (F(1, 2), F(3, 4)),
    (F(1, 2), F(1, 4)),
    (F(1, 2), F(1)),
    (F(1, 3), F(0)),
    (F(1, 3), F(1, 5)),
    (F(1, 3), F(1, 2)),
    (F(2, 3), F(1, 2)),
    (F(2, 3), F(4, 5)),
    (F(3, 4), F(5, 6)),
]


@pytest.mark.parametrize("p,s", GRID)
def test_phi_matches_enumeration(p, s):
    assert _two_step_rate(p, s, 2) == phi(p, s)


def test_phi_iter_matches_enumeration_at_four_steps():
    assert _two_step_rate(F(1, 2), F(3, 4), 4) == F(513, 1024)


def test_triangle_law_roundtrip():
    for p, s in GRID:
        law = triangle_law(from_p_s(p=p, s=s), p)
        assert realize_triangle(law) == ParamIandII(p, s)


def test_triangle_law_matches_stationary_pattern():
    p, s = F(1, 3), F(1, 4)
    k = from_p_s(p=p, s=s)
    law = triangle_law(k, p)
    mu = BernoulliProduct.binary(p)
    for x0, x1, y in itertools.product((0, 1), repeat=3):
        pat = SpaceTimePattern({(0, 0): x0, (1, 0): x1, (0, 1): y})
        assert stationary_pattern_probability(k, mu, pat) == law[x0, x1, y]


def test_realize_triangle_examples():
    p = F(2, 7)
    iid = TriangleLaw({w: F(p ** sum(w) * (1 - p) ** (3 - sum(w))) for w in itertools.product((0, 1), repeat=3)})
    assert realize_triangle(iid).s == p

    law = triangle_law(from_p_s(p=F(1, 2), s=F(3, 4)), F(1, 2))
    assert law[0, 1, 1] == F(3, 16)
    assert realize_triangle(law) == ParamIandII(F(1, 2), F(3, 4))

    with pytest.raises(PreconditionError):
        realize_triangle(TriangleLaw({(0, 0, 0): 1}))


def test_realize_triangle_rejects_dependent_pairs():
    law = TriangleLaw({(0, 0, 0): F(1, 2), (1, 1, 1): F(1, 4), (0, 1, 1): F(1, 4)})
    with pytest.raises(PreconditionError):
        realize_triangle(law)
