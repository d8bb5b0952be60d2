"""Invariance conditions for Bernoulli and Markov measures, and the closed forms built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .core import (
    BernoulliProduct,
    MarkovMeasure,
    Number,
    PreconditionError,
    TransitionKernel,
    close,
    is_exact,
    to_number,
)
from .exact import invariance_defect

TOL = 1e-12


def _p(p) -> Number:
    p = p.p[1] if isinstance(p, BernoulliProduct) else to_number(p)
    if not 0 < p < 1:
        raise PreconditionError(f"p = {p} is not in (0,1)")
    return p


# --------------------------------------------------------------------------
# binary nearest-neighbour kernels


def check_condition_i(kernel: TransitionKernel, p, tol: float = TOL) -> bool:
    """(1-p)θ00 + pθ01 = (1-p)θ10 + pθ11 = p."""
    t00, t01, t10, t11 = kernel.theta
    p = _p(p)
    return close((1 - p) * t00 + p * t01, p, tol) and close((1 - p) * t10 + p * t11, p, tol)


def check_condition_ii(kernel: TransitionKernel, p, tol: float = TOL) -> bool:
    """(1-p)θ00 + pθ10 = (1-p)θ01 + pθ11 = p."""
    t00, t01, t10, t11 = kernel.theta
    p = _p(p)
    return close((1 - p) * t00 + p * t10, p, tol) and close((1 - p) * t01 + p * t11, p, tol)


def check_eq_bernou(kernel: TransitionKernel, tol: float = TOL) -> bool:
    t00, t01, t10, t11 = kernel.theta
    lhs = t00 * (1 - t11)
    return close(lhs, t10 * (1 - t01), tol) or close(lhs, t01 * (1 - t10), tol)


@dataclass(frozen=True)
class BernoulliSolution:
    condition: str
    p: Number | None  # None: every p in (0,1) solves the condition


@dataclass
class BernoulliSolutions:
    pairs: list[BernoulliSolution] = field(default_factory=list)
    dirac: list[int] = field(default_factory=list)  # letters a with δ_{a^Z} invariant

    def ps(self, condition: str | None = None) -> list[Number | None]:
        return [s.p for s in self.pairs if condition in (None, s.condition)]


def _solve_affine_pair(eqs, tol) -> list[Number | None] | None:
    # each eq is (A, B) meaning A·p + B = 0; returns [] (none), [None] (all p) or [p]
    roots = []
    for A, B in eqs:
        if close(A, 0, tol):
            if not close(B, 0, tol):
                return []
        else:
            roots.append(-B / A)
    if not roots:
        return [None]
    r = roots[0]
    if any(not close(r, s, tol) for s in roots[1:]):
        return []
    if not 0 < r < 1:
        return []
    return [r]


def bernoulli_solutions(kernel: TransitionKernel, tol: float = TOL) -> BernoulliSolutions:
    """All Bernoulli parameters p in (0,1) for which (i) or (ii) holds.

    The two Dirac invariants δ_{0^Z} (θ00 = 0) and δ_{1^Z} (θ11 = 1) are
    reported separately in ``dirac``.
    """
    t00, t01, t10, t11 = kernel.theta
    out = BernoulliSolutions()
    systems = {
        "i": [(t01 - t00 - 1, t00), (t11 - t10 - 1, t10)],
        "ii": [(t10 - t00 - 1, t00), (t11 - t01 - 1, t01)],
    }
    check = {"i": check_condition_i, "ii": check_condition_ii}
    for name, eqs in systems.items():
        for p in _solve_affine_pair(eqs, tol):
            if p is not None and not check[name](kernel, p, tol):
                continue
            out.pairs.append(BernoulliSolution(name, p))
    if t00 == 0:
        out.dirac.append(0)
    if t11 == 1:
        out.dirac.append(1)
    return out


# --------------------------------------------------------------------------
# general alphabet, neighborhood {0..ℓ}


def check_gencond(
    kernel: TransitionKernel, p: BernoulliProduct, direction: str = "right", tol: float = TOL
) -> bool:
    """Σ_i p_i θ^k_{x i} = p_k (right) or Σ_i p_i θ^k_{i x} = p_k (left) for all x, k."""
    ell = kernel.ell
    A = kernel.alphabet
    if direction not in ("right", "left"):
        raise ValueError("direction is 'right' or 'left'")
    if len(p.p) != A.size:
        raise PreconditionError("measure and kernel alphabets differ")
    for x in A.words(ell):
        for k in A:
            if direction == "right":
                total = sum(p.p[i] * kernel.prob(x + (i,), k) for i in A)
            else:
                total = sum(p.p[i] * kernel.prob((i,) + x, k) for i in A)
            if not close(total, p.p[k], tol):
                return False
    return True


# --------------------------------------------------------------------------
# the one-parameter family satisfying (i) and (ii)


@dataclass(frozen=True)
class ParamIandII:
    p: Number
    s: Number

    def __post_init__(self):
        p, s = to_number(self.p), to_number(self.s)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "s", s)
        if not 0 < p < 1:
            raise PreconditionError("p must lie in (0,1)")
        lo, hi = self.s_range(p)
        if not lo <= s <= hi:
            raise PreconditionError(f"s = {s} outside [{lo}, {hi}] for p = {p}")

    @staticmethod
    def s_range(p) -> tuple[Number, Number]:
        p = to_number(p)
        return max(0, (2 * p - 1) / p), min(1, p / (1 - p))


def from_p_s(params: ParamIandII | None = None, *, p=None, s=None) -> TransitionKernel:
    """Kernel θ00 = p(1-s)/(1-p), θ01 = θ10 = s, θ11 = 1 - (1-p)s/p."""
    if params is None:
        params = ParamIandII(p, s)
    p, s = params.p, params.s
    return TransitionKernel.binary(p * (1 - s) / (1 - p), s, s, 1 - (1 - p) * s / p)


def transversal_kernel(kernel: TransitionKernel, direction: str, p) -> TransitionKernel:
    """Rates of the transversal PCA in direction v (under (i)) or w (under (ii)).

    Both directions swap θ01 and θ10.  For v the new cell X^n_{i+1} is drawn
    from the transversal row indexed by (X^{n+1}_i, X^n_i); for w the cell
    X^n_i is drawn from the row indexed by (X^n_{i+1}, X^{n+1}_i).
    """
    if direction == "v":
        if not check_condition_i(kernel, p):
            raise PreconditionError("transversal direction v needs condition (i)")
    elif direction == "w":
        if not check_condition_ii(kernel, p):
            raise PreconditionError("transversal direction w needs condition (ii)")
    else:
        raise ValueError("direction is 'v' or 'w'")
    t00, t01, t10, t11 = kernel.theta
    return TransitionKernel.binary(t00, t10, t01, t11)


# --------------------------------------------------------------------------
# Markov invariant measures


@dataclass(frozen=True)
class MarkovVerdict:
    holds: bool
    lhs: Number
    rhs: Number
    forward_nondegenerate: bool
    reversed_nondegenerate: bool


def check_eq_mbm(kernel: TransitionKernel, tol: float = TOL) -> MarkovVerdict:
    """θ00θ11(1-θ01)(1-θ10) = θ01θ10(1-θ00)(1-θ11) with one non-degeneracy condition."""
    t00, t01, t10, t11 = kernel.theta
    lhs = t00 * t11 * (1 - t01) * (1 - t10)
    rhs = t01 * t10 * (1 - t00) * (1 - t11)
    bad = {(0, 0), (1, 1)}
    fwd = (t00, t01) not in bad and (t10, t11) not in bad
    rev = (t00, t10) not in bad and (t01, t11) not in bad
    return MarkovVerdict(close(lhs, rhs, tol) and (fwd or rev), lhs, rhs, fwd, rev)


def _sqrt_exact(x: Fraction) -> Fraction | None:
    if x < 0:
        return None
    n, d = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if n * n == x.numerator and d * d == x.denominator:
        return Fraction(n, d)
    return None


def _quadratic_roots(A, B, C) -> list[Number]:
    if A == 0:
        return [] if B == 0 else [-C / B]
    disc = B * B - 4 * A * C
    if all(is_exact(v) for v in (A, B, C)):
        root = _sqrt_exact(Fraction(disc))
        if root is not None:
            return [(-B - root) / (2 * A), (-B + root) / (2 * A)]
    disc = float(disc)
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    A, B, C = float(A), float(B), float(C)
    # the stable pair: one root from the formula, the other from Vieta
    q = -0.5 * (B + math.copysign(sq, B)) if B != 0 else 0.5 * sq
    roots = []
    if q != 0:
        roots.append(C / q)
    roots.append(q / A)
    return roots


def solve_markov_ab(kernel: TransitionKernel, verify_length: int = 5, tol: float = 1e-10) -> MarkovMeasure:
    """The Markov measure ν_Q solving a(1-b)θ01θ10 = (1-a)bθ00θ11, (1-a)θ00 = b(1-θ11).

    The first equation is the one that makes h_1 constant (so that the
    conditional law of the next input cell forgets the past).  Substituting
    b = (1-a)θ00/(1-θ11) leaves a quadratic in a; the root with
    (a, b) in (0,1)^2 is returned after checking ν_Q F = ν_Q on all
    cylinders of length ``verify_length``.
    """
    verdict = check_eq_mbm(kernel)
    if not verdict.holds:
        raise PreconditionError("kernel does not satisfy the Markov invariance relation")
    t00, t01, t10, t11 = kernel.theta
    if t11 == 1:
        raise PreconditionError("θ11 = 1: the system has no solution in (0,1)^2")
    c = t00 / (1 - t11)
    A = c * t01 * t10 - c * t00 * t11
    B = t01 * t10 * (1 - c) + 2 * c * t00 * t11
    C = -c * t00 * t11
    candidates = []
    for a in _quadratic_roots(A, B, C):
        b = (1 - a) * c
        if 0 < a < 1 and 0 < b < 1:
            candidates.append(MarkovMeasure(a, b))
    if not candidates:
        raise PreconditionError("no solution (a, b) in (0,1)^2; rates are degenerate")
    for Q in candidates:
        if invariance_defect(kernel, Q, verify_length, tol) is None:
            return Q
    raise PreconditionError("solution of the system failed the invariance check")


# --------------------------------------------------------------------------
# correlation decay of up-pointing triangles


def phi(p, s) -> Number:
    """θ^{(2)}_{01} of the kernel from_p_s(p, s): p + (s-p)^3 / (p(1-p))."""
    p, s = to_number(p), to_number(s)
    return p + (s - p) ** 3 / (p * (1 - p))


def phi_iter(p, s, i: int) -> Number:
    """θ^{(2^i)}_{01} in closed form: p + (s-p)^{3^i} / (p(1-p))^{(3^i-1)/2}."""
    if i < 0:
        raise ValueError("i must be non-negative")
    p, s = to_number(p), to_number(s)
    e = 3**i
    return p + (s - p) ** e / (p * (1 - p)) ** ((e - 1) // 2)


# --------------------------------------------------------------------------
# triangle laws


@dataclass(frozen=True)
class TriangleLaw:
    """Law of (X0, X1, Y0) for an up-pointing elementary triangle."""

    probs: Mapping[tuple[int, int, int], Number]

    def __post_init__(self):
        probs = {tuple(k): to_number(v) for k, v in dict(self.probs).items()}
        object.__setattr__(self, "probs", probs)
        if not close(sum(probs.values()), 1):
            raise ValueError("triangle law does not sum to 1")

    def __getitem__(self, key) -> Number:
        return self.probs.get(tuple(key), 0)

    def pair_marginal(self, i: int, j: int) -> dict[tuple[int, int], Number]:
        out: dict[tuple[int, int], Number] = {}
        for w, pr in self.probs.items():
            key = (w[i], w[j])
            out[key] = out.get(key, 0) + pr
        return out

    def __hash__(self):
        return hash(tuple(sorted(self.probs.items())))


def triangle_law(kernel: TransitionKernel, p) -> TriangleLaw:
    """Law of the elementary up-triangle under μ_p for a binary kernel."""
    p = _p(p)
    mu = (1 - p, p)
    probs = {}
    for x0 in (0, 1):
        for x1 in (0, 1):
            for y in (0, 1):
                probs[x0, x1, y] = mu[x0] * mu[x1] * kernel.prob((x0, x1), y)
    return TriangleLaw(probs)


def realize_triangle(law: TriangleLaw, tol: float = TOL) -> ParamIandII:
    """The unique (p, s) whose stationary diagram has ``law`` on up-triangles."""
    if close(law[0, 0, 0], 1, tol) or close(law[1, 1, 1], 1, tol):
        raise PreconditionError("degenerate triangle law (a Dirac mass)")
    p = sum(pr for w, pr in law.probs.items() if w[0] == 1)
    for i, j in ((0, 1), (0, 2), (1, 2)):
        marg = law.pair_marginal(i, j)
        for a in (0, 1):
            for b in (0, 1):
                expected = (p if a else 1 - p) * (p if b else 1 - p)
                if not close(marg.get((a, b), 0), expected, tol):
                    raise PreconditionError(
                        f"pair ({i},{j}) of the triangle is not i.i.d. Bernoulli({p})"
                    )
    q1 = law[0, 1, 1]
    return ParamIandII(p, q1 / (p * (1 - p)))
