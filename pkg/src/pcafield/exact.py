"""Exact push-forwards of measures on cylinders and stationary pattern probabilities.

Everything here is plain enumeration or variable elimination over finite
windows.  With rational inputs the results are exact ``Fraction`` values.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .core import (
    BernoulliProduct,
    CylinderDistribution,
    MarkovMeasure,
    Measure,
    Number,
    PreconditionError,
    TransitionKernel,
    close,
    measure_mode,
)

DEFAULT_BUDGET = 2**24
GUARD_LENGTH = 6


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class SpaceTimePattern:
    """Finitely many prescribed letters X^time_cell = letter."""

    entries: Mapping[tuple[int, int], int]

    def __post_init__(self):
        entries = {(int(c), int(t)): int(a) for (c, t), a in dict(self.entries).items()}
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_records(cls, records: Iterable[Mapping]) -> "SpaceTimePattern":
        entries: dict[tuple[int, int], int] = {}
        for r in records:
            site = (int(r["cell"]), int(r["time"]))
            if site in entries and entries[site] != int(r["letter"]):
                raise ValueError(f"conflicting letters at site {site}")
            entries[site] = int(r["letter"])
        return cls(entries)

    def to_records(self) -> list[dict]:
        return [
            {"cell": c, "time": t, "letter": a}
            for (c, t), a in sorted(self.entries.items(), key=lambda kv: (kv[0][1], kv[0][0]))
        ]

    def __len__(self) -> int:
        return len(self.entries)

    def __hash__(self):
        return hash(tuple(sorted(self.entries.items())))

    def shifted(self) -> "SpaceTimePattern":
        """Translate in time so the earliest prescribed row is row 0."""
        if not self.entries:
            return self
        t0 = min(t for _, t in self.entries)
        return SpaceTimePattern({(c, t - t0): a for (c, t), a in self.entries.items()})

    def row(self, time: int) -> dict[int, int]:
        return {c: a for (c, t), a in self.entries.items() if t == time}


# --------------------------------------------------------------------------
# push-forward by enumeration


def input_window(cells: Iterable[int], offsets: Sequence[int]) -> tuple[int, ...]:
    return tuple(sorted({c + o for c in cells for o in offsets}))


def push_forward_cylinder(
    kernel: TransitionKernel,
    initial: CylinderDistribution,
    cells: Sequence[int],
    word: Sequence[int],
) -> Number:
    """μF[y] for y = word on ``cells``, summing over the initial law on K+N."""
    pairs = sorted(zip(cells, word))
    cells = [c for c, _ in pairs]
    word = [a for _, a in pairs]
    offs = kernel.neighborhood.offsets
    need = input_window(cells, offs)
    if need != initial.window:
        raise PreconditionError(
            f"initial window {list(initial.window)} differs from K+N = {list(need)}"
        )
    pos = {c: i for i, c in enumerate(need)}
    idx = [[pos[c + o] for o in offs] for c in cells]
    total: Number = Fraction(0)
    for x, pr in initial.probs.items():
        w = pr
        for ids, y in zip(idx, word):
            w = w * kernel.rows[kernel.code([x[i] for i in ids])][y]
            if not w:
                break
        total += w
    return total


def _has_positive_continuation(kernel: TransitionKernel) -> bool:
    # every (prefix, output letter) reachable by some last input letter
    ell = kernel.ell
    A = kernel.alphabet
    for prefix in A.words(ell):
        for k in A:
            if not any(kernel.prob(prefix + (i,), k) > 0 for i in A):
                return False
    return True


def image_cylinder_bernoulli(
    kernel: TransitionKernel, p: BernoulliProduct, word: Sequence[int]
) -> Number:
    """μ_p F[word] by the g/h recursion over distributions on A^ℓ.

    The conditional law of the ℓ cells still shared with the next output is
    carried along and renormalised only when the prefix probability is
    nonzero.  When some (prefix, letter) has no positive continuation the
    recursion is not defined, and the value is computed by enumeration.
    """
    ell = kernel.ell
    if len(p.p) != kernel.size:
        raise PreconditionError("measure and kernel alphabets differ")
    if not p.fully_supported:
        raise PreconditionError("Bernoulli parameter must give every letter positive mass")
    word = tuple(word)
    if not word:
        return Fraction(1)
    if not _has_positive_continuation(kernel):
        cells = range(len(word))
        initial = p.cylinder_distribution(input_window(cells, kernel.neighborhood.offsets))
        return push_forward_cylinder(kernel, initial, cells, word)

    A = kernel.alphabet
    D = {w: p.cylinder((), w) for w in A.words(ell)}
    result: Number = Fraction(1)
    for alpha in word:
        joint: dict[tuple[int, ...], Number] = {}
        g: Number = 0
        for w, d in D.items():
            for i in A:
                q = d * p.p[i] * kernel.prob(w + (i,), alpha)
                if q:
                    g += q
                    key = (w + (i,))[1:]
                    joint[key] = joint.get(key, 0) + q
        if not g:
            return Fraction(0)
        result = result * g
        D = {k: v / g for k, v in joint.items()}
    return result


def markov_condition(kernel: TransitionKernel) -> bool:
    """(θ00,θ01) and (θ10,θ11) both avoid {(0,0), (1,1)}."""
    t00, t01, t10, t11 = kernel.theta
    bad = {(0, 0), (1, 1)}
    return (t00, t01) not in bad and (t10, t11) not in bad


def image_cylinder_markov(
    kernel: TransitionKernel, Q: MarkovMeasure, word: Sequence[int]
) -> Number:
    """ν_Q F[word] for a binary nearest-neighbour kernel."""
    kernel.require_binary()
    if not markov_condition(kernel):
        raise PreconditionError(
            "kernel has a row pair in {(0,0),(1,1)}; use space_reverse() on the kernel "
            "or push_forward_cylinder() with the Markov cylinder law"
        )
    a, b = Q.a, Q.b
    th = {w: kernel.row(w) for w in kernel.words()}

    def g(alpha, r):
        return ((1 - r) * (1 - a) * th[0, 0][alpha] + (1 - r) * a * th[0, 1][alpha]
                + r * (1 - b) * th[1, 0][alpha] + r * b * th[1, 1][alpha])

    def h(alpha, r):
        return ((1 - r) * a * th[0, 1][alpha] + r * b * th[1, 1][alpha]) / g(alpha, r)

    word = tuple(word)
    if not word:
        return Fraction(1)
    r = Q.pi[1]
    result = g(word[0], r)
    for prev, alpha in zip(word, word[1:]):
        r = h(prev, r)
        result = result * g(alpha, r)
    return result


def image_cylinder(kernel: TransitionKernel, measure: Measure, word: Sequence[int]) -> Number:
    """μF[word] using the fastest method valid for the measure."""
    if isinstance(measure, BernoulliProduct) and measure.fully_supported and kernel.neighborhood.contiguous_from_zero:
        return image_cylinder_bernoulli(kernel, measure, word)
    if isinstance(measure, MarkovMeasure) and kernel.is_binary and markov_condition(kernel):
        return image_cylinder_markov(kernel, measure, word)
    cells = range(len(word))
    initial = measure.cylinder_distribution(input_window(cells, kernel.neighborhood.offsets))
    return push_forward_cylinder(kernel, initial, cells, word)


def invariance_defect(
    kernel: TransitionKernel, measure: Measure, length: int, tol: float = 1e-12
) -> tuple[int, ...] | None:
    """First word of the given length with μF[w] != μ[w], or None.

    Checking a single length covers all shorter ones, since both sides are
    consistent families of cylinder probabilities.
    """
    for w in kernel.alphabet.words(length):
        if not close(image_cylinder(kernel, measure, w), measure.word_prob(w), tol):
            return w
    return None


@functools.lru_cache(maxsize=256)
def _guard(kernel: TransitionKernel, measure: Measure) -> tuple[int, ...] | None:
    return invariance_defect(kernel, measure, GUARD_LENGTH, tol=1e-10)


# --------------------------------------------------------------------------
# layer-by-layer elimination


def advance_layer(
    dist: Mapping[tuple[int, ...], Number],
    x_cells: Sequence[int],
    y_cells: Sequence[int],
    kernel: TransitionKernel,
    fixed: Mapping[int, int] | None = None,
) -> dict[tuple[int, ...], Number]:
    """Joint law of the next row on ``y_cells`` from a joint law on ``x_cells``.

    Output cells are added left to right and input cells are summed out as
    soon as no remaining output depends on them, so the state never holds
    more than the produced prefix plus |N| live inputs.  ``fixed`` pins some
    output letters (the mass of other letters is dropped).
    """
    fixed = fixed or {}
    offs = kernel.neighborhood.offsets
    size = kernel.size
    x_cells = tuple(x_cells)
    pos = {c: i for i, c in enumerate(x_cells)}
    rows = kernel.rows
    state: dict[tuple, Number] = {((), tuple(w)): pr for w, pr in dist.items() if pr}
    start = 0
    for y in sorted(y_cells):
        lo = y + offs[0]
        drop = 0
        while start + drop < len(x_cells) and x_cells[start + drop] < lo:
            drop += 1
        if drop:
            merged: dict[tuple, Number] = {}
            for (ys, xs), pr in state.items():
                key = (ys, xs[drop:])
                merged[key] = merged.get(key, 0) + pr
            state = merged
            start += drop
        try:
            idx = [pos[y + o] - start for o in offs]
        except KeyError:
            raise PreconditionError(f"cell {y} needs inputs outside the given row") from None
        letters = (fixed[y],) if y in fixed else range(size)
        new: dict[tuple, Number] = {}
        for (ys, xs), pr in state.items():
            code = 0
            for i in idx:
                code = code * size + xs[i]
            row = rows[code]
            for a in letters:
                q = row[a]
                if q:
                    key = (ys + (a,), xs)
                    new[key] = new.get(key, 0) + pr * q
        state = new
    out: dict[tuple[int, ...], Number] = {}
    for (ys, _), pr in state.items():
        out[ys] = out.get(ys, 0) + pr
    return out


def backward_windows(pattern: SpaceTimePattern, offsets: Sequence[int]) -> list[tuple[int, ...]]:
    """Cells needed in each row 0..T to evaluate the (time-shifted) pattern."""
    T = max(t for _, t in pattern.entries)
    windows: list[set[int]] = [set() for _ in range(T + 1)]
    for t in range(T, -1, -1):
        cells = set(pattern.row(t))
        if t < T:
            cells |= {c + o for c in windows[t + 1] for o in offsets}
        windows[t] = cells
    return [tuple(sorted(w)) for w in windows]


def stationary_pattern_probability(
    kernel: TransitionKernel,
    measure: Measure,
    pattern: SpaceTimePattern,
    guard: bool = True,
    budget: int = DEFAULT_BUDGET,
) -> Number:
    """Probability of a finite space-time pattern in the stationary diagram.

    ``measure`` must be invariant for ``kernel``; with ``guard`` this is
    checked on all cylinders of length 6 before enumerating.
    """
    if guard:
        defect = _guard(kernel, measure)
        if defect is not None:
            word = kernel.alphabet.word_str(defect)
            raise PreconditionError(
                f"initial measure is not invariant: μF[{word}] != μ[{word}]"
            )
    if not pattern.entries:
        return Fraction(1)
    if any(t < 0 for _, t in pattern.entries):
        raise PreconditionError("pattern times must be non-negative")
    pat = pattern.shifted()
    windows = backward_windows(pat, kernel.neighborhood.offsets)
    if kernel.size ** len(windows[0]) > budget:
        raise BudgetExceeded(f"{kernel.size}^{len(windows[0])} initial words exceed budget {budget}")
    row0 = pat.row(0)
    cells0 = windows[0]
    free = [c for c in cells0 if c not in row0]
    dist: dict[tuple[int, ...], Number] = {}
    for letters in kernel.alphabet.words(len(free)):
        assign = dict(row0)
        assign.update(zip(free, letters))
        w = tuple(assign[c] for c in cells0)
        pr = measure.cylinder(cells0, w)
        if pr:
            dist[w] = pr
    for t in range(len(windows) - 1):
        dist = advance_layer(dist, windows[t], windows[t + 1], kernel, pat.row(t + 1))
    return sum(dist.values(), Fraction(0))


def conditional_probability(
    kernel: TransitionKernel,
    measure: Measure,
    event: SpaceTimePattern,
    given: SpaceTimePattern,
) -> Number:
    joint = dict(given.entries)
    for site, a in event.entries.items():
        if joint.get(site, a) != a:
            return Fraction(0)
        joint[site] = a
    den = stationary_pattern_probability(kernel, measure, given)
    if not den:
        raise ZeroDivisionError("conditioning event has probability zero")
    return stationary_pattern_probability(kernel, measure, SpaceTimePattern(joint)) / den


# --------------------------------------------------------------------------
# convergence to the invariant measure


def tv_curve(
    kernel: TransitionKernel,
    initial: Measure,
    n_max: int,
    k: int,
    reference: Measure,
    budget: int = DEFAULT_BUDGET,
) -> list[Number]:
    """Total-variation distances between μF^n and ``reference`` on [0,k), n = 0..n_max.

    The initial law is taken on [0, k + n_max·ℓ) and pushed forward once per
    step; the width-k marginal at every intermediate step is read off along
    the way.
    """
    ell = kernel.ell
    width = k + n_max * ell
    if kernel.size**width > budget:
        raise BudgetExceeded(
            f"{kernel.size}^{width} states exceed the enumeration budget {budget}"
        )
    ref = {w: reference.word_prob(w) for w in kernel.alphabet.words(k)}
    cells = tuple(range(width))
    dist = dict(initial.cylinder_distribution(cells).probs)
    out = []
    for n in range(n_max + 1):
        marg: dict[tuple[int, ...], Number] = {}
        for w, pr in dist.items():
            key = w[:k]
            marg[key] = marg.get(key, 0) + pr
        out.append(sum((abs(marg.get(w, 0) - q) for w, q in ref.items()), Fraction(0)) / 2)
        if n < n_max:
            nxt = tuple(range(len(cells) - ell))
            dist = advance_layer(dist, cells, nxt, kernel)
            cells = nxt
    return out


def tv_distance_after_n(
    kernel: TransitionKernel,
    initial: Measure,
    n: int,
    k: int,
    reference: Measure,
    budget: int = DEFAULT_BUDGET,
) -> Number:
    return tv_curve(kernel, initial, n, k, reference, budget)[n]


def measure_is_exact(measure: Measure) -> bool:
    return measure_mode(measure).exact
