"""Deterministic cellular automata: permutativity, balance, Kari-Taati and conservation checks.

All finite checks are semi-decisions: a verdict that holds is only claimed
up to the word length ``L`` that was examined.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .core import Alphabet, BernoulliProduct, Neighborhood, TransitionKernel, close

DEFAULT_MAX_LEN = 8


@dataclass(frozen=True)
class DeterministicRule:
    """Local map f: A^N -> A on a contiguous neighborhood {lo..hi}."""

    alphabet: Alphabet
    neighborhood: Neighborhood
    table: tuple[int, ...]
    name: str = ""

    def __post_init__(self):
        if not self.neighborhood.contiguous:
            raise ValueError("deterministic rules need a contiguous neighborhood")
        n = self.alphabet.size ** len(self.neighborhood)
        if len(self.table) != n:
            raise ValueError(f"rule table needs {n} entries")
        if any(not 0 <= a < self.alphabet.size for a in self.table):
            raise ValueError("rule output outside the alphabet")

    @classmethod
    def from_function(
        cls, size: int, offsets: Sequence[int], f: Callable[[tuple[int, ...]], int], name: str = ""
    ) -> "DeterministicRule":
        A = Alphabet(size)
        nb = Neighborhood(tuple(offsets))
        return cls(A, nb, tuple(f(w) for w in A.words(len(nb))), name)

    @property
    def width(self) -> int:
        return len(self.neighborhood)

    @property
    def lo(self) -> int:
        return self.neighborhood.offsets[0]

    def __call__(self, word: Sequence[int]) -> int:
        return self.table[self.alphabet.encode(word)]

    def to_kernel(self) -> TransitionKernel:
        size = self.alphabet.size
        rows = tuple(
            tuple(Fraction(int(a == out)) for a in range(size)) for out in self.table
        )
        return TransitionKernel(self.alphabet, self.neighborhood, rows)

    def image_periodic(self, u: Sequence[int]) -> tuple[int, ...]:
        """v with F(u^Z) = v^Z, aligned so that v_i is the image of cell i."""
        n = len(u)
        offs = self.neighborhood.offsets
        return tuple(self([u[(i + o) % n] for o in offs]) for i in range(n))

    def apply(self, x: Sequence[int]) -> tuple[int, ...]:
        """Image of a finite word; the result is |N|-1 letters shorter."""
        w = self.width
        return tuple(self(x[i:i + w]) for i in range(len(x) - w + 1))


def as_ca(kernel: TransitionKernel) -> DeterministicRule | tuple[int, ...]:
    """The deterministic rule of a kernel whose rows are point masses.

    Returns the first non-deterministic neighborhood word instead when
    some row is not a point mass.
    """
    table = []
    for word in kernel.words():
        row = kernel.row(word)
        hits = [a for a, v in enumerate(row) if v == 1]
        if len(hits) != 1 or any(v != 0 for a, v in enumerate(row) if a != hits[0]):
            return word
        table.append(hits[0])
    return DeterministicRule(kernel.alphabet, kernel.neighborhood, tuple(table))


def permutativity(rule: DeterministicRule) -> dict[str, bool]:
    A = rule.alphabet
    letters = set(A)
    left = right = True
    for w in A.words(rule.width - 1):
        if left and {rule((a,) + w) for a in A} != letters:
            left = False
        if right and {rule(w + (a,)) for a in A} != letters:
            right = False
    return {"left": left, "right": right}


@dataclass
class Verdict:
    holds: bool
    max_len: int
    counterexample: str | None = None
    counterexamples: list[str] = field(default_factory=list)
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "holds": self.holds,
            "up_to": self.max_len,
            "counterexample": self.counterexample,
            "counterexamples": self.counterexamples,
            **self.detail,
        }


def surjectivity_balance(rule: DeterministicRule, L: int = DEFAULT_MAX_LEN) -> Verdict:
    """Every word of length k <= L has exactly |A|^{|N|-1} preimages.

    ``counterexample`` is the first word of the shortest unbalanced length
    with fewer preimages than required; ``counterexamples`` lists every
    unbalanced word of that length.

    Preimages are counted by a walk on the de Bruijn graph whose states are
    words of length |N|-1; the count vector for w·a is obtained from the one
    for w, so each word costs one transfer step.
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    A = rule.alphabet
    m = rule.width
    size = A.size
    n_states = size ** (m - 1)
    target = n_states
    # successor state and output letter for each (state, appended letter)
    trans = {}
    for s in range(n_states):
        sw = A.decode(s, m - 1)
        for a in A:
            full = sw + (a,)
            trans[s, a] = (A.encode(full[1:]), rule(full))
    first: str | None = None
    bad: list[str] = []
    start = [1] * n_states  # any state may begin a preimage

    # breadth by length for a shortest-first counterexample
    level = [((), start)]
    for k in range(1, L + 1):
        nxt = []
        for w, vec in level:
            for b in A:
                new = [0] * n_states
                for s, c in enumerate(vec):
                    if c:
                        for a in A:
                            t, out = trans[s, a]
                            if out == b:
                                new[t] += c
                word = w + (b,)
                total = sum(new)
                if total != target:
                    text = A.word_str(word)
                    bad.append(text)
                    # a word with too few preimages is the witness; one always exists
                    if first is None and total < target:
                        first = text
                nxt.append((word, new))
        level = nxt
        if first is not None:
            break
    return Verdict(first is None, L, first, bad)


def primitive_words(size: int, max_len: int):
    """Lyndon words (least rotation of each primitive necklace) of length <= max_len."""
    # Duval's algorithm
    w = [-1]
    while w:
        w[-1] += 1
        yield tuple(w)
        m = len(w)
        while len(w) < max_len:
            w.append(w[len(w) - m])
        while w and w[-1] == size - 1:
            w.pop()


def _periodic_words(size: int, L: int):
    return sorted(primitive_words(size, L), key=lambda w: (len(w), w))


def kari_taati_check(
    rule: DeterministicRule, p: BernoulliProduct, L: int = DEFAULT_MAX_LEN
) -> Verdict:
    """Surjectivity (balance up to L) and Π p_i^{|u|_i} = Π p_i^{|F(u)|_i} for primitive |u| <= L."""
    A = rule.alphabet
    balance = surjectivity_balance(rule, L)
    bad: list[str] = []
    images = {}
    for u in _periodic_words(A.size, L):
        v = rule.image_periodic(u)
        lhs = rhs = Fraction(1)
        for a in u:
            lhs = lhs * p.p[a]
        for a in v:
            rhs = rhs * p.p[a]
        if not close(lhs, rhs):
            text = A.word_str(u)
            bad.append(text)
            images[text] = A.word_str(v)
    holds = balance.holds and not bad
    first = bad[0] if bad else balance.counterexample
    return Verdict(
        holds,
        L,
        first,
        bad,
        {"surjective_up_to_L": balance.holds, "balance_counterexample": balance.counterexample,
         "images": images},
    )


def number_conserving_check(rule: DeterministicRule, L: int = DEFAULT_MAX_LEN) -> Verdict:
    """|u|_i = |F(u)|_i for every letter i and primitive u with |u| <= L."""
    A = rule.alphabet
    bad = []
    images = {}
    for u in _periodic_words(A.size, L):
        v = rule.image_periodic(u)
        if sorted(u) != sorted(v):
            text = A.word_str(u)
            bad.append(text)
            images[text] = A.word_str(v)
    return Verdict(not bad, L, bad[0] if bad else None, bad, {"images": images})


# --------------------------------------------------------------------------
# built-in rules

F0_A = (1, 0, 0, 1, 0)
F0_B = (1, 1, 0, 0, 0)
SWAP_A = (1, 0, 1, 0, 0)


def _swap_matches(window: Sequence[int], A: tuple, B: tuple) -> list[tuple[int, int]]:
    """(offset j, output) for each block starting at relative offset j that equals A or B."""
    k = len(A)
    c = k - 1
    hits = []
    for j in range(-c, 1):
        block = tuple(window[c + j:c + j + k])
        if block == A:
            hits.append((j, B[-j]))
        elif block == B:
            hits.append((j, A[-j]))
    return hits


def swap_conflicts(A: Sequence[int], B: Sequence[int]) -> list[tuple[int, ...]]:
    """Windows of width 2|A|-1 in which more than one occurrence covers the centre."""
    A, B = tuple(A), tuple(B)
    return [
        w for w in itertools.product((0, 1), repeat=2 * len(A) - 1)
        if len(_swap_matches(w, A, B)) > 1
    ]


def pattern_swap_rule(A: Sequence[int], B: Sequence[int], name: str = "") -> DeterministicRule:
    """Binary CA replacing each occurrence of A by B and of B by A.

    Needs |A| = |B|. When occurrences overlap at a cell the swap is
    ambiguous and the cell keeps its letter; ``swap_conflicts`` lists
    such windows.
    """
    A, B = tuple(A), tuple(B)
    if len(A) != len(B):
        raise ValueError("patterns must have equal length")
    c = len(A) - 1

    def local(w):
        hits = _swap_matches(w, A, B)
        return hits[0][1] if len(hits) == 1 else w[c]

    return DeterministicRule.from_function(2, range(-c, c + 1), local, name)


BUILTIN_RULES: dict[str, Callable[[], DeterministicRule]] = {
    "xor": lambda: DeterministicRule.from_function(2, (0, 1), lambda w: (w[0] + w[1]) % 2, "xor"),
    "and2": lambda: DeterministicRule.from_function(2, (0, 1), lambda w: w[0] * w[1], "and2"),
    "shift": lambda: DeterministicRule.from_function(2, (0, 1, 2), lambda w: w[2], "shift"),
    "identity": lambda: DeterministicRule.from_function(2, (0, 1), lambda w: w[0], "identity"),
    "f0": lambda: pattern_swap_rule(F0_A, F0_B, "f0"),
    "swap": lambda: pattern_swap_rule(SWAP_A, F0_B, "swap"),
}


def builtin_rule(name: str) -> DeterministicRule:
    try:
        return BUILTIN_RULES[name]()
    except KeyError:
        raise ValueError(f"unknown rule {name!r}; choose from {sorted(BUILTIN_RULES)}") from None


def enumerate_binary_rules(width: int):
    """All 2^(2^width) binary rules on the neighborhood {0..width-1}."""
    n = 2**width
    A = Alphabet(2)
    nb = Neighborhood(tuple(range(width)))
    for number in range(2**n):
        table = tuple((number >> c) & 1 for c in range(n))
        yield DeterministicRule(A, nb, table, f"rule{number}")
