"""Domain types for one-dimensional PCA: alphabet, neighborhood, kernels, measures.

Neighborhood words are enumerated in base-|A| lexicographic order with the
first offset as the most significant digit, so for a binary kernel on
{0, 1} the rows come in the order 00, 01, 10, 11.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Callable, Iterable, Iterator, Mapping, Sequence, Union

Number = Union[Fraction, float]

DEFAULT_TOLERANCE = 1e-12
DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


class KernelError(ValueError):
    """A transition table is not row-stochastic or is malformed."""

    def __init__(self, message: str, word: str | None = None):
        super().__init__(message)
        self.word = word


class PreconditionError(ValueError):
    """An operation was called outside the domain where it is valid."""


# --------------------------------------------------------------------------
# numbers


def is_exact(x) -> bool:
    return isinstance(x, (_RationalABC, int)) and not isinstance(x, bool)


def to_number(x) -> Number:
    """Coerce ints, Fractions, "num/den" strings and floats to a Number."""
    if isinstance(x, bool):
        raise TypeError("booleans are not probabilities")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        try:
            return Fraction(s)
        except ValueError:
            return float(s)
    if isinstance(x, _RationalABC):
        return Fraction(x.numerator, x.denominator)
    return float(x)


def close(a: Number, b: Number, tol: float = DEFAULT_TOLERANCE) -> bool:
    """Exact equality for two rationals, absolute tolerance otherwise."""
    if is_exact(a) and is_exact(b):
        return a == b
    return abs(float(a) - float(b)) <= tol


def format_number(x: Number) -> str | float:
    """Rationals as "num/den" strings, floats unchanged."""
    if is_exact(x):
        x = Fraction(x)
        return f"{x.numerator}/{x.denominator}"
    return float(x)


@dataclass(frozen=True)
class NumericMode:
    mode: str = "exact"
    tolerance: float = 0.0

    def __post_init__(self):
        if self.mode not in ("exact", "float64"):
            raise ValueError(f"unknown numeric mode {self.mode!r}")
        if self.mode == "exact" and self.tolerance != 0:
            raise ValueError("exact mode has zero tolerance")
        if self.tolerance < 0:
            raise ValueError("tolerance must be non-negative")

    @classmethod
    def float64(cls, tolerance: float = DEFAULT_TOLERANCE) -> "NumericMode":
        return cls("float64", tolerance)

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    def coerce(self, x) -> Number:
        x = to_number(x)
        if self.exact:
            if not is_exact(x):
                raise ValueError(f"float value {x!r} in exact mode")
            return x
        return float(x)

    def equal(self, a: Number, b: Number) -> bool:
        if self.exact:
            return a == b
        return abs(float(a) - float(b)) <= self.tolerance


EXACT = NumericMode()
FLOAT64 = NumericMode.float64()


def mode_of(values: Iterable) -> NumericMode:
    return EXACT if all(is_exact(v) for v in values) else FLOAT64


# --------------------------------------------------------------------------
# alphabet and neighborhood


@dataclass(frozen=True)
class Alphabet:
    size: int

    def __post_init__(self):
        if not isinstance(self.size, int) or self.size < 2:
            raise ValueError("alphabet needs at least two letters")

    def __iter__(self) -> Iterator[int]:
        return iter(range(self.size))

    def __len__(self) -> int:
        return self.size

    def words(self, length: int) -> Iterator[tuple[int, ...]]:
        return itertools.product(range(self.size), repeat=length)

    def encode(self, word: Sequence[int]) -> int:
        code = 0
        for a in word:
            code = code * self.size + a
        return code

    def decode(self, code: int, length: int) -> tuple[int, ...]:
        out = []
        for _ in range(length):
            code, r = divmod(code, self.size)
            out.append(r)
        return tuple(reversed(out))

    def word_str(self, word: Sequence[int]) -> str:
        return "".join(DIGITS[a] for a in word)

    def parse_word(self, text: str) -> tuple[int, ...]:
        word = tuple(DIGITS.index(ch) for ch in text.strip().lower())
        if any(a >= self.size for a in word):
            raise ValueError(f"word {text!r} uses letters outside the alphabet")
        return word


@dataclass(frozen=True)
class Neighborhood:
    offsets: tuple[int, ...]

    def __post_init__(self):
        offs = tuple(self.offsets)
        if not offs:
            raise ValueError("empty neighborhood")
        if list(offs) != sorted(set(offs)):
            raise ValueError("neighborhood offsets must be sorted and distinct")
        object.__setattr__(self, "offsets", offs)

    @classmethod
    def interval(cls, ell: int) -> "Neighborhood":
        return cls(tuple(range(ell + 1)))

    def __len__(self) -> int:
        return len(self.offsets)

    def __iter__(self):
        return iter(self.offsets)

    @property
    def contiguous_from_zero(self) -> bool:
        return self.offsets == tuple(range(len(self.offsets)))

    @property
    def contiguous(self) -> bool:
        lo = self.offsets[0]
        return self.offsets == tuple(range(lo, lo + len(self.offsets)))

    @property
    def ell(self) -> int:
        """Radius ℓ of a {0..ℓ} neighborhood."""
        self.require_interval()
        return len(self.offsets) - 1

    def require_interval(self) -> None:
        if not self.contiguous_from_zero:
            raise PreconditionError(
                f"neighborhood {list(self.offsets)} is not of the form {{0,...,l}}"
            )


# --------------------------------------------------------------------------
# transition kernels


@dataclass(frozen=True)
class TransitionKernel:
    """Local rule f: A^N -> M(A) stored as one distribution per neighborhood word."""

    alphabet: Alphabet
    neighborhood: Neighborhood
    rows: tuple[tuple[Number, ...], ...]
    mode: NumericMode = field(default=EXACT)

    def __post_init__(self):
        rows = tuple(tuple(to_number(v) for v in row) for row in self.rows)
        object.__setattr__(self, "rows", rows)
        n_rows = self.alphabet.size ** len(self.neighborhood)
        if len(rows) != n_rows:
            raise KernelError(f"expected {n_rows} rows, got {len(rows)}")
        for code, row in enumerate(rows):
            if len(row) != self.alphabet.size:
                raise KernelError(
                    f"row {self.word_str(code)} has {len(row)} entries, "
                    f"expected {self.alphabet.size}",
                    self.word_str(code),
                )
        if self.mode.exact and not all(is_exact(v) for row in rows for v in row):
            object.__setattr__(self, "mode", FLOAT64)
        problem = _row_problem(self)
        if problem is not None:
            raise KernelError(*problem)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_function(
        cls,
        alphabet_size: int,
        offsets: Sequence[int],
        f: Callable[[tuple[int, ...]], Sequence],
    ) -> "TransitionKernel":
        alphabet = Alphabet(alphabet_size)
        nb = Neighborhood(tuple(offsets))
        rows = [tuple(f(w)) for w in alphabet.words(len(nb))]
        return cls(alphabet, nb, tuple(rows), mode_of(v for r in rows for v in r))

    @classmethod
    def binary(cls, t00, t01, t10, t11) -> "TransitionKernel":
        """Binary kernel on {0,1} from the probabilities of writing a 1."""
        thetas = [to_number(t) for t in (t00, t01, t10, t11)]
        rows = tuple((1 - t, t) for t in thetas)
        return cls(Alphabet(2), Neighborhood((0, 1)), rows, mode_of(thetas))

    @classmethod
    def deterministic(
        cls, alphabet_size: int, offsets: Sequence[int], f: Callable[[tuple[int, ...]], int]
    ) -> "TransitionKernel":
        def row(w):
            out = f(w)
            return [Fraction(int(a == out)) for a in range(alphabet_size)]

        return cls.from_function(alphabet_size, offsets, row)

    # -- access ---------------------------------------------------------------

    @property
    def size(self) -> int:
        return self.alphabet.size

    @property
    def ell(self) -> int:
        return self.neighborhood.ell

    def code(self, word: Sequence[int]) -> int:
        return self.alphabet.encode(word)

    def word_str(self, code: int) -> str:
        return self.alphabet.word_str(self.alphabet.decode(code, len(self.neighborhood)))

    def row(self, word: Sequence[int]) -> tuple[Number, ...]:
        return self.rows[self.code(word)]

    def prob(self, word: Sequence[int], letter: int) -> Number:
        return self.rows[self.code(word)][letter]

    def words(self) -> Iterator[tuple[int, ...]]:
        return self.alphabet.words(len(self.neighborhood))

    @property
    def theta(self) -> tuple[Number, Number, Number, Number]:
        """(θ00, θ01, θ10, θ11) for a binary kernel on {0,1}."""
        self.require_binary()
        return tuple(r[1] for r in self.rows)

    def require_binary(self) -> None:
        if self.size != 2 or self.neighborhood.offsets != (0, 1):
            raise PreconditionError("operation needs a binary kernel with neighborhood {0,1}")

    @property
    def is_binary(self) -> bool:
        return self.size == 2 and self.neighborhood.offsets == (0, 1)

    def entries(self) -> Iterator[Number]:
        for row in self.rows:
            yield from row


def _row_problem(kernel: TransitionKernel):
    for code, row in enumerate(kernel.rows):
        word = kernel.word_str(code)
        for v in row:
            if v < 0 or v > 1:
                return (f"row {word}: entry {v} outside [0,1]", word)
        total = sum(row)
        ok = total == 1 if kernel.mode.exact else abs(total - 1) <= DEFAULT_TOLERANCE
        if not ok:
            return (f"row {word}: entries sum to {total}, not 1", word)
    return None


def validate_kernel(kernel: TransitionKernel) -> str | None:
    """Return None when every row is a distribution, else a description."""
    problem = _row_problem(kernel)
    return None if problem is None else problem[0]


def validate_rows(
    alphabet_size: int, offsets: Sequence[int], rows: Mapping[str, Sequence]
) -> str | None:
    """Row-stochasticity check on raw (unconstructed) rates keyed by word."""
    try:
        build_kernel(alphabet_size, offsets, rows)
    except KernelError as exc:
        return str(exc)
    return None


def build_kernel(
    alphabet_size: int, offsets: Sequence[int], rows: Mapping[str, Sequence]
) -> TransitionKernel:
    """Kernel from a {word-string: distribution} mapping."""
    alphabet = Alphabet(alphabet_size)
    nb = Neighborhood(tuple(offsets))
    table = {}
    for key, row in rows.items():
        try:
            word = alphabet.parse_word(key)
        except ValueError as exc:
            raise KernelError(str(exc), key) from None
        if len(word) != len(nb):
            raise KernelError(f"row key {key!r} has wrong length", key)
        try:
            table[alphabet.encode(word)] = tuple(to_number(v) for v in row)
        except (TypeError, ValueError, ZeroDivisionError):
            raise KernelError(f"row {key}: unparseable entries {row!r}", key) from None
    n_rows = alphabet_size ** len(nb)
    missing = [c for c in range(n_rows) if c not in table]
    if missing:
        key = alphabet.word_str(alphabet.decode(missing[0], len(nb)))
        raise KernelError(f"row {key} is missing", key)
    ordered = tuple(table[c] for c in range(n_rows))
    return TransitionKernel(alphabet, nb, ordered, mode_of(v for r in ordered for v in r))


def positive_rates(kernel: TransitionKernel) -> bool:
    return all(v > 0 for v in kernel.entries())


def space_reverse(kernel: TransitionKernel) -> TransitionKernel:
    """The same dynamics read right to left: each neighborhood word reversed."""
    kernel.neighborhood.require_interval()
    rows = [kernel.row(tuple(reversed(w))) for w in kernel.words()]
    return TransitionKernel(kernel.alphabet, kernel.neighborhood, tuple(rows), kernel.mode)


def dependence_cone(i: int, n: int, neighborhood: Neighborhood) -> Callable[[int, int], bool]:
    """Membership predicate of the forward dependence cone of site (i, n)."""
    ell = neighborhood.ell

    def contains(cell: int, time: int) -> bool:
        k = time - n
        j = cell - i
        return k >= 0 and -k * ell <= j <= 0

    return contains


# --------------------------------------------------------------------------
# measures


@dataclass(frozen=True)
class CylinderDistribution:
    """Finite-dimensional law on the cells of ``window``."""

    window: tuple[int, ...]
    probs: Mapping[tuple[int, ...], Number]

    def __post_init__(self):
        object.__setattr__(self, "window", tuple(self.window))
        if list(self.window) != sorted(set(self.window)):
            raise ValueError("window cells must be sorted and distinct")
        for w in self.probs:
            if len(w) != len(self.window):
                raise ValueError("support word length differs from window size")

    def total(self) -> Number:
        return sum(self.probs.values())

    def marginal(self, cells: Sequence[int]) -> "CylinderDistribution":
        cells = tuple(sorted(cells))
        idx = [self.window.index(c) for c in cells]
        out: dict[tuple[int, ...], Number] = {}
        for w, pr in self.probs.items():
            key = tuple(w[i] for i in idx)
            out[key] = out.get(key, 0) + pr
        return CylinderDistribution(cells, out)

    def __getitem__(self, word: tuple[int, ...]) -> Number:
        return self.probs.get(tuple(word), 0)


class Measure:
    """Shift-invariant measure on A^Z described by its cylinder probabilities."""

    alphabet: Alphabet

    def cylinder(self, cells: Sequence[int], word: Sequence[int]) -> Number:
        raise NotImplementedError

    def word_prob(self, word: Sequence[int]) -> Number:
        return self.cylinder(range(len(word)), word)

    def cylinder_distribution(self, cells: Sequence[int]) -> CylinderDistribution:
        cells = tuple(sorted(cells))
        probs = {}
        for w in self.alphabet.words(len(cells)):
            pr = self.cylinder(cells, w)
            if pr != 0:
                probs[w] = pr
        return CylinderDistribution(cells, probs)


@dataclass(frozen=True)
class BernoulliProduct(Measure):
    p: tuple[Number, ...]

    def __post_init__(self):
        p = tuple(to_number(v) for v in self.p)
        object.__setattr__(self, "p", p)
        if len(p) < 2:
            raise ValueError("need a probability for every letter")
        if any(v < 0 for v in p):
            raise ValueError("negative letter probability")
        total = sum(p)
        if not close(total, 1):
            raise ValueError(f"letter probabilities sum to {total}")

    @classmethod
    def binary(cls, p) -> "BernoulliProduct":
        p = to_number(p)
        return cls((1 - p, p))

    @classmethod
    def uniform(cls, size: int) -> "BernoulliProduct":
        return cls(tuple(Fraction(1, size) for _ in range(size)))

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(len(self.p))

    @property
    def fully_supported(self) -> bool:
        return all(v > 0 for v in self.p)

    @property
    def mode(self) -> NumericMode:
        return mode_of(self.p)

    def __getitem__(self, letter: int) -> Number:
        return self.p[letter]

    def cylinder(self, cells, word) -> Number:
        out: Number = Fraction(1)
        for a in word:
            out = out * self.p[a]
        return out


@dataclass(frozen=True)
class MarkovMeasure(Measure):
    """Stationary two-state Markov chain read along the line of cells."""

    a: Number
    b: Number

    def __post_init__(self):
        a, b = to_number(self.a), to_number(self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if not (0 < a < 1 and 0 < b < 1):
            raise ValueError("Markov parameters must lie in (0,1)")

    alphabet = Alphabet(2)

    @property
    def Q(self) -> tuple[tuple[Number, Number], tuple[Number, Number]]:
        return ((1 - self.a, self.a), (1 - self.b, self.b))

    @property
    def pi(self) -> tuple[Number, Number]:
        d = 1 - self.b + self.a
        return ((1 - self.b) / d, self.a / d)

    @property
    def mode(self) -> NumericMode:
        return mode_of((self.a, self.b))

    def _step(self, x: int, y: int, gap: int) -> Number:
        # gap-step transition probability, Q^gap[x][y]
        if gap == 1:
            return self.Q[x][y]
        row = [Fraction(int(x == 0)), Fraction(int(x == 1))]
        Q = self.Q
        for _ in range(gap):
            row = [row[0] * Q[0][0] + row[1] * Q[1][0], row[0] * Q[0][1] + row[1] * Q[1][1]]
        return row[y]

    def cylinder(self, cells, word) -> Number:
        cells = list(cells)
        word = list(word)
        if not word:
            return Fraction(1)
        out = self.pi[word[0]]
        for k in range(1, len(word)):
            out = out * self._step(word[k - 1], word[k], cells[k] - cells[k - 1])
        return out


def measure_mode(measure: Measure) -> NumericMode:
    return getattr(measure, "mode", EXACT)


@dataclass(frozen=True)
class PeriodicConfiguration(Measure):
    """Dirac mass on the periodic configuration ...uuu... with u at cell 0."""

    word: tuple[int, ...]
    size: int = 2

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(self.size)

    def letter(self, cell: int) -> int:
        return self.word[cell % len(self.word)]

    def cylinder(self, cells, word) -> Number:
        return Fraction(int(all(self.letter(c) == a for c, a in zip(cells, word))))

    def cylinder_distribution(self, cells) -> CylinderDistribution:
        cells = tuple(sorted(cells))
        return CylinderDistribution(cells, {tuple(self.letter(c) for c in cells): Fraction(1)})
