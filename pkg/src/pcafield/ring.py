"""Invariant measures of a PCA on the ring Z/NZ."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .conditions import check_eq_mbm, solve_markov_ab
from .core import Number, PreconditionError, TransitionKernel, close
from .exact import BudgetExceeded

RING_BUDGET = 2**20
EXACT_LIMIT = 2**8
DENSE_LIMIT = 2**11


class NonUniqueInvariant(RuntimeError):
    def __init__(self, dimension: int, at_least: bool = False):
        what = f"at least {dimension}" if at_least else str(dimension)
        super().__init__(f"invariant measures form a space of dimension {what}")
        self.dimension = dimension
        self.at_least = at_least


@dataclass(frozen=True)
class RingDistribution:
    N: int
    alphabet_size: int
    probs: tuple[Number, ...]

    def __getitem__(self, word) -> Number:
        if isinstance(word, str):
            word = tuple(int(ch) for ch in word)
        code = 0
        for a in word:
            code = code * self.alphabet_size + a
        return self.probs[code]

    def words(self):
        A, N = self.alphabet_size, self.N
        for code in range(A**N):
            w = []
            c = code
            for _ in range(N):
                c, r = divmod(c, A)
                w.append(r)
            yield tuple(reversed(w))

    def as_dict(self) -> dict[str, Number]:
        return {"".join(map(str, w)): pr for w, pr in zip(self.words(), self.probs)}

    def is_rotation_invariant(self, tol: float = 1e-12) -> bool:
        for w in self.words():
            rot = w[1:] + w[:1]
            if not close(self[w], self[rot], tol):
                return False
        return True

    def allclose(self, other: "RingDistribution", tol: float = 1e-10) -> bool:
        return all(close(a, b, tol) for a, b in zip(self.probs, other.probs))


def ring_transition_matrix(kernel: TransitionKernel, N: int) -> list[list[Number]]:
    """P[x][y] = Π_i f(x_{i+v mod N})_{v∈N}(y_i) over the |A|^N configurations."""
    A = kernel.size
    offs = kernel.neighborhood.offsets
    n = A**N
    configs = [kernel.alphabet.decode(c, N) for c in range(n)]
    P = []
    for x in configs:
        local = [kernel.row([x[(i + o) % N] for o in offs]) for i in range(N)]
        row = []
        for y in configs:
            pr: Number = Fraction(1)
            for i in range(N):
                pr = pr * local[i][y[i]]
                if not pr:
                    break
            row.append(pr)
        P.append(row)
    return P


def _exact_null_space(M: list[list[Fraction]]) -> list[list[Fraction]]:
    rows = [r[:] for r in M]
    n_rows, n_cols = len(rows), len(rows[0])
    pivots = []
    r = 0
    for c in range(n_cols):
        piv = next((i for i in range(r, n_rows) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(n_rows):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                ri, rr = rows[i], rows[r]
                rows[i] = [a - f * b for a, b in zip(ri, rr)]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    free = [c for c in range(n_cols) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [Fraction(0)] * n_cols
        v[f] = Fraction(1)
        for i, c in enumerate(pivots):
            v[c] = -rows[i][f]
        basis.append(v)
    return basis


def ring_step(kernel: TransitionKernel, v: np.ndarray, N: int) -> np.ndarray:
    """One step μ -> μP of the ring chain without forming P.

    ``v`` has shape (|A|,)*N.  The local kernels are contracted one output
    cell at a time and each input axis is summed out once no later cell reads
    it, so the peak tensor has |A|^(N+ℓ+1) entries.
    """
    A = kernel.size
    offs = kernel.neighborhood.offsets
    lo = offs[0]
    rel = [o - lo for o in offs]
    K = np.array([[float(x) for x in kernel.row(w)] for w in kernel.words()]).reshape((A,) * (len(offs) + 1))
    X = list(range(N))  # einsum labels of the input axes
    Y = list(range(N, 2 * N))  # labels of the output axes
    labels = X[:]
    T = v
    for i in range(N):
        ins = [X[(i + d) % N] for d in rel]
        out_cell = Y[(i - lo) % N]
        keep = [a for a in labels + [out_cell] if not (a == X[i] and i >= max(rel))]
        if i == N - 1:
            keep = [a for a in keep if a >= N]
        T = np.einsum(T, labels, K, ins + [out_cell], keep, optimize=False)
        labels = keep
    order = [labels.index(y) for y in Y]
    return np.transpose(T, order)


def _power_invariant(kernel: TransitionKernel, N: int, tol: float, max_iter: int) -> np.ndarray:
    # the lazy chain (μ + μP)/2 has the same invariant measures and is aperiodic
    A = kernel.size
    starts = [np.full((A,) * N, 1.0 / A**N), np.zeros((A,) * N)]
    starts[1][(0,) * N] = 1.0
    results = []
    for v in starts:
        for _ in range(max_iter):
            nxt = 0.5 * (v + ring_step(kernel, v, N))
            diff = np.abs(nxt - v).sum()
            v = nxt
            if diff < tol:
                break
        else:
            raise PreconditionError(f"power iteration did not converge in {max_iter} steps")
        results.append(v / v.sum())
    if np.abs(results[0] - results[1]).sum() > 1e-8:
        raise NonUniqueInvariant(2, at_least=True)
    return results[0].reshape(-1)


def ring_invariant(
    kernel: TransitionKernel,
    N: int,
    budget: int = RING_BUDGET,
    exact_limit: int = EXACT_LIMIT,
    dense_limit: int = DENSE_LIMIT,
    tol: float = 1e-14,
    max_iter: int = 100_000,
) -> RingDistribution:
    """Unique solution of μP = μ, Σμ = 1 on the ring of size N.

    Exact rational elimination when the kernel is rational and the state
    space is at most ``exact_limit``.  Up to ``dense_limit`` states a float64
    SVD gives the null-space dimension; beyond that the invariant vector is
    found by power iteration from two starting laws.
    """
    A = kernel.size
    n = A**N
    if n > budget:
        raise BudgetExceeded(f"{A}^{N} ring states exceed budget {budget}")
    if n > dense_limit:
        v = _power_invariant(kernel, N, tol, max_iter)
        return RingDistribution(N, A, tuple(float(x) for x in v))
    P = ring_transition_matrix(kernel, N)
    if kernel.mode.exact and n <= exact_limit:
        M = [[P[j][i] - (1 if i == j else 0) for j in range(n)] for i in range(n)]
        basis = _exact_null_space(M)
        if len(basis) != 1:
            raise NonUniqueInvariant(len(basis))
        v = basis[0]
        total = sum(v)
        return RingDistribution(N, A, tuple(x / total for x in v))
    Pf = np.array([[float(x) for x in row] for row in P])
    M = Pf.T - np.eye(n)
    _, sv, vt = np.linalg.svd(M)
    tol = max(M.shape) * np.finfo(float).eps * max(sv[0], 1.0) * 10
    dim = int(np.sum(sv <= tol))
    if dim != 1:
        raise NonUniqueInvariant(dim)
    v = vt[-1]
    v = v / v.sum()
    return RingDistribution(N, A, tuple(float(x) for x in v))


def ring_markov_form(kernel: TransitionKernel, N: int) -> RingDistribution:
    """Cyclic product (1/Z) Π q_{x_i x_{i+1}} with Q from the infinite-line solution."""
    if not check_eq_mbm(kernel).holds:
        raise PreconditionError("kernel does not satisfy the Markov invariance relation")
    Q = solve_markov_ab(kernel).Q
    ring = RingDistribution(N, 2, tuple(0 for _ in range(2**N)))
    weights = []
    for w in ring.words():
        pr: Number = Fraction(1)
        for i in range(N):
            pr = pr * Q[w[i]][w[(i + 1) % N]]
        weights.append(pr)
    Z = sum(weights)
    return RingDistribution(N, 2, tuple(x / Z for x in weights))
