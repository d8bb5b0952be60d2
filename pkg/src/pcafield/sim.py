"""Seeded sampling of space-time diagrams.

Two samplers are provided. ``sample_windows`` iterates the PCA forward over
a trapezoid wide enough that the requested rectangle never sees a boundary.
The incremental construction (``compile_plan`` / ``sample_plan``) builds the
stationary diagram of a binary kernel satisfying (i) and (ii) site by site,
using the forward kernel, the two transversal kernels, and independent
Bernoulli draws.

Randomness comes from numpy's counter-based Philox generator keyed by
``(seed, stream)``. Every block of draws is addressed by a counter
``(row, chunk)`` so the output does not depend on how replicas are split.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .conditions import check_condition_i, check_condition_ii, transversal_kernel
from .core import (
    BernoulliProduct,
    MarkovMeasure,
    Measure,
    PeriodicConfiguration,
    PreconditionError,
    TransitionKernel,
    to_number,
)

CHUNK = 4096
Site = tuple[int, int]


@dataclass(frozen=True)
class RngSpec:
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        for v in (self.seed, self.stream):
            if not 0 <= int(v) < 2**64:
                raise ValueError("seed and stream must be 64-bit unsigned integers")

    def generator(self, row: int, chunk: int = 0) -> np.random.Generator:
        # address in the high words; draws advance the low word
        bits = np.random.Philox(key=[int(self.seed), int(self.stream)], counter=[0, 0, row, chunk])
        return np.random.Generator(bits)

    def uniforms(self, row: int, chunk: int, shape) -> np.ndarray:
        return self.generator(row, chunk).random(shape)


@dataclass
class SpaceTimeWindow:
    """A sampled rectangle; ``cells[t, k]`` is the letter at (origin cell + k, origin time + t)."""

    origin: Site
    cells: np.ndarray

    def __post_init__(self):
        if self.cells.ndim != 2:
            raise ValueError("window cells must be a 2-D array")

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    def __getitem__(self, site: Site) -> int:
        c, t = site
        return int(self.cells[t - self.origin[1], c - self.origin[0]])


@dataclass
class WindowBatch:
    """Independent replicas of a window, stored as an array of shape (R, height, width)."""

    origin: Site
    cells: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def replicas(self) -> int:
        return self.cells.shape[0]

    def window(self, r: int) -> SpaceTimeWindow:
        return SpaceTimeWindow(self.origin, self.cells[r])

    def __iter__(self):
        return (self.window(r) for r in range(self.replicas))

    def site(self, cell: int, time: int) -> np.ndarray:
        """Letters at one site across all replicas."""
        return self.cells[:, time - self.origin[1], cell - self.origin[0]]


# --------------------------------------------------------------------------
# forward sampling


def _cum_table(kernel: TransitionKernel) -> np.ndarray:
    rows = np.array([[float(v) for v in kernel.row(w)] for w in kernel.words()])
    return np.cumsum(rows, axis=1)[:, :-1]


def _draw(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    # letter = number of cumulative thresholds at or below u
    out = np.zeros(u.shape, dtype=np.uint8)
    for a in range(cum.shape[-1]):
        out += u >= cum[..., a]
    return out


def _initial_row(initial, cells: np.ndarray, n: int, rng: RngSpec, chunk: int) -> np.ndarray:
    width = len(cells)
    if isinstance(initial, PeriodicConfiguration):
        row = np.array([initial.letter(int(c)) for c in cells], dtype=np.uint8)
        return np.broadcast_to(row, (n, width)).copy()
    u = rng.uniforms(0, chunk, (n, width))
    if isinstance(initial, BernoulliProduct):
        cum = np.cumsum([float(x) for x in initial.p])[:-1]
        return _draw(cum, u)
    if isinstance(initial, MarkovMeasure):
        pi1 = float(initial.pi[1])
        Q = initial.Q
        up = np.array([float(Q[0][1]), float(Q[1][1])])
        row = np.empty((n, width), dtype=np.uint8)
        row[:, 0] = u[:, 0] < pi1
        for k in range(1, width):
            row[:, k] = u[:, k] < up[row[:, k - 1]]
        return row
    raise PreconditionError(f"cannot sample an initial row from {type(initial).__name__}")


def sample_windows(
    kernel: TransitionKernel,
    initial: Measure,
    width: int,
    height: int,
    rng: RngSpec,
    replicas: int = 1,
    origin: Site = (0, 0),
) -> WindowBatch:
    """Forward-iterate ``replicas`` independent trapezoids and crop each to width x height.

    Row 0 of each window is drawn from ``initial`` and row t is the image
    of row t-1 under the kernel.
    """
    if width < 1 or height < 1 or replicas < 1:
        raise ValueError("width, height and replicas must be positive")
    offs = np.array(kernel.neighborhood.offsets)
    lo, hi = int(offs.min()), int(offs.max())
    c0, t0 = origin
    start = c0 + min(0, lo * (height - 1))
    stop = c0 + width + max(0, hi * (height - 1))
    cum = _cum_table(kernel)
    A = kernel.size
    mult = A ** np.arange(len(offs) - 1, -1, -1)
    out = np.empty((replicas, height, width), dtype=np.uint8)
    for chunk, first in enumerate(range(0, replicas, CHUNK)):
        n = min(CHUNK, replicas - first)
        cells = np.arange(start, stop)
        row = _initial_row(initial, cells, n, rng, chunk)
        out[first:first + n, 0] = row[:, c0 - start:c0 - start + width]
        s, e = start, stop
        for t in range(1, height):
            ns, ne = s - lo, e - hi
            m = ne - ns
            code = np.zeros((n, m), dtype=np.int64)
            for o, w in zip(offs, mult):
                a = ns + o - s
                code += row[:, a:a + m].astype(np.int64) * int(w)
            u = rng.uniforms(t, chunk, (n, m))
            row = _draw(cum[code], u)
            s, e = ns, ne
            out[first:first + n, t] = row[:, c0 - s:c0 - s + width]
    return WindowBatch(origin, out)


def sample_window(kernel, initial, width, height, rng: RngSpec, origin: Site = (0, 0)) -> SpaceTimeWindow:
    return sample_windows(kernel, initial, width, height, rng, 1, origin).window(0)


# --------------------------------------------------------------------------
# incremental stationary construction


class NoApplicableRule(PreconditionError):
    pass


def _in_u_cone(target: Site, s: Site) -> bool:
    (i, n), (j, m) = target, s
    return m >= n and j <= i and j + m >= i + n


def _in_v_cone(target: Site, s: Site) -> bool:
    (i, n), (j, m) = target, s
    return j >= i and m <= n and j + m >= i + n


def _in_w_cone(target: Site, s: Site) -> bool:
    (i, n), (j, m) = target, s
    return j <= i and m <= n


INDEPENDENCE_TESTS = {
    "indep-above": lambda t, s: s[1] > t[1],
    "indep-right": lambda t, s: s[0] > t[0],
    "indep-diagonal": lambda t, s: s[0] + s[1] < t[0] + t[1],
}


@dataclass(frozen=True)
class Step:
    """One site of a construction plan.

    ``rule`` is 'u', 'v' or 'w' (conditional draw given ``parents``) or one
    of the independence rules (no parents).
    """

    site: Site
    rule: str
    parents: tuple[Site, ...] = ()


def applicable_rule(S: Iterable[Site], target: Site) -> Step:
    """First rule that may place ``target`` given the already built set S."""
    S = set(S)
    if target in S:
        raise PreconditionError(f"site {target} is already built")
    i, n = target
    forward = ((i, n - 1), (i + 1, n - 1))
    if all(p in S for p in forward) and not any(_in_u_cone(target, s) for s in S):
        return Step(target, "u", forward)
    v_par = ((i - 1, n + 1), (i - 1, n))
    if all(p in S for p in v_par) and not any(_in_v_cone(target, s) for s in S):
        return Step(target, "v", v_par)
    w_par = ((i + 1, n), (i, n + 1))
    if all(p in S for p in w_par) and not any(_in_w_cone(target, s) for s in S):
        return Step(target, "w", w_par)
    for name, test in INDEPENDENCE_TESTS.items():
        if all(test(target, s) for s in S):
            return Step(target, name)
    raise NoApplicableRule(f"no construction rule applies to site {target}")


def check_plan(steps: Sequence[Step]) -> None:
    """Raise unless every step is valid given the sites placed before it."""
    S: set[Site] = set()
    for st in steps:
        i, n = st.site
        if st.site in S:
            raise PreconditionError(f"site {st.site} placed twice")
        if st.rule in INDEPENDENCE_TESTS:
            ok = all(INDEPENDENCE_TESTS[st.rule](st.site, s) for s in S)
        else:
            cone = {"u": _in_u_cone, "v": _in_v_cone, "w": _in_w_cone}[st.rule]
            ok = all(p in S for p in st.parents) and not any(cone(st.site, s) for s in S)
        if not ok:
            raise NoApplicableRule(f"rule {st.rule} does not apply to {st.site}")
        S.add(st.site)


def rows_down_order(width: int, height: int, origin: Site = (0, 0)) -> list[Step]:
    """Top row right to left, then each lower row from its right end."""
    c0, t0 = origin
    steps: list[Step] = []
    top = t0 + height - 1
    for k in range(width - 1, -1, -1):
        steps.append(Step((c0 + k, top), "indep-right"))
    for n in range(top - 1, t0 - 1, -1):
        steps.append(Step((c0 + width - 1, n), "indep-above"))
        for k in range(width - 2, -1, -1):
            i = c0 + k
            steps.append(Step((i, n), "w", ((i + 1, n), (i, n + 1))))
    check_plan(steps)
    return steps


def greedy_order(sites: Iterable[Site], seed_triangle: Site | None = None) -> list[Step]:
    """Grow outward from an initial up-triangle, nearest sites first.

    At each step the nearest unbuilt site admitting a conditional rule is
    placed; if none does, the nearest site admitting an independence rule.
    """
    todo = set(sites)
    if not todo:
        return []
    if seed_triangle is None:
        xs = sorted(s[0] for s in todo)
        ts = sorted(s[1] for s in todo)
        seed_triangle = (xs[(len(xs) - 1) // 2], ts[(len(ts) - 1) // 2])
    ci, cn = seed_triangle
    tri = [(ci, cn), (ci + 1, cn), (ci, cn + 1)]
    if not all(s in todo for s in tri):
        raise PreconditionError("the initial triangle must lie inside the site set")

    def dist(s):
        di, dn = s[0] - ci, s[1] - cn
        # hexagonal distance on the triangular lattice
        return max(abs(di), abs(dn), abs(di + dn))

    S: set[Site] = set()
    steps: list[Step] = []
    for s in tri:
        st = applicable_rule(S, s)
        steps.append(st)
        S.add(s)
        todo.discard(s)
    while todo:
        best = None
        for s in sorted(todo, key=lambda s: (dist(s), s[1], s[0])):
            try:
                st = applicable_rule(S, s)
            except NoApplicableRule:
                continue
            if st.rule in ("u", "v", "w"):
                best = st
                break
            if best is None:
                best = st
        if best is None:
            raise NoApplicableRule(f"construction stuck with {len(todo)} sites left")
        steps.append(best)
        S.add(best.site)
        todo.discard(best.site)
    return steps


def spiral_order(width: int, height: int, origin: Site = (0, 0)) -> list[Step]:
    c0, t0 = origin
    sites = [(c0 + k, t0 + t) for t in range(height) for k in range(width)]
    return greedy_order(sites)


@dataclass(frozen=True)
class Plan:
    """A construction order with the probability of writing 1 at each step."""

    steps: tuple[Step, ...]
    tables: tuple[tuple[float, ...], ...]
    exact_tables: tuple[tuple, ...]


def compile_plan(kernel: TransitionKernel, p, steps: Sequence[Step]) -> Plan:
    """Attach conditional laws to each step; the kernel must satisfy (i) and (ii) at p."""
    kernel.require_binary()
    p = to_number(p)
    if not (check_condition_i(kernel, p) and check_condition_ii(kernel, p)):
        raise PreconditionError("incremental construction needs conditions (i) and (ii)")
    check_plan(steps)
    laws = {"u": kernel, "v": transversal_kernel(kernel, "v", p), "w": transversal_kernel(kernel, "w", p)}
    exact = []
    for st in steps:
        if st.rule in laws:
            exact.append(tuple(laws[st.rule].theta))
        else:
            exact.append((p,))
    floats = tuple(tuple(float(x) for x in t) for t in exact)
    return Plan(tuple(steps), floats, tuple(exact))


def plan_probability(plan: Plan, assignment: dict[Site, int]):
    """Exact probability the plan assigns to a full assignment of its sites."""
    out = 1
    for st, table in zip(plan.steps, plan.exact_tables):
        if st.parents:
            x, y = (assignment[q] for q in st.parents)
            q1 = table[2 * x + y]
        else:
            q1 = table[0]
        out = out * (q1 if assignment[st.site] else 1 - q1)
    return out


def sample_plan(plan: Plan, rng: RngSpec, replicas: int = 1) -> tuple[list[Site], np.ndarray]:
    """Run the plan for many replicas; returns the site list and letters of shape (R, sites)."""
    index = {st.site: k for k, st in enumerate(plan.steps)}
    out = np.empty((replicas, len(plan.steps)), dtype=np.uint8)
    for chunk, first in enumerate(range(0, replicas, CHUNK)):
        n = min(CHUNK, replicas - first)
        block = out[first:first + n]
        u = rng.uniforms(0, chunk, (n, len(plan.steps)))
        for k, (st, table) in enumerate(zip(plan.steps, plan.tables)):
            if st.parents:
                x = block[:, index[st.parents[0]]].astype(np.int64)
                y = block[:, index[st.parents[1]]].astype(np.int64)
                q1 = np.asarray(table)[2 * x + y]
            else:
                q1 = table[0]
            block[:, k] = u[:, k] < q1
    return [st.site for st in plan.steps], out


def plan_windows(plan: Plan, rng: RngSpec, replicas: int = 1) -> WindowBatch:
    """Sample a plan covering a full rectangle and return it as windows."""
    sites, letters = sample_plan(plan, rng, replicas)
    cs = [s[0] for s in sites]
    ts = [s[1] for s in sites]
    c0, t0 = min(cs), min(ts)
    W, H = max(cs) - c0 + 1, max(ts) - t0 + 1
    if W * H != len(sites):
        raise PreconditionError("plan sites do not form a rectangle")
    cells = np.empty((replicas, H, W), dtype=np.uint8)
    for k, (c, t) in enumerate(sites):
        cells[:, t - t0, c - c0] = letters[:, k]
    return WindowBatch((c0, t0), cells)


def extend_stationary(
    state: dict[Site, int],
    target: Site,
    kernel: TransitionKernel,
    p,
    gen: np.random.Generator,
) -> Step:
    """Place one more site in ``state`` (modified in place) and return the rule used."""
    kernel.require_binary()
    p = to_number(p)
    if not (check_condition_i(kernel, p) and check_condition_ii(kernel, p)):
        raise PreconditionError("incremental construction needs conditions (i) and (ii)")
    st = applicable_rule(state, target)
    if st.rule == "u":
        table = kernel.theta
    elif st.rule in ("v", "w"):
        table = transversal_kernel(kernel, st.rule, p).theta
    else:
        table = (p,)
    if st.parents:
        x, y = (state[q] for q in st.parents)
        q1 = table[2 * x + y]
    else:
        q1 = table[0]
    state[target] = int(gen.random() < float(q1))
    return st
