"""Statistical checks on sampled diagrams and exact independence scans."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import NormalDist
from typing import Iterable, Sequence

import numpy as np

from .conditions import ParamIandII, check_condition_i, check_condition_ii, from_p_s, phi_iter
from .core import BernoulliProduct, PreconditionError, TransitionKernel, close, to_number
from .exact import SpaceTimePattern, stationary_pattern_probability
from .sim import RngSpec, WindowBatch, sample_windows

MIN_LINE_SAMPLES = 10_000
MIN_CONDITIONING = 10_000
LINE_POINTS = 32
BATTERY_DIRECTIONS = ((1, 0), (0, 1), (1, 1), (-1, 1), (1, 2))


class InsufficientSamples(PreconditionError):
    pass


# --------------------------------------------------------------------------
# chi-square distribution


def _gamma_series(a: float, x: float) -> float:
    # lower regularized P(a, x), valid for x < a + 1
    term = total = 1.0 / a
    ap = a
    for _ in range(10_000):
        ap += 1
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-16:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a: float, x: float) -> float:
    # upper regularized Q(a, x) by modified Lentz, valid for x >= a + 1
    tiny = 1e-300
    b = x + 1 - a
    c = 1 / tiny
    d = 1 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2
        d = an * d + b
        d = tiny if abs(d) < tiny else d
        c = b + an / c
        c = tiny if abs(c) < tiny else c
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def gamma_q(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x) = Γ(a, x)/Γ(a)."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x <= 0:
        return 1.0
    if x < a + 1:
        return 1.0 - _gamma_series(a, x)
    return _gamma_cf(a, x)


def chi2_sf(stat: float, df: int) -> float:
    return gamma_q(df / 2, stat / 2)


def pearson(counts: np.ndarray, probs: np.ndarray) -> tuple[float, int]:
    """Pearson statistic and degrees of freedom over cells with positive expected mass."""
    counts = np.asarray(counts, dtype=float).ravel()
    probs = np.asarray(probs, dtype=float).ravel()
    n = counts.sum()
    keep = probs > 0
    if np.any(counts[~keep] > 0):
        return math.inf, int(keep.sum()) - 1
    exp = n * probs[keep]
    stat = float(np.sum((counts[keep] - exp) ** 2 / exp))
    return stat, int(keep.sum()) - 1


# --------------------------------------------------------------------------
# lines


@dataclass(frozen=True)
class LineSpec:
    direction: tuple[int, int]
    anchor: tuple[int, int] = (0, 0)

    def __post_init__(self):
        dk, dn = self.direction
        if dk == 0 and dn == 0:
            raise ValueError("line direction must be non-zero")
        g = math.gcd(dk, dn)
        object.__setattr__(self, "direction", (dk // g, dn // g))

    def points(self, count: int) -> list[tuple[int, int]]:
        (c, t), (dk, dn) = self.anchor, self.direction
        return [(c + k * dk, t + k * dn) for k in range(count)]

    def window_shape(self, count: int = LINE_POINTS) -> tuple[int, int, tuple[int, int]]:
        """Width, height and origin of the smallest window holding ``count`` points from the anchor."""
        pts = self.points(count)
        cs = [p[0] for p in pts]
        ts = [p[1] for p in pts]
        return max(cs) - min(cs) + 1, max(ts) - min(ts) + 1, (min(cs), min(ts))


def extract_line(batch: WindowBatch, line: LineSpec) -> np.ndarray:
    """Letters at every lattice point of ``line`` inside the window, shape (R, points)."""
    c0, t0 = batch.origin
    H, W = batch.cells.shape[1:]
    pts = []
    for c, t in line.points(W + H):
        if c0 <= c < c0 + W and t0 <= t < t0 + H:
            pts.append((c, t))
        else:
            break
    if not pts:
        raise InsufficientSamples("line misses the window")
    return np.stack([batch.site(c, t) for c, t in pts], axis=1)


@dataclass
class LineReport:
    direction: tuple[int, int]
    samples: int
    pairs: int
    chi2_singleton: float
    df_singleton: int
    p_singleton: float
    chi2_pairs: float
    df_pairs: int
    p_pairs: float
    alpha: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = self.p_singleton > self.alpha and self.p_pairs > self.alpha

    def as_dict(self) -> dict:
        return {
            "direction": list(self.direction),
            "samples": self.samples,
            "pairs": self.pairs,
            "chi2_singleton": self.chi2_singleton,
            "df_singleton": self.df_singleton,
            "p_singleton": self.p_singleton,
            "chi2_pairs": self.chi2_pairs,
            "df_pairs": self.df_pairs,
            "p_pairs": self.p_pairs,
            "alpha": self.alpha,
            "pass": self.passed,
        }


def line_iid_test(
    windows: WindowBatch,
    line: LineSpec,
    expected: BernoulliProduct,
    alpha: float = 0.01,
) -> LineReport:
    """Chi-square tests of letter frequencies and of non-overlapping lag-1 pairs along a line."""
    letters = extract_line(windows, line)
    A = len(expected.p)
    if letters.size < MIN_LINE_SAMPLES:
        raise InsufficientSamples(f"{letters.size} line samples, need {MIN_LINE_SAMPLES}")
    probs = np.array([float(x) for x in expected.p])
    counts = np.bincount(letters.ravel(), minlength=A)
    s1, d1 = pearson(counts, probs)
    m = letters.shape[1] // 2 * 2
    first, second = letters[:, 0:m:2].ravel(), letters[:, 1:m:2].ravel()
    pair_counts = np.bincount(first.astype(np.int64) * A + second, minlength=A * A)
    s2, d2 = pearson(pair_counts, np.outer(probs, probs))
    return LineReport(
        line.direction,
        int(letters.size),
        int(first.size),
        s1,
        d1,
        chi2_sf(s1, d1),
        s2,
        d2,
        chi2_sf(s2, d2),
        alpha,
    )


def line_battery(
    kernel: TransitionKernel,
    measure: BernoulliProduct,
    seed: int = 42,
    samples: int = 1_000_000,
    alpha: float = 0.01,
    directions: Sequence[tuple[int, int]] = BATTERY_DIRECTIONS,
    points: int = LINE_POINTS,
) -> list[LineReport]:
    """One line test per direction on fresh forward samples, stream = direction index."""
    replicas = -(-samples // points)
    out = []
    for idx, d in enumerate(directions):
        base = LineSpec(d)
        W, H, origin = base.window_shape(points)
        line = LineSpec(d, (-origin[0], -origin[1]))
        batch = sample_windows(kernel, measure, W, H, RngSpec(seed, idx), replicas)
        out.append(line_iid_test(batch, line, measure, alpha))
    return out


def battery_passes(reports: Iterable[LineReport], family_alpha: float | None = None) -> bool:
    """All tests pass; with ``family_alpha`` the level is split evenly over every p-value."""
    reports = list(reports)
    if family_alpha is None:
        return all(r.passed for r in reports)
    level = family_alpha / (2 * len(reports))
    return all(r.p_singleton > level and r.p_pairs > level for r in reports)


# --------------------------------------------------------------------------
# triangle correlations


@dataclass
class TriangleReport:
    i: int
    conditioning_events: int
    estimate: float
    expected: Fraction | float
    z: float
    p_value: float
    alpha: float

    @property
    def passed(self) -> bool:
        return self.p_value > self.alpha

    def as_dict(self) -> dict:
        return {
            "i": self.i,
            "conditioning_events": self.conditioning_events,
            "estimate": self.estimate,
            "expected": float(self.expected),
            "z": self.z,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "pass": self.passed,
        }


def triangle_correlation_test(
    windows: WindowBatch, i: int, params: ParamIandII, alpha: float = 0.01
) -> TriangleReport:
    """z-test of P(X^{2^i}_0 = 1 | X^0_0 = 0, X^0_{2^i} = 1) against the closed form.

    One triple per replica, anchored at the window origin.
    """
    d = 2**i
    c0, t0 = windows.origin
    left = windows.site(c0, t0)
    right = windows.site(c0 + d, t0)
    top = windows.site(c0, t0 + d)
    cond = (left == 0) & (right == 1)
    n = int(cond.sum())
    if n < MIN_CONDITIONING:
        raise InsufficientSamples(f"{n} conditioning events, need {MIN_CONDITIONING}")
    est = float(top[cond].mean())
    expected = phi_iter(params.p, params.s, i)
    q = float(expected)
    if q in (0.0, 1.0):
        z = 0.0 if est == q else math.inf
    else:
        z = (est - q) / math.sqrt(q * (1 - q) / n)
    pval = 2 * (1 - NormalDist().cdf(abs(z))) if math.isfinite(z) else 0.0
    return TriangleReport(i, n, est, expected, z, pval, alpha)


# --------------------------------------------------------------------------
# exact independence structure


def dependence_verdict(kernel: TransitionKernel, p, sites: Sequence[tuple[int, int]]) -> dict:
    """Compare the joint law of ``sites`` with the product of Bernoulli(p) marginals."""
    p = to_number(p)
    mu = BernoulliProduct.binary(p)
    sites = list(sites)
    t0 = min(t for _, t in sites)
    shifted = [(c, t - t0) for c, t in sites]
    differing = []
    for letters in itertools.product((0, 1), repeat=len(sites)):
        pattern = SpaceTimePattern(dict(zip(shifted, letters)))
        joint = stationary_pattern_probability(kernel, mu, pattern, guard=False)
        product = Fraction(1) if mu.mode.exact else 1.0
        for a in letters:
            product = product * (p if a else 1 - p)
        if not close(joint, product):
            differing.append({"letters": "".join(map(str, letters)), "joint": joint, "product": product})
    return {"sites": sites, "dependent": bool(differing), "differing": differing}


def is_up_triangle(sites: Sequence[tuple[int, int]]) -> bool:
    """True when the sites are (k,n), (k+m,n), (k,n+m) for some m >= 1."""
    s = set(sites)
    if len(s) != 3:
        return False
    for k, n in s:
        for m in range(1, 64):
            if {(k, n), (k + m, n), (k, n + m)} == s:
                return True
    return False


def triple_independence_scan(
    kernel: TransitionKernel, p, width: int = 3, height: int = 3
) -> dict:
    """Exact dependence verdict for every 3-subset of a width x height block."""
    p = to_number(p)
    if not (check_condition_i(kernel, p) and check_condition_ii(kernel, p)):
        raise PreconditionError("the scan needs a kernel satisfying (i) and (ii)")
    block = [(k, n) for n in range(height) for k in range(width)]
    rows = []
    for triple in itertools.combinations(block, 3):
        v = dependence_verdict(kernel, p, triple)
        rows.append({"sites": [list(s) for s in triple], "dependent": v["dependent"],
                     "up_triangle": is_up_triangle(triple)})
    dependent = [r for r in rows if r["dependent"]]
    exactly_up = all(r["dependent"] == r["up_triangle"] for r in rows)
    return {"subsets": len(rows), "dependent": len(dependent), "dependent_iff_up_triangle": exactly_up,
            "triples": rows}


def triangle_free_zero_event(p=Fraction(1, 3)) -> Fraction:
    """Probability of (X^0_0, X^0_2, X^1_0, X^1_1) = (0, 1, 1, 1) for from_p_s(p, 0)."""
    k = from_p_s(p=p, s=0)
    event = SpaceTimePattern({(0, 0): 0, (2, 0): 1, (0, 1): 1, (1, 1): 1})
    return stationary_pattern_probability(k, BernoulliProduct.binary(p), event)
