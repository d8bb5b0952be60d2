"""Command-line interface.

Exit codes: 0 success, 1 domain error (a precondition of the requested
computation fails), 2 usage error (bad arguments or malformed input).
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .ca import (
    DEFAULT_MAX_LEN,
    as_ca,
    builtin_rule,
    BUILTIN_RULES,
    kari_taati_check,
    number_conserving_check,
    permutativity,
    surjectivity_balance,
)
from .conditions import (
    ParamIandII,
    bernoulli_solutions,
    check_condition_i,
    check_condition_ii,
    check_eq_bernou,
    check_eq_mbm,
    check_gencond,
    from_p_s,
    solve_markov_ab,
)
from .config import ConfigError, LoadedConfig, dump_config, dumps, load_config, load_pattern
from .core import (
    BernoulliProduct,
    KernelError,
    MarkovMeasure,
    PeriodicConfiguration,
    PreconditionError,
    TransitionKernel,
    close,
    positive_rates,
    to_number,
    validate_kernel,
)
from .exact import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    image_cylinder,
    invariance_defect,
    stationary_pattern_probability,
    tv_curve,
)
from .ring import RING_BUDGET, NonUniqueInvariant, ring_invariant, ring_markov_form
from .sim import RngSpec, compile_plan, plan_windows, rows_down_order, sample_windows, spiral_order

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2
DOMAIN_ERRORS = (PreconditionError, BudgetExceeded, NonUniqueInvariant, ZeroDivisionError)


class UsageError(ValueError):
    pass


# --------------------------------------------------------------------------
# helpers


def _mode_name(kernel: TransitionKernel, *extra) -> str:
    exact = kernel.mode.exact and all(
        isinstance(x, (Fraction, int)) for x in extra if x is not None
    )
    return "exact" if exact else "float"


def _number(text: str, mode: str):
    try:
        v = to_number(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {text!r}") from None
    if mode == "float":
        return float(v)
    if mode == "exact" and isinstance(v, float):
        raise UsageError(f"exact mode needs rational input, got {text!r}")
    return v


def _bernoulli(text: str, size: int, mode: str) -> BernoulliProduct:
    """'1/3' (binary: probability of 1) or a comma list of letter probabilities."""
    parts = [s for s in text.split(",") if s.strip()]
    vals = [_number(s, mode) for s in parts]
    if len(vals) == 1:
        if size != 2:
            raise UsageError("a scalar p needs a binary alphabet; give one probability per letter")
        vals = [1 - vals[0], vals[0]]
    if len(vals) != size:
        raise UsageError(f"p needs {size} entries")
    try:
        return BernoulliProduct(tuple(vals))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(args) -> LoadedConfig:
    if not args.config:
        raise UsageError("--config is required")
    return load_config(args.config, args.mode)


def _measure_of(cfg: LoadedConfig, args, kind=(BernoulliProduct, MarkovMeasure)):
    if getattr(args, "p", None):
        return _bernoulli(args.p, cfg.kernel.size, args.mode)
    if cfg.measure is None or not isinstance(cfg.measure, kind):
        raise UsageError("no suitable measure: give --p or a measure block in the config")
    return cfg.measure


def _emit(doc: dict, args) -> None:
    text = dumps(doc) + "\n"
    out = getattr(args, "json_out", None)
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)


# --------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    cfg = _load(args)
    k = cfg.kernel
    det = as_ca(k)
    doc = {
        "command": "validate",
        "valid": validate_kernel(k) is None,
        "mode": _mode_name(k),
        "alphabet_size": k.size,
        "neighborhood": list(k.neighborhood.offsets),
        "positive_rates": positive_rates(k),
        "deterministic": not isinstance(det, tuple),
    }
    if cfg.measure is not None:
        doc["measure"] = type(cfg.measure).__name__
    _emit(doc, args)
    return EXIT_OK


def _verdict(name, holds, witness=None) -> dict:
    return {"condition": name, "holds": bool(holds), "witness": witness}


def cmd_conditions(args) -> int:
    cfg = _load(args)
    k = cfg.kernel
    p = None
    if args.p:
        p = _bernoulli(args.p, k.size, args.mode)
    elif isinstance(cfg.measure, BernoulliProduct):
        p = cfg.measure
    verdicts = []
    doc: dict = {"command": "conditions", "mode": _mode_name(k, *(p.p if p else ()))}
    binary_nn = k.is_binary and k.neighborhood.offsets == (0, 1)
    if binary_nn:
        t00, t01, t10, t11 = k.theta
        sols = bernoulli_solutions(k)
        doc["bernoulli_solutions"] = [
            {"condition": s.condition, "p": "any" if s.p is None else s.p} for s in sols.pairs
        ]
        doc["dirac_invariants"] = [f"{a}^Z" for a in sols.dirac]
        if p is not None:
            q = p.p[1]
            doc["p"] = q
            if not 0 < q < 1:
                raise PreconditionError("p must lie in (0,1)")
            verdicts.append(_verdict("i", check_condition_i(k, q), {
                "row0": (1 - q) * t00 + q * t01, "row1": (1 - q) * t10 + q * t11, "p": q}))
            verdicts.append(_verdict("ii", check_condition_ii(k, q), {
                "col0": (1 - q) * t00 + q * t10, "col1": (1 - q) * t01 + q * t11, "p": q}))
        else:
            for name in ("i", "ii"):
                ps = sols.ps(name)
                verdicts.append(_verdict(name, bool(ps), {"p": ["any" if x is None else x for x in ps]}))
        verdicts.append(_verdict("bernoulli-relation", check_eq_bernou(k), {
            "t00(1-t11)": t00 * (1 - t11), "t10(1-t01)": t10 * (1 - t01), "t01(1-t10)": t01 * (1 - t10)}))
        mbm = check_eq_mbm(k)
        verdicts.append(_verdict("markov-relation", mbm.holds, {"lhs": mbm.lhs, "rhs": mbm.rhs}))
        if mbm.holds:
            try:
                Q = solve_markov_ab(k)
                doc["markov"] = {"a": Q.a, "b": Q.b}
            except PreconditionError as exc:
                doc["markov"] = {"error": str(exc)}
    if p is not None and k.neighborhood.contiguous_from_zero:
        for d in ("right", "left"):
            verdicts.append(_verdict(f"gencond-{d}", check_gencond(k, p, d), {"p": list(p.p)}))
    doc["verdicts"] = verdicts
    _emit(doc, args)
    return EXIT_OK


def cmd_image(args) -> int:
    cfg = _load(args)
    k = cfg.kernel
    mu = _measure_of(cfg, args, (BernoulliProduct, MarkovMeasure, PeriodicConfiguration))
    doc: dict = {"command": "image", "mode": _mode_name(k, *_measure_numbers(mu))}
    if args.word:
        try:
            w = k.alphabet.parse_word(args.word)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        doc["word"] = args.word
        doc["image_probability"] = image_cylinder(k, mu, w)
        doc["measure_probability"] = mu.word_prob(w)
    if args.invariance:
        bad = invariance_defect(k, mu, args.invariance)
        doc["invariant_up_to"] = args.invariance
        doc["invariant"] = bad is None
        doc["defect_word"] = None if bad is None else k.alphabet.word_str(bad)
    _emit(doc, args)
    return EXIT_OK


def _measure_numbers(mu):
    if isinstance(mu, BernoulliProduct):
        return mu.p
    if isinstance(mu, MarkovMeasure):
        return (mu.a, mu.b)
    return ()


def cmd_pattern(args) -> int:
    cfg = _load(args)
    k = cfg.kernel
    mu = _measure_of(cfg, args)
    pattern = load_pattern(args.pattern)
    prob = stationary_pattern_probability(k, mu, pattern, budget=args.budget or DEFAULT_BUDGET)
    doc = {"command": "pattern", "mode": _mode_name(k, *_measure_numbers(mu)),
           "pattern": pattern.to_records(), "probability": prob}
    _emit(doc, args)
    return EXIT_OK


def cmd_ring(args) -> int:
    cfg = _load(args)
    k = cfg.kernel
    if args.size < 1:
        raise UsageError("--size must be positive")
    if args.markov_form:
        dist = ring_markov_form(k, args.size)
    else:
        dist = ring_invariant(k, args.size, budget=args.budget or RING_BUDGET)
    mode = "exact" if all(isinstance(v, Fraction) for v in dist.probs) else "float"
    probs = dist.as_dict()
    doc = {"command": "ring", "mode": mode, "size": args.size,
           "method": "markov-form" if args.markov_form else "linear-system", "probabilities": probs}
    _emit(doc, args)
    if args.figure:
        from .render import ring_figure

        ring_figure(probs, args.figure, f"ring of size {args.size}")
    return EXIT_OK


def _rule(args):
    if args.config in BUILTIN_RULES and not Path(args.config).exists():
        return builtin_rule(args.config)
    cfg = _load(args)
    rule = as_ca(cfg.kernel)
    if isinstance(rule, tuple):
        raise PreconditionError(
            f"kernel is not deterministic at neighborhood word {cfg.kernel.alphabet.word_str(rule)}")
    if not rule.neighborhood.contiguous:
        raise PreconditionError("deterministic rules need a contiguous neighborhood")
    return rule


def cmd_ca(args) -> int:
    if not args.config:
        raise UsageError("--config is required (a file or one of " + ", ".join(sorted(BUILTIN_RULES)) + ")")
    rule = _rule(args)
    L = args.max_len
    if L < 1:
        raise UsageError("--max-len must be at least 1")
    doc: dict = {"command": "ca", "mode": "exact", "rule": rule.name or args.config, "check": args.check}
    if args.check == "permutative":
        doc.update(permutativity(rule))
    elif args.check == "surjective":
        doc.update(surjectivity_balance(rule, L).as_dict())
    elif args.check == "number-conserving":
        doc.update(number_conserving_check(rule, L).as_dict())
    else:
        p = _bernoulli(args.p, rule.alphabet.size, args.mode) if args.p else BernoulliProduct.uniform(rule.alphabet.size)
        if not p.fully_supported:
            raise PreconditionError("p must give every letter positive mass")
        doc["p"] = list(p.p)
        if not p.mode.exact:
            doc["mode"] = "float"
        doc.update(kari_taati_check(rule, p, L).as_dict())
    _emit(doc, args)
    return EXIT_OK


def _sample_batch(args, cfg: LoadedConfig):
    k = cfg.kernel
    rng = RngSpec(args.seed, args.stream)
    if args.method == "forward":
        mu = _measure_of(cfg, args, (BernoulliProduct, MarkovMeasure, PeriodicConfiguration))
        return sample_windows(k, mu, args.width, args.height, rng, args.replicas)
    mu = _measure_of(cfg, args, (BernoulliProduct,))
    order = spiral_order if args.method == "spiral" else rows_down_order
    plan = compile_plan(k, mu.p[1], order(args.width, args.height))
    return plan_windows(plan, rng, args.replicas)


def cmd_sample(args) -> int:
    cfg = _load(args)
    if args.width < 1 or args.height < 1 or args.replicas < 1:
        raise UsageError("--width, --height and --replicas must be positive")
    batch = _sample_batch(args, cfg)
    size = cfg.kernel.size
    out = args.out
    doc = {
        "command": "sample",
        "method": args.method,
        "seed": args.seed,
        "stream": args.stream,
        "width": args.width,
        "height": args.height,
        "replicas": batch.replicas,
        "origin": list(batch.origin),
        "mean_letter": float(np.mean(batch.cells)),
    }
    if out and out.endswith(".pgm"):
        from .render import render

        if batch.replicas == 1:
            render(batch.window(0), out, size)
            doc["pgm"] = [out]
        else:
            stem = Path(out)
            names = []
            for r, win in enumerate(batch):
                name = stem.with_name(f"{stem.stem}_{r:04d}{stem.suffix}")
                render(win, name, size)
                names.append(str(name))
            doc["pgm"] = names
    else:
        # rows listed bottom (time 0) to top
        doc["windows"] = [w.cells.tolist() for w in batch]
        if out:
            args.json_out = out
    if args.figure:
        from .render import window_figure

        window_figure(batch.window(0), args.figure, cfg.raw.get("name", ""), size)
    _emit(doc, args)
    return EXIT_OK


def cmd_stats(args) -> int:
    from .stats import (
        BATTERY_DIRECTIONS,
        line_battery,
        triangle_correlation_test,
        triple_independence_scan,
    )

    cfg = _load(args)
    k = cfg.kernel
    mu = _measure_of(cfg, args, (BernoulliProduct,))
    doc: dict = {"command": "stats", "test": args.test, "seed": args.seed, "alpha": args.alpha}
    if args.test == "lines":
        directions = BATTERY_DIRECTIONS
        if args.directions:
            try:
                directions = tuple(tuple(int(v) for v in d.split(",")) for d in args.directions.split(";"))
            except ValueError:
                raise UsageError("--directions looks like '1,0;0,1;-1,1'") from None
        samples = args.replicas * 32 if args.replicas else 1_000_000
        reports = line_battery(k, mu, args.seed, samples, args.alpha, directions)
        doc["mode"] = "float"
        doc["lines"] = [r.as_dict() for r in reports]
        doc["pass"] = all(r.passed for r in reports)
        if args.figure:
            from .render import pvalue_figure

            pvalue_figure([f"({r.direction[0]},{r.direction[1]})" for r in reports],
                          [(r.p_singleton, r.p_pairs) for r in reports], args.alpha, args.figure)
    elif args.test == "triangle":
        if not k.is_binary:
            raise PreconditionError("the triangle test needs a binary kernel")
        q = mu.p[1]
        s = k.theta[1]
        params = ParamIandII(q, s)
        if not all(close(a, b) for a, b in zip(from_p_s(params).theta, k.theta)):
            raise PreconditionError("the triangle test needs a kernel of the form from_p_s(p, s)")
        d = 2**args.i
        replicas = args.replicas or 200_000
        batch = sample_windows(k, mu, d + 1, d + 1, RngSpec(args.seed, 0), replicas)
        rep = triangle_correlation_test(batch, args.i, params, args.alpha)
        doc["mode"] = "float"
        doc.update(rep.as_dict())
        doc["pass"] = rep.passed
    else:
        if not (k.mode.exact and mu.mode.exact):
            raise PreconditionError("the exact scan needs rational rates and p")
        rep = triple_independence_scan(k, mu.p[1])
        doc["mode"] = "exact"
        doc.update(rep)
    _emit(doc, args)
    return EXIT_OK


def cmd_ergodicity(args) -> int:
    cfg = _load(args)
    k = cfg.kernel
    if args.initial:
        try:
            word = k.alphabet.parse_word(args.initial)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        initial = PeriodicConfiguration(word, k.size)
    elif cfg.measure is not None:
        initial = cfg.measure
    else:
        raise UsageError("give --initial WORD or a measure block in the config")
    reference = _bernoulli(args.reference, k.size, args.mode) if args.reference else None
    if reference is None:
        if args.p:
            reference = _bernoulli(args.p, k.size, args.mode)
        else:
            sols = bernoulli_solutions(k).ps() if k.is_binary and k.neighborhood.offsets == (0, 1) else []
            sols = [x for x in sols if x is not None]
            if not sols:
                raise UsageError("give --reference P; no Bernoulli invariant was found")
            reference = BernoulliProduct.binary(sols[0])
    curve = tv_curve(k, initial, args.steps, args.width, reference, budget=args.budget or DEFAULT_BUDGET)
    mode = "exact" if all(isinstance(v, Fraction) for v in curve) else "float"
    decreasing = all(b < a for a, b in zip(curve[1:], curve[2:]))
    doc = {
        "command": "ergodicity",
        "mode": mode,
        "width": args.width,
        "steps": args.steps,
        "reference": list(reference.p),
        "tv": curve,
        "tv_float": [float(v) for v in curve],
        "strictly_decreasing_from_1": decreasing,
    }
    if args.figure:
        from .render import tv_figure

        tv_figure(curve, args.figure, cfg.raw.get("name", ""))
    _emit(doc, args)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="kernel config JSON (file path or shipped config name)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1, help="accepted for compatibility; output never depends on it")
    common.add_argument("--mode", choices=("exact", "float", "auto"), default="auto")
    common.add_argument("--budget", type=int, default=None, help="enumeration budget in states")
    common.add_argument("--dump-config", action="store_true", help="print the normalized config and exit")
    common.add_argument("--figure", help="also write a matplotlib figure to this path")

    parser = argparse.ArgumentParser(prog="pcafield", description="Probabilistic cellular automata toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="check a kernel config")

    p = sub.add_parser("conditions", parents=[common], help="invariance conditions")
    p.add_argument("--p", help="Bernoulli parameter: probability of 1, or a comma list")

    p = sub.add_parser("image", parents=[common], help="image of a measure on cylinders")
    p.add_argument("--p")
    p.add_argument("--word")
    p.add_argument("--invariance", type=int, metavar="L", help="check invariance on all words of length L")

    p = sub.add_parser("pattern", parents=[common], help="stationary space-time pattern probability")
    p.add_argument("--pattern", required=True)
    p.add_argument("--p")

    p = sub.add_parser("ring", parents=[common], help="invariant measure on a finite ring")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--markov-form", action="store_true")

    p = sub.add_parser("ca", parents=[common], help="deterministic CA checks")
    p.add_argument("--check", required=True, choices=("permutative", "surjective", "kari-taati", "number-conserving"))
    p.add_argument("--p")
    p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN)

    p = sub.add_parser("sample", parents=[common], help="sample space-time windows")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--method", choices=("forward", "spiral", "rows"), default="forward")
    p.add_argument("--p")
    p.add_argument("--out", help="file.pgm or file.json")

    p = sub.add_parser("stats", parents=[common], help="statistical and exact independence tests")
    p.add_argument("--test", required=True, choices=("lines", "triangle", "scan"))
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--i", type=int, default=1, help="scale exponent of the triangle test")
    p.add_argument("--directions", help="semicolon-separated directions, e.g. '1,0;-1,1'")
    p.add_argument("--p")

    p = sub.add_parser("ergodicity", parents=[common], help="total-variation decay to a Bernoulli measure")
    p.add_argument("--steps", type=int, default=12)
    p.add_argument("--width", type=int, default=3)
    p.add_argument("--initial", help="periodic initial word, e.g. 0 for the all-zero configuration")
    p.add_argument("--reference", help="Bernoulli reference measure")
    p.add_argument("--p", help="alias of --reference")
    return parser


COMMANDS = {
    "validate": cmd_validate,
    "conditions": cmd_conditions,
    "image": cmd_image,
    "pattern": cmd_pattern,
    "ring": cmd_ring,
    "ca": cmd_ca,
    "sample": cmd_sample,
    "stats": cmd_stats,
    "ergodicity": cmd_ergodicity,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.dump_config:
            cfg = _load(args)
            sys.stdout.write(dumps(dump_config(cfg.kernel, cfg.measure, cfg.raw.get("name"))) + "\n")
            return EXIT_OK
        return COMMANDS[args.command](args)
    except (ConfigError, UsageError, KernelError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except DOMAIN_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DOMAIN
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
