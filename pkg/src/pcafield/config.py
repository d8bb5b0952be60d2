"""JSON ingestion and serialization of kernels, measures and patterns."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .core import (
    BernoulliProduct,
    KernelError,
    MarkovMeasure,
    Measure,
    PeriodicConfiguration,
    TransitionKernel,
    build_kernel,
    format_number,
    is_exact,
    to_number,
)
from .exact import SpaceTimePattern


class ConfigError(ValueError):
    """Malformed input; the CLI maps it to exit code 2."""


def _data(*parts: str):
    return resources.files("pcafield").joinpath("data", *parts)


def schema() -> dict:
    return json.loads(_data("config.schema.json").read_text())


def shipped_configs() -> list[str]:
    return sorted(p.name[:-5] for p in _data("configs").iterdir() if p.name.endswith(".json"))


def shipped_config_path(name: str):
    return _data("configs", f"{name}.json")


def shipped_pattern_path(name: str):
    return _data("patterns", f"{name}.json")


@dataclass(frozen=True)
class LoadedConfig:
    kernel: TransitionKernel
    measure: Measure | None
    raw: dict


def _to_mode(x, mode: str):
    v = to_number(x)
    if mode == "float":
        return float(v)
    if mode == "exact" and not is_exact(v):
        raise ConfigError(f"exact mode needs rational entries, got {x!r}")
    return v


def read_json(source: str | Path) -> Any:
    """Parse a file, or a shipped config when ``source`` names one."""
    path = Path(source)
    if not path.exists():
        name = str(source)
        shipped = shipped_config_path(name)
        if shipped.is_file():
            return json.loads(shipped.read_text())
        raise ConfigError(f"no such file or shipped config: {source}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON ({exc})") from None


def parse_config(doc: dict, mode: str = "auto") -> LoadedConfig:
    """Validate against the schema and build the kernel and optional measure.

    ``mode`` is 'exact', 'float' or 'auto' (exact when every entry is rational).
    """
    try:
        jsonschema.validate(doc, schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path)
        key = f" (row {exc.absolute_path[1]})" if len(exc.absolute_path) > 1 and exc.absolute_path[0] == "rates" else ""
        raise ConfigError(f"schema violation at '{where}'{key}: {exc.message}") from None
    size = doc["alphabet_size"]
    rows = {k: [_to_mode(v, mode) for v in row] for k, row in doc["rates"].items()}
    try:
        kernel = build_kernel(size, doc["neighborhood"], rows)
    except KernelError as exc:
        raise ConfigError(f"malformed rates row {exc.word!r}: {exc}") from None
    measure = None
    m = doc.get("measure")
    if m is not None:
        if m["type"] == "bernoulli":
            p = m["p"]
            if isinstance(p, list):
                probs = tuple(_to_mode(v, mode) for v in p)
            else:
                if size != 2:
                    raise ConfigError("a scalar Bernoulli parameter needs a binary alphabet")
                q = _to_mode(p, mode)
                probs = (1 - q, q)
            if len(probs) != size:
                raise ConfigError("Bernoulli parameter length differs from the alphabet size")
            try:
                measure = BernoulliProduct(probs)
            except ValueError as exc:
                raise ConfigError(f"measure: {exc}") from None
        elif m["type"] == "markov":
            if size != 2:
                raise ConfigError("Markov measures need a binary alphabet")
            try:
                measure = MarkovMeasure(_to_mode(m["a"], mode), _to_mode(m["b"], mode))
            except ValueError as exc:
                raise ConfigError(f"measure: {exc}") from None
        else:
            word = tuple(int(ch, 36) for ch in m["word"])
            if any(a >= size for a in word):
                raise ConfigError("periodic word uses letters outside the alphabet")
            measure = PeriodicConfiguration(word, size)
    return LoadedConfig(kernel, measure, doc)


def load_config(source: str | Path, mode: str = "auto") -> LoadedConfig:
    doc = read_json(source)
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return parse_config(doc, mode)


def _num(x):
    return format_number(x)


def dump_measure(measure: Measure) -> dict:
    if isinstance(measure, BernoulliProduct):
        return {"type": "bernoulli", "p": [_num(x) for x in measure.p]}
    if isinstance(measure, MarkovMeasure):
        return {"type": "markov", "a": _num(measure.a), "b": _num(measure.b)}
    if isinstance(measure, PeriodicConfiguration):
        return {"type": "periodic", "word": "".join("0123456789abcdefghijklmnopqrstuvwxyz"[a] for a in measure.word)}
    raise TypeError(f"cannot serialize {type(measure).__name__}")


def dump_config(kernel: TransitionKernel, measure: Measure | None = None, name: str | None = None) -> dict:
    doc: dict = {}
    if name:
        doc["name"] = name
    doc["alphabet_size"] = kernel.size
    doc["neighborhood"] = list(kernel.neighborhood.offsets)
    doc["rates"] = {
        kernel.alphabet.word_str(w): [_num(v) for v in kernel.row(w)] for w in kernel.words()
    }
    if measure is not None:
        doc["measure"] = dump_measure(measure)
    return doc


# --------------------------------------------------------------------------
# patterns


def parse_pattern(doc: Any) -> SpaceTimePattern:
    if not isinstance(doc, list):
        raise ConfigError("a pattern is a JSON list of {cell, time, letter} records")
    for rec in doc:
        if not (isinstance(rec, dict) and set(rec) == {"cell", "time", "letter"}
                and all(isinstance(rec[k], int) for k in rec)):
            raise ConfigError(f"bad pattern record {rec!r}")
    try:
        return SpaceTimePattern.from_records(doc)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_pattern(source: str | Path) -> SpaceTimePattern:
    path = Path(source)
    if not path.exists():
        shipped = shipped_pattern_path(str(source))
        if not shipped.is_file():
            raise ConfigError(f"no such pattern file: {source}")
        return parse_pattern(json.loads(shipped.read_text()))
    try:
        return parse_pattern(json.loads(path.read_text()))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON ({exc})") from None


def to_jsonable(x):
    """Recursively convert numbers to their serialized form."""
    if isinstance(x, Fraction):
        return format_number(x)
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if hasattr(x, "item") and not isinstance(x, (str, bytes)):
        return x.item()
    return x


def dumps(doc) -> str:
    return json.dumps(to_jsonable(doc), indent=2, sort_keys=True)
