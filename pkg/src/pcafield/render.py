"""Image output: binary PGM for windows, matplotlib figures for reports."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .sim import SpaceTimeWindow


def gray_levels(cells: np.ndarray, alphabet_size: int) -> np.ndarray:
    """Letter a maps to floor(255 a / (|A| - 1))."""
    return (np.asarray(cells, dtype=np.int64) * 255 // (alphabet_size - 1)).astype(np.uint8)


def pgm_bytes(window: SpaceTimeWindow, alphabet_size: int = 2) -> bytes:
    """P5 image with one pixel per cell; the latest time is the top row."""
    img = gray_levels(window.cells[::-1], alphabet_size)
    h, w = img.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def render(window: SpaceTimeWindow, path: str | Path, alphabet_size: int = 2) -> Path:
    path = Path(path)
    path.write_bytes(pgm_bytes(window, alphabet_size))
    return path


def read_pgm(path: str | Path) -> np.ndarray:
    """Pixel array of a P5 file written by ``render`` (top row first)."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError("not a binary PGM file")
    w, h = map(int, parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w)


# --------------------------------------------------------------------------
# figures

_METADATA = {"png": {"Software": None}, "pdf": {"Creator": None, "Producer": None, "CreationDate": None},
             "svg": {"Date": None, "Creator": None}}


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fmt = path.suffix.lstrip(".").lower() or "png"
    kw = {"metadata": _METADATA[fmt]} if fmt in _METADATA else {}
    if fmt == "svg":
        import matplotlib

        matplotlib.rcParams["svg.hashsalt"] = "pcafield"
    fig.savefig(path, format=fmt, dpi=120, **kw)
    _figure().close(fig)
    return path


def window_figure(window: SpaceTimeWindow, path: str | Path, title: str = "", alphabet_size: int = 2) -> Path:
    """Space-time diagram with time increasing upward."""
    plt = _figure()
    fig, ax = plt.subplots(figsize=(6, 6 * window.height / max(window.width, 1) + 0.6))
    c0, t0 = window.origin
    ax.imshow(
        window.cells,
        origin="lower",
        cmap="gray",
        vmin=0,
        vmax=alphabet_size - 1,
        interpolation="nearest",
        extent=(c0 - 0.5, c0 + window.width - 0.5, t0 - 0.5, t0 + window.height - 0.5),
    )
    ax.set_xlabel("cell")
    ax.set_ylabel("time")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def tv_figure(values: Sequence[float], path: str | Path, title: str = "") -> Path:
    """Total-variation distance against the number of steps, log scale."""
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    n = np.arange(len(values))
    v = np.array([float(x) for x in values])
    pos = v > 0
    ax.semilogy(n[pos], v[pos], "o-", lw=1.2, ms=4)
    ax.set_xlabel("steps n")
    ax.set_ylabel("total variation")
    ax.grid(True, which="both", alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def ring_figure(probs: dict[str, float], path: str | Path, title: str = "") -> Path:
    plt = _figure()
    words = list(probs)
    fig, ax = plt.subplots(figsize=(max(4, 0.35 * len(words)), 3.5))
    ax.bar(range(len(words)), [float(probs[w]) for w in words], color="0.3")
    ax.set_xticks(range(len(words)))
    ax.set_xticklabels(words, rotation=90, fontsize=7)
    ax.set_ylabel("probability")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def pvalue_figure(labels: Sequence[str], pvalues: Sequence[Sequence[float]], alpha: float, path: str | Path) -> Path:
    """Grouped bars of p-values per line direction with the rejection level."""
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    x = np.arange(len(labels))
    names = ("letters", "pairs")
    for j, name in enumerate(names):
        ax.bar(x + (j - 0.5) * 0.35, [pv[j] for pv in pvalues], 0.35, label=name)
    ax.axhline(alpha, color="k", lw=0.8, ls="--")
    ax.set_xticks(x)
    ax.set_xticklabels(labels)
    ax.set_ylim(0, 1)
    ax.set_ylabel("p-value")
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, path)
