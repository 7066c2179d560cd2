"""Plain-text report formatting: percentage and decibel rendering, aligned
per-level tables, and the packaged reference fixture for a ten-level blind
image denoiser.

Percentages print with one decimal, ties rounded half up. Tables additionally
reconcile the rounded entries by largest remainder so every printed
distribution totals exactly 100.0; entries already on a one-decimal lattice
(such as the reference fixture rows) are reproduced verbatim.
"""

from __future__ import annotations

import json
from decimal import ROUND_FLOOR, ROUND_HALF_UP, Decimal
from importlib import resources

import numpy as np

from .core import psnr_from_mse

REFERENCE_RESOURCE = "denoiser_reference.json"


def format_percent(fraction) -> str:
    """Render a fraction as a percentage with one decimal, half-up."""
    value = Decimal(float(fraction)) * 100
    return f"{value.quantize(Decimal('0.1'), rounding=ROUND_HALF_UP)}%"


def format_db(value) -> str:
    """Render a decibel value with two decimals, half-up."""
    return str(Decimal(float(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def format_sigma(value) -> str:
    return format(float(value), "g")


def percent_strings(weights) -> list:
    """One-decimal percentage strings that total exactly 100.0.

    Works in integer units of 0.1% with exact decimal arithmetic: floor each
    weight, then hand the leftover units to the largest remainders (ties to
    the lower bin). Per-entry result differs from plain half-up rounding by
    at most one unit and only when reconciliation requires it.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("expected a nonempty 1-d weight vector")
    if not np.all(np.isfinite(w) & (w >= 0)):
        raise ValueError("weights must be finite and nonnegative")
    if abs(float(w.sum()) - 1.0) > 1e-6:
        raise ValueError("weights must sum to 1 to render as percentages")
    exact = [Decimal(float(x)) * 1000 for x in w]
    units = [int(d.to_integral_value(rounding=ROUND_FLOOR)) for d in exact]
    leftover = 1000 - sum(units)
    order = sorted(range(w.size), key=lambda i: (units[i] - exact[i], i))
    for i in order[:leftover]:
        units[i] += 1
    return [f"{u // 10}.{u % 10}%" for u in units]


def psnr_gap_db(mse, baseline_mse) -> float:
    """PSNR shortfall of mse relative to baseline_mse, in dB (>= 0 when
    mse >= baseline_mse)."""
    return psnr_from_mse(baseline_mse) - psnr_from_mse(mse)


def render_table(corner: str, col_labels, rows) -> str:
    """Right-aligned text table; rows is a list of (label, cells) pairs."""
    header = [corner, *[str(c) for c in col_labels]]
    body = [[str(label), *[str(c) for c in cells]] for label, cells in rows]
    widths = [max(len(line[j]) for line in [header, *body]) for j in range(len(header))]
    lines = ["  ".join(cell.rjust(w) for cell, w in zip(line, widths)) for line in [header, *body]]
    return "\n".join(lines)


def render_distribution_table(sigmas, distributions) -> str:
    """Table of training-distribution percentages, one row per named
    distribution, one column per noise level."""
    cols = [format_sigma(s) for s in sigmas]
    rows = [(name, percent_strings(w)) for name, w in distributions.items()]
    return render_table("sigma", cols, rows)


def render_psnr_table(sigmas, series) -> str:
    """Table of PSNR values in dB, one row per named series."""
    cols = [format_sigma(s) for s in sigmas]
    rows = [(name, [format_db(v) for v in values]) for name, values in series.items()]
    return render_table("sigma", cols, rows)


def load_reference() -> dict:
    """Packaged reference allocations and PSNR values (read-only fixture)."""
    text = resources.files("noisealloc").joinpath("data", REFERENCE_RESOURCE).read_text()
    return json.loads(text)


def reference_report() -> str:
    """Render the packaged fixture as distribution and PSNR tables."""
    ref = load_reference()
    sigmas = ref["sigma"]
    dist = {
        name: np.asarray(row, dtype=float) / 100.0
        for name, row in ref["distribution_percent"].items()
    }
    parts = [
        "training distribution by noise level",
        render_distribution_table(sigmas, dist),
        "",
        "PSNR (dB) by noise level",
        render_psnr_table(sigmas, ref["psnr_db"]),
    ]
    return "\n".join(parts)
