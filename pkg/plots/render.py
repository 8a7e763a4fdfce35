#!/usr/bin/env python3
"""Render standard figures from cutofflab CSV/JSON outputs.

    python3 plots/render.py --csv results.csv --summary summary.json \
        --out figure.png --kind {convergence,finite-part}

The scripts read only the published CSV and summary schemas and never
recompute any mathematics: slope annotations are copied from the summary,
and the finite-part overlay evaluates the expansion coefficients published
by the fit.  Re-running on the same inputs produces identical images up to
raster metadata.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# recognized (x, y) column pairs for convergence-style sweeps
CONVERGENCE_COLUMNS = [("N", "error"), ("M", "error"), ("T", "error"), ("N", "deviation")]
FINITE_PART_COLUMNS = [("eps", "value_re", "value_im"), ("eps", "z_re", "z_im")]


class RenderError(ValueError):
    pass


def _read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise RenderError(f"empty CSV: {path}") from None
        rows = [row for row in reader if row]
    if not rows:
        raise RenderError(f"CSV has no data rows: {path}")
    return header, rows


def _column(header, rows, name):
    try:
        idx = header.index(name)
    except ValueError:
        raise RenderError(f"missing column {name!r} (have {header})") from None
    return [float(r[idx]) for r in rows]


def _slope_annotation(summary):
    slopes = summary.get("slopes") or {}
    parts = []
    for key in sorted(slopes):
        value = slopes[key].get("value")
        if value is not None:
            parts.append(f"{key} slope = {value:.4f}")
    return "; ".join(parts)


def _hash_annotation(summary, expect_hash):
    if expect_hash and summary.get("config_hash") != expect_hash:
        return (
            f"WARNING: summary hash {summary.get('config_hash')} != "
            f"expected {expect_hash}"
        )
    return ""


def plot_convergence(csv_path, summary_path, out_path, expect_hash=None):
    """Log-log sweep curve with the fitted slope copied from the summary.

    Returns the annotation metadata used in the figure.
    """
    header, rows = _read_csv(csv_path)
    summary = json.loads(Path(summary_path).read_text())
    for x_name, y_name in CONVERGENCE_COLUMNS:
        if x_name in header and y_name in header:
            break
    else:
        raise RenderError(f"no convergence columns among {header}")
    xs = _column(header, rows, x_name)
    ys = _column(header, rows, y_name)
    positive = [(x, y) for x, y in zip(xs, ys) if y > 0]
    if not positive:
        raise RenderError("all sweep values vanish; nothing to draw on log axes")

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.loglog(*zip(*positive), marker="o")
    ax.set_xlabel(x_name)
    ax.set_ylabel(y_name)
    ax.grid(True, which="both", alpha=0.3)
    title = summary.get("experiment", "sweep")
    annotation = _slope_annotation(summary)
    warning = _hash_annotation(summary, expect_hash)
    if annotation:
        ax.set_title(f"{title}  ({annotation})")
    else:
        ax.set_title(title)
    if warning:
        ax.text(0.02, 0.02, warning, transform=ax.transAxes, color="red", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return {"x": x_name, "y": y_name, "annotation": annotation, "warning": warning}


def _expansion_values(fit, eps_values):
    betas = fit["betas"]
    coeff = [
        complex(re, im)
        for re, im in zip(fit["coefficients_re"], fit["coefficients_im"])
    ]
    out = []
    for eps in eps_values:
        val = 0.0 + 0.0j
        k = 0
        for beta in betas:
            val += coeff[k] * eps ** (-beta)
            k += 1
        if fit["include_log"]:
            val += coeff[k] * math.log(eps)
            k += 1
        val += coeff[k]
        out.append(val)
    return out


def plot_finite_part(csv_path, summary_path, out_path, expect_hash=None):
    """Measured trace values, the published fitted expansion, and the
    horizontal finite-part line."""
    header, rows = _read_csv(csv_path)
    summary = json.loads(Path(summary_path).read_text())
    for cols in FINITE_PART_COLUMNS:
        if all(c in header for c in cols):
            eps_name, re_name, _ = cols
            break
    else:
        raise RenderError(f"no finite-part columns among {header}")
    eps = _column(header, rows, eps_name)
    values = _column(header, rows, re_name)
    fit = summary.get("constants", {}).get("fit")
    if fit is None:
        raise RenderError("summary carries no published fit")
    dense = [min(eps) * (max(eps) / min(eps)) ** (i / 200.0) for i in range(201)]
    curve = [v.real for v in _expansion_values(fit, dense)]
    a0 = fit["finite_part_re"]

    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.semilogx(eps, values, "o", label="measured")
    ax.semilogx(dense, curve, "-", label="fitted expansion")
    ax.axhline(a0, linestyle="--", color="gray",
               label=f"finite part = {a0:.6f}")
    ax.set_xlabel(eps_name)
    ax.set_ylabel("trace value (real part)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    warning = _hash_annotation(summary, expect_hash)
    ax.set_title(summary.get("experiment", "finite part"))
    if warning:
        ax.text(0.02, 0.02, warning, transform=ax.transAxes, color="red", fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return {"finite_part": a0, "warning": warning}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="render")
    parser.add_argument("--csv", required=True, type=Path)
    parser.add_argument("--summary", required=True, type=Path)
    parser.add_argument("--out", required=True, type=Path)
    parser.add_argument("--kind", required=True,
                        choices=["convergence", "finite-part"])
    parser.add_argument("--expect-hash", default=None)
    args = parser.parse_args(argv)
    render = plot_convergence if args.kind == "convergence" else plot_finite_part
    meta = render(args.csv, args.summary, args.out, expect_hash=args.expect_hash)
    print(json.dumps(meta))
    return 0


if __name__ == "__main__":
    sys.exit(main())
