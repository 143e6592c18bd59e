"""Matplotlib rendering for the CLI report paths.

Each helper writes one PNG next to the delimited output it illustrates.
The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .book import BUY
from .stats import PdfEstimate, PowerLawFit

_SIDE_LABEL = {BUY: "buy", -BUY: "sell"}
_SIDE_STYLE = {BUY: dict(marker="o", color="tab:blue"),
               -BUY: dict(marker="d", color="tab:red")}


def _finish(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_pdf_figure(pdfs: dict[int, PdfEstimate], title: str, path) -> None:
    """Density f(x) per side on a log y axis, the fixed-width view."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for side, pdf in pdfs.items():
        mask = pdf.density > 0
        ax.semilogy(pdf.centers[mask], pdf.density[mask], ms=3, lw=0.8,
                    label=f"{_SIDE_LABEL[side]} (n={pdf.n}, atom={pdf.atom_mass:.2%})",
                    **_SIDE_STYLE[side])
    ax.set_xlabel("relative price x")
    ax.set_ylabel("f(x)")
    ax.set_title(title)
    ax.legend(fontsize=8)
    _finish(fig, path)


def save_fit_figure(fit: PowerLawFit, title: str, path) -> None:
    """Log-log binned density with the fitted power law overlaid."""
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    ax.loglog(fit.centers, fit.density, "o", ms=4, color="tab:blue",
              label="binned density")
    grid = np.logspace(np.log10(fit.x_lo), np.log10(fit.x_hi), 50)
    anchor = fit.density[0] * (grid / fit.centers[0]) ** (-(1.0 + fit.alpha))
    ax.loglog(grid, anchor, "-", color="black", lw=1,
              label=f"slope -(1+{fit.alpha:.2f})")
    ax.set_xlabel("x")
    ax.set_ylabel("f(x)")
    ax.set_title(f"{title}\nalpha = {fit.alpha:.3f} +/- {fit.stderr:.3f}, "
                 f"r2 = {fit.r2:.3f}")
    ax.legend(fontsize=8)
    _finish(fig, path)


def save_condition_figure(pdfs: list[PdfEstimate], title: str, path) -> None:
    """Overlay of the context-quartile conditional densities."""
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for i, pdf in enumerate(pdfs, start=1):
        mask = pdf.density > 0
        ax.semilogy(pdf.centers[mask], pdf.density[mask], lw=0.9,
                    label=f"group {i} (n={pdf.n})")
    ax.set_xlabel("relative price x")
    ax.set_ylabel("f(x | group)")
    ax.set_title(title)
    ax.legend(fontsize=8)
    _finish(fig, path)
