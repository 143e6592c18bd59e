"""Density estimation, power-law fitting, spread and volatility measures,
and context-conditioned distribution machinery.

Densities are plain normalized histograms with the exact-zero point mass
reported separately, since orders placed exactly at the reference price
form an atom that no continuous density describes.  Power-law exponents
come from ordinary least squares on log-log binned densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (EmptyBins, EmptySample, InsufficientHistory,
                     InsufficientRange, MissingContext, MissingQuote)
from .market import REL_PRICE_LIMIT, log_price

PDF_BIN_WIDTH = 0.002
VOL_WINDOW = 50
FIT_BINS_PER_DECADE = 20


@dataclass(frozen=True)
class PdfEstimate:
    """Histogram density over x with the zero atom reported separately.

    The histogram includes every sample (zeros land in the central bin),
    so density integrates to one; atom_mass is additionally the fraction
    of samples exactly at zero.
    """

    edges: np.ndarray
    density: np.ndarray
    n: int
    atom_mass: float

    @property
    def centers(self) -> np.ndarray:
        return (self.edges[:-1] + self.edges[1:]) / 2.0

    def integral(self) -> float:
        return float(np.sum(self.density * np.diff(self.edges)))


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares exponent of f(x) ~ x^-(1+alpha) over [x_lo, x_hi]."""

    alpha: float
    stderr: float
    x_lo: float
    x_hi: float
    r2: float
    n_bins: int
    n_samples: int
    centers: np.ndarray
    density: np.ndarray


def _default_edges(xs: np.ndarray, width: float) -> np.ndarray:
    """Bin grid of the given width with zero at a bin center.

    Covers at least the +/-10% relative-price domain and extends by
    whole bins when samples exceed it (tick rounding at the band edges
    can push |x| slightly past the nominal limit).
    """
    half = width / 2.0
    lo = min(-REL_PRICE_LIMIT - half, float(xs.min()))
    hi = max(REL_PRICE_LIMIT + half, float(xs.max()))
    k_lo = math.floor(lo / width - 0.5)
    k_hi = math.ceil(hi / width - 0.5)
    return (np.arange(k_lo, k_hi + 2) - 0.5) * width


def estimate_pdf(samples, width: float = PDF_BIN_WIDTH,
                 edges: np.ndarray | None = None) -> PdfEstimate:
    """Normalized histogram density of relative-price samples."""
    xs = np.asarray(samples, dtype=float)
    if xs.size == 0:
        raise EmptySample("cannot estimate a density from zero samples")
    if edges is None:
        edges = _default_edges(xs, width)
    elif xs.min() < edges[0] or xs.max() > edges[-1]:
        raise ValueError("explicit edges do not cover the samples")
    counts, _ = np.histogram(xs, bins=edges)
    density = counts / (xs.size * np.diff(edges))
    atom_mass = float(np.count_nonzero(xs == 0.0)) / xs.size
    return PdfEstimate(edges, density, int(xs.size), atom_mass)


def fit_power_law(data, x_lo: float, x_hi: float,
                  bins_per_decade: int = FIT_BINS_PER_DECADE) -> PowerLawFit:
    """Fit log f = -(1 + alpha) log x + c by ordinary least squares.

    Raw samples are re-binned into logarithmically spaced bins inside
    [x_lo, x_hi]; a PdfEstimate is fitted on its own populated bins in
    the range.  Requires at least five populated bins.
    """
    if x_lo <= 0 or x_hi <= x_lo:
        raise InsufficientRange(f"invalid fit range [{x_lo}, {x_hi}]")
    if isinstance(data, PdfEstimate):
        centers = data.centers
        mask = (centers >= x_lo) & (centers <= x_hi) & (data.density > 0)
        centers = centers[mask]
        density = data.density[mask]
        n_samples = data.n
        if centers.size == 0:
            raise EmptyBins("no populated bins inside the fit range")
    else:
        xs = np.asarray(data, dtype=float)
        n_bins = math.ceil(bins_per_decade * math.log10(x_hi / x_lo))
        if n_bins < 5:
            raise InsufficientRange(
                f"range [{x_lo}, {x_hi}] yields only {n_bins} bins")
        edges = np.logspace(math.log10(x_lo), math.log10(x_hi), n_bins + 1)
        counts, _ = np.histogram(xs, bins=edges)
        if counts.sum() == 0:
            raise EmptyBins("no samples inside the fit range")
        density = counts / (xs.size * np.diff(edges))
        centers = np.sqrt(edges[:-1] * edges[1:])
        populated = counts > 0
        centers = centers[populated]
        density = density[populated]
        n_samples = int(xs.size)
    if centers.size < 5:
        raise InsufficientRange(
            f"only {centers.size} populated bins, need at least 5")
    log_x = np.log10(centers)
    log_f = np.log10(density)
    (slope, intercept), cov = np.polyfit(log_x, log_f, 1, cov=True)
    predicted = slope * log_x + intercept
    ss_res = float(np.sum((log_f - predicted) ** 2))
    ss_tot = float(np.sum((log_f - log_f.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(
        alpha=float(-slope - 1.0),
        stderr=float(math.sqrt(cov[0, 0])),
        x_lo=x_lo,
        x_hi=x_hi,
        r2=r2,
        n_bins=int(centers.size),
        n_samples=n_samples,
        centers=centers,
        density=density,
    )


def spread(bid_ticks: int | None, ask_ticks: int | None) -> float:
    """Bid-ask spread as the difference of log prices, ln(ask / bid)."""
    if bid_ticks is None or ask_ticks is None:
        raise MissingQuote("spread needs both best quotes")
    return log_price(ask_ticks) - log_price(bid_ticks)


def mid_price(bid_ticks: int, ask_ticks: int) -> float:
    """Mid-price as the mean of the log best quotes."""
    return (log_price(ask_ticks) + log_price(bid_ticks)) / 2.0


def volatility(mids, window: int = VOL_WINDOW) -> np.ndarray:
    """Local average of absolute mid-price returns.

    Returns v(t) for t = window .. len(mids) - 1, each averaging the
    last `window` absolute one-step changes of the log mid-price.
    """
    series = np.asarray(mids, dtype=float)
    if series.size < window + 1:
        raise InsufficientHistory(
            f"need at least {window + 1} mid-prices, got {series.size}")
    diffs = np.abs(np.diff(series))
    return np.convolve(diffs, np.ones(window), mode="valid") / window


_CONTEXT_GETTERS = {
    "spread": lambda s: s.spread_before,
    "volatility": lambda s: s.vol_before,
}


def group_by_context(samples, key: str, groups: int = 4) -> list[list]:
    """Split samples into equal-count groups of increasing context value.

    The sort is stable, so samples with equal context keep input order;
    any remainder goes to the earliest groups, so sizes differ by at
    most one.
    """
    getter = _CONTEXT_GETTERS.get(key)
    if getter is None:
        raise ValueError(f"unknown context key {key!r}")
    samples = list(samples)
    values = []
    for sample in samples:
        value = getter(sample)
        if value is None:
            raise MissingContext(f"sample at ts {sample.ts} lacks {key} context")
        values.append(value)
    order = sorted(range(len(samples)), key=values.__getitem__)
    base, extra = divmod(len(samples), groups)
    out = []
    start = 0
    for g in range(groups):
        size = base + (1 if g < extra else 0)
        out.append([samples[i] for i in order[start:start + size]])
        start += size
    return out


def conditional_pdfs(samples, key: str, groups: int = 4,
                     width: float = PDF_BIN_WIDTH) -> list[PdfEstimate]:
    """Per-group densities f(x | context quartile) over shared bins."""
    parts = group_by_context(samples, key, groups)
    pooled = np.asarray([s.x for s in samples], dtype=float)
    if pooled.size == 0:
        raise EmptySample("no samples to condition")
    edges = _default_edges(pooled, width)
    return [estimate_pdf([s.x for s in part], edges=edges) for part in parts]


def two_sample_ks(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic on raw samples."""
    xa = np.sort(np.asarray(a, dtype=float))
    xb = np.sort(np.asarray(b, dtype=float))
    if xa.size == 0 or xb.size == 0:
        raise EmptySample("KS statistic needs two nonempty samples")
    pooled = np.concatenate([xa, xb])
    cdf_a = np.searchsorted(xa, pooled, side="right") / xa.size
    cdf_b = np.searchsorted(xb, pooled, side="right") / xb.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def ks_critical(n1: int, n2: int, alpha: float = 0.01) -> float:
    """Asymptotic two-sample KS critical value at significance alpha."""
    c = math.sqrt(-0.5 * math.log(alpha / 2.0))
    return c * math.sqrt((n1 + n2) / (n1 * n2))
