"""Optional figures for Monte Carlo reports (PNG/PDF/SVG via matplotlib).

Figures are written next to the JSON and CSV outputs and never replace them.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from matplotlib import rc_context
from matplotlib.figure import Figure

from .experiment import CltReport, std_normal_cdf

STYLE = {
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def _figure(width: float = 6.0, height: float | None = None) -> Figure:
    if height is None:
        height = width * (math.sqrt(5) - 1) / 2
    return Figure(figsize=(width, height), layout="constrained")


def plot_ecdf(report: CltReport, path) -> Path:
    """ECDF of the normalised counts for each size, against Phi."""
    with rc_context(STYLE):
        fig = _figure()
        ax = fig.add_subplot()
        lo = min(float(s.normalized.min()) for s in report.sizes)
        hi = max(float(s.normalized.max()) for s in report.sizes)
        lo, hi = min(lo, -3.5), max(hi, 3.5)
        for s in report.sizes:
            x = np.sort(s.normalized)
            y = np.arange(1, x.size + 1) / x.size
            ax.step(x, y, where="post", lw=1.0, label=f"n={s.n}  d={s.d_k:.3f}")
        grid = np.linspace(lo, hi, 400)
        ax.plot(grid, std_normal_cdf(grid), "k--", lw=1.2, label="standard normal")
        ax.set_xlim(lo, hi)
        ax.set_xlabel("normalised triangle count")
        ax.set_ylabel("cumulative probability")
        ax.legend(fontsize=8, loc="upper left")
        path = Path(path)
        fig.savefig(path)
    return path


def plot_rate(report: CltReport, path) -> Path:
    """log d_K against log n with the fitted line and the -eta reference."""
    with rc_context(STYLE):
        n = np.array([s.n for s in report.sizes], dtype=np.float64)
        d = np.array([s.d_k for s in report.sizes], dtype=np.float64)
        fig = _figure()
        ax = fig.add_subplot()
        ax.loglog(n, d, "o", label="empirical distance")
        if report.slope is not None:
            x0, y0 = math.exp(np.mean(np.log(n))), math.exp(np.mean(np.log(d)))
            ax.loglog(n, y0 * (n / x0) ** report.slope, "-",
                      label=f"fit slope {report.slope:.3f} ± {report.slope_stderr:.3f}")
            if report.eta is not None:
                ax.loglog(n, y0 * (n / x0) ** (-report.eta), ":",
                          label=f"reference slope {-report.eta:.3f}")
        ax.axhline(report.noise_floor, color="grey", lw=0.8, ls="--", label="1/sqrt(R)")
        ax.set_xlabel("n")
        ax.set_ylabel("Kolmogorov distance")
        ax.legend(fontsize=8)
        path = Path(path)
        fig.savefig(path)
    return path
