"""SVG plot emission for run reports."""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError
from .harness import PLOT_METRICS, RunReport

__all__ = ["emit_plot"]


def emit_plot(report: RunReport, metric: str, out_path: str) -> str:
    """Write a self-contained SVG line/scatter plot of one report metric.

    Scaling-law metrics are drawn on log-log axes with the fitted power law
    and, where registered, a reference slope guide line.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    kind = report.config.get("kind")
    metrics = PLOT_METRICS.get(kind, {})
    if metric not in metrics:
        raise ArgumentError(
            f"unknown metric {metric!r} for kind {kind!r}; "
            f"available: {sorted(metrics)}")
    xcol, ycol, loglog, guide = metrics[metric]
    pts = [(row[xcol], row[ycol]) for row in report.rows
           if row.get(xcol) is not None and row.get(ycol) is not None]
    if not pts:
        raise ArgumentError(f"report has no rows with columns {xcol!r}/{ycol!r}")
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.plot(x, y, "o-", label=ycol)
    if loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
        fit_key = next((k for k, v in report.fits.items()
                        if isinstance(v, dict) and "slope" in v
                        and ycol.split("_")[0] in k), None)
        if fit_key is not None:
            f = report.fits[fit_key]
            xs = np.array([x.min(), x.max()])
            ax.plot(xs, np.exp(f["intercept"]) * xs ** f["slope"], "--",
                    label=f"fit slope {f['slope']:.3f}")
        if guide is not None:
            xs = np.array([x.min(), x.max()])
            ref = y[0] * (xs / x[0]) ** guide
            ax.plot(xs, ref, ":", color="gray", label=f"slope {guide:g} guide")
    ax.set_xlabel(xcol)
    ax.set_ylabel(ycol)
    ax.set_title(f"{kind}: {metric}")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return out_path
