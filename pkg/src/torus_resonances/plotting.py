"""Fixed-style SVG figures: resonance scatter and correlation decay."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import numpy as np  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

STYLE = {
    "svg.hashsalt": "torus-resonances",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "axes.linewidth": 0.8,
}
LIMIT = 1.1


def _complex_label(z: complex) -> str:
    r, t = abs(z), math.atan2(z.imag, z.real) / math.pi
    return f"{r:.4g}·e^(i·{t:.4g}π)"


def _save(fig, path):
    with matplotlib.rc_context(STYLE):
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})


def spectrum_figure(computed, theoretical=None, params=None, title=None) -> Figure:
    """Unit circle, computed values as filled dots, theoretical as open circles."""
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(5, 5))
        ax = fig.add_axes([0.12, 0.1, 0.8, 0.8])
        t = np.linspace(0, 2 * np.pi, 721)
        ax.plot(np.cos(t), np.sin(t), color="0.6", lw=0.8, zorder=1)
        ax.axhline(0, color="0.85", lw=0.5, zorder=0)
        ax.axvline(0, color="0.85", lw=0.5, zorder=0)
        if theoretical is not None:
            tv = np.array(theoretical.values(), dtype=complex)
            ax.scatter(tv.real, tv.imag, s=36, facecolors="none", edgecolors="tab:red", linewidths=0.9,
                       label="closed form", zorder=2)
        cv = np.array(computed.values(), dtype=complex)
        ax.scatter(cv.real, cv.imag, s=9, color="black", label="computed", zorder=3)
        if params:
            for name, z in params.items():
                ax.plot([], [], " ", label=f"{name} = {_complex_label(complex(z))}")
        ax.set_xlim(-LIMIT, LIMIT)
        ax.set_ylim(-LIMIT, LIMIT)
        ax.set_aspect("equal")
        ax.set_xlabel("Re")
        ax.set_ylabel("Im")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right", fontsize=7, frameon=False)
    return fig


def write_spectrum_svg(path, computed, theoretical=None, params=None, title=None):
    _save(spectrum_figure(computed, theoretical, params, title), path)


def decay_figure(fit, reference_rate=None) -> Figure:
    """``log10 |corr(m)|`` against ``m`` with the fitted line over its window."""
    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(5, 3.5))
        ax = fig.add_axes([0.14, 0.14, 0.8, 0.78])
        ms = np.array([m for m, _ in fit.rates])
        vals = np.array([abs(v) for _, v in fit.rates])
        keep = vals > 0
        ax.plot(ms[keep], np.log10(vals[keep]), "o", color="black", ms=3, label="|corr(m)|")
        if math.isfinite(fit.fitted_log_slope):
            lo, hi = fit.window
            sel = (ms >= lo) & (ms <= hi) & keep
            x = ms[sel]
            c = np.mean(np.log(vals[sel]) - fit.fitted_log_slope * x)
            ax.plot(x, (c + fit.fitted_log_slope * x) / math.log(10), color="tab:blue",
                    label=f"fit rate {fit.fitted_rate:.4g}")
        if reference_rate:
            ax.plot([], [], " ", label=f"reference {reference_rate:.4g}")
        ax.set_xlabel("m")
        ax.set_ylabel("log10 |corr|")
        ax.legend(fontsize=7, frameon=False)
    return fig


def write_decay_svg(path, fit, reference_rate=None):
    _save(decay_figure(fit, reference_rate), path)
