"""PNG figures of a recorded run (headless matplotlib)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .diagnostics import envelope_bounds  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "font.size": 9,
}


def _column(records, name):
    return np.array([getattr(r, name) for r in records], dtype=float)


def _has(values):
    return np.any(np.isfinite(values))


def plot_envelopes(records, n, H0_min, H0_max, A20_max, path):
    t = _column(records, "t")
    b = envelope_bounds(t, n, H0_min, H0_max, A20_max)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax1.fill_between(t, b["H_lower"], b["H_upper"], color="0.85", label="envelope")
    ax1.plot(t, _column(records, "H_min"), "b-", label="H min")
    ax1.plot(t, _column(records, "H_max"), "r--", label="H max")
    ax1.set_xlabel("t")
    ax1.set_ylabel("mean curvature")
    ax1.legend()
    ax2.fill_between(t, b["A2_lower"], b["A2_upper"], color="0.85", label="envelope")
    ax2.plot(t, _column(records, "A2_min"), "b-", label="|A|² min")
    ax2.plot(t, _column(records, "A2_max"), "r--", label="|A|² max")
    ax2.set_xlabel("t")
    ax2.set_ylabel("|A|²")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_monotonicity(records, path):
    t = _column(records, "t")
    F = _column(records, "F_n")
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax1.plot(t, F, "k-")
    ax1.set_xlabel("t")
    ax1.set_ylabel("∫ Hⁿ dμ")
    ax2.plot(t, _column(records, "D1"), "b-", label="D1 (gradient)")
    ax2.plot(t, _column(records, "D2"), "r--", label="D2 (trace-free)")
    ax2.set_xlabel("t")
    ax2.set_ylabel("dissipation")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_pinching(records, path):
    t = _column(records, "t")
    fig, ax = plt.subplots()
    ax.plot(t, _column(records, "eps"), "b-", label="ε (min)")
    ax.plot(t, _column(records, "beta"), "r--", label="β (max)")
    ax.set_xlabel("t")
    ax.set_ylabel("eigenvalues of h relative to Hg")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_constraints(records, path):
    t = _column(records, "t")
    fig, ax = plt.subplots()
    for name, style, label in (("normG2", "b-", "Gauss |G|²"), ("normC2", "r--", "Codazzi |C|²")):
        v = _column(records, name)
        pos = v > 0
        if np.any(pos):
            ax.semilogy(t[pos], v[pos], style, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("sup of squared residual")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_sectional(records, n, path):
    t = _column(records, "t")
    A2 = _column(records, "A2_max")
    fig, ax = plt.subplots()
    # rescaled by |A|^2_max so the blow-down target is a horizontal line
    ax.plot(t, _column(records, "sec_min") / A2, "b-", label="sec min / |A|²max")
    ax.plot(t, _column(records, "sec_max") / A2, "r--", label="sec max / |A|²max")
    ax.axhline(-1.0 / n, color="0.4", lw=0.8, ls=":", label="-1/n")
    ax.set_xlabel("t")
    ax.set_ylabel("rescaled sectional curvature")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_report(records, out_dir, n, constants) -> list[str]:
    """Write every figure the recorded columns support; returns file names."""
    out_dir = Path(out_dir)
    written = []
    if not records:
        return written
    with plt.rc_context(STYLE):
        if constants.get("H0_min", 0) > 0:
            plot_envelopes(records, n, constants["H0_min"], constants["H0_max"],
                           constants["A20_max"], out_dir / "envelopes.png")
            written.append("envelopes.png")
        if _has(_column(records, "F_n")):
            plot_monotonicity(records, out_dir / "monotonicity.png")
            written.append("monotonicity.png")
        if _has(_column(records, "eps")):
            plot_pinching(records, out_dir / "pinching.png")
            written.append("pinching.png")
        if _has(_column(records, "normG2")):
            plot_constraints(records, out_dir / "constraints.png")
            written.append("constraints.png")
        if _has(_column(records, "sec_min")) and np.all(_column(records, "A2_max") > 0):
            plot_sectional(records, n, out_dir / "sectional.png")
            written.append("sectional.png")
    return written
