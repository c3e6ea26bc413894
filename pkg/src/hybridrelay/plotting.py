"""Static figure rendering for the report path.

Figures are written next to the CSV they illustrate; nothing interactive.
matplotlib is imported lazily with the Agg backend so headless runs and
library users who never plot stay light.
"""

from __future__ import annotations

from pathlib import Path

__all__ = ["save_sweep_figure", "save_iso_figure"]

_PARAMETER_LABELS = {
    "rate.y_th_bps": "target rate (bit/s)",
    "geometry.r_sd_m": "source-destination distance (m)",
    "rf.tx_power_w": "RF transmit power (W)",
    "thz.tx_power_w": "THz transmit power (W)",
    "tx_power_w": "transmit power, both bands (W)",
    "geometry.density_thz_per_m2": "THz relay density (1/m^2)",
}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def save_sweep_figure(rows, spec, path: str | Path) -> Path:
    """Coverage vs. swept value: analytical lines, Monte Carlo error bars."""
    plt = _pyplot()
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    protocols = []
    for row in rows:
        if row.protocol not in protocols:
            protocols.append(row.protocol)
    for protocol in protocols:
        mine = [r for r in rows if r.protocol is protocol]
        xs = [r.swept_value for r in mine]
        color = None
        if any(r.analytical is not None for r in mine):
            (line,) = ax.plot(
                xs,
                [r.analytical for r in mine],
                label=f"{protocol.value} (analytical)",
                linewidth=1.4,
            )
            color = line.get_color()
        ax.errorbar(
            xs,
            [r.mc_value for r in mine],
            yerr=[r.mc_half_width for r in mine],
            fmt="o",
            markersize=3.5,
            capsize=2,
            linestyle="none",
            color=color,
            label=f"{protocol.value} (MC)" if color is None else None,
        )
    ax.set_xlabel(_PARAMETER_LABELS.get(spec.parameter, spec.parameter))
    ax.set_ylabel("coverage probability")
    ax.set_ylim(-0.02, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_iso_figure(rows, spec, path: str | Path) -> Path:
    """Iso-coverage contour: RF density against THz density."""
    plt = _pyplot()
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    xs = [r.density_thz_per_m2 for r in rows]
    ys = [r.density_rf_per_m2 for r in rows]
    ax.plot(xs, ys, "o-", linewidth=1.4, markersize=4)
    ax.set_xlabel("THz relay density (1/m^2)")
    ax.set_ylabel("RF relay density (1/m^2)")
    ax.set_title(f"iso-coverage contour at {spec.iso_target:g}")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
