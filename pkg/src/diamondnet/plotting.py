"""Optional PNG rendering of sweep results (needs matplotlib)."""
from __future__ import annotations

import numpy as np

from .model import to_db
from .report import _natural_coords
from .config import _hz_name


def render(result, path: str, title: str = "", fields=("R",)) -> None:
    """Line plot for one-axis sweeps, filled contour for two-axis sweeps."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    coords = _natural_coords(result)
    names = [_hz_name(ax.parameter) for ax in result.axes]
    fig, ax = plt.subplots(figsize=(6, 4))
    if len(result.axes) == 1:
        for name in fields:
            vals = np.array([getattr(r, name) for r in result.records], dtype=float)
            ax.plot(coords[:, 0], to_db(vals), label=name)
        ax.set_xlabel(names[0])
        ax.set_ylabel("dB (10 log10)")
        if len(fields) > 1:
            ax.legend()
    else:
        x, y = (np.unique(coords[:, j]) for j in (0, 1))
        z = result.grid(fields[0])
        cs = ax.contourf(y, x, z, levels=30)
        fig.colorbar(cs, ax=ax, label=fields[0])
        ax.set_xlabel(names[1])
        ax.set_ylabel(names[0])
        for j, a in zip((1, 0), (ax.set_xscale, ax.set_yscale)):
            if result.axes[j].scale == "log":
                a("log")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
