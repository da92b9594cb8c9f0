"""Local-cost matrix with the EMCD alignment path drawn over it."""

import logging

from pathlib import Path

from typing import Union

import matplotlib

matplotlib.use("Agg")

import numpy as np

from matplotlib.figure import Figure

from metrics.emcd import EmcdReport, Move

logger = logging.getLogger(__name__)

_COLORS = {Move.DIAGONAL: "#06D6A0", Move.VERTICAL: "#EF476F", Move.HORIZONTAL: "#FFD166"}


def plot_alignment(cost: np.ndarray, report: EmcdReport, path: Union[str, Path], title: str = "") -> None:

    fig = Figure(figsize=(6, 5), dpi=100)

    ax = fig.add_subplot(1, 1, 1)

    im = ax.imshow(cost.T, origin="lower", aspect="auto", cmap="viridis", interpolation="nearest")

    fig.colorbar(im, ax=ax, label="MCD")

    steps = np.array(report.path)

    ax.plot(steps[:, 0], steps[:, 1], color="white", lw=1)

    for move, color in _COLORS.items():
        mask = np.array([m is move for m in report.moves])

        if mask.any():
            ax.scatter(steps[mask, 0], steps[mask, 1], s=12, color=color, label=move.value, zorder=3)

    ax.set_xlabel("synthesized frame i")

    ax.set_ylabel("ground-truth frame j")

    raw = f"raw {report.emcd_raw:.4f}"

    norm = "" if report.emcd_normalized is None else f", norm {report.emcd_normalized:.4f}"

    ax.set_title(title or f"EMCD {raw}{norm}")

    ax.legend(loc="upper left", fontsize="small")

    fig.tight_layout()

    fig.savefig(str(path))

    logger.info("wrote alignment figure %s", path)
