import json
import logging
from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from domain.repositories.interfaces import IPlotRenderer  # noqa: E402

logger = logging.getLogger(__name__)

# fixed ids and no timestamp so identical data gives identical files
plt.rcParams["svg.hashsalt"] = "catflow"


class SvgPlotRenderer(IPlotRenderer):
    def _save(self, fig, path: str, data: Dict) -> str:
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None, "Description": json.dumps(data)})
        plt.close(fig)
        logger.debug(f"Wrote {path}")
        return path

    def line_plot(self, path: str, x: Sequence[float], series: Dict[str, Sequence[float]], xlabel: str,
                  ylabel: str, title: str, log_x: bool = False, log_y: bool = False) -> str:
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, values in series.items():
            ax.plot(list(x), list(values), marker="o" if len(x) < 20 else None, label=label)
        ax.set_xscale("log" if log_x else "linear")
        ax.set_yscale("log" if log_y else "linear")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        if len(series) > 1:
            ax.legend()
        data = {"x": [float(v) for v in x], **{k: [float(v) for v in vals] for k, vals in series.items()}}
        return self._save(fig, path, data)

    def bar_plot(self, path: str, values: Sequence[float], xlabel: str, ylabel: str, title: str,
                 log_y: bool = False, threshold: Optional[float] = None) -> str:
        fig, ax = plt.subplots(figsize=(6, 4))
        values = [float(v) for v in values]
        floor = 1e-18 if log_y else 0.0
        ax.bar(range(len(values)), [max(v, floor) for v in values])
        if threshold is not None:
            ax.axhline(threshold, color="red", linestyle="--", label="rank threshold")
            ax.legend()
        ax.set_yscale("log" if log_y else "linear")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        return self._save(fig, path, {"values": values, "threshold": threshold})
