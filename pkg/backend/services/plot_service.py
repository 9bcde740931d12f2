import io
from pathlib import Path
from typing import Optional, Union

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from loguru import logger

from services.stats_service import goe_surmise, poisson_spacing
from utils.error_handler import SchemaError
from utils.io_utils import OTOC_COLUMNS, SPACING_COLUMNS, SWEEP_COLUMNS, read_csv, write_text

SVG_RC = {
    "svg.hashsalt": "ptkr",
    "svg.fonttype": "path",
    "path.simplify": False,
}


class PlotService:
    """Static SVG figures: phase-diagram heatmaps, OTOC curves, spacing histograms"""

    def render(self, kind: str, inputs, field: str = "clsr") -> str:
        inputs = [inputs] if isinstance(inputs, (str, Path)) else list(inputs)
        if not inputs:
            raise SchemaError("plot needs at least one input file")
        with plt.rc_context(SVG_RC):
            if kind == "heatmap":
                figure = self.heatmap(read_csv(inputs[0], SWEEP_COLUMNS), field)
            elif kind == "otoc-lines":
                figure = self.otoc_lines({Path(p).stem: read_csv(p, OTOC_COLUMNS) for p in inputs})
            elif kind == "histogram":
                figure = self.histogram(read_csv(inputs[0], SPACING_COLUMNS[:1])["spacing"].to_numpy())
            else:
                raise SchemaError(f"unknown plot kind '{kind}'; choose heatmap, otoc-lines or histogram")
            return self._to_svg(figure)

    def _to_svg(self, figure) -> str:
        buffer = io.StringIO()
        figure.savefig(buffer, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(figure)
        return buffer.getvalue()

    def heatmap(self, frame: pd.DataFrame, field: str = "clsr"):
        if field not in ("clsr", "alpha", "neg_cos"):
            raise SchemaError(f"heatmap field must be clsr, alpha or neg_cos, got '{field}'")
        frame = frame.dropna(subset=[field])
        if frame.empty:
            raise SchemaError(f"no {field} values to plot")
        k_values = np.sort(frame["K"].unique())
        lam_values = np.sort(frame["lambda"].unique())
        grid = np.full((lam_values.size, k_values.size), np.nan)
        for _, row in frame.iterrows():
            grid[np.searchsorted(lam_values, row["lambda"]), np.searchsorted(k_values, row["K"])] = row[field]

        # lambda = 0 has no place on a log axis; it is drawn one decade below the smallest positive value
        positive = lam_values[lam_values > 0]
        floor = positive.min() / 10.0 if positive.size else 1e-6
        lam_axis = np.where(lam_values > 0, lam_values, floor)

        figure, axes = plt.subplots(figsize=(6, 4.5))
        mesh = axes.pcolormesh(k_values, lam_axis, grid, shading="nearest", cmap="viridis")
        axes.set_yscale("log")
        axes.set_xlabel("K")
        axes.set_ylabel("lambda")
        figure.colorbar(mesh, ax=axes, label=field)
        logger.debug(f"Heatmap of {field}: {k_values.size} x {lam_values.size} cells")
        return figure

    def otoc_lines(self, frames: dict):
        figure, axes = plt.subplots(figsize=(6, 4.5))
        for label, frame in frames.items():
            column = "c_norm" if frame["c_norm"].notna().any() else "c_raw"
            data = frame[(frame["t"] >= 1) & (frame[column] > 0)]
            axes.plot(data["t"], data[column], marker="o", markersize=3, label=f"{label} ({column})")
        axes.set_yscale("log")
        axes.set_xlabel("t")
        axes.set_ylabel("C(t)")
        axes.legend(fontsize="small")
        return figure

    def histogram(self, spacings: np.ndarray, bins: int = 50):
        spacings = spacings[np.isfinite(spacings)]
        if spacings.size == 0:
            raise SchemaError("no spacings to plot")
        figure, axes = plt.subplots(figsize=(6, 4.5))
        axes.hist(spacings, bins=bins, density=True, histtype="stepfilled", alpha=0.5, label="unfolded spacings")
        s = np.linspace(0.0, max(4.0, float(spacings.max())), 400)
        axes.plot(s, goe_surmise(s), "k-", label="GOE surmise")
        axes.plot(s, poisson_spacing(s), "k--", label="Poisson")
        axes.set_xlabel("s")
        axes.set_ylabel("P(s)")
        axes.legend(fontsize="small")
        return figure

    def write(self, svg: str, path: Optional[Union[str, Path]]) -> None:
        write_text(svg, path)
