"""
Delta histograms of an experiment summary: a text bar chart, a matplotlib SVG,
or an OpenCV-drawn PNG
"""

import io
from dataclasses import dataclass

import cv2
import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from src.experiment_module import ExperimentSummary  # noqa: E402

FORMATS = ("text", "svg", "png")


@dataclass
class HistogramParameters:
    """Layout parameters shared by the renderers"""
    bar_width: int = 50
    canvas_width: int = 640
    canvas_height: int = 400
    margin: int = 50
    title: str = "Discrepancy between d_T and the matching bound"

    @property
    def plot_width(self) -> int:
        return self.canvas_width - 2 * self.margin

    @property
    def plot_height(self) -> int:
        return self.canvas_height - 2 * self.margin


def _buckets(summary: ExperimentSummary) -> tuple[list[int], list[int]]:
    if summary.accepted < 1:
        raise ValueError("Cannot render a histogram of an empty run")
    buckets = sorted(summary.delta_histogram)
    return buckets, [summary.delta_histogram[b] for b in buckets]


class TextHistogramRenderer:
    """One line per -delta bucket with a bar proportional to its count"""

    def __init__(self, params: HistogramParameters):
        self.params = params

    def render(self, summary: ExperimentSummary) -> bytes:
        buckets, counts = _buckets(summary)
        peak = max(counts)
        label_width = max(len(str(b)) for b in buckets)
        lines = [f"-delta  count  (accepted={summary.accepted}, tight={summary.tight_fraction:.3f})"]
        for b, c in zip(buckets, counts):
            bar = "#" * round(c * self.params.bar_width / peak)
            lines.append(f"{b:>{label_width}} {c:>6} {bar}")
        return ("\n".join(lines) + "\n").encode("utf-8")


class SvgHistogramRenderer:
    """Standalone SVG bar chart drawn with matplotlib"""

    def __init__(self, params: HistogramParameters):
        self.params = params

    def render(self, summary: ExperimentSummary) -> bytes:
        buckets, counts = _buckets(summary)
        with plt.rc_context({"svg.hashsalt": "xratio", "svg.fonttype": "none"}):
            fig, ax = plt.subplots(figsize=(self.params.canvas_width / 100, self.params.canvas_height / 100))
            try:
                bars = ax.bar([str(b) for b in buckets], counts, color="0.35")
                ax.bar_label(bars, labels=[str(c) for c in counts])
                ax.set_xlabel("-delta (matching bound minus degree)")
                ax.set_ylabel("count")
                ax.set_title(self.params.title)
                buffer = io.BytesIO()
                fig.savefig(buffer, format="svg", metadata={"Date": None})
            finally:
                plt.close(fig)
        return buffer.getvalue()


class OpenCVHistogramRenderer:
    """PNG bar chart drawn on a blank canvas with OpenCV"""

    def __init__(self, params: HistogramParameters):
        self.params = params

    def create_canvas(self) -> np.ndarray:
        """Create blank white canvas"""
        return np.ones((self.params.canvas_height, self.params.canvas_width, 3), dtype=np.uint8) * 255

    def draw(self, summary: ExperimentSummary) -> np.ndarray:
        buckets, counts = _buckets(summary)
        canvas = self.create_canvas()
        m = self.params.margin
        base_y = self.params.canvas_height - m
        slot = self.params.plot_width / len(buckets)
        peak = max(counts)

        # Axis
        cv2.line(canvas, (m, base_y), (self.params.canvas_width - m, base_y), (0, 0, 0), 1)

        for i, (b, c) in enumerate(zip(buckets, counts)):
            x1 = int(m + i * slot + slot * 0.15)
            x2 = int(m + (i + 1) * slot - slot * 0.15)
            top = int(base_y - c * self.params.plot_height / peak)
            cv2.rectangle(canvas, (x1, top), (x2, base_y), (90, 90, 90), -1)
            cv2.putText(canvas, str(c), (x1, max(top - 6, 12)),
                        cv2.FONT_HERSHEY_SIMPLEX, 0.4, (0, 0, 0), 1)
            cv2.putText(canvas, str(b), (x1, base_y + 16),
                        cv2.FONT_HERSHEY_SIMPLEX, 0.4, (0, 0, 0), 1)

        cv2.putText(canvas, self.params.title, (m, m // 2),
                    cv2.FONT_HERSHEY_SIMPLEX, 0.45, (0, 0, 0), 1)
        return canvas

    def render(self, summary: ExperimentSummary) -> bytes:
        ok, encoded = cv2.imencode(".png", self.draw(summary))
        if not ok:
            raise RuntimeError("OpenCV failed to encode the histogram")
        return encoded.tobytes()


def render_histogram(summary: ExperimentSummary, format: str = "text",
                     params: HistogramParameters | None = None) -> bytes:
    """
    Render the -delta histogram of a run.

    Args:
        summary: Experiment summary with at least one accepted sample
        format: 'text', 'svg' or 'png'
        params: Layout parameters (uses defaults if None)

    Returns:
        Rendered bytes
    """
    if params is None:
        params = HistogramParameters()
    renderers = {
        "text": TextHistogramRenderer,
        "svg": SvgHistogramRenderer,
        "png": OpenCVHistogramRenderer,
    }
    if format not in renderers:
        raise ValueError(f"Unknown histogram format {format!r}; expected one of {FORMATS}")
    return renderers[format](params).render(summary)
