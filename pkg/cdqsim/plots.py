"""Plotly figures for evolution curves, sweeps and readout histograms."""

import logging
from pathlib import Path
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np
import plotly.graph_objects as go

from cdqsim.evolution import EvolutionResult
from cdqsim.noise import MitigationReport

logger = logging.getLogger(__name__)

_LAYOUT = dict(
    plot_bgcolor="white",
    legend=dict(orientation="h", yanchor="bottom", y=1.02, xanchor="center", x=0.5),
    margin=dict(t=40, l=60, r=20, b=50),
    height=400,
)


def evolution_figure(results: Sequence[EvolutionResult], title: str = "") -> go.Figure:
    """P_gs(t) per method."""
    fig = go.Figure()
    for result in results:
        fig.add_trace(
            go.Scatter(
                x=[r.t for r in result.records],
                y=[r.p_gs for r in result.records],
                mode="lines+markers",
                name=result.method,
                hovertemplate="t: %{x}<br>P_gs: %{y:.4f}<extra></extra>",
            )
        )
    fig.update_layout(
        title=title or None,
        xaxis=dict(title="t", gridcolor="#e0e0e0"),
        yaxis=dict(title="P_gs", range=[0, 1.02], gridcolor="#e0e0e0"),
        **_LAYOUT,
    )
    return fig


def sweep_figure(
    curves: Mapping[str, Sequence[Tuple[float, float]]], axis: str, title: str = ""
) -> go.Figure:
    """One line per method over the sweep axis."""
    fig = go.Figure()
    for method, points in curves.items():
        xs, ys = zip(*points) if points else ((), ())
        fig.add_trace(go.Scatter(x=list(xs), y=list(ys), mode="lines+markers", name=method))
    fig.update_layout(
        title=title or None,
        xaxis=dict(title=axis, gridcolor="#e0e0e0"),
        yaxis=dict(title="P_gs", range=[0, 1.02], gridcolor="#e0e0e0"),
        **_LAYOUT,
    )
    return fig


def histogram_figure(report: MitigationReport) -> go.Figure:
    n = report.histogram.n_qubits
    labels = [format(i, f"0{n}b") for i in range(1 << n)]
    series: Dict[str, np.ndarray] = {
        "actual": report.actual,
        "noisy": report.noisy,
        "mitigated": report.mitigated,
    }
    fig = go.Figure()
    for name, values in series.items():
        fig.add_trace(go.Bar(x=labels, y=list(values), name=name))
    fig.update_layout(
        barmode="group",
        xaxis=dict(title="bitstring"),
        yaxis=dict(title="probability", gridcolor="#e0e0e0"),
        **_LAYOUT,
    )
    return fig


def save_figure(fig: go.Figure, path: Path) -> Path:
    """Write SVG through kaleido; fall back to standalone HTML."""
    path = Path(path).with_suffix(".svg")
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.write_image(str(path), format="svg")
        return path
    except Exception as e:
        fallback = path.with_suffix(".html")
        logger.warning(f"Static SVG export unavailable ({e}); writing {fallback.name}")
        fig.write_html(str(fallback), include_plotlyjs="cdn")
        return fallback
