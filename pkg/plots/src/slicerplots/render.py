"""Render figures from slicesim run artifacts (CSV/JSON only; no
simulator imports)."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

KNOWN_SCHEMAS = {"slicesim-csv-1"}
KINDS = ("convergence", "comparison", "sweep", "personalization")


class PlotError(ValueError):
    """Unreadable, empty or schema-incompatible input."""


@dataclass
class PlotSpec:
    kind: str
    inputs: list[Path]
    out: Path
    window: int = field(default=200)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PlotError(f"unknown figure kind {self.kind!r}")
        if self.window < 1:
            raise PlotError("smoothing window must be >= 1")
        self.inputs = [Path(p) for p in self.inputs]
        self.out = Path(self.out)
        if not self.inputs:
            raise PlotError("at least one input file required")
        for p in self.inputs:
            if not p.exists():
                raise PlotError(f"input file not found: {p}")


def moving_average(x, window: int):
    """Trailing moving average; window 1 is the identity."""
    x = np.asarray(x, dtype=float)
    if window <= 1:
        return x
    out = np.empty_like(x)
    c = np.cumsum(np.insert(x, 0, 0.0))
    for i in range(len(x)):
        lo = max(0, i - window + 1)
        out[i] = (c[i + 1] - c[lo]) / (i + 1 - lo)
    return out


def read_csv_columns(path: Path) -> dict[str, list[str]]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or len(rows) < 2:
        raise PlotError(f"{path}: empty metrics file")
    header, data = rows[0], rows[1:]
    if "schema_version" not in header:
        raise PlotError(f"{path}: no schema_version column")
    cols = {name: [r[i] for r in data] for i, name in enumerate(header)}
    schema = set(cols["schema_version"])
    if not schema <= KNOWN_SCHEMAS:
        raise PlotError(f"{path}: unknown schema {sorted(schema - KNOWN_SCHEMAS)}")
    return cols


def _new_figure(n_axes=1, height=3.2):
    fig, axes = plt.subplots(1, n_axes, figsize=(4.8 * n_axes, height))
    return fig, (axes if n_axes > 1 else [axes])


def _save(fig, out: Path):
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=120, metadata={"Software": None})
    plt.close(fig)


def render_convergence(spec: PlotSpec):
    fig, (ax_p, ax_r) = _new_figure(2)
    for path in spec.inputs:
        cols = read_csv_columns(path)
        slots = np.asarray(cols["slot"], dtype=float)
        label = path.parent.name or path.stem
        ax_p.plot(slots, moving_average(cols["p_sat"], spec.window), label=label)
        ax_r.plot(slots, moving_average(cols["reward"], spec.window), label=label)
    ax_p.set_xlabel("slot")
    ax_p.set_ylabel("p_sat (moving avg)")
    ax_p.set_ylim(-0.02, 1.02)
    ax_r.set_xlabel("slot")
    ax_r.set_ylabel("reward (moving avg)")
    ax_p.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, spec.out)


def render_comparison(spec: PlotSpec):
    cols = read_csv_columns(spec.inputs[0])
    policies = cols["policy"]
    fig, (ax_n, ax_p, ax_d) = _new_figure(3)
    x = np.arange(len(policies))
    ax_n.bar(x, np.asarray(cols["mean_prbs"], dtype=float))
    ax_n.set_ylabel("mean PRBs")
    ax_p.bar(x, np.asarray(cols["p_sat"], dtype=float))
    ax_p.set_ylabel("p_sat")
    ax_p.set_ylim(0, 1.05)
    ax_d.bar(x, np.asarray(cols["mean_delay_ms"], dtype=float))
    ax_d.set_ylabel("mean delay (ms)")
    for ax in (ax_n, ax_p, ax_d):
        ax.set_xticks(x)
        ax.set_xticklabels(policies, rotation=45, ha="right", fontsize=7)
    fig.tight_layout()
    _save(fig, spec.out)


def render_sweep(spec: PlotSpec):
    cols = read_csv_columns(spec.inputs[0])
    n = np.asarray(cols["n_prbs"], dtype=float)
    lln = np.asarray(cols["lln_reward"], dtype=float)
    shaped = np.asarray(cols["shaped_reward"], dtype=float)
    fig, (ax,) = _new_figure(1, height=3.6)
    ax.plot(n, lln, label="per-packet reward")
    ax.plot(n, shaped, label="shaped reward")
    for series, color in ((lln, "C0"), (shaped, "C1")):
        k = n[int(np.argmax(series))]
        ax.axvline(k, color=color, linestyle="--", linewidth=0.8)
        ax.plot([k], [series.max()], marker="o", color=color)
    ax.set_xlabel("n_prbs")
    ax.set_ylabel("stationary mean reward")
    ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, spec.out)


def render_personalization(spec: PlotSpec):
    path = spec.inputs[0]
    try:
        study = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise PlotError(f"{path}: invalid JSON: {e}") from e
    if not study or "methods" not in study:
        raise PlotError(f"{path}: not a personalization report")
    names = list(study["methods"]) + ["local"]
    means = [study["methods"][m]["mean"] for m in study["methods"]]
    means.append(study["local"]["mean"])
    # presentation-only positive bias so bars point up from zero
    shift = max(0.0, -min(means)) + 1.0
    fig, (ax,) = _new_figure(1, height=3.6)
    x = np.arange(len(names))
    ax.bar(x, np.asarray(means) + shift)
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel(f"mean eval reward + {shift:.2f}")
    fig.tight_layout()
    _save(fig, spec.out)


_RENDERERS = {
    "convergence": render_convergence,
    "comparison": render_comparison,
    "sweep": render_sweep,
    "personalization": render_personalization,
}


def render(spec: PlotSpec):
    """Render one figure; read-only on inputs, writes exactly spec.out."""
    _RENDERERS[spec.kind](spec)
    return spec.out
