"""Figures for a finished run, written as PNG files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import CostModel, plate_feasibility  # noqa: E402


def plot_bill_totals(report: dict, path: Path) -> Path:
    vehicles = report["vehicles"]
    idx = [v["index"] for v in vehicles]
    width = 0.4
    fig, ax = plt.subplots(figsize=(max(4, len(idx) * 0.6), 3.5))
    ax.bar([i - width / 2 for i in idx], [v["bill_total"] for v in vehicles], width, label="OBU log")
    ax.bar([i + width / 2 for i in idx], [v["cspa_total"] for v in vehicles], width, label="CSPA ledger")
    ax.set_xlabel("vehicle")
    ax.set_ylabel("bill total")
    ax.set_xticks(idx)
    top = max([v["bill_total"] for v in vehicles] + [v["cspa_total"] for v in vehicles] + [1])
    ax.set_ylim(0, top * 1.25)
    ax.legend(loc="upper right", ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_feasibility(report: dict, path: Path) -> Path:
    cfg = report["config"]
    lat = cfg["latencies"]
    model = CostModel(dsrc_ms=lat["dsrc_ms"], wired_ms=lat["wired_ms"])
    length, f = cfg["road"]["plate_length_m"], cfg["road"]["auth_zone_fraction"]
    speeds = [s / 2 for s in range(2, 201)]  # 1 .. 100 m/s
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(speeds, [f * length / s * 1e3 for s in speeds], "k--", label="auth budget")
    for protocol in ("DMA", "PHA"):
        times = [plate_feasibility(length, s, f, protocol, model).auth_time * 1e3 for s in speeds]
        ax.plot(speeds, times, label=f"{protocol} auth time")
    ax.set_xlabel("speed (m/s)")
    ax.set_ylabel("ms")
    ax.set_yscale("log")
    ax.set_title(f"{length:g} m plate, auth zone {f:g}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_figures(report: dict, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return [
        plot_bill_totals(report, out / "bill_totals.png"),
        plot_feasibility(report, out / "feasibility.png"),
    ]
