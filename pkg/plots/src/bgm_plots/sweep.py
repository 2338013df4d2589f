"""NLL-versus-rounds lines for the weighting-heuristic sweep."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

DPI = 150
COLORS = {"unity": "tab:green", "uniform": "tab:red", "decay": "tab:cyan"}


def collect_series(metrics_paths) -> dict:
    """Merge sweep metrics files into {heuristic: {t: {train: [..], test: [..]}}},
    pooling values across seeds and files."""
    series = {}
    for path in metrics_paths:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        for entry in doc.get("per_seed", []):
            if entry.get("status") != "ok":
                continue
            for point in entry["result"].get("series", []):
                h = point["heuristic"]
                t = int(point["t"])
                slot = series.setdefault(h, {}).setdefault(
                    t, {"train": [], "test": []}
                )
                slot["train"].append(point["train_nll"])
                slot["test"].append(point["test_nll"])
    return series


def plot_heuristic_sweep(metrics_paths, out_image_path, heuristics=None) -> list:
    """Render the sweep; returns the list of requested-but-missing series."""
    series = collect_series(metrics_paths)
    wanted = heuristics or sorted(series)
    missing = [h for h in wanted if h not in series]
    for h in missing:
        print(f"bgm-plot-sweep: no data for heuristic {h!r}, skipped",
              file=sys.stderr)

    fig, ax = plt.subplots(figsize=(6, 4))
    base_marked = False
    for h in wanted:
        if h not in series:
            continue
        ts = sorted(series[h])
        train = [float(np.mean(series[h][t]["train"])) for t in ts]
        test = [float(np.mean(series[h][t]["test"])) for t in ts]
        color = COLORS.get(h)
        ax.plot(ts, train, "--", color=color, linewidth=1.2,
                label=f"{h} (train)")
        ax.plot(ts, test, "-", color=color, linewidth=2.4, label=f"{h} (test)")
        if not base_marked and 0 in series[h]:
            ax.plot(0, float(np.mean(series[h][0]["test"])), "kx",
                    markersize=10, markeredgewidth=2.5, label="base model")
            base_marked = True
    ax.set_xlabel("boosting rounds")
    ax.set_ylabel("NLL (nats)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_image_path, dpi=DPI)
    plt.close(fig)
    return missing


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Plot train/test NLL against boosting rounds per heuristic."
    )
    parser.add_argument("metrics", nargs="+", help="metrics.json files to merge")
    parser.add_argument("--out", required=True, help="output image path (PNG)")
    parser.add_argument(
        "--heuristics",
        default=None,
        help="comma-separated subset to plot (default: all found)",
    )
    args = parser.parse_args(argv)
    wanted = args.heuristics.split(",") if args.heuristics else None
    try:
        plot_heuristic_sweep(args.metrics, args.out, wanted)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"bgm-plot-sweep: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
