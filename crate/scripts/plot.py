"""Figures from the experiment CSVs: python scripts/plot.py OUT_DIR"""
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def failure_rate(df, out):
    fig, ax = plt.subplots()
    for col, label in [("direct", "direct"), ("single_hop", "single-hop"), ("multi_hop", "multi-hop")]:
        ax.plot(df.transit_routes, df[col], marker="o", label=label)
    ax.set_xlabel("transit routes")
    ax.set_ylabel("failure rate")
    ax.legend()
    fig.savefig(out / "failure_rate.png", dpi=150)


def capacity(df, out):
    fig, ax = plt.subplots()
    for w, g in df.groupby("max_response_time"):
        ax.plot(g.capacity, g.mean_subtask_time, marker="o", label=f"max response {w:g} s")
    ax.set_xlabel("interchange capacity")
    ax.set_ylabel("mean subtask time (s)")
    ax.legend()
    fig.savefig(out / "capacity.png", dpi=150)


def vs_vehicle(df, out):
    df = df[df.max_flight_time < 1e5]
    fig, ax = plt.subplots()
    ax.plot(df.max_flight_time, df.multimodal_max, marker="o", label="UAV + rides")
    ax.plot(df.max_flight_time, df.vehicle_max, marker="s", label="vehicle only")
    ax.set_xlabel("max flight time (s)")
    ax.set_ylabel("max delivery time (s)")
    ax.legend()
    fig.savefig(out / "vs_vehicle.png", dpi=150)


def scaling(df, out):
    fig, ax = plt.subplots()
    for m, g in df.groupby("packages"):
        ax.loglog(g.depots, g.mean_secs, marker="o", label=f"M={m}")
    ax.set_xlabel("depots")
    ax.set_ylabel("allocation time (s)")
    ax.legend()
    fig.savefig(out / "scaling_allocation.png", dpi=150)


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "out")
    for name, draw in [
        ("failure_rate", failure_rate),
        ("capacity", capacity),
        ("vs_vehicle", vs_vehicle),
        ("scaling_allocation", scaling),
    ]:
        path = out / f"{name}.csv"
        if path.exists():
            draw(pd.read_csv(path), out)
            print(f"wrote {out / (name + '.png')}")


if __name__ == "__main__":
    main()
