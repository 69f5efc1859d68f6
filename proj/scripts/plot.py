#!/usr/bin/env python3
"""Quick-look plots for pipeline outputs.

Usage:
  plot.py reference ref.csv [out.png]   altitude/airspeed/AoA/input profiles
  plot.py run run.csv [out.png]         closed-loop run vs time
  plot.py grid feasibility_map.csv [out.png]

Only needs numpy + matplotlib; everything it reads is produced by the CLI.
"""
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_csv(path):
    rows, meta = [], {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        k, v = tok.split("=", 1)
                        meta[k] = v
                continue
            rows.append(line.split(","))
    header, data = rows[0], rows[1:]
    cols = {name: i for i, name in enumerate(header)}
    return cols, data, meta


def fcol(cols, data, name):
    i = cols[name]
    return [float(r[i]) for r in data]


def plot_reference(path, out):
    cols, data, _ = read_csv(path)
    t = fcol(cols, data, "t")
    fig, axes = plt.subplots(4, 1, figsize=(8, 10), sharex=True)
    axes[0].plot(fcol(cols, data, "x"), [-z for z in fcol(cols, data, "z")])
    axes[0].set_xlabel("x [m]")
    axes[0].set_ylabel("altitude [m]")
    axes[1].plot(t, fcol(cols, data, "V_a"))
    axes[1].set_ylabel("V_a [m/s]")
    axes[2].plot(t, [a * 57.29577951308232 for a in fcol(cols, data, "alpha")])
    axes[2].set_ylabel("AoA [deg]")
    axes[3].plot(t, fcol(cols, data, "delta_e"), label="delta_e [rad]")
    axes[3].plot(t, fcol(cols, data, "delta_t"), label="delta_t")
    axes[3].set_ylabel("input")
    axes[3].set_xlabel("t [s]")
    axes[3].legend()
    fig.tight_layout()
    fig.savefig(out, dpi=140)


def plot_run(path, out):
    cols, data, _ = read_csv(path)
    t = fcol(cols, data, "t")
    fig, axes = plt.subplots(3, 1, figsize=(8, 8), sharex=True)
    axes[0].plot(t, [-z for z in fcol(cols, data, "z")])
    axes[0].set_ylabel("altitude [m]")
    axes[1].plot(t, fcol(cols, data, "gust_u"), label="gust_u")
    axes[1].plot(t, fcol(cols, data, "gust_w"), label="gust_w")
    axes[1].set_ylabel("gust [m/s]")
    axes[1].legend()
    axes[2].semilogy(t[:-1], [max(o, 1e-18) for o in fcol(cols, data, "objective")[:-1]])
    axes[2].set_ylabel("tracking objective")
    axes[2].set_xlabel("t [s]")
    fig.tight_layout()
    fig.savefig(out, dpi=140)


def plot_grid(path, out):
    cols, data, _ = read_csv(path)
    fig, ax = plt.subplots(figsize=(6, 6))
    for row in data:
        x, z = float(row[cols["x_b"]]), float(row[cols["z_b"]])
        ok = row[cols["status"]] == "feasible"
        ax.plot(x, z, "o", color="tab:green" if ok else "tab:red", ms=8)
    ax.set_xlabel("x_b [m]")
    ax.set_ylabel("z_b [m]")
    ax.set_title("initial-position feasibility")
    fig.tight_layout()
    fig.savefig(out, dpi=140)


def main():
    if len(sys.argv) < 3:
        print(__doc__)
        return 2
    kind, path = sys.argv[1], sys.argv[2]
    out = sys.argv[3] if len(sys.argv) > 3 else kind + ".png"
    {"reference": plot_reference, "run": plot_run, "grid": plot_grid}[kind](path, out)
    print("wrote", out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
