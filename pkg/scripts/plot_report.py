#!/usr/bin/env python3
"""Render the CSV tables of an ``analogctl`` output directory as PNG figures.

Usage::

    python scripts/plot_report.py out/acceptance [--show]

Needs matplotlib, which the package itself does not depend on.
"""
import argparse
import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def col(header, rows, prefix):
    i = next(k for k, h in enumerate(header) if h.startswith(prefix))
    return [r[i] for r in rows]


def floats(values):
    return [float(v) for v in values]


def plot_spectra(path, out):
    header, rows = read(path)
    groups = defaultdict(list)
    for r in rows:
        groups[r[0]].append(r)
    axes = [h.split(" ")[0][2:] for h in header if h.startswith("G_")]
    fig, ax = plt.subplots(1, len(axes), figsize=(4 * len(axes), 3.2), sharey=False)
    for k, a in enumerate(axes):
        first = next(iter(groups.values()))
        w = floats(col(header, first, "omega"))
        ax[k].plot(w, floats(col(header, first, f"G_{a}")), "k", lw=2, label="G")
        twin = ax[k].twinx()
        for label, rs in groups.items():
            twin.plot(w, floats(col(header, rs, f"F_{a}")), label=f"F {label}")
        ax[k].set_xlabel("omega [rad/t_gate]")
        ax[k].set_title(f"axis {a}")
        twin.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(os.path.join(out, "spectra.png"), dpi=120)


def plot_sweep(path, out):
    header, rows = read(path)
    es = floats(col(header, rows, "E_S_rescaled"))
    err = floats(col(header, rows, "error ["))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(es, err, "o-")
    ax.set_xlabel("E_S [pi-pulse E_S / 10]")
    ax.set_ylabel("gate error")
    ax.set_xscale("log")
    ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(os.path.join(out, "sweep.png"), dpi=120)


def plot_controls(path, out):
    header, rows = read(path)
    t = floats(col(header, rows, "t "))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for h in header:
        if h.startswith("omega_"):
            ax.plot(t, floats(col(header, rows, h)), label=h.split(" ")[0])
    ax.set_xlabel("t [t_gate]")
    ax.set_ylabel("control [rad/t_gate]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(out, "controls.png"), dpi=120)


def plot_surplus(path, out):
    header, rows = read(path)
    fig, ax = plt.subplots(figsize=(5, 3.5))
    by_detune = defaultdict(list)
    for r in rows:
        by_detune[float(col(header, [r], "detune")[0])].append(r)
    for det, rs in sorted(by_detune.items()):
        ax.plot(floats(col(header, rs, "E_S_rescaled")),
                floats(col(header, rs, "relative_surplus")), "o-", label=f"detune {det:g}")
    ax.set_xlabel("E_S [pi-pulse E_S / 10]")
    ax.set_ylabel("relative surplus error")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(out, "surplus.png"), dpi=120)


def plot_bloch(path, out):
    header, rows = read(path)
    t = floats(col(header, rows, "t "))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for h in ("r_x", "r_y", "r_z", "norm"):
        ax.plot(t, floats(col(header, rows, h)), label=h)
    ax.set_xlabel("t [t_gate]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(out, "bloch.png"), dpi=120)


PLOTTERS = {"spectra.csv": plot_spectra, "sweep.csv": plot_sweep,
            "controls.csv": plot_controls, "surplus.csv": plot_surplus,
            "bloch.csv": plot_bloch}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("directory")
    ap.add_argument("--show", action="store_true")
    args = ap.parse_args()
    for name, fn in PLOTTERS.items():
        path = os.path.join(args.directory, name)
        if os.path.exists(path):
            fn(path, args.directory)
            print(f"rendered {name}")
    if args.show:
        plt.show()


if __name__ == "__main__":
    main()
