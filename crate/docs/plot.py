#!/usr/bin/env python3
"""Plot bec-transport output.

    python docs/plot.py trajectory out/trajectory.dat
    python docs/plot.py com out/com.dat
    python docs/plot.py snapshots out/snapshots.dat
    python docs/plot.py sweep out/sweep.dat
"""

import sys
from collections import defaultdict

import matplotlib.pyplot as plt
import numpy as np


def read_table(path):
    meta, columns, rows = {}, None, []
    with open(path) as f:
        for line in f:
            if line.startswith("# columns:"):
                columns = line.split(":", 1)[1].split()
            elif line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta.setdefault(key.strip(), []).append(value.strip())
            elif line.strip():
                rows.append([float(x) for x in line.split()])
    data = np.array(rows)
    return meta, {c: data[:, i] for i, c in enumerate(columns)}


def trajectory(path):
    meta, d = read_table(path)
    fig, (top, bottom) = plt.subplots(2, 1, sharex=True)
    top.plot(d["t"] * 1e3, d["q0"] * 1e3, label="trap $q_0$")
    top.plot(d["t"] * 1e3, d["q_c"] * 1e3, label="condensate $q_c$")
    top.set_ylabel("position (mm)")
    top.legend()
    bottom.plot(d["t"] * 1e3, d["displacement"] * 1e3)
    bottom.set_ylabel("$q_c - q_0$ (mm)")
    bottom.set_xlabel("t (ms)")
    for t in meta.get("jump", []):
        bottom.axvline(float(t) * 1e3, color="grey", lw=0.5)
    fig.suptitle(meta.get("protocol", [""])[0])


def com(path):
    _, d = read_table(path)
    plt.plot(d["t"] * 1e3, (d["com"] - d["q_c"]) * 1e9)
    plt.xlabel("t (ms)")
    plt.ylabel(r"$\langle q\rangle - q_c$ (nm)")


def snapshots(path):
    _, d = read_table(path)
    for t in np.unique(d["t"]):
        sel = d["t"] == t
        plt.plot(d["q"][sel] * 1e3, d["re_psi"][sel] ** 2 + d["im_psi"][sel] ** 2, lw=0.7)
    plt.xlabel("q (mm)")
    plt.ylabel(r"$|\psi|^2$ (1/m)")


def sweep(path):
    _, d = read_table(path)
    curves = defaultdict(list)
    for i in range(len(d["lambda"])):
        curves[(d["g1_over_hbar"][i], d["t_f"][i])].append(i)
    for (g, t_f), idx in sorted(curves.items()):
        plt.errorbar(d["lambda"][idx] * 1e9, d["mean_fidelity"][idx], yerr=d["std_error"][idx],
                     marker="o", ms=3, label=f"g1/hbar = {g:g} m/s, t_f = {t_f * 1e3:g} ms")
    plt.xlabel("lambda (nm)")
    plt.ylabel("mean fidelity")
    plt.legend(fontsize="small")


if __name__ == "__main__":
    kinds = {"trajectory": trajectory, "com": com, "snapshots": snapshots, "sweep": sweep}
    if len(sys.argv) != 3 or sys.argv[1] not in kinds:
        sys.exit(__doc__)
    kinds[sys.argv[1]](sys.argv[2])
    plt.tight_layout()
    plt.show()
