"""Figure rendering for the CLI report paths.

Each function takes already-computed rows and writes one PNG next to the
delimited output.  The core library never imports this module.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def sweep_figure(rows: list, path: str) -> None:
    """Median gap location vs N, one line per (D, k), with a spread band."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["D"], r["k"]), {}).setdefault(r["N"], []).append(r["lambda"])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for (d, k), by_n in sorted(groups.items()):
        ns = sorted(by_n)
        med = [float(np.median(by_n[n])) for n in ns]
        lo = [float(np.quantile(by_n[n], 0.1)) for n in ns]
        hi = [float(np.quantile(by_n[n], 0.9)) for n in ns]
        (line,) = ax.plot(ns, med, marker="o", label=f"D={d}, k={k}")
        ax.fill_between(ns, lo, hi, alpha=0.2, color=line.get_color())
    if rows:
        ref = rows[0]["lambda_H"]
        ax.axhline(ref, linestyle="--", color="gray", linewidth=1, label="baseline")
    ax.set_xlabel("N")
    ax.set_ylabel("second eigenvalue estimate")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def mix_figure(trace, path: str) -> None:
    """Measured distances against the geometric bounds on a log axis."""
    ms = [m for m, _, _ in trace.rows]
    l2 = [x for _, x, _ in trace.rows]
    l1 = [x for _, _, x in trace.rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogy(ms, np.maximum(l2, 1e-18), marker="o", label="l2 distance")
    ax.semilogy(ms, np.maximum(l1, 1e-18), marker="s", label="l1 distance")
    ax.semilogy(ms, [max(trace.bound_l2(m), 1e-18) for m in ms], "--", label="l2 bound")
    ax.semilogy(ms, [max(trace.bound_l1(m), 1e-18) for m in ms], "--", label="l1 bound")
    ax.set_xlabel("iterations")
    ax.set_ylabel("distance to uniform")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def lemma_figure(records: list, path: str) -> None:
    """Histogram of bound minus norm across sampled instances."""
    margins = [r["margin"] for r in records]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.hist(margins, bins=40)
    ax.axvline(0.0, color="red", linestyle="--", linewidth=1)
    ax.set_xlabel("bound - norm")
    ax.set_ylabel("instances")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
