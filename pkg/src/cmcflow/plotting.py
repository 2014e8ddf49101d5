"""Static matplotlib figures written next to the CSV/JSON outputs."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .dsgeom import jb  # noqa: E402

_META = {"Software": None}  # keep the files free of version strings


def _save(fig, path: str) -> str:
    tmp = path + ".tmp.png"
    fig.savefig(tmp, dpi=110, metadata=_META)
    plt.close(fig)
    os.replace(tmp, path)
    return path


def rotsym_run(run, path: str) -> str:
    """Radius against time and the (gamma, eta) portrait of one run."""
    fig, (a, b) = plt.subplots(1, 2, figsize=(9, 3.6))
    a.plot(run.t, run.f, lw=1.2)
    a.axhline(run.d / run.c, color="0.6", ls=":", lw=1)
    a.set_xlabel("t")
    a.set_ylabel("f")
    b.plot(run.gamma, run.eta, lw=1.2)
    b.axhline(run.d / run.c, color="0.6", ls=":", lw=1)
    b.set_xlabel("gamma")
    b.set_ylabel("eta")
    fig.tight_layout()
    return _save(fig, path)


def classification_portrait(runs: dict, d: int, c: float, path: str) -> str:
    """Witness trajectories of each class in the (gamma, eta) plane."""
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    for label, rs in runs.items():
        color = None
        for r in rs:
            line = ax.plot(r.gamma, r.eta, lw=1.1, color=color, label=label if color is None else None)[0]
            color = line.get_color()
    ax.axhline(d / c, color="0.5", ls=":", lw=1)
    ax.set_xlim(-6, 6)
    ax.set_ylim(0, max(2.0, 2.5 * d / c))
    ax.set_xlabel("gamma")
    ax.set_ylabel("eta")
    ax.legend(fontsize=7, loc="upper right")
    fig.tight_layout()
    return _save(fig, path)


def zeta_decay(run, path: str) -> str:
    fig, ax = plt.subplots(figsize=(5, 3.6))
    b = jb(run.t)
    ax.loglog(b, np.abs(run.zeta), lw=1.2, label="|zeta|")
    lo, hi = run.fit_window
    sel = (run.t >= lo) & (run.t <= hi)
    if np.isfinite(run.exponent) and sel.any():
        ref = np.abs(run.zeta[sel][0]) * (b[sel] / b[sel][0]) ** (-run.exponent)
        ax.loglog(b[sel], ref, "--", lw=1, label=f"slope -{run.exponent:.3f}")
    ax.set_xlabel("<t>")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def mode_run(run, path: str) -> str:
    fig, (a, b) = plt.subplots(1, 2, figsize=(9, 3.6))
    a.plot(run.t, run.psi, lw=1.2)
    a.set_xlabel("t")
    a.set_ylabel("psi")
    b.plot(run.t, run.energy, lw=1.2)
    b.set_xlabel("t")
    b.set_ylabel("energy")
    fig.tight_layout()
    return _save(fig, path)


def field_profiles(theta, times, fields, path: str, ylabel: str = "phi / <t>") -> str:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    for t, f in zip(times, fields):
        ax.plot(theta, f / jb(t), lw=1, label=f"t={t:g}")
    ax.set_xlabel("omega")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    return _save(fig, path)


def evolve_diagnostics(traj, path: str) -> str:
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.4))
    for ax, y, name in zip(axes, (traj.energy, traj.supnorm, traj.ushift_range), ("energy", "sup |phi|", "u-shift range")):
        ax.plot(traj.t, y, lw=1.2)
        ax.set_xscale("log")
        ax.set_xlabel("t")
        ax.set_title(name, fontsize=9)
    fig.tight_layout()
    return _save(fig, path)
