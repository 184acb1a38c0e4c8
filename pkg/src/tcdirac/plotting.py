"""PNG figures for run outputs (Agg backend, no display needed)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "savefig.dpi": 120,
}
# no timestamp or version strings, so identical data gives identical bytes
_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="png", metadata=_META)
    plt.close(fig)
    return path


def plot_trajectory(traj, path):
    with plt.rc_context(STYLE):
        fig, (a1, a2) = plt.subplots(1, 2, figsize=(8.0, 3.4))
        for i in range(3):
            a1.plot(traj.t, traj.x[:, i], label=f"x{i + 1}")
            a2.plot(traj.t, traj.p[:, i], label=f"p{i + 1}")
        a1.set_xlabel("t")
        a2.set_xlabel("t")
        a1.set_title("position")
        a2.set_title("canonical momentum")
        a1.legend(fontsize=7)
        return _save(fig, path)


def plot_eta(t, eta, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for i in range(3):
            ax.plot(t, np.real(eta[:, i]), label=f"eta{i + 1}")
        ax.set_xlabel("t")
        ax.set_ylim(-1.05, 1.05)
        ax.legend(fontsize=7)
        ax.set_title("rest-frame polarization")
        return _save(fig, path)


def plot_germ(germ, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(germ.t, np.abs(germ.detC), label="|det C|")
        ax.set_xlabel("t")
        ax.legend(fontsize=7)
        return _save(fig, path)


def plot_moments(mt, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for i in range(3):
            ax.plot(mt.t, mt.delta2[:, 3 + i, 3 + i], label=f"s_x{i + 1}x{i + 1}")
        ax.set_xlabel("t")
        ax.legend(fontsize=7)
        ax.set_title("position variances")
        return _save(fig, path)


def plot_wavefunction(coord, psi, path, axis=0):
    dens = np.sum(np.abs(psi) ** 2, axis=1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(coord, dens, color="k")
        ax.set_xlabel(f"x{axis + 1}")
        ax.set_ylabel("|Psi|^2")
        return _save(fig, path)


def plot_green(residuals, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(np.arange(len(residuals)), residuals, "o-")
        ax.set_xlabel("nu_max")
        ax.set_ylabel("truncation residual")
        return _save(fig, path)
