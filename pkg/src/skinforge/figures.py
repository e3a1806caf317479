"""Matplotlib renderings of the report outputs, saved next to the CSV files."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import TransparencyMap
from .aperture import EmsLayout, PatternTable
from .atom import ResponseTable

_DPI = 150


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_pattern_figure(cut: PatternTable, path, title: str = "") -> None:
    """Transmitted power versus the cut angle, paper-style extended axis."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    power = 10.0 * np.log10(np.maximum(cut.power_phi, 1e-300))
    ax.plot(cut.theta_deg, power, lw=1.2)
    ax.set_xlabel(r"$\theta$ [deg]")
    ax.set_ylabel(r"$|E_\varphi|^2$ [dB]")
    ax.set_xlim(cut.theta_deg[0], cut.theta_deg[-1])
    top = power.max()
    ax.set_ylim(top - 60.0, top + 3.0)
    ax.grid(True, alpha=0.4)
    if title:
        ax.set_title(title)
    _save(fig, path)


def save_uv_figure(table: PatternTable, path, title: str = "") -> None:
    """Color map of the transmitted power over the direction cosines."""
    # rebuild the full grid from the unit-disc samples
    axis_u = np.unique(table.u)
    axis_v = np.unique(table.v)
    grid = np.full((axis_u.size, axis_v.size), np.nan)
    iu = np.searchsorted(axis_u, table.u)
    iv = np.searchsorted(axis_v, table.v)
    grid[iu, iv] = 10.0 * np.log10(np.maximum(table.power_phi, 1e-300))
    top = np.nanmax(grid)
    fig, ax = plt.subplots(figsize=(5.6, 4.6))
    mesh = ax.pcolormesh(axis_u, axis_v, grid.T, shading="nearest",
                         vmin=top - 40.0, vmax=top, cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=r"$|E_\varphi|^2$ [dB]")
    ax.set_xlabel("u")
    ax.set_ylabel("v")
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    _save(fig, path)


def save_layout_figure(layout: EmsLayout, transparency: TransparencyMap,
                       path) -> None:
    """Ring-radius assignment and per-cell optical transparency, side by side."""
    fig, axes = plt.subplots(1, 2, figsize=(9.6, 4.2))
    extent = [-layout.aperture_m[0] / 2 * 1e2, layout.aperture_m[0] / 2 * 1e2,
              -layout.aperture_m[1] / 2 * 1e2, layout.aperture_m[1] / 2 * 1e2]
    im0 = axes[0].imshow(layout.d1_m.T * 1e3, origin="lower", extent=extent,
                         cmap="magma", aspect="equal")
    fig.colorbar(im0, ax=axes[0], label="ring radius [mm]")
    axes[0].set_title("layout")
    im1 = axes[1].imshow(transparency.values.T * 100.0, origin="lower",
                         extent=extent, cmap="cividis", aspect="equal",
                         vmin=80.0, vmax=100.0)
    fig.colorbar(im1, ax=axes[1], label="optical transmittance [%]")
    axes[1].set_title("transparency")
    for ax in axes:
        ax.set_xlabel("x [cm]")
        ax.set_ylabel("y [cm]")
    _save(fig, path)


def save_atom_response_figure(table: ResponseTable, path) -> None:
    """Magnitude and unwrapped phase of the cell transmission versus radius."""
    fig, ax_mag = plt.subplots(figsize=(7.0, 4.2))
    d1_mm = table.d1_m * 1e3
    ax_mag.plot(d1_mm, 20.0 * np.log10(np.maximum(table.mag_te, 1e-300)),
                "C0-", label="|T| TE")
    ax_mag.set_xlabel("ring radius [mm]")
    ax_mag.set_ylabel("|T| [dB]", color="C0")
    ax_ph = ax_mag.twinx()
    ax_ph.plot(d1_mm, table.phase_te_deg, "C3--", label="phase TE")
    ax_ph.set_ylabel("phase [deg]", color="C3")
    ax_mag.grid(True, alpha=0.4)
    _save(fig, path)


def save_transparency_curve_figure(d1_m, transmittance, path) -> None:
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.plot(np.asarray(d1_m) * 1e3, np.asarray(transmittance) * 100.0, lw=1.5)
    ax.axhline(80.0, color="grey", ls=":", lw=1.0)
    ax.set_xlabel("ring radius [mm]")
    ax.set_ylabel("optical transmittance [%]")
    ax.set_ylim(0.0, 100.0)
    ax.grid(True, alpha=0.4)
    _save(fig, path)


def save_aperture_sweep_figure(rows, path) -> None:
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    p = [r.p for r in rows]
    ax.plot(p, [r.xi_db for r in rows], "o-", label="patterned")
    ax.plot(p, [r.xi_glass_db for r in rows], "s--", label="glass only")
    ax.plot(p, [r.xi_empty_db for r in rows], "^:", label="empty")
    ax.set_xlabel("cells per side")
    ax.set_ylabel(r"$\Xi$ [dB]")
    ax.set_xscale("log")
    ax.grid(True, which="both", alpha=0.4)
    ax.legend()
    _save(fig, path)


def save_angle_sweep_figure(rows, path) -> None:
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.plot([r.theta_rx_deg for r in rows], [r.xi_db for r in rows], "o-")
    ax.set_xlabel(r"$\theta^{rx}$ [deg]")
    ax.set_ylabel(r"$\Xi$ [dB]")
    ax.grid(True, alpha=0.4)
    _save(fig, path)


def save_convergence_figure(trace, path) -> None:
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.semilogy(np.arange(len(trace)), trace, lw=1.2)
    ax.set_xlabel("iteration")
    ax.set_ylabel("best mismatch")
    ax.grid(True, which="both", alpha=0.4)
    _save(fig, path)
