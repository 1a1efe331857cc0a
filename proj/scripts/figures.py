#!/usr/bin/env python3
"""Plot the tables of a rydpol output bundle.

usage: figures.py <bundle-dir> [--n N] [--out DIR]

Tables and the columns each panel reads:

  potentials_n{n}.csv   R_um, M, track, eigenvalue_ghz, weight
                        pair potentials colored by overlap with the rotated
                        lab state (rotation angle in the header)
  map_n{n}.csv          R_um, theta_rad, z_um, r_perp_um, V_rad_per_us,
                        Gamma_rad_per_us, window_us
                        dephasing rate over (z, r_perp)
  field_n{n}.csv        omega_mhz, r_perp_um, z1_um, z2_um, ss_re, ss_im,
                        ss_abs2, ee_abs2
                        two-polariton distributions |SS|^2 and |EE|^2
  conversion_n{n}.csv   omega_mhz, N, od_im, C, group_velocity_um_per_us,
                        delay_us, single_transmission
  transmission_n{n}.csv n, omega_mhz, r_in, t_us, transmission
  rate_od.csv           n, omega_mhz, r_in, R_OD, R_OD_sigma, OD_0, in_window
  fit_summary.csv       n, omega_mhz, C, C_sigma, r_in_max, points, a,
                        a_sigma, k, k_sigma
                        C(Omega) with the power law C = a Omega^-k

Rates are in rad/us (2pi MHz), lengths in um, times in us.
"""

import argparse
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def table(path):
    return pd.read_csv(path, comment="#")


def potentials(bundle, n, out):
    t = table(bundle / f"potentials_n{n}.csv")
    fig, ax = plt.subplots(figsize=(5, 4))
    t = t.sort_values("weight")
    sc = ax.scatter(t.R_um, t.eigenvalue_ghz, c=t.weight, s=3, cmap="viridis", vmin=0, vmax=t.weight.max())
    fig.colorbar(sc, ax=ax, label="overlap")
    ax.set_xlabel("R (um)")
    ax.set_ylabel("E (GHz)")
    ax.set_ylim(-1, 1)
    fig.savefig(out / f"potentials_n{n}.png", dpi=150, bbox_inches="tight")


def dephasing_map(bundle, n, out):
    t = table(bundle / f"map_n{n}.csv")
    fig, ax = plt.subplots(figsize=(5, 4))
    g = t.Gamma_rad_per_us / (2 * np.pi)
    sc = ax.tricontourf(np.r_[t.z_um, -t.z_um], np.r_[t.r_perp_um, t.r_perp_um], np.r_[g, g], levels=30)
    fig.colorbar(sc, ax=ax, label="Gamma / 2pi (MHz)")
    ax.set_xlabel("z (um)")
    ax.set_ylabel("r_perp (um)")
    fig.savefig(out / f"map_n{n}.png", dpi=150, bbox_inches="tight")


def fields(bundle, n, out):
    t = table(bundle / f"field_n{n}.csv")
    omegas = sorted(t.omega_mhz.unique())
    fig, axes = plt.subplots(1, len(omegas), figsize=(3 * len(omegas), 3), squeeze=False)
    for ax, om in zip(axes[0], omegas):
        s = t[t.omega_mhz == om]
        grid = s.pivot(index="z1_um", columns="z2_um", values="ss_abs2")
        ax.imshow(grid.values, origin="lower", extent=[grid.columns.min(), grid.columns.max(),
                                                       grid.index.min(), grid.index.max()])
        ax.set_title(f"Omega = 2pi x {om:g} MHz")
        ax.set_xlabel("z2 (um)")
    axes[0][0].set_ylabel("z1 (um)")
    fig.savefig(out / f"field_n{n}.png", dpi=150, bbox_inches="tight")


def rate_constants(bundle, out):
    t = table(bundle / "fit_summary.csv")
    fig, ax = plt.subplots(figsize=(5, 4))
    for n, s in t.groupby("n"):
        ax.errorbar(s.omega_mhz, s.C, yerr=s.C_sigma, fmt="o", label=f"n = {n}")
        if np.isfinite(s.k.iloc[0]):
            om = np.geomspace(s.omega_mhz.min(), s.omega_mhz.max(), 50)
            ax.plot(om, s.a.iloc[0] * om ** (-s.k.iloc[0]), label=f"k = {s.k.iloc[0]:.2f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("Omega / 2pi (MHz)")
    ax.set_ylabel("C (us)")
    ax.legend()
    fig.savefig(out / "rate_constants.png", dpi=150, bbox_inches="tight")


def main():
    p = argparse.ArgumentParser()
    p.add_argument("bundle", type=pathlib.Path)
    p.add_argument("--n", type=int, action="append")
    p.add_argument("--out", type=pathlib.Path)
    a = p.parse_args()
    out = a.out or a.bundle / "figures"
    out.mkdir(parents=True, exist_ok=True)
    ns = a.n or sorted(int(f.stem.split("_n")[1]) for f in a.bundle.glob("map_n*.csv"))
    for n in ns:
        potentials(a.bundle, n, out)
        dephasing_map(a.bundle, n, out)
        if (a.bundle / f"field_n{n}.csv").exists():
            fields(a.bundle, n, out)
    if (a.bundle / "fit_summary.csv").exists():
        rate_constants(a.bundle, out)


if __name__ == "__main__":
    main()
