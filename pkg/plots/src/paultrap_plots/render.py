"""Figure builders over the simulation CSV/JSON artifacts.

Each builder takes the experiment output directory, validates the file
schemas, and returns a matplotlib Figure plus the input manifest hash. The
builders never modify their inputs; rendering twice from the same directory
is idempotent.
"""

from __future__ import annotations

import csv
import json
import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

TAU = 2.0 * math.pi


class SchemaError(ValueError):
    """An input file does not match the expected column/key layout."""


def read_csv(path: str, required_columns):
    if not os.path.exists(path):
        raise SchemaError(f"missing input file {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected a header row")
        for col in required_columns:
            if col not in header:
                raise SchemaError(f"{path}: missing column '{col}'")
        rows = [row for row in reader if row]
    data = {col: np.array([float(row[i]) for row in rows])
            for i, col in enumerate(header)}
    return data


def read_json(path: str, required_keys=()):
    if not os.path.exists(path):
        raise SchemaError(f"missing input file {path}")
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    for key in required_keys:
        if key not in payload:
            raise SchemaError(f"{path}: missing key '{key}'")
    return payload


def manifest_hash(in_dir: str) -> str:
    path = os.path.join(in_dir, "manifest.json")
    if not os.path.exists(path):
        return "unknown"
    return read_json(path).get("config_sha256", "unknown")


def _no_data_axes(ax, message):
    ax.text(0.5, 0.5, message, transform=ax.transAxes, ha="center",
            va="center", color="0.4")


def fig1_threshold(in_dir: str):
    """Reorder rate vs energy with the double-exponential fit and the
    thermally averaged mean-rate overlays."""
    scan = read_json(os.path.join(in_dir, "scan.json"), ["records"])
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    records = scan["records"]
    done = [r for r in records if r.get("status") == "completed"]
    cens = [r for r in done if r["censored"]]
    live = [r for r in done if not r["censored"]]
    if live or cens:
        ax.semilogy([r["temperature_k"] for r in live],
                    [r["rate_hz"] for r in live], "o", color="tab:blue",
                    label="simulation runs")
        if cens:
            ax.semilogy([r["temperature_k"] for r in cens],
                        [r["rate_hz"] for r in cens], "v", color="tab:blue",
                        mfc="none", label="censored at 1/t_end")
    else:
        _no_data_axes(ax, "no completed scan points")

    if "fit" in scan:
        p = scan["fit"]
        temps = np.linspace(
            min((r["temperature_k"] for r in done), default=0.1) * 0.5,
            max((r["temperature_k"] for r in done), default=1.0), 300)
        log_rate = p["a"] * (1.0 - np.exp(np.minimum(
            (p["t0_k"] - temps) / p["tau_k"], 50.0))) + p["f0"]
        ax.semilogy(temps, np.exp(log_rate), "-", color="lightblue", lw=2,
                    label="double-exponential fit")
    if "mean_rate_curve" in scan:
        curve = scan["mean_rate_curve"]
        ax.semilogy(curve["temperature_k"], curve["rate_hz"], "-",
                    color="tab:red", label="thermal mean rate")
    if scan.get("threshold_k"):
        ax.axvline(scan["threshold_k"], color="tab:red", ls="--", lw=1,
                   label=f"threshold {scan['threshold_k']:.2f} K")
    ax.set_xlabel("initial mode energy 2E/k_B (K)")
    ax.set_ylabel("reorder rate (1/s)")
    ax.set_title(f"{scan.get('direction', '?')} reordering rate")
    ax.legend(fontsize=8)
    ymin, ymax = ax.get_ylim()
    if scan.get("target_rate_hz"):
        ax.axhline(scan["target_rate_hz"], color="0.6", ls=":", lw=1)
    ax.set_ylim(ymin, ymax)
    return fig


def fig2_freq_scaling(in_dir: str):
    """Threshold energy vs motional frequency with the 2/3-power fit."""
    points = _collect_scan_points(in_dir, "axial_freq_hz")
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    if points:
        w = np.array([p[0] for p in points]) * TAU
        thr = np.array([p[1] for p in points])
        ax.plot(w / TAU / 1e6, thr, "o", color="tab:blue")
        design = np.column_stack([w ** (2.0 / 3.0), -np.ones_like(w)])
        coef, *_ = np.linalg.lstsq(design, thr, rcond=None)
        grid = np.linspace(w.min() * 0.9, w.max() * 1.05, 200)
        ax.plot(grid / TAU / 1e6, coef[0] * grid ** (2.0 / 3.0) - coef[1], "-",
                color="tab:blue", lw=1,
                label=r"A $\omega^{2/3}$ - E$_0$ fit")
        ax.legend(fontsize=8)
    else:
        _no_data_axes(ax, "no scan outputs found")
    ax.set_xlabel("axial frequency (MHz)")
    ax.set_ylabel("threshold 2E/k_B (K)")
    ax.set_title("threshold scaling with frequency")
    return fig


def fig3_qx_scaling(in_dir: str):
    """Threshold energy vs q_x with an inverse-tangent fit overlay."""
    points = _collect_scan_points(in_dir, "q_x")
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    if points:
        q = np.array([p[0] for p in points])
        thr = np.array([p[1] for p in points])
        ax.plot(q, thr, "o", color="tab:blue")
        if len(points) >= 4:
            try:
                from scipy.optimize import least_squares

                def residuals(p):
                    return p[0] + p[1] * np.arctan((q - p[2]) / p[3]) - thr

                sol = least_squares(residuals,
                                    x0=[thr.mean(), -np.ptp(thr), q.mean(), 0.2])
                grid = np.linspace(q.min(), q.max(), 200)
                ax.plot(grid, sol.x[0] + sol.x[1] * np.arctan(
                    (grid - sol.x[2]) / sol.x[3]), "-", color="tab:blue", lw=1)
            except Exception:
                pass
    else:
        _no_data_axes(ax, "no scan outputs found")
    ax.set_xlabel("q_x")
    ax.set_ylabel("threshold 2E/k_B (K)")
    ax.set_title("threshold scaling with stability parameter")
    return fig


def _collect_scan_points(in_dir, x_key):
    """Threshold scans live in subdirectories, one per swept parameter value."""
    points = []
    for entry in sorted(os.listdir(in_dir)):
        path = os.path.join(in_dir, entry, "scan.json")
        if os.path.isdir(os.path.join(in_dir, entry)) and os.path.exists(path):
            scan = read_json(path, ["trap", "threshold_k"])
            trap = scan["trap"]
            if x_key == "axial_freq_hz":
                x = trap["omega_z"] / TAU
            else:
                x = trap["q_x"]
            points.append((x, scan["threshold_k"]))
    return points


def fig4_parametric(in_dir: str):
    """Radial and axial energy evolution during single-electron parametric cooling."""
    data = read_csv(os.path.join(in_dir, "cooling_curve.csv"),
                    ["t_s", "energy_z_j", "energy_x_j"])
    kb = 1.380649e-23
    fig, axes = plt.subplots(2, 1, figsize=(6.0, 5.2), sharex=True)
    if data["t_s"].size:
        axes[0].plot(data["t_s"] * 1e6, data["energy_x_j"] / kb, color="tab:orange")
        axes[1].plot(data["t_s"] * 1e6, data["energy_z_j"] / kb, color="tab:blue")
    else:
        _no_data_axes(axes[0], "no samples")
    axes[0].set_ylabel("radial energy (K)")
    axes[1].set_ylabel("axial energy (K)")
    axes[1].set_xlabel("time (us)")
    axes[0].set_title("parametric cooling of a single electron")
    return fig


def fig5_split(in_dir: str):
    """Splitting schedule (alpha, beta, separation) with the critical point
    and the resulting quanta annotation."""
    sched = read_csv(os.path.join(in_dir, "schedule.csv"),
                     ["t_s", "alpha_v_m2", "beta_v_m4", "d_m"])
    result = read_json(os.path.join(in_dir, "result.json"), ["dn_stretch"])
    fig, axes = plt.subplots(3, 1, figsize=(6.0, 6.4), sharex=True)
    t = sched["t_s"] * 1e6
    if t.size:
        axes[0].plot(t, sched["alpha_v_m2"], color="tab:blue")
        axes[0].axhline(0.0, color="0.5", ls=":", lw=1)
        axes[1].plot(t, sched["beta_v_m4"], color="tab:orange")
        axes[2].plot(t, sched["d_m"] * 1e6, color="tab:green")
        if result.get("t_cp_s") is not None:
            for ax in axes:
                ax.axvline(result["t_cp_s"] * 1e6, color="tab:red", ls="--",
                           lw=1)
            axes[0].text(result["t_cp_s"] * 1e6, 0.0, " critical point",
                         color="tab:red", fontsize=8, va="bottom")
    else:
        _no_data_axes(axes[0], "no schedule samples")
    axes[0].set_ylabel("alpha (V/m^2)")
    axes[1].set_ylabel("beta (V/m^4)")
    axes[2].set_ylabel("separation (um)")
    axes[2].set_xlabel("time (us)")
    axes[0].set_title(
        f"splitting ramp: dn_stretch = {result['dn_stretch']:.3g} quanta")
    return fig


def fig6_stretch(in_dir: str):
    """COM and stretch mode energies during two-electron parametric cooling."""
    data = read_csv(os.path.join(in_dir, "cooling_curve.csv"),
                    ["t_s", "energy_com_j", "energy_stretch_j"])
    kb = 1.380649e-23
    fig, axes = plt.subplots(2, 1, figsize=(6.0, 5.2), sharex=True)
    if data["t_s"].size:
        axes[0].plot(data["t_s"] * 1e6, data["energy_stretch_j"] / kb,
                     color="tab:orange")
        axes[1].plot(data["t_s"] * 1e6, data["energy_com_j"] / kb,
                     color="tab:blue")
    else:
        _no_data_axes(axes[0], "no samples")
    axes[0].set_ylabel("stretch energy (K)")
    axes[1].set_ylabel("COM energy (K)")
    axes[1].set_xlabel("time (us)")
    axes[0].set_title("parametric cooling of the stretch mode")
    return fig


def fig_stability_map(in_dir: str):
    """Floquet exponent heat map with integer-beta_x contour overlay."""
    data = read_csv(os.path.join(in_dir, "grid.csv"),
                    ["q_x", "omega_ce_hz", "lambda", "beta_x", "stable"])
    fig, ax = plt.subplots(figsize=(6.4, 4.6))
    if data["q_x"].size:
        qx = np.unique(data["q_x"])
        wce = np.unique(data["omega_ce_hz"])
        lam = data["lambda"].reshape(len(qx), len(wce))
        beta = data["beta_x"].reshape(len(qx), len(wce))
        floor = 1e-16
        img = ax.pcolormesh(wce / 1e9, qx, np.log10(np.maximum(lam, floor)),
                            shading="nearest", cmap="viridis")
        fig.colorbar(img, ax=ax, label="log10 Floquet exponent")
        if len(qx) > 1 and np.any(np.isfinite(beta)):
            levels = [k for k in range(0, 5)]
            masked = np.ma.masked_invalid(beta)
            ax.contour(wce / 1e9, qx, masked, levels=levels, colors="white",
                       linewidths=0.8)
    else:
        _no_data_axes(ax, "empty grid")
    ax.set_xlabel("cyclotron frequency (GHz)")
    ax.set_ylabel("q_x")
    ax.set_title("trap stability under a transverse field")
    return fig


def figA_trajectories(in_dir: str):
    """Axial trajectories of the two electrons (crystal or cloud)."""
    data = read_csv(os.path.join(in_dir, "trajectory.csv"), ["t_s", "z1_m"])
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if data["t_s"].size:
        ax.plot(data["t_s"] * 1e6, data["z1_m"] * 1e6, lw=0.6,
                label="electron 1")
        if "z2_m" in data:
            ax.plot(data["t_s"] * 1e6, data["z2_m"] * 1e6, lw=0.6,
                    label="electron 2")
        ax.legend(fontsize=8)
    else:
        _no_data_axes(ax, "no samples")
    ax.set_xlabel("time (us)")
    ax.set_ylabel("axial position (um)")
    ax.set_title("axial trajectories")
    return fig


def figB_bfield(in_dir: str):
    """Radial displacements of a single electron under a static field."""
    data = read_csv(os.path.join(in_dir, "trajectory.csv"),
                    ["t_s", "x1_m", "y1_m"])
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if data["t_s"].size:
        ax.plot(data["t_s"] * 1e9, data["x1_m"] * 1e6, lw=0.6,
                color="tab:blue", label="x")
        ax.plot(data["t_s"] * 1e9, data["y1_m"] * 1e6, lw=0.6,
                color="tab:red", label="y")
        ax.legend(fontsize=8)
    else:
        _no_data_axes(ax, "no samples")
    ax.set_xlabel("time (ns)")
    ax.set_ylabel("radial position (um)")
    ax.set_title("radial motion under a static magnetic field")
    return fig


FIGURES = {
    "fig1_threshold": fig1_threshold,
    "fig2_freq_scaling": fig2_freq_scaling,
    "fig3_qx_scaling": fig3_qx_scaling,
    "fig4_parametric": fig4_parametric,
    "fig5_split": fig5_split,
    "fig6_stretch": fig6_stretch,
    "fig_stability_map": fig_stability_map,
    "figA_trajectories": figA_trajectories,
    "figB_bfield": figB_bfield,
}


def render(figure_id: str, in_dir: str, out_path: str) -> str:
    """Build and save one figure; returns the embedded manifest hash."""
    if figure_id not in FIGURES:
        raise SchemaError(
            f"unknown figure id {figure_id!r} (choose from {sorted(FIGURES)})")
    fig = FIGURES[figure_id](in_dir)
    digest = manifest_hash(in_dir)
    if out_path.lower().endswith(".pdf"):
        metadata = {"Subject": f"paultrap-manifest:{digest}"}
    else:
        metadata = {"paultrap-manifest": digest}
    fig.savefig(out_path, dpi=150, metadata=metadata)
    plt.close(fig)
    return digest
