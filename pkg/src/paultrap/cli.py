"""Configuration loading, experiment orchestration, and persistence.

Configs are JSON with nested sections. Every physical quantity carries a unit
suffix in its key (freq_hz, temp_k, b_tesla, ...); unknown keys are rejected
with their full path. Experiments write CSV/JSON artifacts plus a manifest,
all atomically; re-running a resolved config reproduces the data files
byte for byte.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from .core_model import (CONSTANTS, ConfigurationError, ModeTemperatureSpec,
                         SystemState, TrapConfig, derive_trap_params,
                         equilibrium_spacing, init_state, normal_modes,
                         trap_config_from_frequencies)
from .forces import (CoulombTerm, DampingTerm, ForceStack, JohnsonNoiseTerm,
                     LorentzTerm, MagneticField, NoiseProcess, TankCircuit,
                     TrapTerm)
from .integrators import IntegratorConfig, run_simulation
from .io_utils import (atomic_write_text, build_manifest, format_json,
                       write_csv, write_json)

TAU = 2.0 * math.pi

EXPERIMENTS = ("simulate", "lifetime-scan", "threshold", "cooling", "parametric",
               "stretch-cooling", "split", "shuttle", "stability-map", "linecut")

# long axial scans beyond this need --long-runs (10^10-step territory)
DESK_SCALE_T_END = 2.0e-4


class ConfigFileError(ValueError):
    """A configuration file failed to parse or validate."""


_TRAP_KEYS = {
    "radial_freq_hz": float, "axial_freq_hz": float, "drive_freq_hz": float,
    "u_dc_v": float, "v0_v": float,
    "kappa": float, "r0_m": float, "z0_m": float, "d_eff_m": float,
    "rf_phase_rad": float, "charge_sign": int,
}

_INTEGRATOR_KEYS = {
    "method": str, "dt_s": float, "t_end_s": float, "record_stride": int,
    "window_steps": int,
}

_CIRCUIT_KEYS = {"l_h": float, "c_f": float, "q_factor": float, "t_res_k": float}

_EXPERIMENT_KEYS = {
    "simulate": {"n_particles": int, "mode_temps_k": dict, "b_tesla": float,
                 "circuit": dict, "enable_damping": bool, "enable_noise": bool,
                 "coulomb": bool},
    "lifetime-scan": {"direction": str, "energies_k": list,
                      "spectator_temp_k": float},
    "threshold": {"direction": str, "energies_k": list,
                  "spectator_temp_k": float, "target_rate_hz": float},
    "cooling": {"initial_temp_k": float, "circuit": dict, "enable_noise": bool,
                "n_runs": int},
    "parametric": {"a_p": float, "circuit": dict, "initial_temps_k": dict,
                   "n_runs": int, "drive_freq_hz": float},
    "stretch-cooling": {"a_p": float, "circuit": dict, "initial_temps_k": dict,
                        "n_runs": int, "resonance_ref_temp_k": float},
    "split": {"d_final_m": float, "tau_s_s": float, "beta_cp_v_m4": float,
              "initial_temps_k": dict, "n_schedule_samples": int},
    "shuttle": {"tau_t_s": float, "displacement_m": float,
                "tau_sweep_s": list},
    "stability-map": {"qx_min": float, "qx_max": float, "qx_n": int,
                      "wce_min_hz": float, "wce_max_hz": float, "wce_n": int,
                      "n_steps_per_period": int},
    "linecut": {"qx": float, "wce_hz": list, "t_end_s": float,
                "init_temp_k": float},
}

_TOP_KEYS = {"experiment": str, "seed": int, "output_dir": str, "trap": dict,
             "integrator": dict}


@dataclass
class RunConfig:
    experiment: str
    seed: int
    trap: TrapConfig
    integrator: dict
    block: dict
    raw: dict
    output_dir: str | None = None


def _check_keys(section: dict, allowed: dict, path: str):
    for key, value in section.items():
        if key not in allowed:
            raise ConfigFileError(
                f"unknown key '{path}.{key}' (allowed: {sorted(allowed)})")
        want = allowed[key]
        if want in (float, int):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigFileError(f"'{path}.{key}' must be a number")
        elif not isinstance(value, want):
            raise ConfigFileError(f"'{path}.{key}' must be {want.__name__}")


def load_config(path: str) -> RunConfig:
    """Parse and validate a JSON experiment config."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigFileError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigFileError(
            f"{path}: JSON parse error at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}")
    if not isinstance(raw, dict):
        raise ConfigFileError(f"{path}: top level must be a JSON object")

    experiment = raw.get("experiment")
    if experiment is None:
        raise ConfigFileError(
            f"{path}: missing required keys; need at least 'experiment' "
            f"(one of {EXPERIMENTS}) and a 'trap' section")
    if experiment not in EXPERIMENTS:
        raise ConfigFileError(
            f"{path}: unknown experiment {experiment!r} (choose from {EXPERIMENTS})")

    allowed_top = dict(_TOP_KEYS)
    allowed_top[experiment] = dict
    _check_keys(raw, allowed_top, "$")

    trap_raw = raw.get("trap", {})
    _check_keys(trap_raw, _TRAP_KEYS, "$.trap")
    trap = _build_trap(trap_raw)

    integ_raw = dict(raw.get("integrator", {}))
    _check_keys(integ_raw, _INTEGRATOR_KEYS, "$.integrator")

    block = dict(raw.get(experiment, {}))
    _check_keys(block, _EXPERIMENT_KEYS[experiment], f"$.{experiment}")
    if "circuit" in block:
        _check_keys(block["circuit"], _CIRCUIT_KEYS, f"$.{experiment}.circuit")

    try:
        seed = int(raw.get("seed", 0))
    except (TypeError, ValueError):
        raise ConfigFileError("$.seed must be an integer")

    return RunConfig(experiment=experiment, seed=seed, trap=trap,
                     integrator=integ_raw, block=block, raw=raw,
                     output_dir=raw.get("output_dir"))


def _build_trap(section: dict) -> TrapConfig:
    geometry = dict(
        kappa=section.get("kappa", 0.5),
        r0=section.get("r0_m", 100e-6),
        z0=section.get("z0_m", 100e-6),
        d_eff=section.get("d_eff_m", 254e-6),
        phi=section.get("rf_phase_rad", 0.0),
        charge_sign=int(section.get("charge_sign", -1)),
    )
    drive_hz = section.get("drive_freq_hz", 10.6e9)
    by_voltage = "u_dc_v" in section or "v0_v" in section
    try:
        if by_voltage:
            return TrapConfig(u_dc=section.get("u_dc_v", 0.0),
                              v0=section.get("v0_v", 0.0),
                              omega_rf=TAU * drive_hz, **geometry)
        return trap_config_from_frequencies(
            omega_r=TAU * section.get("radial_freq_hz", 2e9),
            omega_z=TAU * section.get("axial_freq_hz", 300e6),
            omega_rf=TAU * drive_hz, **geometry)
    except ConfigurationError as exc:
        raise ConfigFileError(f"$.trap: {exc}")


def _build_circuit(section: dict) -> TankCircuit:
    return TankCircuit(L=section.get("l_h", 250e-9), C=section.get("c_f", 1e-12),
                       Q=section.get("q_factor", 1000.0),
                       T_res=section.get("t_res_k", 0.4))


def resolved_config(cfg: RunConfig) -> dict:
    """Input config echoed with every derived parameter, for provenance."""
    derived = derive_trap_params(cfg.trap)
    out = {
        "input": cfg.raw,
        "derived": {
            "q_x": derived.q_x, "q_y": derived.q_y,
            "a_x": derived.a_x, "a_y": derived.a_y, "a_z": derived.a_z,
            "radial_freq_hz": derived.omega_r / TAU,
            "axial_freq_hz": derived.omega_z / TAU,
            "drive_freq_hz": cfg.trap.omega_rf / TAU,
            "u_dc_v": cfg.trap.u_dc, "v0_v": cfg.trap.v0,
        },
    }
    if derived.omega_z > 0:
        out["derived"]["equilibrium_spacing_m"] = equilibrium_spacing(derived.omega_z)
    block = cfg.block
    if "circuit" in block:
        circ = _build_circuit(block["circuit"])
        out["derived"]["circuit_r_ohm"] = circ.R
        out["derived"]["damping_rate_hz"] = circ.damping_rate(cfg.trap.d_eff)
    return out


def _integrator(cfg: RunConfig, default_method="velocity_verlet",
                default_dt=1e-13, default_t_end=0.0, default_stride=1000,
                recorders=("trajectory", "events")) -> IntegratorConfig:
    sec = cfg.integrator
    return IntegratorConfig(
        method=sec.get("method", default_method),
        dt=sec.get("dt_s", default_dt),
        t_end=sec.get("t_end_s", default_t_end),
        record_stride=sec.get("record_stride", default_stride),
        recorders=recorders,
        window_steps=sec.get("window_steps", 0),
    )


def heartbeat(msg: str):
    print(msg, file=sys.stderr, flush=True)


def dispatch(cfg: RunConfig, out_dir: str, jobs: int = 1,
             long_runs: bool = False) -> int:
    """Run the configured experiment and write its artifacts."""
    os.makedirs(out_dir, exist_ok=True)
    t_wall = time.perf_counter()
    resolved = resolved_config(cfg)
    resolved_text = format_json(resolved)
    atomic_write_text(os.path.join(out_dir, "resolved_config.json"), resolved_text)

    runner = {
        "simulate": _run_simulate,
        "lifetime-scan": _run_scan,
        "threshold": _run_scan,
        "cooling": _run_cooling,
        "parametric": _run_parametric,
        "stretch-cooling": _run_stretch,
        "split": _run_split_exp,
        "shuttle": _run_shuttle_exp,
        "stability-map": _run_stability_map,
        "linecut": _run_linecut,
    }[cfg.experiment]
    try:
        seeds = runner(cfg, out_dir, jobs, long_runs)
    except Exception as exc:  # error artifact for machine consumption
        write_json(os.path.join(out_dir, "error.json"),
                   {"error": type(exc).__name__, "message": str(exc),
                    "experiment": cfg.experiment})
        raise
    manifest = build_manifest(resolved_text, seeds, time.perf_counter() - t_wall)
    write_json(os.path.join(out_dir, "manifest.json"), manifest)
    return 0


def _trajectory_csv(path: str, record):
    n = record.n_particles
    cols = ["t_s"]
    for i in range(1, n + 1):
        cols += [f"x{i}_m", f"y{i}_m", f"z{i}_m",
                 f"vx{i}_mps", f"vy{i}_mps", f"vz{i}_mps"]
    rows = []
    for k in range(len(record.times)):
        row = [record.times[k]]
        for i in range(n):
            row.extend(record.positions[k, i])
            row.extend(record.velocities[k, i])
        rows.append(row)
    write_csv(path, cols, rows)


def _run_simulate(cfg: RunConfig, out_dir, jobs, long_runs):
    block = cfg.block
    n = block.get("n_particles", 1)
    derived = derive_trap_params(cfg.trap)
    temps = block.get("mode_temps_k", {})
    spec = ModeTemperatureSpec(temperatures=temps, rng_seed=cfg.seed,
                               n_particles=n)
    if n == 2:
        modes = normal_modes(derived.omega_r, derived.omega_z)
        l = equilibrium_spacing(derived.omega_z)
        initial = init_state(modes, spec, l)
    else:
        initial = init_state(None, spec)

    terms = [TrapTerm(cfg.trap)]
    if block.get("coulomb", n == 2) and n == 2:
        terms.append(CoulombTerm())
    if block.get("b_tesla", 0.0):
        terms.append(LorentzTerm(MagneticField.along_y(block["b_tesla"]),
                                 cfg.trap.charge_sign))
    if block.get("enable_damping") or block.get("enable_noise"):
        circ = _build_circuit(block.get("circuit", {}))
        if block.get("enable_damping"):
            terms.append(DampingTerm(circ, cfg.trap.d_eff))
        if block.get("enable_noise"):
            terms.append(JohnsonNoiseTerm(NoiseProcess.from_circuit(circ, cfg.seed),
                                          cfg.trap.d_eff))
    stack = ForceStack(terms)
    default_method = "rk3" if stack.velocity_dependent else "velocity_verlet"
    icfg = _integrator(cfg, default_method=default_method)
    record = run_simulation(initial, stack, icfg)
    _trajectory_csv(os.path.join(out_dir, "trajectory.csv"), record)
    write_json(os.path.join(out_dir, "events.json"),
               {"status": record.status, "events": record.events,
                "n_steps": record.n_steps,
                "max_radial_energy_j": record.max_radial_energy})
    return [cfg.seed]


def _run_scan(cfg: RunConfig, out_dir, jobs, long_runs):
    from .wigner import lifetime_scan, threshold_scan

    block = cfg.block
    icfg = _integrator(cfg, default_dt=1e-12, default_t_end=10e-6)
    if icfg.t_end > DESK_SCALE_T_END and not long_runs:
        raise ConfigurationError(
            f"t_end={icfg.t_end:g}s exceeds the desk-scale limit "
            f"{DESK_SCALE_T_END:g}s; pass --long-runs to allow it")
    energies = block.get("energies_k", [])
    direction = block.get("direction", "axial")
    spectator = block.get("spectator_temp_k", 0.4)
    heartbeat(f"scan: {len(energies)} points, direction={direction}, "
              f"t_end={icfg.t_end:g}s")
    if cfg.experiment == "threshold":
        result = threshold_scan(energies, direction, spectator, cfg.trap,
                                icfg.t_end, icfg.dt, base_seed=cfg.seed,
                                target_rate=block.get("target_rate_hz"),
                                jobs=jobs)
    else:
        result = lifetime_scan(energies, direction, spectator, cfg.trap,
                               icfg.t_end, icfg.dt, base_seed=cfg.seed,
                               jobs=jobs)
    rows = [(r.temperature, r.rate, r.censored, r.seed, r.status)
            for r in result.records]
    write_csv(os.path.join(out_dir, "scan.csv"),
              ["temperature_k", "rate_hz", "censored", "seed", "status"], rows)
    payload = {
        "direction": result.direction,
        "spectator_temp_k": result.spectator_temp,
        "t_end_s": result.t_end, "dt_s": result.dt,
        "base_seed": result.base_seed,
        "target_rate_hz": result.target_rate,
        "trap": result.trap_summary,
        "records": [{"temperature_k": r.temperature, "rate_hz": r.rate,
                     "censored": r.censored, "lifetime_s": r.lifetime,
                     "seed": r.seed, "status": r.status}
                    for r in result.records],
    }
    if result.fit is not None:
        payload["fit"] = {"a": result.fit.a, "t0_k": result.fit.t0_k,
                          "tau_k": result.fit.tau_k, "f0": result.fit.f0,
                          "residual_rms": result.fit.residual_rms}
        payload["threshold_k"] = result.threshold_k
        # mean-rate curve for plotting
        from .wigner import boltzmann_mean_rate
        temps = np.linspace(max(0.05, 0.1 * result.threshold_k),
                            max(result.records[-1].temperature, 1.0), 60)
        payload["mean_rate_curve"] = {
            "temperature_k": list(temps),
            "rate_hz": [boltzmann_mean_rate(result.fit, t) for t in temps]}
    write_json(os.path.join(out_dir, "scan.json"), payload)
    return [r.seed for r in result.records]


def _run_cooling(cfg: RunConfig, out_dir, jobs, long_runs):
    from .cooling import run_resistive_cooling

    block = cfg.block
    circ = _build_circuit(block.get("circuit", {}))
    icfg = cfg.integrator
    n_runs = block.get("n_runs", 1)
    seeds = [cfg.seed + k for k in range(n_runs)]
    results = []
    for k, seed in enumerate(seeds):
        heartbeat(f"cooling run {k + 1}/{n_runs}")
        results.append(run_resistive_cooling(
            block.get("initial_temp_k", 0.4), circ, cfg.trap,
            t_end=icfg.get("t_end_s"), dt=icfg.get("dt_s", 5e-12),
            rng_seed=seed, noise=block.get("enable_noise", True)))
    first = results[0]
    write_csv(os.path.join(out_dir, "cooling_curve.csv"),
              ["t_s", "energy_z_j"],
              np.column_stack([first.times, first.energies["z"]]))
    temps = [r.equilibrium["z"].temperature for r in results]
    write_json(os.path.join(out_dir, "summary.json"), {
        "equilibrium_temp_k": {"per_run": temps,
                               "mean": float(np.mean(temps)),
                               "std": float(np.std(temps, ddof=1)) if n_runs > 1 else 0.0},
        "decay_time_s": first.decay_time,
        "damping_rate_hz": circ.damping_rate(cfg.trap.d_eff),
        "seeds": seeds,
    })
    return seeds


def _run_parametric(cfg: RunConfig, out_dir, jobs, long_runs):
    from .cooling import run_parametric_single

    block = cfg.block
    circ = _build_circuit(block.get("circuit", {}))
    icfg = cfg.integrator
    n_runs = block.get("n_runs", 1)
    seeds = [cfg.seed + k for k in range(n_runs)]
    omega_p = TAU * block["drive_freq_hz"] if "drive_freq_hz" in block else None
    results = []
    for k, seed in enumerate(seeds):
        heartbeat(f"parametric run {k + 1}/{n_runs}")
        results.append(run_parametric_single(
            cfg.trap, circ, a_p=block.get("a_p", 5.2e-6),
            t_end=icfg.get("t_end_s", 60e-6), dt=icfg.get("dt_s", 1e-12),
            rng_seed=seed, initial_temps=block.get("initial_temps_k"),
            omega_p=omega_p))
    first = results[0]
    write_csv(os.path.join(out_dir, "cooling_curve.csv"),
              ["t_s", "energy_z_j", "energy_x_j"],
              np.column_stack([first.times, first.energies["z"],
                               first.energies["x"]]))
    tz = [r.equilibrium["z"].temperature for r in results]
    tx = [r.equilibrium["x"].temperature for r in results]
    write_json(os.path.join(out_dir, "summary.json"), {
        "axial_temp_k": {"per_run": tz, "mean": float(np.mean(tz))},
        "radial_temp_k": {"per_run": tx, "mean": float(np.mean(tx))},
        "ratio_mean": float(np.mean(tx) / np.mean(tz)),
        "seeds": seeds,
    })
    return seeds


def _run_stretch(cfg: RunConfig, out_dir, jobs, long_runs):
    from .cooling import run_stretch_cooling, stretch_drive_frequency

    block = cfg.block
    circ = _build_circuit(block.get("circuit", {}))
    icfg = cfg.integrator
    n_runs = block.get("n_runs", 1)
    seeds = [cfg.seed + k for k in range(n_runs)]
    omega_p = None
    if "resonance_ref_temp_k" in block:
        omega_p = stretch_drive_frequency(cfg.trap, block["resonance_ref_temp_k"])
    results = []
    for k, seed in enumerate(seeds):
        heartbeat(f"stretch-cooling run {k + 1}/{n_runs}")
        results.append(run_stretch_cooling(
            cfg.trap, circ, a_p=block.get("a_p", 5.0),
            t_end=icfg.get("t_end_s", 150e-6), dt=icfg.get("dt_s", 1e-12),
            rng_seed=seed, initial_temps=block.get("initial_temps_k"),
            omega_p=omega_p))
    first = results[0]
    write_csv(os.path.join(out_dir, "cooling_curve.csv"),
              ["t_s", "energy_com_j", "energy_stretch_j"],
              np.column_stack([first.times, first.energies["axial_com"],
                               first.energies["axial_stretch"]]))
    tc = [r.equilibrium["axial_com"].temperature for r in results]
    ts = [r.equilibrium["axial_stretch"].temperature for r in results]
    write_json(os.path.join(out_dir, "summary.json"), {
        "com_temp_k": {"per_run": tc, "mean": float(np.mean(tc))},
        "stretch_temp_k": {"per_run": ts, "mean": float(np.mean(ts))},
        "stretch_floor_prediction_k": math.sqrt(3.0) * circ.T_res,
        "seeds": seeds,
    })
    return seeds


def _run_split_exp(cfg: RunConfig, out_dir, jobs, long_runs):
    from .transport import build_split_schedule, run_split

    block = cfg.block
    derived = derive_trap_params(cfg.trap)
    sched = build_split_schedule(
        derived.omega_z, block.get("d_final_m", 200e-6),
        block.get("tau_s_s", 1e-6), block.get("beta_cp_v_m4", 3e15),
        n_samples=block.get("n_schedule_samples", 2001))
    write_csv(os.path.join(out_dir, "schedule.csv"),
              ["t_s", "alpha_v_m2", "beta_v_m4", "d_m"],
              np.column_stack([sched.grid_t, sched.grid_alpha,
                               sched.grid_beta, sched.grid_d]))
    result = run_split(sched, cfg.trap,
                       initial_temps=block.get("initial_temps_k"),
                       dt=cfg.integrator.get("dt_s", 1e-12))
    write_json(os.path.join(out_dir, "result.json"), {
        "dn_com": result.dn_com, "dn_stretch": result.dn_stretch,
        "final_com_freq_hz": result.omega_com_final / TAU,
        "final_stretch_freq_hz": result.omega_stretch_final / TAU,
        "tau_s_s": sched.tau_s, "t_cp_s": sched.t_cp, "d0_m": sched.d0,
        "status": result.status,
    })
    return [cfg.seed]


def _run_shuttle_exp(cfg: RunConfig, out_dir, jobs, long_runs):
    from .transport import ShuttleSchedule, run_shuttle

    block = cfg.block
    derived = derive_trap_params(cfg.trap)
    dt = cfg.integrator.get("dt_s", 1e-12)
    taus = block.get("tau_sweep_s") or [block.get("tau_t_s", 1e-6)]
    displacement = block.get("displacement_m", 100e-6)
    results = []
    for tau_t in taus:
        sched = ShuttleSchedule(tau_t=tau_t, displacement=displacement)
        dn = run_shuttle(sched, derived.omega_z, dt=dt)
        results.append({"tau_t_s": tau_t, "dn": dn})
    sched = ShuttleSchedule(tau_t=taus[0], displacement=displacement)
    ts = np.linspace(0.0, sched.tau_t, 501)
    write_csv(os.path.join(out_dir, "schedule.csv"), ["t_s", "zc_m"],
              np.column_stack([ts, [sched.center_at(t) for t in ts]]))
    write_json(os.path.join(out_dir, "result.json"),
               {"displacement_m": displacement, "results": results})
    return [cfg.seed]


def _run_stability_map(cfg: RunConfig, out_dir, jobs, long_runs):
    from .stability import stability_map

    block = cfg.block
    derived = derive_trap_params(cfg.trap)
    qx = np.linspace(block.get("qx_min", 0.1), block.get("qx_max", 0.9),
                     block.get("qx_n", 33))
    wce = TAU * np.linspace(block.get("wce_min_hz", 0.0),
                            block.get("wce_max_hz", 10.6e9),
                            block.get("wce_n", 65))
    heartbeat(f"stability map: {len(qx)}x{len(wce)} cells")
    grid = stability_map(qx, wce, cfg.trap.omega_rf, derived.omega_z,
                         kappa=cfg.trap.kappa, r0=cfg.trap.r0, z0=cfg.trap.z0,
                         n_steps_per_period=block.get("n_steps_per_period", 2048))
    rows = []
    for i in range(len(qx)):
        for j in range(len(wce)):
            rows.append((grid.q_x[i], grid.omega_ce[j] / TAU, grid.lam[i, j],
                         grid.beta[i, j], grid.stable[i, j]))
    write_csv(os.path.join(out_dir, "grid.csv"),
              ["q_x", "omega_ce_hz", "lambda", "beta_x", "stable"], rows)
    return [cfg.seed]


def _run_linecut(cfg: RunConfig, out_dir, jobs, long_runs):
    from .stability import max_energy_linecut

    block = cfg.block
    derived = derive_trap_params(cfg.trap)
    wce = TAU * np.asarray(block.get("wce_hz", [1e8]))
    heartbeat(f"linecut: {len(wce)} points, t_end={block.get('t_end_s', 25e-6):g}s")
    result = max_energy_linecut(
        block.get("qx", 0.53), wce, cfg.trap.omega_rf, derived.omega_z,
        t_end=block.get("t_end_s", 25e-6), dt=cfg.integrator.get("dt_s", 2e-13),
        init_temp=block.get("init_temp_k", 0.4), kappa=cfg.trap.kappa,
        r0=cfg.trap.r0, z0=cfg.trap.z0)
    ev = 1.602176634e-19
    rows = np.column_stack([result.omega_ce / TAU, result.max_energy / ev,
                            result.lam, result.stable_floquet, ~result.capped])
    write_csv(os.path.join(out_dir, "linecut.csv"),
              ["omega_ce_hz", "max_energy_ev", "lambda", "stable_floquet",
               "stable_time_domain"], rows)
    return [cfg.seed]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="paultrap",
        description="Electron dynamics experiments in a linear Paul trap")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--jobs", type=int,
                        default=int(os.environ.get("PAULTRAP_JOBS", "1")))
    parser.add_argument("--long-runs", action="store_true",
                        help="allow scans beyond the desk-scale time limit")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except ConfigFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if cfg.experiment != args.experiment:
        print(f"error: config declares experiment {cfg.experiment!r}, "
              f"command line says {args.experiment!r}", file=sys.stderr)
        return 2
    out_dir = args.out or cfg.output_dir or f"paultrap_out_{cfg.experiment}"
    try:
        return dispatch(cfg, out_dir, jobs=args.jobs, long_runs=args.long_runs)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
