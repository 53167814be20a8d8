import json
import math
import os

import pytest

from paultrap.cli import main as paultrap_main

TAU = 2.0 * math.pi


def run_primary(tmp_root, name, payload):
    cfg_path = tmp_root / f"{name}.json"
    cfg_path.write_text(json.dumps(payload), encoding="utf-8")
    out_dir = tmp_root / name
    code = paultrap_main([payload["experiment"], "--config", str(cfg_path),
                          "--out", str(out_dir)])
    assert code == 0, f"primary experiment {name} failed"
    return str(out_dir)


REDUCED_TRAP = {"radial_freq_hz": 400e6, "axial_freq_hz": 30e6,
                "drive_freq_hz": 2 * math.sqrt(2) * 400e6 / 0.53}
DEFAULT_TRAP = {"radial_freq_hz": 2e9, "axial_freq_hz": 3e8,
                "drive_freq_hz": 1.06e10}


@pytest.fixture(scope="session")
def primary_outputs(tmp_path_factory):
    """Miniature runs of every primary experiment the figures consume."""
    root = tmp_path_factory.mktemp("primary")
    outputs = {}

    energies = [5.26, 6.69, 8.12, 9.56, 10.99, 12.43, 14.34, 16.73, 19.11]
    outputs["threshold"] = run_primary(root, "threshold", {
        "experiment": "threshold", "seed": 3000, "trap": REDUCED_TRAP,
        "integrator": {"dt_s": 2e-12, "t_end_s": 10e-6},
        "threshold": {"direction": "axial", "spectator_temp_k": 0.1,
                      "energies_k": energies},
    })

    sweep_dir = root / "freq_sweep"
    sweep_dir.mkdir()
    for f_z, dt in ((15e6, 4e-12), (30e6, 2e-12), (60e6, 1e-12)):
        scale = (f_z / 30e6) ** (2.0 / 3.0)
        run_primary(sweep_dir, f"scan_{int(f_z / 1e6)}mhz", {
            "experiment": "threshold", "seed": int(f_z / 1e4),
            "trap": {"radial_freq_hz": f_z * 400 / 30, "axial_freq_hz": f_z,
                     "drive_freq_hz": 2 * math.sqrt(2) * (f_z * 400 / 30) / 0.53},
            "integrator": {"dt_s": dt, "t_end_s": 10e-6 * 30e6 / f_z},
            "threshold": {"direction": "axial",
                          "spectator_temp_k": round(0.096 * scale, 4),
                          "energies_k": [round(e * scale, 3) for e in energies]},
        })
    outputs["freq_sweep"] = str(sweep_dir)

    outputs["parametric"] = run_primary(root, "parametric", {
        "experiment": "parametric", "seed": 700,
        "trap": {"radial_freq_hz": 500e6, "axial_freq_hz": 75e6,
                 "drive_freq_hz": 2 * math.sqrt(2) * 500e6 / 0.53},
        "integrator": {"dt_s": 2e-12, "t_end_s": 4e-6},
        "parametric": {"a_p": 2.08e-5, "n_runs": 1,
                       "initial_temps_k": {"x": 2.0, "y": 0.4, "z": 2.0}},
    })

    outputs["stretch"] = run_primary(root, "stretch", {
        "experiment": "stretch-cooling", "seed": 500, "trap": DEFAULT_TRAP,
        "integrator": {"dt_s": 1e-12, "t_end_s": 4e-6},
        "stretch-cooling": {"a_p": 5.0, "n_runs": 1,
                            "initial_temps_k": {"axial_com": 1.0,
                                                "axial_stretch": 1.0}},
    })

    outputs["split"] = run_primary(root, "split", {
        "experiment": "split", "seed": 0, "trap": DEFAULT_TRAP,
        "integrator": {"dt_s": 1e-12},
        "split": {"d_final_m": 200e-6, "tau_s_s": 1e-6,
                  "beta_cp_v_m4": 3e15},
    })

    outputs["map"] = run_primary(root, "map", {
        "experiment": "stability-map", "seed": 0, "trap": DEFAULT_TRAP,
        "stability-map": {"qx_min": 0.4, "qx_max": 0.7, "qx_n": 4,
                          "wce_min_hz": 0.0, "wce_max_hz": 10.6e9,
                          "wce_n": 54, "n_steps_per_period": 1024},
    })

    outputs["crystal"] = run_primary(root, "crystal", {
        "experiment": "simulate", "seed": 1, "trap": DEFAULT_TRAP,
        "integrator": {"dt_s": 1e-13, "t_end_s": 2e-7, "record_stride": 200},
        "simulate": {"n_particles": 2,
                     "mode_temps_k": {"axial_com": 0.4, "axial_stretch": 0.4,
                                      "radial_com_x": 0.4,
                                      "radial_stretch_x": 0.4,
                                      "radial_com_y": 0.4,
                                      "radial_stretch_y": 0.4}},
    })

    outputs["bfield"] = run_primary(root, "bfield", {
        "experiment": "simulate", "seed": 2, "trap": DEFAULT_TRAP,
        "integrator": {"method": "rk3", "dt_s": 2e-13, "t_end_s": 5e-8,
                       "record_stride": 50},
        "simulate": {"n_particles": 1, "mode_temps_k": {"x": 0.4, "y": 0.4,
                                                        "z": 0.4},
                     "b_tesla": 0.0036},
    })

    return outputs
