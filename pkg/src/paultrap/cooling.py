"""Resistive and parametric cooling experiments with secular-energy estimation.

Temperatures are defined from window-averaged kinetic energies. Axes without
RF drive carry no micromotion, so the mode energy is twice the mean kinetic
energy (equipartition). For radially RF-driven motion the window-averaged
kinetic energy already equals the full secular mode energy: the micromotion
kinetic energy stands in for the pseudopotential share (virial of the drive),
so no factor of two is applied there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import (CONSTANTS, ConfigurationError, PhysicalConstants,
                         SystemState, TrapConfig, derive_trap_params,
                         equilibrium_spacing, normal_modes)
from .forces import (CoulombTerm, DampingTerm, ForceStack, JohnsonNoiseTerm,
                     NoiseProcess, ParametricDrive, ParametricTerm, TankCircuit,
                     TrapTerm)
from .integrators import IntegratorConfig, RunRecord, run_simulation

# window_mode_vsq column layout (see _kernels.run_chunk): single particle uses
# (x, y, z) in columns 0/2/4; two particles use COM/stretch pairs per axis
_COL = {"x": 0, "y": 2, "z": 4,
        "radial_com_x": 0, "radial_stretch_x": 1,
        "radial_com_y": 2, "radial_stretch_y": 3,
        "axial_com": 4, "axial_stretch": 5}


@dataclass(frozen=True)
class TemperatureEstimate:
    """Temperature of one axis or normal mode over an averaging window."""

    mode: str
    temperature: float        # K
    window: tuple             # (t_start, t_end), s
    n_windows: int
    std: float = 0.0          # std over the contributing windows


def _mode_mass_and_rf(mode: str, n_particles: int, constants: PhysicalConstants,
                      rf_active: bool) -> tuple[float, bool]:
    """Effective mass of the mode coordinate and whether it carries micromotion."""
    m = constants.m
    if n_particles == 1:
        mass = m
        micromotion = rf_active and mode in ("x", "y")
    else:
        mass = 2.0 * m if "com" in mode else 0.5 * m
        micromotion = rf_active and mode.startswith("radial")
    return mass, micromotion


def mode_energy_series(record: RunRecord, mode: str,
                       rf_active: bool = True,
                       constants: PhysicalConstants = CONSTANTS):
    """(window_times, mode_energy) from the run's energy recorder, J."""
    if record.window_mode_vsq.size == 0:
        raise ConfigurationError("record carries no energy-recorder windows")
    col = _COL[mode]
    mass, micromotion = _mode_mass_and_rf(mode, record.n_particles, constants, rf_active)
    mean_ke = 0.5 * mass * record.window_mode_vsq[:, col]
    energy = mean_ke if micromotion else 2.0 * mean_ke
    return record.window_times, energy


def secular_temperature(record: RunRecord, mode: str, window: tuple,
                        rf_active: bool = True,
                        constants: PhysicalConstants = CONSTANTS) -> TemperatureEstimate:
    """Mode temperature from window-averaged squared velocities.

    `window` is (t_start, t_end) within the record; it must contain at least
    one full averaging window of the energy recorder.
    """
    times, energy = mode_energy_series(record, mode, rf_active, constants)
    t_lo, t_hi = window
    if t_hi > record.final_state.t + record.dt:
        raise ConfigurationError(
            f"window end {t_hi:g} exceeds the record span {record.final_state.t:g}")
    sel = (times > t_lo) & (times <= t_hi)
    if not np.any(sel):
        raise ConfigurationError("window contains no recorded energy samples")
    temps = energy[sel] / constants.kB
    return TemperatureEstimate(mode=mode, temperature=float(np.mean(temps)),
                               window=(t_lo, t_hi), n_windows=int(np.sum(sel)),
                               std=float(np.std(temps)))


@dataclass
class CoolingResult:
    """One cooling run: energy curve, fitted decay constant, and equilibrium."""

    times: np.ndarray
    energies: dict            # mode -> J array
    decay_time: float | None  # s, from log-energy regression
    equilibrium: dict         # mode -> TemperatureEstimate
    record: RunRecord


@dataclass
class EnsembleResult:
    """Per-run equilibrium temperatures and their ensemble statistics."""

    temperatures: dict        # mode -> array over runs, K
    mean: dict                # mode -> K
    std: dict                 # mode -> K
    runs: list


def fit_decay_time(times: np.ndarray, energies: np.ndarray,
                   t_lo: float, t_hi: float) -> float:
    """Exponential time constant from linear regression on log energy."""
    sel = (times >= t_lo) & (times <= t_hi) & (energies > 0)
    if np.sum(sel) < 3:
        raise ConfigurationError("too few samples for a decay fit")
    slope, _ = np.polyfit(times[sel], np.log(energies[sel]), 1)
    return -1.0 / slope


def run_resistive_cooling(initial_temp: float, circuit: TankCircuit,
                          trap_cfg: TrapConfig, t_end: float | None = None,
                          dt: float = 5e-12, rng_seed: int = 0,
                          noise: bool = True,
                          constants: PhysicalConstants = CONSTANTS) -> CoolingResult:
    """Cool a single electron's axial mode against the tank circuit.

    The axial dynamics decouples from the RF drive exactly (linear trap,
    electron on axis), so the run uses the DC axial well only, which frees the
    step size from the RF period. Energy decays at gamma = q^2 R/(m d_eff^2).
    """
    derived = derive_trap_params(trap_cfg, constants)
    omega_z = derived.omega_z
    if omega_z <= 0:
        raise ConfigurationError("resistive cooling needs axial confinement")
    gamma = circuit.damping_rate(trap_cfg.d_eff, constants)
    tau_c = 1.0 / gamma
    if t_end is None:
        t_end = 12.0 * tau_c

    m = constants.m
    v0 = math.sqrt(constants.kB * initial_temp / m)
    initial = SystemState(0.0, np.zeros((1, 3)), np.array([[0.0, 0.0, v0]]))

    axial_cfg = _axial_only(trap_cfg)
    terms = [TrapTerm(axial_cfg), DampingTerm(circuit, trap_cfg.d_eff)]
    if noise:
        terms.append(JohnsonNoiseTerm(
            NoiseProcess.from_circuit(circuit, rng_seed, constants), trap_cfg.d_eff))
    stack = ForceStack(terms)

    window = _window_steps(omega_z, trap_cfg.omega_rf, dt)
    cfg = IntegratorConfig(method="rk3", dt=dt, t_end=t_end,
                           record_stride=max(1, int(round(t_end / dt)) // 500),
                           recorders=("trajectory", "energy", "events"),
                           window_steps=window)
    record = run_simulation(initial, stack, cfg, constants)

    times, energy = mode_energy_series(record, "z", rf_active=False, constants=constants)
    decay = None
    if not noise and initial_temp > 0:
        decay = fit_decay_time(times, energy, tau_c, 6.0 * tau_c)
    eq = secular_temperature(record, "z", (t_end - 6.0 * tau_c, t_end),
                             rf_active=False, constants=constants)
    return CoolingResult(times=times, energies={"z": energy}, decay_time=decay,
                         equilibrium={"z": eq}, record=record)


def resistive_cooling_ensemble(initial_temp: float, circuit: TankCircuit,
                               trap_cfg: TrapConfig, n_runs: int = 20,
                               base_seed: int = 1000, t_end: float | None = None,
                               dt: float = 5e-12,
                               constants: PhysicalConstants = CONSTANTS) -> EnsembleResult:
    runs = []
    temps = []
    for k in range(n_runs):
        res = run_resistive_cooling(initial_temp, circuit, trap_cfg, t_end=t_end,
                                    dt=dt, rng_seed=base_seed + k,
                                    constants=constants)
        runs.append(res)
        temps.append(res.equilibrium["z"].temperature)
    arr = np.array(temps)
    return EnsembleResult(temperatures={"z": arr}, mean={"z": float(arr.mean())},
                          std={"z": float(arr.std(ddof=1))}, runs=runs)


def radial_secular_frequency(trap_cfg: TrapConfig,
                             constants: PhysicalConstants = CONSTANTS) -> float:
    """Exact radial secular frequency of the driven trap, rad/s.

    The pseudopotential expression underestimates omega_x by a few percent at
    q_x ~ 0.5, far more than a parametric linewidth, so resonant drives are
    placed with the Floquet value instead.
    """
    from .stability import beta_x as beta_x_op
    from .stability import linearized_system, monodromy

    system = linearized_system(trap_cfg, None, constants)
    phi = monodromy(system, 2048)
    beta = beta_x_op(phi, trap_cfg.omega_rf)
    return 0.5 * beta.beta * trap_cfg.omega_rf


def run_parametric_single(trap_cfg: TrapConfig, circuit: TankCircuit,
                          a_p: float, t_end: float, dt: float = 1e-12,
                          rng_seed: int = 0, initial_temps: dict | None = None,
                          omega_p: float | None = None,
                          constants: PhysicalConstants = CONSTANTS) -> CoolingResult:
    """Cool a single electron's radial mode through the rz parametric drive.

    The tank circuit sits on z; the drive at omega_p = omega_x - omega_z
    exchanges radial and axial quanta, so the radial mode thermalizes at
    roughly (omega_x/omega_z) times the circuit temperature.
    """
    derived = derive_trap_params(trap_cfg, constants)
    if omega_p is None:
        omega_x = radial_secular_frequency(trap_cfg, constants)
        omega_p = omega_x - derived.omega_z
    drive = ParametricDrive("rz", a_p, omega_p)
    g_rz = drive.coupling_rate_rz(trap_cfg.omega_rf, derived.omega_r,
                                  derived.omega_z)
    if a_p > 0 and abs(omega_p - (radial_secular_frequency(trap_cfg, constants)
                                  - derived.omega_z)) > 10.0 * g_rz:
        import warnings
        warnings.warn("parametric drive detuned by more than 10 g_rz; "
                      "no radial cooling expected", stacklevel=2)

    temps = {"x": 2.0, "y": 0.4, "z": 2.0}
    temps.update(initial_temps or {})
    m = constants.m
    kB = constants.kB
    vel = [[math.sqrt(kB * temps["x"] / m), math.sqrt(kB * temps["y"] / m),
            math.sqrt(kB * temps["z"] / m)]]
    initial = SystemState(0.0, np.zeros((1, 3)), np.array(vel))

    noise = NoiseProcess.from_circuit(circuit, rng_seed, constants)
    stack = ForceStack([TrapTerm(trap_cfg), DampingTerm(circuit, trap_cfg.d_eff),
                        JohnsonNoiseTerm(noise, trap_cfg.d_eff),
                        ParametricTerm(drive, trap_cfg)])
    window = _window_steps(derived.omega_z, trap_cfg.omega_rf, dt)
    cfg = IntegratorConfig(method="rk3", dt=dt, t_end=t_end,
                           record_stride=max(1, int(round(t_end / dt)) // 200),
                           recorders=("trajectory", "energy", "events"),
                           window_steps=window)
    record = run_simulation(initial, stack, cfg, constants)

    tz, ez = mode_energy_series(record, "z", rf_active=True, constants=constants)
    _, ex = mode_energy_series(record, "x", rf_active=True, constants=constants)
    gamma = circuit.damping_rate(trap_cfg.d_eff, constants)
    tail = (max(0.0, t_end - 6.0 / gamma), t_end)
    eq = {"z": secular_temperature(record, "z", tail, True, constants),
          "x": secular_temperature(record, "x", tail, True, constants)}
    return CoolingResult(times=tz, energies={"z": ez, "x": ex}, decay_time=None,
                         equilibrium=eq, record=record)


def stretch_mode_frequency_shift(temperature: float, omega_z: float,
                                 constants: PhysicalConstants = CONSTANTS) -> float:
    """Fractional hardening of the axial stretch frequency at finite amplitude.

    The Coulomb anharmonicity shifts the stretch mode by
    d_omega/omega_s = (A/l)^2 / 12 for oscillation amplitude A around the
    spacing l; A is taken at the given mode temperature (total energy kB*T).
    """
    mu = 0.5 * constants.m
    omega_s = math.sqrt(3.0) * omega_z
    l = equilibrium_spacing(omega_z, constants)
    amp_sq = 2.0 * constants.kB * temperature / (mu * omega_s ** 2)
    return amp_sq / l ** 2 / 12.0


def stretch_drive_frequency(trap_cfg: TrapConfig, ref_temperature: float = 0.0,
                            constants: PhysicalConstants = CONSTANTS) -> float:
    """Stretch-COM difference frequency, optionally amplitude-corrected.

    With ref_temperature = 0 this is the linear resonance
    omega_s - omega_c = (sqrt(3)-1) omega_z; a positive reference temperature
    adds the anharmonic hardening of the stretch mode at that amplitude,
    which keeps a weak drive resonant near its expected equilibrium.
    """
    derived = derive_trap_params(trap_cfg, constants)
    omega_s = math.sqrt(3.0) * derived.omega_z
    shift = stretch_mode_frequency_shift(ref_temperature, derived.omega_z,
                                         constants) if ref_temperature > 0 else 0.0
    return omega_s * (1.0 + shift) - derived.omega_z


def run_stretch_cooling(trap_cfg: TrapConfig, circuit: TankCircuit,
                        a_p: float, t_end: float, dt: float = 1e-12,
                        rng_seed: int = 0, initial_temps: dict | None = None,
                        omega_p: float | None = None,
                        constants: PhysicalConstants = CONSTANTS) -> CoolingResult:
    """Cool the two-electron axial stretch mode through the z^3 drive.

    The circuit damps only the axial COM mode (summed image current); the
    cubic drive at omega_p = omega_s - omega_c couples stretch and COM, so the
    stretch mode settles near sqrt(3) times the COM temperature. Starting from
    a cloud state defeats the expansion around the crystal equilibria, so hot
    initial conditions trigger a warning.
    """
    derived = derive_trap_params(trap_cfg, constants)
    omega_z = derived.omega_z
    modes = normal_modes(derived.omega_r, omega_z)
    if omega_p is None:
        omega_p = modes.axial_stretch - modes.axial_com
    drive = ParametricDrive("z3", a_p, omega_p)

    temps = {"axial_com": 4.0, "axial_stretch": 8.0}
    temps.update(initial_temps or {})
    l = equilibrium_spacing(omega_z, constants)
    barrier = coulomb_barrier_energy(omega_z, constants)
    hot = constants.kB * max(temps.values()) / 2.0 > barrier
    if hot:
        import warnings
        warnings.warn("initial state is in the cloud regime; the stretch-COM "
                      "coupling assumes small displacements around the crystal",
                      stacklevel=2)

    m = constants.m
    kB = constants.kB
    pos = np.zeros((2, 3))
    pos[0, 2] = -0.5 * l
    pos[1, 2] = +0.5 * l
    vel = np.zeros((2, 3))
    vc = math.sqrt(0.5 * kB * temps["axial_com"] / m)
    vs = math.sqrt(0.5 * kB * temps["axial_stretch"] / m)
    vel[0, 2] = vc + vs
    vel[1, 2] = vc - vs
    initial = SystemState(0.0, pos, vel)

    noise = NoiseProcess.from_circuit(circuit, rng_seed, constants)
    stack = ForceStack([TrapTerm(trap_cfg), CoulombTerm(),
                        DampingTerm(circuit, trap_cfg.d_eff),
                        JohnsonNoiseTerm(noise, trap_cfg.d_eff),
                        ParametricTerm(drive, trap_cfg)])
    window = _window_steps(omega_z, trap_cfg.omega_rf, dt)
    cfg = IntegratorConfig(method="rk3", dt=dt, t_end=t_end,
                           record_stride=max(1, int(round(t_end / dt)) // 200),
                           recorders=("trajectory", "energy", "events"),
                           window_steps=window)
    record = run_simulation(initial, stack, cfg, constants)

    tc, ec = mode_energy_series(record, "axial_com", rf_active=True, constants=constants)
    _, es = mode_energy_series(record, "axial_stretch", rf_active=True, constants=constants)
    gamma_com = 2.0 * circuit.damping_rate(trap_cfg.d_eff, constants)
    tail = (max(0.0, t_end - 6.0 / gamma_com), t_end)
    eq = {"axial_com": secular_temperature(record, "axial_com", tail, True, constants),
          "axial_stretch": secular_temperature(record, "axial_stretch", tail, True, constants)}
    return CoolingResult(times=tc, energies={"axial_com": ec, "axial_stretch": es},
                         decay_time=None, equilibrium=eq, record=record)


def cooling_ensemble(run_fn, n_runs: int, base_seed: int, modes: tuple,
                     **kwargs) -> EnsembleResult:
    """Run a cooling experiment n_runs times with consecutive seeds."""
    runs = []
    temps = {mode: [] for mode in modes}
    for k in range(n_runs):
        res = run_fn(rng_seed=base_seed + k, **kwargs)
        runs.append(res)
        for mode in modes:
            temps[mode].append(res.equilibrium[mode].temperature)
    arrays = {mo: np.array(v) for mo, v in temps.items()}
    return EnsembleResult(
        temperatures=arrays,
        mean={mo: float(v.mean()) for mo, v in arrays.items()},
        std={mo: float(v.std(ddof=1)) for mo, v in arrays.items()},
        runs=runs)


def coulomb_barrier_energy(omega_z: float,
                           constants: PhysicalConstants = CONSTANTS) -> float:
    """Crystal-formation energy bound (1/2)(q^2/(2 pi eps0))^(2/3) (m omega_z^2)^(1/3), J."""
    q = constants.e
    return 0.5 * ((q * q / (2.0 * math.pi * constants.eps0)) ** (2.0 / 3.0)
                  * (constants.m * omega_z ** 2) ** (1.0 / 3.0))


def _axial_only(trap_cfg: TrapConfig) -> TrapConfig:
    from dataclasses import replace
    return replace(trap_cfg, v0=0.0)


def _window_steps(omega_slow: float, omega_rf: float, dt: float) -> int:
    """At least ten periods of the slow mode, aligned to whole RF periods."""
    t_slow = 2.0 * math.pi / omega_slow
    t_rf = 2.0 * math.pi / omega_rf
    n_rf = max(1, int(math.ceil(10.0 * t_slow / t_rf)))
    return max(1, int(round(n_rf * t_rf / dt)))
