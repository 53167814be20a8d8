"""Fixed-step time integration with trajectory, secular-energy, and event recorders."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .core_model import CONSTANTS, ConfigurationError, PhysicalConstants, SystemState
from .forces import ForceStack

VALID_METHODS = ("velocity_verlet", "rk3")
VALID_RECORDERS = ("trajectory", "energy", "events")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integration settings.

    dt defaults to 1e-13 s, far below every oscillation period of the default
    trap. For stacks containing the RF drive, run_simulation enforces
    dt <= 2*pi / (50 * Omega_rf). window_steps sets the averaging window of the
    'energy' recorder (squared mode velocities averaged over that many steps);
    0 picks a default of roughly ten periods of the slowest trap mode.
    """

    method: str = "velocity_verlet"
    dt: float = 1e-13
    t_end: float = 0.0
    record_stride: int = 1000
    recorders: tuple = ("trajectory", "events")
    window_steps: int = 0

    def __post_init__(self):
        if self.method not in VALID_METHODS:
            raise ConfigurationError(f"unknown integrator method {self.method!r}")
        if self.dt <= 0:
            raise ConfigurationError("dt must be positive")
        if self.t_end < 0:
            raise ConfigurationError("t_end must be non-negative")
        if self.record_stride < 1:
            raise ConfigurationError("record_stride must be >= 1")
        for r in self.recorders:
            if r not in VALID_RECORDERS:
                raise ConfigurationError(f"unknown recorder {r!r}")


@dataclass
class RunRecord:
    """Decimated trajectory, windowed mode energies, events, and run metadata."""

    times: np.ndarray           # (n_rec,)
    positions: np.ndarray       # (n_rec, n, 3)
    velocities: np.ndarray      # (n_rec, n, 3)
    window_times: np.ndarray    # (n_win,), window end times
    window_mode_vsq: np.ndarray  # (n_win, 6) mean squared mode velocities
    window_steps: int
    status: str                 # 'completed' or 'diverged'
    events: dict
    max_radial_energy: float    # J, max over run of radial kinetic + DC potential
    final_state: SystemState
    n_particles: int
    dt: float
    n_steps: int
    method: str
    seed: int | None
    wall_time_s: float

    @property
    def first_reorder_time(self):
        return self.events.get("first_reorder_time")


def compile_stack(stack: ForceStack, n_particles: int,
                  constants: PhysicalConstants = CONSTANTS):
    """Pack a ForceStack into the kernel flag/parameter vectors."""
    fl = np.zeros(K.N_FLAGS, dtype=np.int64)
    params = np.zeros(K.N_PARAMS, dtype=np.float64)
    fl[K.F_NPART] = n_particles
    fl[K.F_CIRCAXIS] = 2
    params[K.P_MASS] = constants.m
    m = constants.m
    noise_term = None

    for term in stack.terms:
        name = term.name
        if name == "trap":
            cfg = term.cfg
            q = cfg.charge(constants)
            fl[K.F_TRAP] = 1
            params[K.P_KDC] = q * cfg.kappa * cfg.u_dc / (m * cfg.z0 ** 2)
            params[K.P_KRF] = q * cfg.v0 / (m * cfg.r0 ** 2)
            params[K.P_OMEGA] = cfg.omega_rf
            params[K.P_PHI] = cfg.phi
        elif name == "coulomb":
            fl[K.F_COULOMB] = 1
            params[K.P_CK] = constants.e ** 2 / (4.0 * math.pi * constants.eps0 * m)
        elif name == "damping":
            fl[K.F_DAMPING] = 1
            fl[K.F_CIRCAXIS] = term.axis
            params[K.P_GAMMA] = constants.e ** 2 * term.circuit.R / (m * term.d_eff ** 2)
        elif name == "johnson_noise":
            fl[K.F_NOISE] = 1
            fl[K.F_CIRCAXIS] = term.axis
            # force -(q/d_eff) alpha G(t) on the signed charge; the electron
            # charge sign only flips the sign of a symmetric noise term
            params[K.P_CNOISE] = -constants.e * term.noise.alpha / (term.d_eff * m)
            noise_term = term
        elif name == "lorentz":
            fl[K.F_LORENTZ] = 1
            q = term.charge_sign * constants.e
            params[K.P_WCX] = q * term.field.b[0] / m
            params[K.P_WCY] = q * term.field.b[1] / m
            params[K.P_WCZ] = q * term.field.b[2] / m
        elif name == "parametric_rz":
            fl[K.F_PRZ] = 1
            fl[K.F_RZAXIS] = term.radial_axis
            q = term.cfg.charge(constants)
            params[K.P_RZC] = q * term.drive.a_p * term.cfg.v0 / (m * term.cfg.r0 ** 2)
            params[K.P_RZW] = term.drive.omega_p
        elif name == "parametric_z3":
            fl[K.F_PZ3] = 1
            q = term.cfg.charge(constants)
            params[K.P_Z3C] = 3.0 * q * term.drive.a_p * term.cfg.v0 / (m * term.cfg.r0 ** 2)
            params[K.P_Z3W] = term.drive.omega_p
        elif name == "split_potential":
            sched = term.schedule
            fl[K.F_SPLIT] = 1
            params[K.P_SPQM] = constants.e / m
            params[K.P_SPD0] = sched.d0
            params[K.P_SPDF] = sched.d_final
            params[K.P_SPTAU] = sched.tau_s
            params[K.P_SPTCP] = sched.t_cp
            params[K.P_SPBCP] = sched.beta_cp
            params[K.P_SPK] = constants.e / (2.0 * math.pi * constants.eps0)
        elif name == "shuttle_potential":
            fl[K.F_SHUTTLE] = 1
            params[K.P_SHWZ2] = term.omega_z ** 2
            params[K.P_SHD] = term.schedule.displacement
            params[K.P_SHTAU] = term.schedule.tau_t
        else:
            raise ConfigurationError(f"unknown force term {name!r}")

    return fl, params, noise_term


def _validate(stack: ForceStack, cfg: IntegratorConfig):
    if cfg.method == "velocity_verlet" and stack.velocity_dependent:
        bad = [t.name for t in stack.terms if t.velocity_dependent]
        raise ConfigurationError(
            f"velocity Verlet cannot integrate velocity-dependent terms: {bad}")
    trap = stack.get("trap")
    if trap is not None and trap.cfg.v0 != 0.0:
        dt_max = 2.0 * math.pi / (50.0 * trap.cfg.omega_rf)
        if cfg.dt > dt_max:
            raise ConfigurationError(
                f"dt={cfg.dt:g} too coarse for the RF drive; need dt <= {dt_max:g} "
                "(50 steps per RF period)")


def run_simulation(initial: SystemState, stack: ForceStack, cfg: IntegratorConfig,
                   constants: PhysicalConstants = CONSTANTS) -> RunRecord:
    """Integrate the equations of motion and return the recorded run.

    The run is deterministic: identical (initial, stack, cfg, seed) produce a
    bit-identical RunRecord apart from wall_time_s.
    """
    _validate(stack, cfg)
    t_start_wall = time.perf_counter()

    n = initial.n_particles
    fl, params, noise_term = compile_stack(stack, n, constants)
    method = 0 if cfg.method == "velocity_verlet" else 1

    dt = cfg.dt
    n_steps = int(round(cfg.t_end / dt))
    stride = cfg.record_stride

    record_traj = "trajectory" in cfg.recorders
    record_energy = "energy" in cfg.recorders

    n_rec = n_steps // stride + 1 if record_traj else 1
    rec_pos = np.zeros((n_rec, 2, 3))
    rec_vel = np.zeros((n_rec, 2, 3))
    if not record_traj:
        stride = max(n_steps, 1) + 1  # kernel still records row 0

    win_size = 0
    if record_energy:
        win_size = cfg.window_steps
        if win_size <= 0:
            win_size = _default_window(stack, dt)
    n_win = n_steps // win_size if win_size > 0 else 0
    win_sums = np.zeros((max(n_win, 1), 6))

    evt = np.zeros(K.N_EVT, dtype=np.int64)
    evt[K.E_CROSS_STEP] = -1
    evt[K.E_DIVERGED_STEP] = -1
    aux = np.zeros(K.N_AUX)
    if n == 2:
        dz0 = initial.positions[0, 2] - initial.positions[1, 2]
        aux[K.A_SIGN0] = 1.0 if dz0 >= 0 else -1.0
    else:
        evt[K.E_CROSS_STEP] = -2  # not applicable
    aux[K.A_MAX_ERAD] = -np.inf

    pos = np.zeros((2, 3))
    vel = np.zeros((2, 3))
    pos[:n] = initial.positions
    vel[:n] = initial.velocities

    seed = noise_term.noise.rng_seed if noise_term is not None else None
    rng_state = K.seed_rng_state(seed if seed is not None else 0)
    rng_cache = np.zeros(2)

    rec_pos[0, :n] = initial.positions
    rec_vel[0, :n] = initial.velocities
    if n_steps > 0:
        K.run_chunk(method, pos, vel, 0, n_steps, n_steps, dt, initial.t, fl,
                    params, rng_state, rng_cache, rec_pos, rec_vel, stride,
                    win_sums, win_size, evt, aux)

    t0 = initial.t
    diverged = evt[K.E_STATUS] == K.STATUS_DIVERGED
    last_step = int(evt[K.E_DIVERGED_STEP]) if diverged else n_steps

    if record_traj:
        if diverged:
            n_valid = (last_step - 1) // stride + 1 if last_step > 0 else 1
            rec_pos = rec_pos[:n_valid]
            rec_vel = rec_vel[:n_valid]
        elif n_steps % stride == 0 and n_steps > 0:
            rec_pos[-1, :n] = pos[:n]
            rec_vel[-1, :n] = vel[:n]
        times = t0 + dt * stride * np.arange(rec_pos.shape[0])
    else:
        rec_pos = rec_pos[:1]
        rec_vel = rec_vel[:1]
        times = np.array([t0])

    n_win_done = int(evt[K.E_WIN_INDEX])
    win_sums = win_sums[:n_win_done]
    window_times = t0 + dt * win_size * (1.0 + np.arange(n_win_done)) if win_size else np.empty(0)

    events = {}
    cross = int(evt[K.E_CROSS_STEP])
    events["first_reorder_time"] = t0 + cross * dt if cross > 0 else None
    events["diverged_time"] = t0 + last_step * dt if diverged else None

    final = SystemState(t0 + last_step * dt, pos[:n].copy(), vel[:n].copy())

    return RunRecord(
        times=times,
        positions=rec_pos[:, :n, :],
        velocities=rec_vel[:, :n, :],
        window_times=window_times,
        window_mode_vsq=win_sums,
        window_steps=win_size,
        status="diverged" if diverged else "completed",
        events=events,
        max_radial_energy=float(aux[K.A_MAX_ERAD]),
        final_state=final,
        n_particles=n,
        dt=dt,
        n_steps=last_step,
        method=cfg.method,
        seed=seed,
        wall_time_s=time.perf_counter() - t_start_wall,
    )


def _default_window(stack: ForceStack, dt: float) -> int:
    """About ten periods of the slowest trap mode, aligned to steps."""
    trap = stack.get("trap")
    if trap is not None:
        from .core_model import derive_trap_params
        derived = derive_trap_params(trap.cfg)
        slow = derived.omega_z if derived.omega_z > 0 else derived.omega_r
        if slow > 0:
            return max(1, int(round(10.0 * 2.0 * math.pi / slow / dt)))
    return 1000


def _single_step(state: SystemState, stack: ForceStack, dt: float, method: str,
                 constants: PhysicalConstants) -> SystemState:
    n = state.n_particles
    fl, params, noise_term = compile_stack(stack, n, constants)
    pos = np.zeros((2, 3))
    vel = np.zeros((2, 3))
    pos[:n] = state.positions
    vel[:n] = state.velocities
    rng_state = K.seed_rng_state(noise_term.noise.rng_seed if noise_term else 0)
    rng_cache = np.zeros(2)
    rec_pos = np.zeros((1, 2, 3))
    rec_vel = np.zeros((1, 2, 3))
    win = np.zeros((1, 6))
    evt = np.zeros(K.N_EVT, dtype=np.int64)
    evt[K.E_CROSS_STEP] = -1
    evt[K.E_DIVERGED_STEP] = -1
    aux = np.zeros(K.N_AUX)
    aux[K.A_MAX_ERAD] = -np.inf
    K.run_chunk(0 if method == "velocity_verlet" else 1, pos, vel, 0, 1, 1, dt,
                state.t, fl, params, rng_state, rng_cache, rec_pos, rec_vel, 2,
                win, 0, evt, aux)
    return SystemState(state.t + dt, pos[:n].copy(), vel[:n].copy())


def velocity_verlet_step(state: SystemState, stack: ForceStack, dt: float,
                         constants: PhysicalConstants = CONSTANTS) -> SystemState:
    """One kick-drift-kick velocity-Verlet step.

    Rejects stacks with velocity-dependent terms (damping, Lorentz).
    """
    if stack.velocity_dependent:
        bad = [t.name for t in stack.terms if t.velocity_dependent]
        raise ConfigurationError(
            f"velocity Verlet cannot integrate velocity-dependent terms: {bad}")
    return _single_step(state, stack, dt, "velocity_verlet", constants)


def rk3_step(state: SystemState, stack: ForceStack, dt: float,
             constants: PhysicalConstants = CONSTANTS) -> SystemState:
    """One third-order Bogacki-Shampine step of (position, velocity) jointly.

    Any Johnson noise sample is drawn from the term's seeded stream and held
    constant across the three stages.
    """
    return _single_step(state, stack, dt, "rk3", constants)


def mechanical_energy(state: SystemState, stack: ForceStack, t: float,
                      constants: PhysicalConstants = CONSTANTS) -> float:
    """Kinetic plus potential energy of the conservative terms, J."""
    from .forces import coulomb_energy, split_potential, trap_potential

    ke = 0.5 * constants.m * float(np.sum(state.velocities ** 2))
    pe = 0.0
    for term in stack.terms:
        if term.name == "trap":
            q = term.cfg.charge(constants)
            for i in range(state.n_particles):
                pe += q * trap_potential(state.positions[i], t, term.cfg)
        elif term.name == "coulomb" and state.n_particles == 2:
            sep = float(np.linalg.norm(state.positions[0] - state.positions[1]))
            pe += coulomb_energy(sep, constants)
        elif term.name == "split_potential":
            for i in range(state.n_particles):
                pe += constants.e * split_potential(state.positions[i], t, term.schedule)
        elif term.name == "shuttle_potential":
            zc = term.schedule.center_at(t)
            for i in range(state.n_particles):
                pe += 0.5 * constants.m * term.omega_z ** 2 * (state.positions[i, 2] - zc) ** 2
    return ke + pe
