"""Splitting/merging schedules and shuttling waveforms with quanta accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_model import (CONSTANTS, ConfigurationError, PhysicalConstants,
                         SystemState, equilibrium_spacing)
from .forces import CoulombTerm, ForceStack, ShuttleTerm, SplitPotentialTerm, TrapTerm
from .integrators import IntegratorConfig, RunRecord, run_simulation


def omega_cp(beta_cp: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """Mode frequency at the critical point of a splitting ramp.

    omega_CP = (q/(2 pi eps0))^0.2 * (3 q/m)^0.5 * beta_CP^0.3, the
    per-electron well frequency when the quadratic confinement vanishes and
    only the quartic term of strength beta_CP holds the pair apart.
    """
    if beta_cp <= 0:
        raise ValueError("beta_cp must be positive")
    q = constants.e
    return ((q / (2.0 * math.pi * constants.eps0)) ** 0.2
            * (3.0 * q / constants.m) ** 0.5 * beta_cp ** 0.3)


def beta_cp_from_omega(omega: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """Inverse of omega_cp."""
    q = constants.e
    return (omega / ((q / (2.0 * math.pi * constants.eps0)) ** 0.2
                     * (3.0 * q / constants.m) ** 0.5)) ** (1.0 / 0.3)


def critical_distance(beta_cp: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """Separation at the critical point: beta_CP * d^5 = q/(2 pi eps0)."""
    return (constants.e / (2.0 * math.pi * constants.eps0 * beta_cp)) ** 0.2


@dataclass(frozen=True)
class SplitSchedule:
    """Raised-cosine separation ramp with the quartic term peaking at the
    critical point.

    The separation runs from the initial crystal spacing d0 to d_final as
    d(t) = d0 + (d_final-d0)/2 * (1 - cos(pi t/tau_s)); the bare raised-cosine
    profile starts at zero separation, so it is anchored at the crystal
    spacing instead. beta(t) ramps 0 -> beta_cp over [0, t_cp] and back to 0
    over [t_cp, tau_s] with the same shape, where t_cp is the time the
    separation passes the critical distance. alpha(t) then follows pointwise
    from beta(t) d(t)^5 + 2 alpha(t) d(t)^3 = q/(2 pi eps0), which holds the
    electrons at +-d(t)/2 and crosses alpha = 0 exactly at t_cp.
    """

    tau_s: float
    d0: float
    d_final: float
    beta_cp: float
    t_cp: float
    omega_z_init: float
    grid_t: np.ndarray
    grid_alpha: np.ndarray
    grid_beta: np.ndarray
    grid_d: np.ndarray

    def d_at(self, t: float) -> float:
        t = min(max(t, 0.0), self.tau_s)
        return self.d0 + 0.5 * (self.d_final - self.d0) * (1.0 - math.cos(math.pi * t / self.tau_s))

    def beta_at(self, t: float) -> float:
        t = min(max(t, 0.0), self.tau_s)
        if t <= self.t_cp:
            return 0.5 * self.beta_cp * (1.0 - math.cos(math.pi * t / self.t_cp))
        return 0.5 * self.beta_cp * (1.0 - math.cos(math.pi * (self.tau_s - t) / (self.tau_s - self.t_cp)))

    def alpha_at(self, t: float, constants: PhysicalConstants = CONSTANTS) -> float:
        kq = constants.e / (2.0 * math.pi * constants.eps0)
        d = self.d_at(t)
        return (kq - self.beta_at(t) * d ** 5) / (2.0 * d ** 3)

    def reversed(self) -> "SplitSchedule":
        """The merging schedule: the same samples traversed backwards."""
        return SplitSchedule(
            tau_s=self.tau_s, d0=self.d0, d_final=self.d_final,
            beta_cp=self.beta_cp, t_cp=self.tau_s - self.t_cp,
            omega_z_init=self.omega_z_init,
            grid_t=self.grid_t.copy(),
            grid_alpha=self.grid_alpha[::-1].copy(),
            grid_beta=self.grid_beta[::-1].copy(),
            grid_d=self.grid_d[::-1].copy(),
        )

    def final_well_frequencies(self, constants: PhysicalConstants = CONSTANTS):
        """(omega_com, omega_stretch) of the final purely quadratic confinement."""
        alpha_f = self.alpha_at(self.tau_s, constants)
        w_com = math.sqrt(2.0 * constants.e * alpha_f / constants.m)
        return w_com, math.sqrt(3.0) * w_com


def build_split_schedule(omega_z_init: float, d_final: float, tau_s: float,
                         beta_cp: float, n_samples: int = 2001,
                         constants: PhysicalConstants = CONSTANTS) -> SplitSchedule:
    """Construct the splitting schedule; fails if the ramp cannot reach the
    critical point inside (d0, d_final)."""
    if tau_s <= 0:
        raise ConfigurationError("tau_s must be positive")
    d0 = equilibrium_spacing(omega_z_init, constants)
    if d_final <= d0:
        raise ConfigurationError(
            f"d_final={d_final:g} must exceed the initial spacing d0={d0:g}")
    d_cp = critical_distance(beta_cp, constants)
    if not d0 < d_cp < d_final:
        raise ConfigurationError(
            f"critical distance {d_cp:g} outside (d0={d0:g}, d_final={d_final:g}); "
            "adjust beta_cp")
    # time at which the separation ramp crosses the critical distance
    u = 1.0 - 2.0 * (d_cp - d0) / (d_final - d0)
    t_cp = tau_s / math.pi * math.acos(u)

    grid_t = np.linspace(0.0, tau_s, n_samples)
    sched = SplitSchedule(tau_s=tau_s, d0=d0, d_final=d_final, beta_cp=beta_cp,
                          t_cp=t_cp, omega_z_init=omega_z_init,
                          grid_t=grid_t, grid_alpha=np.empty(0),
                          grid_beta=np.empty(0), grid_d=np.empty(0))
    d = np.array([sched.d_at(t) for t in grid_t])
    beta = np.array([sched.beta_at(t) for t in grid_t])
    kq = constants.e / (2.0 * math.pi * constants.eps0)
    alpha = (kq - beta * d ** 5) / (2.0 * d ** 3)
    object.__setattr__(sched, "grid_d", d)
    object.__setattr__(sched, "grid_alpha", alpha)
    object.__setattr__(sched, "grid_beta", beta)
    return sched


@dataclass(frozen=True)
class ShuttleSchedule:
    """Sinusoidal well-center trajectory z_c(t) = (D/2)(1 - cos(pi t/tau_t))."""

    tau_t: float
    displacement: float

    def __post_init__(self):
        if self.tau_t <= 0:
            raise ConfigurationError("tau_t must be positive")

    def center_at(self, t: float) -> float:
        t = min(max(t, 0.0), self.tau_t)
        return 0.5 * self.displacement * (1.0 - math.cos(math.pi * t / self.tau_t))


def quanta_change(e_before: float, e_after: float, omega: float,
                  constants: PhysicalConstants = CONSTANTS) -> float:
    """(E_after - E_before) / (hbar omega)."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    return (e_after - e_before) / (constants.hbar * omega)


@dataclass
class SplitResult:
    dn_com: float
    dn_stretch: float
    e_com_final: float       # J
    e_stretch_final: float   # J
    omega_com_final: float
    omega_stretch_final: float
    record: RunRecord
    status: str


def run_split(schedule: SplitSchedule, trap_cfg, initial_temps: dict | None = None,
              dt: float = 1e-13, stretch_phase: float = -0.5 * math.pi,
              constants: PhysicalConstants = CONSTANTS) -> SplitResult:
    """Simulate a full splitting ramp and report the motional quanta gained.

    The two electrons start at the instantaneous equilibria +-d0/2 with the
    requested axial COM/stretch energies (radial modes cold, so the motion
    stays on axis). The stretch mode is launched at the given oscillation
    phase (displacement A cos(phi), velocity -A omega sin(phi)); the default
    -pi/2 is the pure-kinetic launch of the standard state preparation.
    Energies are measured in the final wells against the final-configuration
    normal modes, and quanta are counted relative to the initial quanta of
    each mode so that a perfectly adiabatic ramp gives zero change.
    """
    temps = dict(initial_temps or {})
    kB = constants.kB
    m = constants.m
    mu = 0.5 * m

    e_com0 = 0.5 * kB * temps.get("axial_com", 0.0)
    e_str0 = 0.5 * kB * temps.get("axial_stretch", 0.0)
    omega_s0 = math.sqrt(3.0) * schedule.omega_z_init
    amp = math.sqrt(2.0 * e_str0 / (mu * omega_s0 ** 2)) if e_str0 > 0 else 0.0
    dz_s = amp * math.cos(stretch_phase)
    dv_s = -amp * omega_s0 * math.sin(stretch_phase)

    pos = np.zeros((2, 3))
    pos[0, 2] = -0.5 * schedule.d0 + 0.5 * dz_s
    pos[1, 2] = +0.5 * schedule.d0 - 0.5 * dz_s
    vel = np.zeros((2, 3))
    v_com = math.sqrt(e_com0 / m)
    vel[0, 2] = v_com + 0.5 * dv_s
    vel[1, 2] = v_com - 0.5 * dv_s
    initial = SystemState(0.0, pos, vel)

    # RF radial confinement stays on; the schedule replaces the axial DC term,
    # so the trap term keeps only its RF part.
    rf_only = _rf_only_trap(trap_cfg)
    stack = ForceStack([TrapTerm(rf_only), CoulombTerm(), SplitPotentialTerm(schedule)])
    cfg = IntegratorConfig(method="velocity_verlet", dt=dt, t_end=schedule.tau_s,
                           record_stride=max(1, int(round(schedule.tau_s / dt)) // 2000),
                           recorders=("trajectory", "events"))
    record = run_simulation(initial, stack, cfg, constants)

    w_c, w_s = schedule.final_well_frequencies(constants)
    fs = record.final_state
    zc = 0.5 * (fs.positions[0, 2] + fs.positions[1, 2])
    zs = (fs.positions[0, 2] - fs.positions[1, 2]) + schedule.d_final  # particle 0 sits below
    vzc = 0.5 * (fs.velocities[0, 2] + fs.velocities[1, 2])
    vzs = fs.velocities[0, 2] - fs.velocities[1, 2]
    e_com = 0.5 * (2.0 * m) * (vzc ** 2 + w_c ** 2 * zc ** 2)
    e_str = 0.5 * (0.5 * m) * (vzs ** 2 + w_s ** 2 * zs ** 2)

    n_com0 = e_com0 / (constants.hbar * schedule.omega_z_init)
    n_str0 = e_str0 / (constants.hbar * math.sqrt(3.0) * schedule.omega_z_init)
    dn_com = e_com / (constants.hbar * w_c) - n_com0
    dn_str = e_str / (constants.hbar * w_s) - n_str0

    return SplitResult(dn_com=dn_com, dn_stretch=dn_str,
                       e_com_final=e_com, e_stretch_final=e_str,
                       omega_com_final=w_c, omega_stretch_final=w_s,
                       record=record,
                       status="transport-failure" if record.status == "diverged"
                       else "completed")


def _rf_only_trap(trap_cfg):
    from dataclasses import replace
    return replace(trap_cfg, u_dc=0.0)


def run_shuttle(schedule: ShuttleSchedule, omega_z: float, dt: float = 1e-12,
                initial: SystemState | None = None,
                constants: PhysicalConstants = CONSTANTS) -> float:
    """Shuttle a single electron in a moving harmonic well; returns the
    motional quanta gained, measured in the co-moving frame at t = tau_t."""
    if initial is None:
        initial = SystemState(0.0, np.zeros((1, 3)), np.zeros((1, 3)))
    stack = ForceStack([ShuttleTerm(schedule, omega_z)])
    cfg = IntegratorConfig(method="velocity_verlet", dt=dt, t_end=schedule.tau_t,
                           record_stride=max(1, int(round(schedule.tau_t / dt)) // 1000),
                           recorders=("trajectory",))
    record = run_simulation(initial, stack, cfg, constants)
    fs = record.final_state
    dz = fs.positions[0, 2] - schedule.displacement
    vz = fs.velocities[0, 2]  # the well center is at rest at tau_t
    m = constants.m
    e_final = 0.5 * m * vz ** 2 + 0.5 * m * omega_z ** 2 * dz ** 2
    e0 = (0.5 * m * initial.velocities[0, 2] ** 2
          + 0.5 * m * omega_z ** 2 * initial.positions[0, 2] ** 2)
    return quanta_change(e0, e_final, omega_z, constants)


def shuttle_excitation_oracle(schedule: ShuttleSchedule, omega_z: float,
                              n_quad: int = 20001,
                              constants: PhysicalConstants = CONSTANTS) -> float:
    """Independent quadrature prediction of the shuttle excitation.

    For a driven oscillator eta'' + w^2 eta = -z_c''(t), the final energy is
    (m/2) |∫ z_c''(t) e^{i w t} dt|^2; returned in quanta of hbar*omega_z.
    """
    t = np.linspace(0.0, schedule.tau_t, n_quad)
    acc = (0.5 * schedule.displacement * (math.pi / schedule.tau_t) ** 2
           * np.cos(math.pi * t / schedule.tau_t))
    phase = np.exp(1j * omega_z * t)
    integral = np.trapezoid(acc * phase, t)
    e_final = 0.5 * constants.m * abs(integral) ** 2
    return e_final / (constants.hbar * omega_z)


def equilibrium_relation_residual(schedule: SplitSchedule,
                                  constants: PhysicalConstants = CONSTANTS) -> float:
    """Max relative residual of beta d^5 + 2 alpha d^3 = q/(2 pi eps0) on the grid."""
    kq = constants.e / (2.0 * math.pi * constants.eps0)
    lhs = schedule.grid_beta * schedule.grid_d ** 5 + 2.0 * schedule.grid_alpha * schedule.grid_d ** 3
    return float(np.max(np.abs(lhs - kq)) / kq)
