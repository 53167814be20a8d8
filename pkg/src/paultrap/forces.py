"""Composable force terms evaluated at (state, t).

Every term provides a pure evaluate(state, t) -> (n, 3) array of forces in N.
The long-run integration kernels consume the same coefficients through
ForceStack.kernel_params(); tests cross-check the two paths against each
other and against finite differences of the corresponding potentials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core_model import (CONSTANTS, ConfigurationError, PhysicalConstants,
                         SystemState, TrapConfig)


# ---------------------------------------------------------------------------
# Parameter blocks


@dataclass(frozen=True)
class TankCircuit:
    """Lumped cryogenic tank circuit reduced to its on-resonance impedance."""

    L: float       # H
    C: float       # F
    Q: float
    T_res: float   # K

    def __post_init__(self):
        if self.L <= 0 or self.C <= 0 or self.Q <= 0 or self.T_res < 0:
            raise ConfigurationError("tank circuit needs L, C, Q > 0 and T_res >= 0")

    @property
    def R(self) -> float:
        """On-resonance impedance Q*sqrt(L/C), Ohm."""
        return self.Q * math.sqrt(self.L / self.C)

    @property
    def omega_res(self) -> float:
        return 1.0 / math.sqrt(self.L * self.C)

    def damping_rate(self, d_eff: float, constants: PhysicalConstants = CONSTANTS) -> float:
        """gamma = q^2 R / (m d_eff^2); the velocity damps as exp(-gamma t)."""
        return constants.e ** 2 * self.R / (constants.m * d_eff ** 2)


@dataclass(frozen=True)
class NoiseProcess:
    """Johnson white noise of the circuit: V_noise(t) = alpha * N(0, 1/dt).

    alpha = sqrt(2 kB T_res R) so the voltage PSD is S_V = 2 alpha^2
    = 4 kB T_res R.
    """

    alpha: float      # V s^(1/2)
    rng_seed: int = 0

    @staticmethod
    def from_circuit(circuit: TankCircuit, rng_seed: int = 0,
                     constants: PhysicalConstants = CONSTANTS) -> "NoiseProcess":
        alpha = math.sqrt(2.0 * constants.kB * circuit.T_res * circuit.R)
        return NoiseProcess(alpha=alpha, rng_seed=rng_seed)

    def sampler(self):
        """Fresh seeded stream of unit normals; scale by 1/sqrt(dt) per step."""
        return np.random.default_rng(self.rng_seed)


@dataclass(frozen=True)
class MagneticField:
    """Static magnetic field; default orientation is along y."""

    b: tuple[float, float, float]

    @staticmethod
    def along_y(b_tesla: float) -> "MagneticField":
        return MagneticField((0.0, b_tesla, 0.0))

    @property
    def magnitude(self) -> float:
        return math.sqrt(sum(c * c for c in self.b))

    def omega_ce(self, constants: PhysicalConstants = CONSTANTS) -> float:
        """Cyclotron frequency e|B|/m, rad/s."""
        return constants.e * self.magnitude / constants.m

    @staticmethod
    def from_cyclotron(omega_ce: float,
                       constants: PhysicalConstants = CONSTANTS) -> "MagneticField":
        return MagneticField.along_y(constants.m * omega_ce / constants.e)


@dataclass(frozen=True)
class ParametricDrive:
    """Auxiliary RF drive coupling two modes at their difference frequency.

    kind 'rz' couples one radial direction to the axial motion through
    V1 cos(w_p t) r z / r0^2 with V1 = a_p * V0. kind 'z3' couples the
    two-electron stretch and COM modes through (V2/r0^3) cos(w_p t) z^3 with
    the cubic coefficient V2/r0^3 set to a_p * V0 / r0^2.
    """

    kind: str
    a_p: float
    omega_p: float  # rad/s

    def __post_init__(self):
        if self.kind not in ("rz", "z3"):
            raise ConfigurationError("drive kind must be 'rz' or 'z3'")
        if self.omega_p <= 0:
            raise ConfigurationError("omega_p must be positive")

    def coupling_rate_rz(self, omega_rf: float, omega_r: float,
                         omega_z: float) -> float:
        """g_rz = (1/2) a_p Omega_rf sqrt(omega_r / (2 omega_z)), rad/s."""
        return 0.5 * self.a_p * omega_rf * math.sqrt(omega_r / (2.0 * omega_z))


# ---------------------------------------------------------------------------
# Individual force operations (pure functions, reference path)


def trap_force(state: SystemState, t: float, cfg: TrapConfig,
               constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """F = -q grad(Phi_dc + Phi_rf), evaluated analytically per particle."""
    q = cfg.charge(constants)
    c_dc = cfg.kappa * cfg.u_dc / cfg.z0 ** 2
    c_rf = (cfg.v0 / cfg.r0 ** 2) * math.cos(cfg.omega_rf * t + cfg.phi)
    x = state.positions[:, 0]
    y = state.positions[:, 1]
    z = state.positions[:, 2]
    f = np.empty_like(state.positions)
    f[:, 0] = -q * (c_rf - c_dc) * x
    f[:, 1] = -q * (-c_rf - c_dc) * y
    f[:, 2] = -q * 2.0 * c_dc * z
    return f


def trap_potential(position: np.ndarray, t: float, cfg: TrapConfig) -> float:
    """Phi_dc + Phi_rf at one point, in volts."""
    x, y, z = position
    phi_dc = cfg.kappa * cfg.u_dc * (2.0 * z ** 2 - x ** 2 - y ** 2) / (2.0 * cfg.z0 ** 2)
    phi_rf = cfg.v0 * math.cos(cfg.omega_rf * t + cfg.phi) * (x ** 2 - y ** 2) / (2.0 * cfg.r0 ** 2)
    return phi_dc + phi_rf


def coulomb_force(state: SystemState,
                  constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """Mutual Coulomb repulsion of the two electrons."""
    if state.n_particles != 2:
        raise ConfigurationError("coulomb_force requires exactly two particles")
    r12 = state.positions[0] - state.positions[1]
    dist = math.sqrt(float(r12 @ r12))
    if dist == 0.0:
        raise FloatingPointError("zero separation between particles")
    k = constants.e ** 2 / (4.0 * math.pi * constants.eps0)
    f1 = k * r12 / dist ** 3
    return np.vstack([f1, -f1])


def coulomb_energy(separation: float,
                   constants: PhysicalConstants = CONSTANTS) -> float:
    """q^2 / (4 pi eps0 |r1 - r2|), J."""
    return constants.e ** 2 / (4.0 * math.pi * constants.eps0 * separation)


def damping_force(velocity: float, circuit: TankCircuit, d_eff: float,
                  constants: PhysicalConstants = CONSTANTS) -> float:
    """Image-current damping F = -(q^2 R / d_eff^2) * v along the circuit axis."""
    return -constants.e ** 2 * circuit.R / d_eff ** 2 * velocity


def johnson_noise_force(noise: NoiseProcess, dt: float, d_eff: float,
                        rng: np.random.Generator | None = None,
                        constants: PhysicalConstants = CONSTANTS) -> float:
    """One per-step noise force sample, -(q/d_eff) * alpha * N(0, 1/dt)."""
    if rng is None:
        rng = noise.sampler()
    sample = rng.standard_normal() / math.sqrt(dt)
    return -(constants.e / d_eff) * noise.alpha * sample


def lorentz_force(velocity: np.ndarray, fieldB: MagneticField,
                  charge_sign: int = -1,
                  constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """F = q v x B with the signed charge."""
    q = charge_sign * constants.e
    b = np.asarray(fieldB.b)
    v = np.atleast_2d(velocity)
    return q * np.cross(v, b).reshape(v.shape)


def parametric_force(state: SystemState, t: float, drive: ParametricDrive,
                     cfg: TrapConfig, radial_axis: int = 0,
                     constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """Force of the parametric coupling potential on each particle."""
    q = cfg.charge(constants)
    f = np.zeros_like(state.positions)
    osc = math.cos(drive.omega_p * t)
    if drive.kind == "rz":
        c = drive.a_p * cfg.v0 / cfg.r0 ** 2
        r = state.positions[:, radial_axis]
        z = state.positions[:, 2]
        f[:, radial_axis] = -q * c * osc * z
        f[:, 2] = -q * c * osc * r
    else:
        c3 = drive.a_p * cfg.v0 / cfg.r0 ** 2
        z = state.positions[:, 2]
        f[:, 2] = -q * 3.0 * c3 * osc * z ** 2
    return f


def parametric_potential(position: np.ndarray, t: float, drive: ParametricDrive,
                         cfg: TrapConfig, radial_axis: int = 0) -> float:
    """Coupling potential (in V) at one point; gradient oracle for tests."""
    osc = math.cos(drive.omega_p * t)
    if drive.kind == "rz":
        c = drive.a_p * cfg.v0 / cfg.r0 ** 2
        return c * osc * position[radial_axis] * position[2]
    c3 = drive.a_p * cfg.v0 / cfg.r0 ** 2
    return c3 * osc * position[2] ** 3


def split_potential_force(state: SystemState, t: float, schedule,
                          constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """Force of the splitting potential alpha(t) z^2 + beta(t) z^4.

    The coefficients confine the electron by convention (the physical
    electrode polarity is folded into them), so the axial force is
    -e*(2 alpha z + 4 beta z^3). The quadratic part carries the
    Laplace-consistent radial term -alpha*(x^2+y^2)/2, which replaces the
    static DC radial de-confinement while the schedule is active.
    """
    if not 0.0 <= t <= schedule.tau_s:
        raise ValueError(f"t={t} outside split schedule [0, {schedule.tau_s}]")
    e = constants.e
    alpha = schedule.alpha_at(t)
    beta = schedule.beta_at(t)
    f = np.zeros_like(state.positions)
    z = state.positions[:, 2]
    f[:, 2] = -e * (2.0 * alpha * z + 4.0 * beta * z ** 3)
    f[:, 0] = e * alpha * state.positions[:, 0]
    f[:, 1] = e * alpha * state.positions[:, 1]
    return f


def split_potential(position: np.ndarray, t: float, schedule) -> float:
    """Effective splitting potential per unit charge magnitude (V)."""
    alpha = schedule.alpha_at(t)
    beta = schedule.beta_at(t)
    x, y, z = position
    return alpha * (z ** 2 - 0.5 * (x ** 2 + y ** 2)) + beta * z ** 4


# ---------------------------------------------------------------------------
# Stack terms


@dataclass(frozen=True)
class TrapTerm:
    cfg: TrapConfig
    velocity_dependent = False
    name = "trap"

    def evaluate(self, state, t, constants=CONSTANTS):
        return trap_force(state, t, self.cfg, constants)


@dataclass(frozen=True)
class CoulombTerm:
    velocity_dependent = False
    name = "coulomb"

    def evaluate(self, state, t, constants=CONSTANTS):
        del t
        return coulomb_force(state, constants)


@dataclass(frozen=True)
class DampingTerm:
    """Resistive damping through the summed image current on the circuit axis.

    With two electrons the induced current is proportional to the sum of their
    velocities, so each electron feels -(q^2 R/d_eff^2)(v1 + v2): the
    center-of-mass mode is damped and the stretch mode is untouched.
    """

    circuit: TankCircuit
    d_eff: float
    axis: int = 2
    velocity_dependent = True
    name = "damping"

    def evaluate(self, state, t, constants=CONSTANTS):
        del t
        c = constants.e ** 2 * self.circuit.R / self.d_eff ** 2
        v_sum = float(np.sum(state.velocities[:, self.axis]))
        f = np.zeros_like(state.positions)
        f[:, self.axis] = -c * v_sum
        return f


@dataclass(frozen=True)
class JohnsonNoiseTerm:
    """Per-step white-noise force on the circuit axis, common to all particles."""

    noise: NoiseProcess
    d_eff: float
    axis: int = 2
    velocity_dependent = False
    name = "johnson_noise"

    def evaluate(self, state, t, constants=CONSTANTS, sample: float = 0.0):
        # The per-step sample is owned by the integrator; the reference path
        # takes it explicitly to stay pure.
        del t
        f = np.zeros_like(state.positions)
        f[:, self.axis] = -(constants.e / self.d_eff) * self.noise.alpha * sample
        return f


@dataclass(frozen=True)
class LorentzTerm:
    field: MagneticField
    charge_sign: int = -1
    velocity_dependent = True
    name = "lorentz"

    def evaluate(self, state, t, constants=CONSTANTS):
        del t
        return lorentz_force(state.velocities, self.field, self.charge_sign, constants)


@dataclass(frozen=True)
class ParametricTerm:
    drive: ParametricDrive
    cfg: TrapConfig
    radial_axis: int = 0
    velocity_dependent = False

    @property
    def name(self):
        return "parametric_" + self.drive.kind

    def evaluate(self, state, t, constants=CONSTANTS):
        return parametric_force(state, t, self.drive, self.cfg, self.radial_axis, constants)


@dataclass(frozen=True)
class SplitPotentialTerm:
    schedule: object  # transport.SplitSchedule
    velocity_dependent = False
    name = "split_potential"

    def evaluate(self, state, t, constants=CONSTANTS):
        return split_potential_force(state, t, self.schedule, constants)


@dataclass(frozen=True)
class ShuttleTerm:
    """Moving harmonic well F_z = -m omega_z^2 (z - z_c(t))."""

    schedule: object  # transport.ShuttleSchedule
    omega_z: float
    velocity_dependent = False
    name = "shuttle_potential"

    def evaluate(self, state, t, constants=CONSTANTS):
        zc = self.schedule.center_at(t)
        f = np.zeros_like(state.positions)
        f[:, 2] = -constants.m * self.omega_z ** 2 * (state.positions[:, 2] - zc)
        return f


@dataclass(frozen=True)
class ForceStack:
    """Ordered set of enabled force terms; ordering never changes the sum."""

    terms: tuple

    def __init__(self, terms):
        object.__setattr__(self, "terms", tuple(terms))
        names = [t.name for t in self.terms]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate force terms in stack: {names}")

    @property
    def velocity_dependent(self) -> bool:
        return any(t.velocity_dependent for t in self.terms)

    def get(self, name: str):
        for t in self.terms:
            if t.name == name:
                return t
        return None

    def evaluate_total(self, state, t, constants=CONSTANTS, noise_sample: float = 0.0):
        """Sum of all terms; the noise term consumes the provided sample.

        Components are combined with exact (correctly rounded) summation so
        the total is independent of term ordering, bit for bit.
        """
        parts = []
        for term in self.terms:
            if term.name == "johnson_noise":
                parts.append(term.evaluate(state, t, constants, sample=noise_sample))
            else:
                parts.append(term.evaluate(state, t, constants))
        if not parts:
            return np.zeros_like(state.positions)
        stacked = np.stack(parts)
        total = np.empty_like(state.positions)
        for i in range(total.shape[0]):
            for j in range(3):
                total[i, j] = math.fsum(stacked[:, i, j])
        return total
