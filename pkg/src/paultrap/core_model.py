"""Trap configuration, derived secular parameters, and electron state preparation.

All quantities are SI. Angular frequencies are rad/s throughout; the CLI layer
converts from Hz. Temperatures map to mode kinetic energies through
E_kin = kB*T/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ConfigurationError(ValueError):
    """A trap, force, or run configuration violates its constraints."""


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA-2018 values, fixed here and never recomputed at runtime."""

    e: float = 1.602176634e-19      # elementary charge, C
    m: float = 9.1093837015e-31     # electron mass, kg
    eps0: float = 8.8541878128e-12  # vacuum permittivity, F/m
    kB: float = 1.380649e-23        # Boltzmann constant, J/K
    hbar: float = 1.054571817e-34   # reduced Planck constant, J s


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class TrapConfig:
    """Linear Paul trap: DC endcap potential plus radial RF quadrupole.

    The DC potential is kappa*U_dc*(2z^2 - x^2 - y^2)/(2 z0^2) and the RF
    potential V0*cos(Omega_rf t + phi)*(x^2 - y^2)/(2 r0^2). charge_sign is
    -1 for electrons; signed formulas are used everywhere so that magnetic
    field terms come out right.
    """

    kappa: float
    u_dc: float        # V
    v0: float          # V
    phi: float         # rad
    omega_rf: float    # rad/s
    r0: float          # m
    z0: float          # m
    d_eff: float       # m
    charge_sign: int = -1

    def __post_init__(self):
        if self.omega_rf <= 0 or self.r0 <= 0 or self.z0 <= 0 or self.d_eff <= 0:
            raise ConfigurationError("omega_rf, r0, z0 and d_eff must be positive")
        if self.charge_sign not in (-1, 1):
            raise ConfigurationError("charge_sign must be -1 or +1")
        # Axial confinement requires q*kappa*U_dc >= 0 (== 0 is the free-axis
        # limit with omega_z = 0).
        if self.charge_sign * self.kappa * self.u_dc < 0:
            raise ConfigurationError(
                "DC voltage sign does not confine this charge axially "
                f"(charge_sign={self.charge_sign}, kappa*U_dc={self.kappa * self.u_dc})"
            )

    def charge(self, constants: PhysicalConstants = CONSTANTS) -> float:
        """Signed charge in C."""
        return self.charge_sign * constants.e


@dataclass(frozen=True)
class DerivedTrapParams:
    """Secular frequencies and Mathieu stability parameters of a TrapConfig."""

    omega_r: float  # rad/s, degenerate radial secular frequency
    omega_z: float  # rad/s
    q_x: float
    q_y: float
    a_x: float
    a_y: float
    a_z: float


def derive_trap_params(cfg: TrapConfig,
                       constants: PhysicalConstants = CONSTANTS) -> DerivedTrapParams:
    """Lowest-order pseudopotential frequencies and Mathieu parameters.

    omega_r = |q| V0 / (sqrt(2) m Omega r0^2), omega_z^2 = 2 q kappa U_dc/(m z0^2),
    q_x = -2 q V0/(m Omega^2 r0^2) = -q_y, a_z = 4 omega_z^2/Omega^2 = -2 a_x.
    """
    q = cfg.charge(constants)
    m = constants.m
    omega_r = abs(q) * cfg.v0 / (math.sqrt(2.0) * m * cfg.omega_rf * cfg.r0 ** 2)
    wz_sq = 2.0 * q * cfg.kappa * cfg.u_dc / (m * cfg.z0 ** 2)
    omega_z = math.sqrt(wz_sq)
    q_x = -2.0 * q * cfg.v0 / (m * cfg.omega_rf ** 2 * cfg.r0 ** 2)
    a_z = 4.0 * wz_sq / cfg.omega_rf ** 2
    return DerivedTrapParams(
        omega_r=omega_r,
        omega_z=omega_z,
        q_x=q_x,
        q_y=-q_x,
        a_x=-0.5 * a_z,
        a_y=-0.5 * a_z,
        a_z=a_z,
    )


def trap_config_from_frequencies(omega_r: float,
                                 omega_z: float,
                                 omega_rf: float,
                                 kappa: float = 0.5,
                                 r0: float = 100e-6,
                                 z0: float = 100e-6,
                                 d_eff: float = 254e-6,
                                 phi: float = 0.0,
                                 charge_sign: int = -1,
                                 constants: PhysicalConstants = CONSTANTS) -> TrapConfig:
    """Inverse of derive_trap_params: choose V0 and U_dc for target frequencies."""
    if omega_r < 0 or omega_z < 0 or omega_rf <= 0:
        raise ConfigurationError("frequencies must be non-negative, omega_rf positive")
    q = charge_sign * constants.e
    v0 = math.sqrt(2.0) * constants.m * omega_rf * omega_r * r0 ** 2 / abs(q)
    u_dc = constants.m * omega_z ** 2 * z0 ** 2 / (2.0 * q * kappa)
    return TrapConfig(kappa=kappa, u_dc=u_dc, v0=v0, phi=phi, omega_rf=omega_rf,
                      r0=r0, z0=z0, d_eff=d_eff, charge_sign=charge_sign)


def equilibrium_spacing(omega_z: float,
                        constants: PhysicalConstants = CONSTANTS) -> float:
    """Equilibrium distance of two like charges on the axis of a harmonic well.

    l = (q^2 / (2 pi eps0 m omega_z^2))^(1/3)
    """
    if omega_z <= 0:
        raise ValueError("omega_z must be positive for a finite equilibrium spacing")
    q = constants.e
    return (q * q / (2.0 * math.pi * constants.eps0 * constants.m * omega_z ** 2)) ** (1.0 / 3.0)


# Two-electron normal modes. Patterns are the +-1 relative signs of the two
# electrons' displacements along the mode axis.
AXIAL_COM = "axial_com"
AXIAL_STRETCH = "axial_stretch"
RADIAL_COM_X = "radial_com_x"
RADIAL_STRETCH_X = "radial_stretch_x"
RADIAL_COM_Y = "radial_com_y"
RADIAL_STRETCH_Y = "radial_stretch_y"

TWO_ELECTRON_MODES = (AXIAL_COM, AXIAL_STRETCH, RADIAL_COM_X, RADIAL_STRETCH_X,
                      RADIAL_COM_Y, RADIAL_STRETCH_Y)
SINGLE_ELECTRON_MODES = ("x", "y", "z")

_MODE_AXIS = {AXIAL_COM: 2, AXIAL_STRETCH: 2, RADIAL_COM_X: 0, RADIAL_STRETCH_X: 0,
              RADIAL_COM_Y: 1, RADIAL_STRETCH_Y: 1, "x": 0, "y": 1, "z": 2}
_MODE_PATTERN = {AXIAL_COM: (1.0, 1.0), AXIAL_STRETCH: (1.0, -1.0),
                 RADIAL_COM_X: (1.0, 1.0), RADIAL_STRETCH_X: (1.0, -1.0),
                 RADIAL_COM_Y: (1.0, 1.0), RADIAL_STRETCH_Y: (1.0, -1.0)}


@dataclass(frozen=True)
class NormalModeSet:
    """The four distinct normal-mode frequencies of a two-electron chain.

    Axially the center-of-mass mode sits at omega_z and the stretch mode at
    sqrt(3)*omega_z; radially the center-of-mass modes are at omega_r and the
    stretch (rocking) modes at sqrt(omega_r^2 - omega_z^2).
    """

    axial_com: float
    axial_stretch: float
    radial_com: float
    radial_stretch: float

    def frequency(self, mode: str) -> float:
        return {AXIAL_COM: self.axial_com, AXIAL_STRETCH: self.axial_stretch,
                RADIAL_COM_X: self.radial_com, RADIAL_STRETCH_X: self.radial_stretch,
                RADIAL_COM_Y: self.radial_com, RADIAL_STRETCH_Y: self.radial_stretch}[mode]

    @staticmethod
    def axis(mode: str) -> int:
        return _MODE_AXIS[mode]

    @staticmethod
    def pattern(mode: str) -> tuple[float, float]:
        return _MODE_PATTERN[mode]


def normal_modes(omega_r: float, omega_z: float) -> NormalModeSet:
    if omega_z <= 0:
        raise ConfigurationError("omega_z must be positive")
    if omega_r <= omega_z:
        raise ConfigurationError(
            "omega_r must exceed omega_z for a stable axial chain "
            f"(got omega_r={omega_r}, omega_z={omega_z})")
    return NormalModeSet(
        axial_com=omega_z,
        axial_stretch=math.sqrt(3.0) * omega_z,
        radial_com=omega_r,
        radial_stretch=math.sqrt(omega_r ** 2 - omega_z ** 2),
    )


@dataclass
class SystemState:
    """Positions and velocities of one or two electrons at time t."""

    t: float
    positions: np.ndarray   # (n, 3), m
    velocities: np.ndarray  # (n, 3), m/s

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=np.float64))
        self.velocities = np.atleast_2d(np.asarray(self.velocities, dtype=np.float64))
        if self.positions.shape != self.velocities.shape or self.positions.shape[1] != 3:
            raise ConfigurationError("positions and velocities must both be (n, 3)")
        if self.positions.shape[0] not in (1, 2):
            raise ConfigurationError("only 1 or 2 particles are supported")
        if not (np.all(np.isfinite(self.positions)) and np.all(np.isfinite(self.velocities))):
            raise ConfigurationError("state components must be finite")

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    def copy(self) -> "SystemState":
        return SystemState(self.t, self.positions.copy(), self.velocities.copy())


@dataclass(frozen=True)
class ModeTemperatureSpec:
    """Per-mode initial temperatures (E_kin = kB*T/2 each) and the RNG policy.

    phase_convention 'fixed_sign' launches every mode along the + direction of
    its eigenvector; 'random_sign' draws the sign from the seeded stream.
    """

    temperatures: dict[str, float]
    rng_seed: int = 0
    phase_convention: str = "fixed_sign"
    n_particles: int = 2

    def __post_init__(self):
        allowed = TWO_ELECTRON_MODES if self.n_particles == 2 else SINGLE_ELECTRON_MODES
        for name, temp in self.temperatures.items():
            if name not in allowed:
                raise ConfigurationError(f"unknown mode name {name!r} for n={self.n_particles}")
            if temp < 0:
                raise ConfigurationError(f"negative temperature for mode {name!r}")
        if self.phase_convention not in ("fixed_sign", "random_sign"):
            raise ConfigurationError("phase_convention must be fixed_sign or random_sign")


def init_state(modes: NormalModeSet | None,
               spec: ModeTemperatureSpec,
               l: float | None = None,
               constants: PhysicalConstants = CONSTANTS) -> SystemState:
    """Place electrons at equilibrium and load each mode with kB*T_i/2 of kinetic energy.

    Two electrons sit at z = -l/2 and +l/2; a single electron sits at the
    origin. A mode at energy E contributes a per-particle speed of sqrt(E/m)
    along its sign pattern (two electrons) or sqrt(2E/m) (single electron),
    which makes the mode kinetic energies exactly additive.
    """
    m = constants.m
    kB = constants.kB
    rng = np.random.default_rng(spec.rng_seed)

    if spec.n_particles == 2:
        if l is None or l <= 0:
            raise ConfigurationError("two-electron init requires the equilibrium spacing l")
        if modes is None:
            raise ConfigurationError("two-electron init requires a NormalModeSet")
        pos = np.zeros((2, 3))
        pos[0, 2] = -0.5 * l
        pos[1, 2] = +0.5 * l
        vel = np.zeros((2, 3))
        for mode in TWO_ELECTRON_MODES:
            temp = spec.temperatures.get(mode, 0.0)
            energy = 0.5 * kB * temp
            sign = 1.0
            if spec.phase_convention == "random_sign":
                sign = 1.0 if rng.integers(0, 2) == 0 else -1.0
            speed = math.sqrt(energy / m)
            axis = NormalModeSet.axis(mode)
            p1, p2 = NormalModeSet.pattern(mode)
            vel[0, axis] += sign * speed * p1
            vel[1, axis] += sign * speed * p2
        return SystemState(0.0, pos, vel)

    pos = np.zeros((1, 3))
    vel = np.zeros((1, 3))
    for mode in SINGLE_ELECTRON_MODES:
        temp = spec.temperatures.get(mode, 0.0)
        energy = 0.5 * kB * temp
        sign = 1.0
        if spec.phase_convention == "random_sign":
            sign = 1.0 if rng.integers(0, 2) == 0 else -1.0
        vel[0, _MODE_AXIS[mode]] += sign * math.sqrt(2.0 * energy / m)
    return SystemState(0.0, pos, vel)


def mode_coordinates(positions: np.ndarray, velocities: np.ndarray):
    """Project two-particle axial/radial coordinates onto COM and stretch modes.

    Returns (com, stretch) arrays of shape (3,): com = (r1 + r2)/2 per axis,
    stretch = r1 - r2. The projection is exactly invertible; see
    mode_coordinates_inverse.
    """
    com = 0.5 * (positions[0] + positions[1])
    stretch = positions[0] - positions[1]
    vcom = 0.5 * (velocities[0] + velocities[1])
    vstretch = velocities[0] - velocities[1]
    return com, stretch, vcom, vstretch


def mode_coordinates_inverse(com: np.ndarray, stretch: np.ndarray):
    """Recover (r1, r2) from COM and stretch coordinates."""
    r1 = com + 0.5 * stretch
    r2 = com - 0.5 * stretch
    return r1, r2
