"""Classical dynamics of electrons in linear Paul traps.

Simulation engine and experiment drivers for Wigner-crystal threshold scans,
resistive and parametric cooling, crystal splitting and shuttling, and
trap-stability analysis under static magnetic fields.
"""

__version__ = "0.1.0"

from .core_model import (CONSTANTS, ConfigurationError, DerivedTrapParams,
                         ModeTemperatureSpec, NormalModeSet, PhysicalConstants,
                         SystemState, TrapConfig, derive_trap_params,
                         equilibrium_spacing, init_state, normal_modes,
                         trap_config_from_frequencies)
from .forces import (ForceStack, MagneticField, NoiseProcess, ParametricDrive,
                     TankCircuit)
from .integrators import (IntegratorConfig, RunRecord, rk3_step,
                          run_simulation, velocity_verlet_step)
