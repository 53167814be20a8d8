"""Trap-stability analysis under static magnetic fields.

The linearized equations of motion around the trap center form a
time-periodic 6x6 system; propagating the identity over one RF period gives
the monodromy matrix, whose eigenvalues (Floquet multipliers) decide
stability. The per-period exponent lambda = ln(max |mu|) is compared against
a numerical-accuracy threshold delta_th.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .core_model import (CONSTANTS, ConfigurationError, PhysicalConstants,
                         SystemState, TrapConfig, derive_trap_params,
                         trap_config_from_frequencies)
from .forces import ForceStack, LorentzTerm, MagneticField, TrapTerm
from .integrators import IntegratorConfig, run_simulation

DELTA_TH = 1e-10
ENERGY_CAP = 1.602176634e-19  # 1 eV, the typical trap depth


@dataclass(frozen=True)
class LinearizedSystem:
    """u' = M(t) u with u = (x, y, z, vx, vy, vz) and M periodic at 2 pi/Omega.

    k_rf and k_dc are the signed trap-curvature acceleration coefficients;
    (wc_x, wc_y, wc_z) = q B / m is the signed cyclotron vector entering the
    velocity-coupling block, whose trace vanishes.
    """

    k_rf: float
    k_dc: float
    omega_rf: float
    phi: float
    wc: tuple[float, float, float]

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega_rf

    def matrix_at(self, t: float) -> np.ndarray:
        osc = self.k_rf * math.cos(self.omega_rf * t + self.phi)
        cx, cy, cz = self.wc
        m = np.zeros((6, 6))
        m[0, 3] = m[1, 4] = m[2, 5] = 1.0
        m[3, 0] = -osc + self.k_dc
        m[4, 1] = osc + self.k_dc
        m[5, 2] = -2.0 * self.k_dc
        # velocity coupling a = v x (qB/m)
        m[3, 4] = cz
        m[3, 5] = -cy
        m[4, 3] = -cz
        m[4, 5] = cx
        m[5, 3] = cy
        m[5, 4] = -cx
        return m


def linearized_system(cfg: TrapConfig, fieldB: MagneticField | None = None,
                      constants: PhysicalConstants = CONSTANTS) -> LinearizedSystem:
    q = cfg.charge(constants)
    m = constants.m
    k_rf = q * cfg.v0 / (m * cfg.r0 ** 2)
    k_dc = q * cfg.kappa * cfg.u_dc / (m * cfg.z0 ** 2)
    if fieldB is None:
        wc = (0.0, 0.0, 0.0)
    else:
        wc = (q * fieldB.b[0] / m, q * fieldB.b[1] / m, q * fieldB.b[2] / m)
    return LinearizedSystem(k_rf=k_rf, k_dc=k_dc, omega_rf=cfg.omega_rf,
                            phi=cfg.phi, wc=wc)


@njit(cache=True, nogil=True)
def _rhs(u, osc, k_dc, wcx, wcy, wcz, out):
    for j in range(6):
        out[0, j] = u[3, j]
        out[1, j] = u[4, j]
        out[2, j] = u[5, j]
        out[3, j] = (-osc + k_dc) * u[0, j] + wcz * u[4, j] - wcy * u[5, j]
        out[4, j] = (osc + k_dc) * u[1, j] - wcz * u[3, j] + wcx * u[5, j]
        out[5, j] = -2.0 * k_dc * u[2, j] + wcy * u[3, j] - wcx * u[4, j]


@njit(cache=True, nogil=True)
def _monodromy_core(k_rf, k_dc, omega, phi, wcx, wcy, wcz, n_steps):
    """Classic RK4 propagation of the identity over one RF period."""
    period = 2.0 * math.pi / omega
    h = period / n_steps
    u = np.eye(6)
    k1 = np.empty((6, 6))
    k2 = np.empty((6, 6))
    k3 = np.empty((6, 6))
    k4 = np.empty((6, 6))
    tmp = np.empty((6, 6))
    for s in range(n_steps):
        t = s * h
        osc0 = k_rf * math.cos(omega * t + phi)
        osc1 = k_rf * math.cos(omega * (t + 0.5 * h) + phi)
        osc2 = k_rf * math.cos(omega * (t + h) + phi)
        _rhs(u, osc0, k_dc, wcx, wcy, wcz, k1)
        for i in range(6):
            for j in range(6):
                tmp[i, j] = u[i, j] + 0.5 * h * k1[i, j]
        _rhs(tmp, osc1, k_dc, wcx, wcy, wcz, k2)
        for i in range(6):
            for j in range(6):
                tmp[i, j] = u[i, j] + 0.5 * h * k2[i, j]
        _rhs(tmp, osc1, k_dc, wcx, wcy, wcz, k3)
        for i in range(6):
            for j in range(6):
                tmp[i, j] = u[i, j] + h * k3[i, j]
        _rhs(tmp, osc2, k_dc, wcx, wcy, wcz, k4)
        for i in range(6):
            for j in range(6):
                u[i, j] += (h / 6.0) * (k1[i, j] + 2.0 * k2[i, j]
                                        + 2.0 * k3[i, j] + k4[i, j])
    return u


def monodromy(system: LinearizedSystem, n_steps_per_period: int = 2048) -> np.ndarray:
    """State-transition matrix over one RF period."""
    if n_steps_per_period < 200:
        raise ConfigurationError("n_steps_per_period must be >= 200")
    phi_m = _monodromy_core(system.k_rf, system.k_dc, system.omega_rf,
                            system.phi, system.wc[0], system.wc[1],
                            system.wc[2], n_steps_per_period)
    if not np.all(np.isfinite(phi_m)):
        raise FloatingPointError("monodromy propagation diverged")
    return phi_m


@dataclass(frozen=True)
class FloquetResult:
    lam: float                 # ln(max |mu|) per RF period
    multipliers: np.ndarray    # 6 complex eigenvalues
    args: np.ndarray           # phases of the multipliers


def floquet_exponent(phi_m: np.ndarray) -> FloquetResult:
    """Per-period growth exponent; lambda > 0 marks exponential growth."""
    mu = np.linalg.eigvals(phi_m)
    return FloquetResult(lam=float(np.log(np.max(np.abs(mu)))),
                         multipliers=mu, args=np.angle(mu))


@dataclass(frozen=True)
class BetaResult:
    beta: float     # arg(mu_x)/pi on the principal branch
    flagged: bool   # mode identification ambiguous (near-degenerate weights)


def beta_x(phi_m: np.ndarray, omega_rf: float) -> BetaResult:
    """Normalized x secular frequency 2 omega_x,tot/Omega from the x-like multiplier.

    The x-like eigenpair is picked by eigenvector dominance, with velocity
    components scaled by 1/Omega to share units with positions. The returned
    value is the principal branch; stability_map unwraps it continuously
    along grid sweeps.
    """
    mu, vec = np.linalg.eig(phi_m)
    weights = np.empty(6)
    for k in range(6):
        v = vec[:, k]
        scale = np.abs(v[:3]) ** 2 + np.abs(v[3:] / omega_rf) ** 2
        total = float(np.sum(scale))
        weights[k] = (abs(v[0]) ** 2 + abs(v[3] / omega_rf) ** 2) / total
    order = np.argsort(weights)[::-1]
    # among x-dominant candidates prefer the positive-phase member of the pair
    best = None
    for k in order:
        if np.angle(mu[k]) >= 0:
            best = k
            break
    if best is None:
        best = order[0]
    # ambiguous when a competing pair carries nearly the same x weight, or
    # when even the best candidate is barely x-polarized (strong hybridization
    # near degeneracies)
    flagged = bool((weights[order[1]] > 0.8 * weights[order[0]]
                    and abs(np.angle(mu[order[1]])) != abs(np.angle(mu[best])))
                   or weights[best] < 0.2)
    return BetaResult(beta=float(np.angle(mu[best]) / math.pi), flagged=flagged)


def modified_radial_a(omega_ce: float, omega_z: float, omega_rf: float) -> float:
    """Radial stability parameter of a combined trap with an axial field:
    a_xy = (omega_ce^2 - 2 omega_z^2)/Omega_rf^2."""
    return (omega_ce ** 2 - 2.0 * omega_z ** 2) / omega_rf ** 2


@dataclass
class StabilityGrid:
    q_x: np.ndarray
    omega_ce: np.ndarray
    lam: np.ndarray        # (nq, nw)
    beta: np.ndarray       # unwrapped 2 omega_x,tot/Omega; NaN when unstable
    beta_raw: np.ndarray   # principal branch
    stable: np.ndarray     # bool
    flagged: np.ndarray    # bool, ambiguous mode identification
    delta_th: float
    omega_rf: float
    omega_z: float

    def boundary_cells(self):
        """(i, j) of stable cells adjacent (along omega_ce) to unstable ones."""
        out = []
        for i in range(self.stable.shape[0]):
            for j in range(self.stable.shape[1] - 1):
                if self.stable[i, j] != self.stable[i, j + 1]:
                    out.append((i, j) if self.stable[i, j] else (i, j + 1))
        return out


def stability_map(q_x_values, omega_ce_values, omega_rf: float,
                  omega_z: float, kappa: float = 0.5, r0: float = 100e-6,
                  z0: float = 100e-6, n_steps_per_period: int = 2048,
                  delta_th: float = DELTA_TH,
                  constants: PhysicalConstants = CONSTANTS) -> StabilityGrid:
    """Floquet exponent and beta_x over a (q_x, omega_ce) grid at fixed Omega_rf.

    The field is along y. q_x sets the RF amplitude at fixed drive frequency;
    omega_z sets the DC curvature everywhere.
    """
    q_x_values = np.asarray(q_x_values, dtype=float)
    omega_ce_values = np.asarray(omega_ce_values, dtype=float)
    nq, nw = len(q_x_values), len(omega_ce_values)
    lam = np.empty((nq, nw))
    braw = np.full((nq, nw), np.nan)
    flagged = np.zeros((nq, nw), dtype=bool)

    for i, qx in enumerate(q_x_values):
        omega_r = qx * omega_rf / (2.0 * math.sqrt(2.0))
        cfg = trap_config_from_frequencies(omega_r, omega_z, omega_rf,
                                           kappa=kappa, r0=r0, z0=z0,
                                           constants=constants)
        for j, wce in enumerate(omega_ce_values):
            fieldB = MagneticField.from_cyclotron(wce, constants) if wce > 0 else None
            system = linearized_system(cfg, fieldB, constants)
            phi_m = monodromy(system, n_steps_per_period)
            res = floquet_exponent(phi_m)
            lam[i, j] = res.lam
            if res.lam < delta_th:
                b = beta_x(phi_m, omega_rf)
                braw[i, j] = b.beta
                flagged[i, j] = b.flagged

    stable = lam < delta_th
    beta_unwrapped = _unwrap_beta(braw, stable)
    return StabilityGrid(q_x=q_x_values, omega_ce=omega_ce_values, lam=lam,
                         beta=beta_unwrapped, beta_raw=braw, stable=stable,
                         flagged=flagged, delta_th=delta_th,
                         omega_rf=omega_rf, omega_z=omega_z)


def _unwrap_beta(beta_raw: np.ndarray, stable: np.ndarray) -> np.ndarray:
    """Continuous branch tracking of beta along each omega_ce sweep.

    The principal value folds at every integer; candidates 2k +- raw are
    matched to the previous stable sample, re-anchoring across unstable gaps
    (instability tongues emerge at integer beta, so continuity resumes there).
    """
    out = np.full_like(beta_raw, np.nan)
    nq, nw = beta_raw.shape
    for i in range(nq):
        prev = None
        for j in range(nw):
            if not stable[i, j] or not np.isfinite(beta_raw[i, j]):
                continue
            raw = abs(beta_raw[i, j])
            if prev is None:
                out[i, j] = raw
            else:
                best = None
                for k in range(0, 8):
                    for cand in (2.0 * k + raw, 2.0 * k - raw):
                        if cand < 0:
                            continue
                        if best is None or abs(cand - prev) < abs(best - prev):
                            best = cand
                out[i, j] = best
            prev = out[i, j]
    return out


@dataclass
class LineCutResult:
    omega_ce: np.ndarray
    max_energy: np.ndarray      # J, capped at the cap
    capped: np.ndarray          # bool, cap reached (time-domain unstable)
    lam: np.ndarray             # Floquet exponents at the same points
    stable_floquet: np.ndarray  # bool
    energy_cap: float
    t_end: float


def max_energy_linecut(q_x: float, omega_ce_values, omega_rf: float,
                       omega_z: float, t_end: float = 25e-6, dt: float = 2e-13,
                       init_temp: float = 0.4, kappa: float = 0.5,
                       r0: float = 100e-6, z0: float = 100e-6,
                       energy_cap: float = ENERGY_CAP,
                       delta_th: float = DELTA_TH,
                       n_steps_per_period: int = 2048,
                       constants: PhysicalConstants = CONSTANTS) -> LineCutResult:
    """Time-domain stability verdicts along an omega_ce sweep at fixed q_x.

    A single electron starts with kinetic energies of init_temp in all three
    modes, the field is applied from t = 0, and the maximum of the radial
    kinetic-plus-DC-potential energy over the run is recorded, capped at the
    trap depth. Cap reached means unstable.
    """
    omega_ce_values = np.asarray(omega_ce_values, dtype=float)
    omega_r = q_x * omega_rf / (2.0 * math.sqrt(2.0))
    cfg = trap_config_from_frequencies(omega_r, omega_z, omega_rf, kappa=kappa,
                                       r0=r0, z0=z0, constants=constants)
    m = constants.m
    v0 = math.sqrt(constants.kB * init_temp / m)
    max_e = np.empty(len(omega_ce_values))
    lam = np.empty(len(omega_ce_values))

    for j, wce in enumerate(omega_ce_values):
        fieldB = MagneticField.from_cyclotron(wce, constants)
        system = linearized_system(cfg, fieldB, constants)
        lam[j] = floquet_exponent(monodromy(system, n_steps_per_period)).lam

        initial = SystemState(0.0, np.zeros((1, 3)),
                              np.array([[v0, v0, v0]]))
        stack = ForceStack([TrapTerm(cfg), LorentzTerm(fieldB, cfg.charge_sign)])
        icfg = IntegratorConfig(method="rk3", dt=dt, t_end=t_end,
                                record_stride=max(1, int(round(t_end / dt)) // 100),
                                recorders=("trajectory", "events"))
        record = run_simulation(initial, stack, icfg, constants)
        max_e[j] = min(record.max_radial_energy, energy_cap)

    capped = max_e >= energy_cap
    return LineCutResult(omega_ce=omega_ce_values, max_energy=max_e,
                         capped=capped, lam=lam, stable_floquet=lam < delta_th,
                         energy_cap=energy_cap, t_end=t_end)
