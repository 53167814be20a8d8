"""Crystal-lifetime experiments: reordering detection, rate scans, fits, and
threshold extraction.

Energies follow the axis convention of the rate plots: a scan point at
"temperature" T loads the varied mode with kinetic energy kB*T/2, and fits
run over x = 2E/kB in kelvin.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import least_squares

from .core_model import (CONSTANTS, ConfigurationError, ModeTemperatureSpec,
                         PhysicalConstants, TrapConfig, derive_trap_params,
                         equilibrium_spacing, init_state, normal_modes)
from .forces import CoulombTerm, ForceStack, TrapTerm
from .integrators import IntegratorConfig, RunRecord, run_simulation


@dataclass(frozen=True)
class LifetimeRecord:
    """One scan point: initial mode temperatures and the first-reorder time."""

    temperature: float        # K, 2E/kB of the varied mode
    spectator_temp: float     # K
    direction: str
    lifetime: float | None    # s; None when censored at t_end
    censored: bool
    rate: float               # 1/s; exactly 1/t_end when censored
    t_end: float
    seed: int
    status: str               # 'completed' or 'diverged'


def detect_reordering(record: RunRecord) -> float | None:
    """Earliest time where sign(z1 - z2) differs from its initial value.

    Uses the per-step event channel when the run recorded one; otherwise
    scans the decimated trajectory.
    """
    if record.n_particles != 2:
        raise ConfigurationError("reordering is defined for two-particle records")
    t_evt = record.events.get("first_reorder_time")
    if t_evt is not None:
        return t_evt
    dz = record.positions[:, 0, 2] - record.positions[:, 1, 2]
    sign0 = 1.0 if dz[0] >= 0 else -1.0
    crossed = np.nonzero(dz * sign0 < 0)[0]
    if crossed.size == 0:
        return None
    return float(record.times[crossed[0]])


def _scan_mode(direction: str) -> str:
    if direction == "axial":
        return "axial_stretch"
    if direction == "radial":
        return "radial_stretch_x"
    raise ConfigurationError(f"unknown scan direction {direction!r}")


def run_lifetime_point(temperature: float, direction: str, spectator_temp: float,
                       trap_cfg: TrapConfig, t_end: float, dt: float,
                       seed: int,
                       constants: PhysicalConstants = CONSTANTS) -> LifetimeRecord:
    """Single crystal-lifetime run at one initial energy."""
    derived = derive_trap_params(trap_cfg, constants)
    modes = normal_modes(derived.omega_r, derived.omega_z)
    l = equilibrium_spacing(derived.omega_z, constants)
    temps = {name: spectator_temp for name in
             ("axial_com", "axial_stretch", "radial_com_x", "radial_stretch_x",
              "radial_com_y", "radial_stretch_y")}
    temps[_scan_mode(direction)] = temperature
    spec = ModeTemperatureSpec(temperatures=temps, rng_seed=seed, n_particles=2)
    initial = init_state(modes, spec, l, constants)

    stack = ForceStack([TrapTerm(trap_cfg), CoulombTerm()])
    icfg = IntegratorConfig(method="velocity_verlet", dt=dt, t_end=t_end,
                            record_stride=max(1, int(round(t_end / dt)) // 200),
                            recorders=("trajectory", "events"))
    record = run_simulation(initial, stack, icfg, constants)

    lifetime = detect_reordering(record) if record.status == "completed" else None
    if record.status == "diverged":
        return LifetimeRecord(temperature=temperature, spectator_temp=spectator_temp,
                              direction=direction, lifetime=None, censored=False,
                              rate=float("nan"), t_end=t_end, seed=seed,
                              status="diverged")
    if lifetime is None:
        return LifetimeRecord(temperature=temperature, spectator_temp=spectator_temp,
                              direction=direction, lifetime=None, censored=True,
                              rate=1.0 / t_end, t_end=t_end, seed=seed,
                              status="completed")
    return LifetimeRecord(temperature=temperature, spectator_temp=spectator_temp,
                          direction=direction, lifetime=lifetime, censored=False,
                          rate=1.0 / lifetime, t_end=t_end, seed=seed,
                          status="completed")


@dataclass
class DoubleExpFit:
    """f(T) = exp{A [1 - exp((T0 - T)/tau)] + f0} with T in kelvin (2E/kB).

    Monotone non-decreasing for A, tau > 0; saturates at exp(A + f0) and
    vanishes below threshold.
    """

    a: float
    t0_k: float
    tau_k: float
    f0: float
    residual_rms: float = float("nan")
    n_points: int = 0

    def log_rate_at_temperature(self, temp_k):
        u = np.asarray((self.t0_k - np.asarray(temp_k)) / self.tau_k, dtype=float)
        # exp(u) overflows harmlessly to rate 0 far below threshold
        with np.errstate(over="ignore"):
            inner = 1.0 - np.exp(np.minimum(u, 700.0))
        return self.a * inner + self.f0

    def rate_at_temperature(self, temp_k):
        with np.errstate(over="ignore"):
            return np.exp(self.log_rate_at_temperature(temp_k))

    def rate_at_energy(self, energy_j, constants: PhysicalConstants = CONSTANTS):
        return self.rate_at_temperature(2.0 * np.asarray(energy_j) / constants.kB)


def fit_double_exponential(points, f0: float | None = None) -> DoubleExpFit:
    """Nonlinear least squares of the double-exponential rate law on log f.

    points: iterable of (T_kelvin, rate) pairs, at least 5 of them. The form
    carries a gauge freedom: only A + f0, A*exp(T0/tau), and tau shape the
    curve, so (A, T0, f0) are not separately identifiable unless f0 is
    pinned. Pass f0 = log(rate floor) to anchor T0 as the temperature where
    the curve crosses that floor (the convention of the rate plots); with
    f0 = None the gauge is left to the optimizer and only the fitted curve
    is meaningful.

    Initialization is a deterministic grid over T0 (data range) and tau
    (decades of the data span) with the remaining linear parameters solved
    exactly per node; the best node is polished with bounded least squares.
    """
    pts = np.asarray([(t, r) for t, r in points], dtype=float)
    if pts.shape[0] < 5:
        raise ConfigurationError("need at least 5 uncensored points to fit")
    x = pts[:, 0]
    y = np.log(pts[:, 1])
    span = max(x.max() - x.min(), 1e-12)
    fixed_f0 = f0 is not None

    best = None
    for t0 in np.linspace(x.min(), x.max(), 9):
        for tau in span * np.array([0.03, 0.1, 0.3, 1.0, 3.0]):
            u = 1.0 - np.exp(np.clip((t0 - x) / tau, None, 50.0))
            if fixed_f0:
                design = u[:, None]
                target = y - f0
            else:
                design = np.column_stack([u, np.ones_like(u)])
                target = y
            coef, *_ = np.linalg.lstsq(design, target, rcond=None)
            a = coef[0]
            f0_node = f0 if fixed_f0 else coef[1]
            if a < 0:
                continue
            res = design @ coef - target
            cost = float(res @ res)
            if best is None or cost < best[0]:
                best = (cost, a, t0, tau, f0_node)
    if best is None:
        raise FitFailure("no admissible initialization found", None)

    _, a0, t00, tau0, f00 = best

    def curve(a, t0, tau, f0_):
        u = 1.0 - np.exp(np.clip((t0 - x) / tau, None, 50.0))
        return a * u + f0_

    if fixed_f0:
        def residuals(p):
            return curve(p[0], p[1], p[2], f0) - y
        x0 = [a0, t00, tau0]
        lo = [0.0, x.min() - 2 * span, 1e-4 * span]
        hi = [1e4, x.max() + 2 * span, 100.0 * span]
    else:
        def residuals(p):
            return curve(p[0], p[1], p[2], p[3]) - y
        x0 = [a0, t00, tau0, f00]
        lo = [0.0, x.min() - 2 * span, 1e-4 * span, -100.0]
        hi = [1e4, x.max() + 2 * span, 100.0 * span, 100.0]

    sol = least_squares(residuals, x0=x0, bounds=(lo, hi), method="trf")
    if not sol.success:
        raise FitFailure("double-exponential fit did not converge",
                         {"cost": sol.cost, "status": sol.status})
    a, t0, tau = sol.x[:3]
    f0_out = f0 if fixed_f0 else float(sol.x[3])
    rms = float(np.sqrt(np.mean(sol.fun ** 2)))
    return DoubleExpFit(a=a, t0_k=t0, tau_k=tau, f0=f0_out, residual_rms=rms,
                        n_points=len(x))


class FitFailure(RuntimeError):
    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


def boltzmann_mean_rate(fit_or_fn, temperature: float,
                        constants: PhysicalConstants = CONSTANTS) -> float:
    """Mean rate over a thermal energy distribution.

    Integrates P(E, T) f(E) dE with P(E, T) = exp(-E/(kB T))/(kB T) over
    [0, 40 kB T]; the truncated tail is below 1e-15 of the weight for any
    bounded-growth f. Accepts a DoubleExpFit or a callable f(E_joules).
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if callable(fit_or_fn):
        rate_fn = fit_or_fn
    else:
        rate_fn = fit_or_fn.rate_at_energy
    kbt = constants.kB * temperature

    def integrand(e):
        return math.exp(-e / kbt) / kbt * float(rate_fn(e))

    value, err = quad(integrand, 0.0, 40.0 * kbt, epsrel=1e-9, epsabs=0.0,
                      limit=200)
    if not math.isfinite(value):
        raise FloatingPointError("divergent thermal average")
    if value > 0 and err / value > 1e-6:
        warnings.warn(f"thermal average tolerance not met: rel err {err/value:g}",
                      stacklevel=2)
    return value


def extract_threshold(fit_or_fn, target_rate: float, t_hi: float = 64.0,
                      tol_k: float = 1e-3,
                      constants: PhysicalConstants = CONSTANTS) -> float:
    """Largest temperature whose Boltzmann-mean rate stays at or below target.

    Bisection on the monotone mean-rate curve, refined to tol_k.
    """
    lo = tol_k
    if boltzmann_mean_rate(fit_or_fn, lo, constants) > target_rate:
        return 0.0
    hi = 2.0 * tol_k
    while boltzmann_mean_rate(fit_or_fn, hi, constants) <= target_rate:
        hi *= 2.0
        if hi > t_hi:
            raise ConfigurationError(
                f"mean rate never exceeds target below {t_hi} K")
    lo = hi / 2.0
    while hi - lo > tol_k:
        mid = 0.5 * (lo + hi)
        if boltzmann_mean_rate(fit_or_fn, mid, constants) <= target_rate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class ThresholdScanResult:
    """A full rate-vs-energy scan with its fit and extracted threshold."""

    direction: str
    spectator_temp: float
    records: list
    fit: DoubleExpFit | None
    threshold_k: float | None
    target_rate: float
    trap_summary: dict
    t_end: float
    dt: float
    base_seed: int

    @property
    def points(self):
        """(T, rate) pairs of completed runs, censored ones included."""
        return [(r.temperature, r.rate) for r in self.records
                if r.status == "completed"]

    @property
    def uncensored_points(self):
        return [(r.temperature, r.rate) for r in self.records
                if r.status == "completed" and not r.censored]


def lifetime_scan(energies_k, direction: str, spectator_temp: float,
                  trap_cfg: TrapConfig, t_end: float, dt: float,
                  base_seed: int = 0, jobs: int = 1,
                  constants: PhysicalConstants = CONSTANTS) -> ThresholdScanResult:
    """One lifetime run per energy, censored at t_end.

    energies_k must be ascending (2E/kB, kelvin). Diverged runs are kept in
    the record list but flagged and excluded from fitting.
    """
    energies = list(energies_k)
    if sorted(energies) != energies:
        raise ConfigurationError("energies must be sorted ascending")
    derived = derive_trap_params(trap_cfg, constants)

    def one(idx_temp):
        idx, temp = idx_temp
        return run_lifetime_point(temp, direction, spectator_temp, trap_cfg,
                                  t_end, dt, base_seed + idx, constants)

    items = list(enumerate(energies))
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(one, items))
    else:
        records = [one(it) for it in items]

    n_div = sum(1 for r in records if r.status == "diverged")
    if n_div:
        warnings.warn(f"{n_div} scan runs diverged and are excluded from the fit",
                      stacklevel=2)
    return ThresholdScanResult(
        direction=direction, spectator_temp=spectator_temp, records=records,
        fit=None, threshold_k=None, target_rate=1.0 / t_end,
        trap_summary={"omega_r": derived.omega_r, "omega_z": derived.omega_z,
                      "omega_rf": trap_cfg.omega_rf, "q_x": derived.q_x,
                      "a_z": derived.a_z},
        t_end=t_end, dt=dt, base_seed=base_seed)


def threshold_scan(energies_k, direction: str, spectator_temp: float,
                   trap_cfg: TrapConfig, t_end: float, dt: float,
                   base_seed: int = 0, target_rate: float | None = None,
                   jobs: int = 1,
                   constants: PhysicalConstants = CONSTANTS) -> ThresholdScanResult:
    """Scan, fit, and extract the threshold temperature at the target rate."""
    result = lifetime_scan(energies_k, direction, spectator_temp, trap_cfg,
                           t_end, dt, base_seed, jobs, constants)
    if target_rate is None:
        target_rate = 1.0 / t_end
    result.target_rate = target_rate
    # f0 anchored at the censoring-rate log, matching the rate-plot convention
    result.fit = fit_double_exponential(result.uncensored_points,
                                        f0=math.log(1.0 / t_end))
    result.threshold_k = extract_threshold(result.fit, target_rate,
                                           constants=constants)
    return result


def exchange_saddle_energy(omega_r: float, omega_z: float,
                           constants: PhysicalConstants = CONSTANTS) -> float:
    """Static barrier for axial order exchange through the radial plane, J.

    The saddle has both electrons side by side radially at the spacing that
    minimizes radial-trap-plus-Coulomb energy; the barrier is that energy
    minus the chain's rest energy. Scales as omega^(2/3) at fixed frequency
    ratios and sets where ballistic (short-horizon) reordering turns on.
    """
    ke2 = constants.e ** 2 / (4.0 * math.pi * constants.eps0)
    l_z = equilibrium_spacing(omega_z, constants)
    l_r = equilibrium_spacing(omega_r, constants)
    return 1.5 * ke2 * (1.0 / l_r - 1.0 / l_z)


def frequency_scaling_fit(points):
    """Least squares of threshold vs frequency: y = A * omega^(2/3) - E0.

    points: (omega_rad_s, threshold_kelvin) pairs, at least 3.
    Returns (A, E0).
    """
    pts = np.asarray([(w, e) for w, e in points], dtype=float)
    if pts.shape[0] < 3:
        raise ConfigurationError("need at least 3 points")
    design = np.column_stack([pts[:, 0] ** (2.0 / 3.0), -np.ones(pts.shape[0])])
    if np.linalg.matrix_rank(design) < 2:
        raise ConfigurationError("rank-deficient design")
    coef, *_ = np.linalg.lstsq(design, pts[:, 1], rcond=None)
    return float(coef[0]), float(coef[1])


def free_exponent_fit(points):
    """Fit y = A * omega^p - E0 with a free exponent; returns (A, p, E0)."""
    pts = np.asarray([(w, e) for w, e in points], dtype=float)
    if pts.shape[0] < 3:
        raise ConfigurationError("need at least 3 points")
    w = pts[:, 0]
    y = pts[:, 1]
    # scale frequencies to O(1) so the power-law fit is well conditioned
    w_ref = np.exp(np.mean(np.log(w)))
    a0, e0 = frequency_scaling_fit(points)
    a0_s = a0 * w_ref ** (2.0 / 3.0)

    def residuals(p):
        a, expo, e0_ = p
        return a * (w / w_ref) ** expo - e0_ - y

    sol = least_squares(residuals, x0=[max(a0_s, 1e-9), 2.0 / 3.0, e0],
                        bounds=([0.0, 0.05, -np.inf], [np.inf, 3.0, np.inf]))
    if not sol.success:
        raise FitFailure("free-exponent fit failed", {"status": sol.status})
    a_s, expo, e0_ = sol.x
    return float(a_s / w_ref ** expo), float(expo), float(e0_)


def qx_scaling_fit(points):
    """Fit threshold vs q_x with E(q) = p0 + p1 * arctan((q - p2)/p3).

    Thresholds fall with growing q_x and plateau at small q_x, which the
    arctan captures with p1 < 0. Deterministic multi-start over the center
    p2 and width p3.
    """
    pts = np.asarray([(q, e) for q, e in points], dtype=float)
    if pts.shape[0] < 4:
        raise ConfigurationError("need at least 4 points")
    q = pts[:, 0]
    y = pts[:, 1]
    if np.any((q <= 0) | (q >= 1)):
        raise ConfigurationError("q_x values must lie in (0, 1)")
    span = max(q.max() - q.min(), 1e-6)

    best = None
    for p2 in np.linspace(q.min(), q.max(), 7):
        for p3 in span * np.array([0.05, 0.15, 0.4, 1.0]):
            u = np.arctan((q - p2) / p3)
            design = np.column_stack([np.ones_like(u), u])
            coef, *_ = np.linalg.lstsq(design, y, rcond=None)
            res = design @ coef - y
            cost = float(res @ res)
            if best is None or cost < best[0]:
                best = (cost, coef[0], coef[1], p2, p3)
    _, p0, p1, p2, p3 = best

    def residuals(p):
        return p[0] + p[1] * np.arctan((q - p[2]) / p[3]) - y

    sol = least_squares(residuals, x0=[p0, p1, p2, p3],
                        bounds=([-np.inf, -np.inf, -1.0, 1e-4],
                                [np.inf, np.inf, 2.0, 10.0]))
    if not sol.success:
        raise FitFailure("arctan fit failed", {"status": sol.status})
    return tuple(float(v) for v in sol.x)
