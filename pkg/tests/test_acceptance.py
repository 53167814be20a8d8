"""Acceptance suite: one test per primary criterion, each printing a verdict.

Full-scale reproduction of the 1 ms threshold campaigns is not desk-scale;
per the build contract these tests run scaled experiments plus property
checks at pinned tolerances. Every expected value is either evaluated from
its stated closed form inside the test or measured against an independent
oracle implemented here.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from paultrap.cooling import (coulomb_barrier_energy, radial_secular_frequency,
                              run_parametric_single, run_resistive_cooling,
                              run_stretch_cooling, secular_temperature,
                              stretch_drive_frequency)
from paultrap.core_model import (CONSTANTS, SystemState, derive_trap_params,
                                 equilibrium_spacing,
                                 trap_config_from_frequencies)
from paultrap.forces import (ForceStack, MagneticField, TankCircuit, TrapTerm)
from paultrap.integrators import (IntegratorConfig, mechanical_energy,
                                  run_simulation)
from paultrap.stability import (DELTA_TH, beta_x, floquet_exponent,
                                linearized_system, max_energy_linecut,
                                monodromy, stability_map)
from paultrap.transport import (ShuttleSchedule, build_split_schedule,
                                equilibrium_relation_residual, omega_cp,
                                run_shuttle, run_split)
from paultrap.wigner import (DoubleExpFit, boltzmann_mean_rate,
                             exchange_saddle_energy, fit_double_exponential,
                             run_lifetime_point, threshold_scan)

TAU = 2.0 * math.pi
KB = CONSTANTS.kB
M_E = CONSTANTS.m


def verdict(name, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------


def test_criterion_01_derived_parameters(default_trap):
    derived = derive_trap_params(default_trap)
    l = equilibrium_spacing(TAU * 300e6)
    ok = (abs(derived.q_x - 0.53) <= 0.005
          and abs(abs(derived.a_z) - 0.003) <= 0.0005
          and abs(l / 5.22e-6 - 1.0) <= 0.005)
    verdict("derived parameters",
            ok, f"q_x={derived.q_x:.4f}, |a_z|={abs(derived.a_z):.5f}, "
                f"l={l * 1e6:.4f} um")


def test_criterion_02_integrator_validity(default_trap):
    # velocity-Verlet energy drift on the conservative axial well
    trap_dc = trap_config_from_frequencies(0.0, TAU * 300e6, TAU * 10.6e9)
    stack = ForceStack([TrapTerm(trap_dc)])
    dt = (1.0 / 300e6) / 1000.0
    state = SystemState(0.0, [[0, 0, 1e-7]], np.zeros((1, 3)))
    cfg = IntegratorConfig(method="velocity_verlet", dt=dt, t_end=1e6 * dt,
                           record_stride=100)
    rec = run_simulation(state, stack, cfg)
    energies = np.array([
        mechanical_energy(SystemState(t, rec.positions[k], rec.velocities[k]),
                          stack, t) for k, t in enumerate(rec.times)])
    drift = abs(energies[-10:].mean() - energies[:10].mean()) / energies[0]

    # measured convergence orders against analytic solutions
    amp = 1e-7
    omega = TAU * 300e6
    vv_err = []
    for step in (2e-12, 1e-12):
        cfg = IntegratorConfig(method="velocity_verlet", dt=step,
                               t_end=10 / 300e6, record_stride=1)
        r = run_simulation(SystemState(0.0, [[0, 0, amp]], np.zeros((1, 3))),
                           stack, cfg)
        vv_err.append(np.max(np.abs(r.positions[:, 0, 2]
                                    - amp * np.cos(omega * r.times))))
    vv_order = math.log2(vv_err[0] / vv_err[1])

    gamma = omega / 20.0
    r_ohm = gamma * M_E * default_trap.d_eff ** 2 / CONSTANTS.e ** 2
    circ = TankCircuit(L=250e-9, C=1e-12,
                       Q=r_ohm / math.sqrt(250e-9 / 1e-12), T_res=0.0)
    from paultrap.forces import DampingTerm
    stack_d = ForceStack([TrapTerm(trap_dc), DampingTerm(circ, default_trap.d_eff)])
    omega_d = math.sqrt(omega ** 2 - gamma ** 2 / 4)
    rk_err = []
    for step in (4e-12, 2e-12):
        cfg = IntegratorConfig(method="rk3", dt=step, t_end=5 / 300e6,
                               record_stride=1)
        r = run_simulation(SystemState(0.0, [[0, 0, amp]], np.zeros((1, 3))),
                           stack_d, cfg)
        exact = amp * np.exp(-0.5 * gamma * r.times) * (
            np.cos(omega_d * r.times)
            + gamma / (2 * omega_d) * np.sin(omega_d * r.times))
        rk_err.append(np.max(np.abs(r.positions[:, 0, 2] - exact)))
    rk_order = math.log2(rk_err[0] / rk_err[1])

    ok = drift < 1e-6 and abs(vv_order - 2.0) <= 0.1 and abs(rk_order - 3.0) <= 0.2
    verdict("integrator validity",
            ok, f"VV drift={drift:.2e}, orders: VV={vv_order:.3f}, RK3={rk_order:.3f}")


def test_criterion_03_secular_spectrum(default_trap):
    state = SystemState(0.0, [[1e-7, 0, 1e-7]], np.zeros((1, 3)))
    cfg = IntegratorConfig(method="velocity_verlet", dt=1e-13, t_end=1e-6,
                           record_stride=5)
    rec = run_simulation(state, ForceStack([TrapTerm(default_trap)]), cfg)
    freq = np.fft.rfftfreq(len(rec.times) - 1, d=5e-13)
    bin_width = freq[1] - freq[0]

    amp_z = np.abs(np.fft.rfft(rec.positions[:-1, 0, 2]))
    f_z = freq[1 + np.argmax(amp_z[1:])]
    axial_ok = abs(f_z - 300e6) <= bin_width

    amp_x = np.abs(np.fft.rfft(rec.positions[:-1, 0, 0]))
    f_sec = freq[1 + np.argmax(amp_x[1:])]
    sidebands_ok = True
    for f_side in (10.6e9 - f_sec, 10.6e9 + f_sec):
        window = (freq > f_side - 50e6) & (freq < f_side + 50e6)
        k = np.argmax(amp_x[window])
        found = freq[window][k]
        sidebands_ok &= (abs(found - f_side) <= 2 * bin_width
                         and amp_x[window][k] > 50 * np.median(amp_x[window]))

    ok = axial_ok and sidebands_ok
    verdict("secular spectrum",
            ok, f"axial peak {f_z / 1e6:.1f} MHz (bin {bin_width / 1e6:.1f} MHz), "
                f"radial secular {f_sec / 1e9:.3f} GHz with drive sidebands")


def test_criterion_04_crystal_cloud_dichotomy(default_trap):
    cold = run_lifetime_point(0.4, "axial", 0.4, default_trap, 1e-6, 1e-13,
                              seed=1)
    hot = run_lifetime_point(18.0, "axial", 0.4, default_trap, 1e-6, 1e-13,
                             seed=2)
    ok = cold.censored and (not hot.censored) and hot.lifetime < 1e-6
    verdict("crystal/cloud dichotomy",
            ok, f"0.4 K run censored={cold.censored}; 18 K run reorders at "
                f"{(hot.lifetime or float('nan')) * 1e9:.0f} ns")


def test_criterion_05_scaled_threshold_scan():
    fracs = (0.55, 0.7, 0.85, 1.0, 1.15, 1.3, 1.5, 1.75, 2.0)
    points = []
    main_scan = None
    for f_z, dt in ((15e6, 4e-12), (30e6, 2e-12), (60e6, 1e-12)):
        omega_z = TAU * f_z
        omega_r = omega_z * 400.0 / 30.0
        trap = trap_config_from_frequencies(
            omega_r, omega_z, 2 * math.sqrt(2) * omega_r / 0.53)
        saddle_k = 2 * exchange_saddle_energy(omega_r, omega_z) / KB
        t_end = 10e-6 * 30e6 / f_z
        energies = sorted(round(saddle_k * f, 4) for f in fracs)
        scan = threshold_scan(energies, "axial", 0.01 * saddle_k, trap,
                              t_end, dt, base_seed=int(f_z / 1e4))
        points.append((omega_z, scan.threshold_k))
        if f_z == 30e6:
            main_scan = scan

    # monotone rate-vs-energy: the fitted curve is monotone by construction
    # (A, tau > 0) and the raw uncensored rates trend upward
    temps = np.array([p[0] for p in main_scan.uncensored_points])
    rates = np.array([p[1] for p in main_scan.uncensored_points])
    grid = np.linspace(temps.min(), temps.max(), 200)
    fit_monotone = bool(np.all(np.diff(main_scan.fit.rate_at_temperature(grid))
                               >= 0))
    from scipy.stats import spearmanr
    rho = spearmanr(temps, rates).statistic
    trend_ok = fit_monotone and rho > 0.7 and rates[-1] > rates[0]

    bound_k = 2 * coulomb_barrier_energy(TAU * 30e6) / KB
    below_bound = main_scan.threshold_k < bound_k

    # self-similar sweep (spectators and horizons scale with the saddle), so
    # the offset-free power law is the identified scaling model
    w = np.array([p[0] for p in points])
    thr = np.array([p[1] for p in points])
    exponent = float(np.polyfit(np.log(w), np.log(thr), 1)[0])
    exponent_ok = abs(exponent - 0.67) <= 0.15

    ok = trend_ok and below_bound and exponent_ok
    verdict("scaled threshold scan",
            ok, f"monotone (rho={rho:.2f}), threshold {main_scan.threshold_k:.3f} K "
                f"< bound {bound_k:.3f} K, sweep exponent {exponent:.3f}")


def test_criterion_06_boltzmann_machinery():
    const_ok = abs(boltzmann_mean_rate(lambda e: 42.0, 1.7) / 42.0 - 1.0) < 1e-6
    closed = boltzmann_mean_rate(lambda e: math.exp(e / KB), 0.5)
    closed_ok = abs(closed / 2.0 - 1.0) < 1e-6

    truth = DoubleExpFit(a=10.0, t0_k=4.0, tau_k=2.0, f0=math.log(1e3))
    temps = np.linspace(2.0, 14.0, 25)
    rng = np.random.default_rng(12)
    rates = truth.rate_at_temperature(temps) * np.exp(
        rng.normal(0, 0.01, temps.size))
    fit = fit_double_exponential(list(zip(temps, rates)), f0=truth.f0)
    fit_ok = (abs(fit.a / truth.a - 1) < 0.05
              and abs(fit.t0_k / truth.t0_k - 1) < 0.05
              and abs(fit.tau_k / truth.tau_k - 1) < 0.05)

    ok = const_ok and closed_ok and fit_ok
    verdict("Boltzmann machinery",
            ok, f"constant identity, closed form {closed:.6f} = 2, "
                f"fit round-trip (A={fit.a:.2f}, T0={fit.t0_k:.2f}, tau={fit.tau_k:.2f})")


def test_criterion_07_resistive_cooling(default_trap):
    circ = TankCircuit(L=250e-9, C=1e-12, Q=1000, T_res=0.4)
    gamma = circ.damping_rate(default_trap.d_eff)
    decay = run_resistive_cooling(4.0, circ, default_trap, noise=False,
                                  rng_seed=1).decay_time
    decay_ok = abs(decay * gamma - 1.0) < 0.10

    temps = []
    for seed in range(100, 120):
        res = run_resistive_cooling(0.4, circ, default_trap, rng_seed=seed)
        temps.append(res.equilibrium["z"].temperature)
    mean = float(np.mean(temps))
    mean_ok = abs(mean - 0.4) <= 0.1

    ok = decay_ok and mean_ok
    verdict("resistive cooling",
            ok, f"decay {decay * 1e6:.3f} us vs 1/gamma {1e6 / gamma:.3f} us; "
                f"20-run equilibrium {mean:.3f} +/- "
                f"{np.std(temps, ddof=1):.3f} K (reference 0.41 +/- 0.029 K)")


def test_criterion_08_parametric_single_cooling():
    # reduced-frequency configuration at the same q_x with A_p scaled to keep
    # g_rz at its reference value (sanctioned shortcut)
    trap = trap_config_from_frequencies(TAU * 500e6, TAU * 75e6,
                                        2 * math.sqrt(2) * TAU * 500e6 / 0.53)
    circ = TankCircuit(L=250e-9, C=1e-12, Q=1000, T_res=0.4)
    omega_x = radial_secular_frequency(trap)
    omega_z = derive_trap_params(trap).omega_z
    target = omega_x / omega_z

    tz, tx = [], []
    for seed in range(700, 705):
        res = run_parametric_single(trap, circ, a_p=4 * 5.2e-6, t_end=80e-6,
                                    dt=1e-12, rng_seed=seed)
        tz.append(secular_temperature(res.record, "z", (40e-6, 80e-6)).temperature)
        tx.append(secular_temperature(res.record, "x", (40e-6, 80e-6)).temperature)
    ratio = float(np.mean(tx) / np.mean(tz))
    ok = abs(ratio / target - 1.0) <= 0.30
    verdict("parametric single-electron cooling",
            ok, f"T_z={np.mean(tz):.3f} K, T_x={np.mean(tx):.3f} K "
                f"(reference 0.37/3.08 K), ratio {ratio:.2f} vs "
                f"omega_x/omega_z={target:.2f}")


def test_criterion_09_stretch_cooling(default_trap):
    circ = TankCircuit(L=250e-9, C=1e-12, Q=1000, T_res=0.4)
    omega_p = stretch_drive_frequency(default_trap, ref_temperature=0.7)
    tc, ts = [], []
    for seed in range(500, 505):
        res = run_stretch_cooling(default_trap, circ, a_p=5.0, t_end=150e-6,
                                  dt=1e-12, rng_seed=seed,
                                  initial_temps={"axial_com": 1.0,
                                                 "axial_stretch": 1.0},
                                  omega_p=omega_p)
        tc.append(secular_temperature(res.record, "axial_com",
                                      (70e-6, 150e-6)).temperature)
        ts.append(secular_temperature(res.record, "axial_stretch",
                                      (70e-6, 150e-6)).temperature)
    com, stretch = float(np.mean(tc)), float(np.mean(ts))
    floor = math.sqrt(3.0) * 0.4
    ok = 0.3 <= com <= 0.55 and 0.5 <= stretch <= 1.2
    verdict("two-electron stretch cooling",
            ok, f"COM {com:.3f} K in [0.3, 0.55], stretch {stretch:.3f} K in "
                f"[0.5, 1.2]; analytic floor T_s = {floor:.2f} K "
                f"(reference 0.41/0.81 K)")


def test_criterion_10_split_schedule(default_trap):
    sched = build_split_schedule(TAU * 300e6, 200e-6, 1e-6, 3e15)
    residual = equilibrium_relation_residual(sched)
    w_cp = omega_cp(3e15) / TAU
    residual_ok = residual < 1e-9
    w_cp_ok = abs(w_cp / 100e6 - 1.0) <= 0.01

    # phase-averaged heating vs initial stretch energy: quadratic, curving up
    temps = [0.0, 0.2, 0.4, 0.8, 1.6, 3.2]
    phases = np.arange(8) / 8 * 2 * math.pi
    dns = []
    for t_k in temps:
        use = phases if t_k > 0 else [0.0]
        vals = [run_split(sched, default_trap, dt=1e-12,
                          initial_temps={"axial_stretch": t_k},
                          stretch_phase=p).dn_stretch for p in use]
        dns.append(float(np.mean(vals)))
    energies = 0.5 * KB * np.array(temps)
    coeffs = np.polyfit(energies, dns, 2)
    resid = np.max(np.abs(np.polyval(coeffs, energies) - dns)) / max(dns)
    quad_ok = coeffs[0] > 0 and resid < 0.1

    ok = residual_ok and w_cp_ok and quad_ok
    verdict("split schedule",
            ok, f"relation residual {residual:.2e}, omega_CP/2pi = "
                f"{w_cp / 1e6:.2f} MHz, heating curvature "
                f"{coeffs[0]:.2e} /J^2 > 0 (fit residual {resid:.1%})")


def test_criterion_10b_split_cold_quanta(default_trap):
    """Cold 1 us split below 1e-8 quanta.

    Known red: under the stated schedule the final wells weaken to the
    1.3/2.2 MHz scale, so a 1 us raised-cosine ramp is far from adiabatic at
    its end. The measured heating is ~1.9e-2 quanta, is step-size independent,
    and falls as tau_s^-3 (reaching 1e-8 only near tau_s ~ 120 us), so the
    stated bound cannot be met by any faithful integration of this model; see
    the decisions ledger for the full analysis.
    """
    sched = build_split_schedule(TAU * 300e6, 200e-6, 1e-6, 3e15)
    res = run_split(sched, default_trap, dt=1e-13)
    dn = abs(res.dn_com) + abs(res.dn_stretch)
    verdict("split cold-start quanta",
            dn < 1e-8, f"dn = {dn:.3e} (criterion < 1e-8, reference 8e-12); "
                       f"tau_s^-3 scaling puts the bound near tau_s = 120 us")


def test_criterion_11_shuttle():
    omega_z = TAU * 300e6
    dns = []
    for tau_t in (1e-6, 2e-6, 5e-6, 10e-6):
        sched = ShuttleSchedule(tau_t=tau_t, displacement=100e-6)
        dns.append(run_shuttle(sched, omega_z, dt=1e-12))
    bound_ok = dns[0] <= 1e-4
    monotone_ok = all(b < a for a, b in zip(dns, dns[1:]))
    ok = bound_ok and monotone_ok
    verdict("shuttle",
            ok, f"dn(1 us) = {dns[0]:.2e} <= 1e-4 (reference ~1e-5), decade "
                f"sweep {['%.1e' % d for d in dns]} monotone")


def test_criterion_12_stability(default_trap):
    # Mathieu boundary against the brute-force trajectory oracle
    def lam_of(q):
        omega_r = q * TAU * 10.6e9 / (2 * math.sqrt(2))
        trap = trap_config_from_frequencies(omega_r, 0.0, TAU * 10.6e9)
        return floquet_exponent(monodromy(linearized_system(trap), 2048)).lam

    lo, hi = 0.85, 0.95
    for _ in range(20):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if lam_of(mid) > 1e-8 else (mid, hi)
    q_monodromy = 0.5 * (lo + hi)

    def brute_unstable(q):
        omega_r = q * TAU * 10.6e9 / (2 * math.sqrt(2))
        trap = trap_config_from_frequencies(omega_r, 0.0, TAU * 10.6e9)
        state = SystemState(0.0, [[1e-7, 0, 0]], np.zeros((1, 3)))
        cfg = IntegratorConfig(method="velocity_verlet", dt=1e-13,
                               t_end=2000 * TAU / trap.omega_rf,
                               record_stride=200)
        rec = run_simulation(state, ForceStack([TrapTerm(trap)]), cfg)
        return rec.status == "diverged" or bool(
            np.max(np.abs(rec.positions[:, 0, 0])) > 1e-5)

    lo, hi = 0.85, 0.95
    for _ in range(10):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if brute_unstable(mid) else (mid, hi)
    q_brute = 0.5 * (lo + hi)
    mathieu_ok = abs(q_monodromy - q_brute) < 0.01

    # Liouville check with and without field
    det_ok = True
    for wce in (0.0, TAU * 5e9):
        field = MagneticField.from_cyclotron(wce) if wce else None
        phi_m = monodromy(linearized_system(default_trap, field), 2048)
        det_ok &= abs(abs(np.linalg.det(phi_m)) - 1.0) < 1e-6

    # line-cut verdicts: Floquet and 25 us time-domain, 10 points
    wce_ghz = np.array([0.1, 0.5, 1.5, 2.5, 4.0, 4.5, 5.0, 5.5, 6.0, 8.0])
    cut = max_energy_linecut(0.53, TAU * wce_ghz * 1e9, TAU * 10.6e9,
                             TAU * 300e6, t_end=25e-6, dt=2e-13)
    lam_by_f = dict(zip(wce_ghz, cut.lam))
    refs_ok = (lam_by_f[5.0] > DELTA_TH and lam_by_f[0.1] < DELTA_TH
               and lam_by_f[8.0] < DELTA_TH)
    agreement = int(np.sum(cut.stable_floquet == ~cut.capped))
    agree_ok = agreement >= 9

    # boundary cells of the stability map sit at integer beta_x (over the
    # mapped 0-10 GHz domain; flagged cells have no well-identified x mode)
    wce_grid = TAU * np.arange(0.0, 10.001e9, 6.25e6)
    grid = stability_map([0.35, 0.45, 0.53, 0.65, 0.8], wce_grid,
                         TAU * 10.6e9, TAU * 300e6, n_steps_per_period=2048)
    dists = []
    for (i, j) in grid.boundary_cells():
        b = grid.beta[i, j]
        if np.isfinite(b) and not grid.flagged[i, j]:
            dists.append(abs(b - round(b)))
    beta_ok = len(dists) > 0 and max(dists) < 0.05

    ok = mathieu_ok and det_ok and refs_ok and agree_ok and beta_ok
    verdict("stability",
            ok, f"Mathieu boundary {q_monodromy:.4f} vs brute force "
                f"{q_brute:.4f}; |det|-1 < 1e-6; line-cut verdicts agree "
                f"{agreement}/10; boundary beta_x integer distance "
                f"max {max(dists):.3f}")
