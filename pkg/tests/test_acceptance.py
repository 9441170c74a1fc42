"""Acceptance gates for the full simulation chain.

One test per gate, each printing a single PASS/FAIL summary line with the
measured numbers (visible with pytest -s; failures always show theirs).
Gate 2 records a known discrepancy between the closed-form splitting and
the grid extraction and is expected to fail until that is resolved; the
project notes document the details.
"""

import math
import time

import numpy as np
import pytest

import mirrorqed as mq

WG = mq.WaveguideSpec()

PAIR_ATOMS = [
    {"label": "a", "ec_ghz": 0.324, "ejmax_ghz": 40.0, "beta": 0.81,
     "x_mm": 33.0, "gamma_phi_mhz": 2.3},
    {"label": "b", "ec_ghz": 0.406, "ejmax_ghz": 40.0, "beta": 0.766,
     "x_mm": 0.0, "gamma_phi_mhz": 2.785},
]


def report(num, name, ok, details):
    verdict = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {num} ({name}): {verdict} | {details}")


def pair_specs(gamma_phi_mhz=(2.3, 2.785)):
    return [
        mq.TransmonSpec(label="a", ec=0.324, ejmax=40.0, beta=0.81, x=0.033,
                        gamma_phi=2e6 * math.pi * gamma_phi_mhz[0]),
        mq.TransmonSpec(label="b", ec=0.406, ejmax=40.0, beta=0.766, x=0.0,
                        gamma_phi=2e6 * math.pi * gamma_phi_mhz[1]),
    ]


def oracle_trace(f10_ghz, gamma_eff_mhz, gamma_phi_mhz, span_mhz, points=2001):
    """Synthetic weak-drive complex reflection trace of one atom."""
    gamma_eff = 2e6 * math.pi * gamma_eff_mhz
    gamma_phi = 2e6 * math.pi * gamma_phi_mhz
    gamma_t = 0.5 * gamma_eff + gamma_phi
    omega10 = 2e9 * math.pi * f10_ghz
    omega = gamma_t / 1000.0  # far below saturation
    trace = []
    for f_ghz in np.linspace(f10_ghz - span_mhz * 5e-4,
                             f10_ghz + span_mhz * 5e-4, points):
        omega_p = 2e9 * math.pi * f_ghz
        r = mq.analytic_single_atom_reflection(
            gamma_eff, gamma_phi, omega_p - omega10, omega)
        trace.append(mq.ReflectionPoint(omega_p=omega_p, r=r))
    return trace


def test_1_velocity_calibration():
    nodes = [(4.745, 7), (6.094, 9), (7.414, 11)]
    v, spread = mq.calibrate_velocity(nodes, 33.0)
    err = abs(v - 8.948e7) / 8.948e7
    ok = err < 0.01 and spread < 0.01
    report(1, "velocity calibration", ok,
           f"v = {v:.6g} m/s ({100 * err:.2f}% from 8.948e7 m/s), "
           f"per-node spread {100 * spread:.2f}%")
    assert err < 0.01
    assert spread < 0.01


def test_2_collective_shift_routes_agree():
    config = mq.ExperimentConfig.from_dict({
        "atoms": PAIR_ATOMS,
        "operating": {"frequencies_ghz": [4.75, 4.75]},
        "probe": {"v0_v": 2.6e-10},
        "probe_axis": {"start_ghz": 4.65, "stop_ghz": 4.85, "points": 201},
        "tune_axis": {"atom": 0, "start_ghz": 4.65, "stop_ghz": 4.85,
                      "points": 201},
    })
    start = time.perf_counter()
    result = mq.run_sweep2d(config)
    elapsed = time.perf_counter() - start
    sep_rad_s, _tune_at = mq.extract_splitting(result)
    extracted_mhz = sep_rad_s / (2e6 * math.pi)

    point = mq.OperatingPoint.at_frequencies(pair_specs(), [4.75, 4.75], WG)
    closed_mhz = abs(mq.collective_lamb_shift(point, 0, 1)) / (2e6 * math.pi)

    closed_err = abs(closed_mhz / 38.0 - 1.0)
    extracted_err = abs(extracted_mhz / 38.0 - 1.0)
    mutual = abs(closed_mhz - extracted_mhz) / extracted_mhz
    ok = (elapsed < 60.0 and closed_err <= 0.10 and extracted_err <= 0.10
          and mutual <= 0.05)
    report(2, "collective shift", ok,
           f"closed form {closed_mhz:.3f} MHz ({100 * closed_err:.1f}% from "
           f"38 MHz), extracted {extracted_mhz:.3f} MHz "
           f"({100 * extracted_err:.1f}%), mutual {100 * mutual:.1f}% "
           f"(bound 5%), grid wall time {elapsed:.1f} s")
    assert elapsed < 60.0
    assert closed_err <= 0.10
    assert extracted_err <= 0.10
    # the closed form sits about 7% above the grid extraction; this gate
    # records the target, not the achieved state (see the project notes)
    assert mutual <= 0.05


def test_3_node_identities():
    f_node = 7.0 * WG.v / (4.0 * 0.033) / 1e9
    specs = pair_specs()
    point = mq.OperatingPoint.at_frequencies(specs, [f_node, f_node], WG)
    bare = [mq.bare_decay_rate(s, WG, f)
            for s, f in zip(specs, point.fluxes)]
    g11 = abs(mq.gamma_nm(0, 0, point))
    g12 = abs(mq.gamma_nm(0, 1, point))
    gamma0 = math.sqrt(bare[0] * bare[1])
    shift_err = abs(abs(mq.collective_lamb_shift(point, 0, 1)) - 2.0 * gamma0)
    flux = mq.flux_for_frequency(specs[0], f_node)
    inversion_err = abs(mq.transition_frequency(specs[0], flux) - f_node)
    ok = (g11 <= 1e-12 * bare[0] and g12 <= 1e-12 * gamma0
          and shift_err <= 1e-12 * 2.0 * gamma0
          and inversion_err <= 1e-12 * f_node)
    report(3, "node identities", ok,
           f"gamma_11/bare = {g11 / bare[0]:.2e}, gamma_12/gamma_0 = "
           f"{g12 / gamma0:.2e}, |2*shift| vs 2*gamma_0 rel err "
           f"{shift_err / (2 * gamma0):.2e}, flux inversion rel err "
           f"{inversion_err / f_node:.2e}")
    assert g11 <= 1e-12 * bare[0]
    assert g12 <= 1e-12 * gamma0
    assert shift_err <= 1e-12 * 2.0 * gamma0
    assert inversion_err <= 1e-12 * f_node


def test_4_linewidth_bookkeeping():
    rows = [(27.18, 2.15, 15.74), (28.03, 2.785, 16.8)]
    worst_identity = max(
        abs(mq.total_decoherence(g, p) - tot) / tot for g, p, tot in rows)
    # the same bookkeeping applied to fitted parameters of a synthetic trace
    trace = oracle_trace(4.2, 27.18, 2.15, span_mhz=500.0)
    _w10, gamma_eff, gamma_phi = mq.fit_single_atom(trace)
    fitted_total = mq.total_decoherence(gamma_eff, gamma_phi) / (2e6 * math.pi)
    fit_err = abs(fitted_total - 15.74) / 15.74
    ok = worst_identity <= 1e-12 and fit_err <= 1e-3
    report(4, "linewidth bookkeeping", ok,
           f"identity rel err {worst_identity:.2e}, fitted total "
           f"{fitted_total:.4f} MHz vs 15.74 MHz ({100 * fit_err:.3f}%)")
    assert worst_identity <= 1e-12
    assert fit_err <= 1e-3


def test_5_fit_round_trip():
    rows = [
        ("A", 4.697, 0.3, 2.1, 0.10),
        ("B", 5.01, 8.0, 1.7, 0.05),
        ("C", 4.692, 21.0, 2.15, 0.05),
        ("D", 5.014, 21.0, 2.0, 0.05),
    ]
    details = []
    ok = True
    for name, f10, gamma_mhz, gphi_mhz, gamma_tol in rows:
        gamma_t = 0.5 * gamma_mhz + gphi_mhz
        trace = oracle_trace(f10, gamma_mhz, gphi_mhz, span_mhz=40.0 * gamma_t)
        _w10, gamma_eff, gamma_phi = mq.fit_single_atom(trace)
        g_err = abs(gamma_eff / (2e6 * math.pi) - gamma_mhz) / gamma_mhz
        p_err = abs(gamma_phi / (2e6 * math.pi) - gphi_mhz) / gphi_mhz
        ok = ok and g_err <= gamma_tol and p_err <= 0.05
        details.append(f"{name}: dG {100 * g_err:.2f}% dgphi {100 * p_err:.2f}%")
        assert g_err <= gamma_tol, f"row {name}"
        assert p_err <= 0.05, f"row {name}"
    report(5, "fit round trip", ok, ", ".join(details))


def test_6_power_independence():
    config = mq.ExperimentConfig.from_dict({
        "atoms": PAIR_ATOMS,
        "operating": {"frequencies_ghz": [4.75, 4.75]},
        "probe": {"v0_v": 1.0},
        "probe_axis": {"start_ghz": 4.65, "stop_ghz": 4.85, "points": 201},
        "power_axis": {"start_db": -35.0, "stop_db": 20.0, "step_db": 2.5,
                       "reference_w": 6.73e-18},
    })
    start = time.perf_counter()
    result = mq.run_power_sweep(config)
    elapsed = time.perf_counter() - start
    knee_db, _plateau = mq.saturation_knee(result)
    window = (result.tune_axis >= knee_db - 20.0) & (result.tune_axis <= knee_db)
    sep = result.splitting_vs_power[window]
    assert np.all(np.isfinite(sep))
    variation = (sep.max() - sep.min()) / np.median(sep)
    top_min_abs_r = np.abs(result.r[:, -1]).min()
    ok = elapsed < 120.0 and variation < 0.05 and top_min_abs_r >= 0.98
    report(6, "power independence", ok,
           f"knee {knee_db:g} dB, splitting variation {100 * variation:.2f}% "
           f"over the 20 dB window below it, min |r| {top_min_abs_r:.5f} at "
           f"{result.tune_axis[-1]:g} dB, wall time {elapsed:.1f} s")
    assert elapsed < 120.0
    assert variation < 0.05
    assert top_min_abs_r >= 0.98


def test_7_property_suite():
    rng = np.random.default_rng(20250817)
    max_abs_r = 0.0

    # trace preservation on representative generators
    worst_trace_row = 0.0
    specs = pair_specs()
    point = mq.OperatingPoint.at_frequencies(specs, [4.75, 4.75], WG)
    coupl = mq.symmetrize(point)
    for omega_p_ghz, v0 in ((4.73, 2.6e-10), (4.75, 2.6e-8)):
        probe = mq.ProbeSpec(omega_p=2e9 * math.pi * omega_p_ghz, v0=v0)
        gen = mq.build_generator(point, probe, coupl)
        dim = 2 ** point.n_atoms
        vec_id = np.eye(dim, dtype=complex).flatten(order="F")
        worst_trace_row = max(worst_trace_row,
                              np.abs(vec_id @ gen.matrix).max())

    # steady-state positivity and passivity across a small map
    floor = 0.0
    for tune in (4.73, 4.75, 4.77):
        fluxes = [mq.flux_for_frequency(specs[0], tune), point.fluxes[1]]
        tuned = mq.OperatingPoint.at_fluxes(tuple(specs), tuple(fluxes), WG)
        tuned_coupl = mq.symmetrize(tuned)
        for f_ghz in np.linspace(4.70, 4.80, 11):
            probe = mq.ProbeSpec(omega_p=2e9 * math.pi * f_ghz, v0=2.6e-10)
            gen = mq.build_generator(tuned, probe, tuned_coupl)
            rho = mq.steady_state(gen)
            floor = min(floor, float(np.linalg.eigvalsh(rho).min()))
            r = mq.reflection(tuned, probe, rho)
            max_abs_r = max(max_abs_r, abs(r))

    # linear solve vs long-time integration on random registers
    worst_distance = 0.0
    for _ in range(20):
        rnd = [
            mq.TransmonSpec(
                label=f"r{i}",
                ec=rng.uniform(0.25, 0.45),
                ejmax=60.0,
                beta=rng.uniform(0.3, 0.9),
                x=rng.uniform(0.0, 0.02),
                gamma_phi=2e6 * math.pi * rng.uniform(1.5, 3.0),
            )
            for i in range(2)
        ]
        freqs = rng.uniform(4.2, 5.2, size=2)
        rnd_point = mq.OperatingPoint.at_frequencies(rnd, list(freqs), WG)
        # probe near one of the atoms: hundreds of linewidths off resonance
        # the first-order reflection picks up a quadratic phase excess of
        # order (gamma/delta)^2, so the strict passivity bound is a
        # near-resonance property
        near = freqs[int(rng.integers(2))] + rng.uniform(-0.05, 0.05)
        probe = mq.ProbeSpec(
            omega_p=2e9 * math.pi * near,
            v0=10.0 ** rng.uniform(-11.0, -9.5),
        )
        gen = mq.build_generator(rnd_point, probe, mq.symmetrize(rnd_point))
        rho_ss = mq.steady_state(gen)
        eigs = np.linalg.eigvals(gen.matrix)
        gap = np.abs(eigs.real[np.abs(eigs.real) > 1e-12]).min()
        dim = 2 ** rnd_point.n_atoms
        ground = np.zeros((dim, dim), dtype=complex)
        ground[0, 0] = 1.0
        rho_t = mq.time_evolve(gen, ground, 25.0 / gap, tol=1e-12)
        distance = 0.5 * np.abs(np.linalg.eigvalsh(rho_ss - rho_t)).sum()
        worst_distance = max(worst_distance, distance)
        r = mq.reflection(rnd_point, probe, rho_ss)
        max_abs_r = max(max_abs_r, abs(r))

    # single-atom solver vs the analytic oracle
    single = mq.TransmonSpec(label="s", ec=0.406, ejmax=40.0, beta=0.766,
                             x=0.0, gamma_phi=2e6 * math.pi * 2.0)
    spoint = mq.OperatingPoint.at_frequencies([single], [4.75], WG)
    scoupl = mq.symmetrize(spoint)
    gamma = mq.gamma_nm(0, 0, spoint)
    unit = mq.rabi_frequency(
        single, mq.ProbeSpec(omega_p=spoint.omega10[0], v0=1.0),
        spoint.fluxes[0], WG)
    worst_oracle = 0.0
    for omega_factor in (0.01, 1.0, 10.0):
        v0 = omega_factor * gamma / unit
        for delta in np.linspace(-10.0 * gamma, 10.0 * gamma, 21):
            probe = mq.ProbeSpec(omega_p=spoint.omega10[0] + delta, v0=v0)
            gen = mq.build_generator(spoint, probe, scoupl)
            rho = mq.steady_state(gen)
            r = mq.reflection(spoint, probe, rho)
            max_abs_r = max(max_abs_r, abs(r))
            oracle = mq.analytic_single_atom_reflection(
                2.0 * gamma, single.gamma_phi,
                mq.probe_detuning(0, spoint, probe),
                mq.rabi_frequency(single, probe, spoint.fluxes[0], WG))
            worst_oracle = max(worst_oracle, abs(r - oracle))

    # trigonometric factorization of the damping kernel
    worst_factor = 0.0
    for _ in range(50):
        pair = [
            mq.TransmonSpec(
                label=f"t{i}",
                ec=rng.uniform(0.25, 0.45),
                ejmax=60.0,
                beta=rng.uniform(0.3, 0.9),
                x=rng.uniform(0.0, 0.04),
                gamma_phi=0.0,
            )
            for i in range(2)
        ]
        fpoint = mq.OperatingPoint.at_frequencies(
            pair, list(rng.uniform(4.2, 5.2, size=2)), WG)
        for n, m in ((0, 1), (1, 0)):
            omega_m = fpoint.omega10[m]
            k_m = omega_m / WG.v
            pref = math.pi * mq.alpha(n, m, fpoint) * omega_m
            product = pref * math.cos(k_m * pair[n].x) * math.cos(k_m * pair[m].x)
            worst_factor = max(
                worst_factor,
                abs(mq.gamma_nm(n, m, fpoint) - product) / max(abs(pref), 1e-300))

    passivity = max_abs_r - 1.0
    ok = (worst_trace_row <= 1e-12 and floor >= -1e-8
          and worst_distance <= 1e-8 and worst_oracle <= 1e-4
          and passivity <= 1e-9 and worst_factor <= 1e-12)
    report(7, "property suite", ok,
           f"trace row {worst_trace_row:.2e}, eigenvalue floor {floor:.2e}, "
           f"solve vs evolve {worst_distance:.2e}, oracle gap "
           f"{worst_oracle:.2e}, max |r| - 1 = {passivity:.2e}, "
           f"factorization {worst_factor:.2e}")
    assert worst_trace_row <= 1e-12
    assert floor >= -1e-8
    assert worst_distance <= 1e-8
    assert worst_oracle <= 1e-4
    assert passivity <= 1e-9
    assert worst_factor <= 1e-12
