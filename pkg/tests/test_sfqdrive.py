import numpy as np
import pytest

from sfqsim import metrics, qdevice, sfqdrive
from sfqsim.errors import ParameterError
from sfqsim.superop import Superoperator, conj_superop, random_density_matrix


def test_gaussian_waveform_area():
    shape = sfqdrive.PulseShape("gaussian", sigma_ps=2.0)
    sig = 2.0e-3
    t = np.linspace(-6 * sig, 6 * sig, 20001)
    area = np.trapezoid(shape.waveform(t), t)
    assert abs(area - sfqdrive.PHI0) / sfqdrive.PHI0 < 1e-6


def test_pulse_shape_validation():
    with pytest.raises(ParameterError):
        sfqdrive.PulseShape("square")
    with pytest.raises(ParameterError):
        sfqdrive.PulseShape("gaussian", sigma_ps=-1.0)


def test_clock_config():
    clock = sfqdrive.ClockConfig.subharmonic(5.083, m=2)
    assert abs(clock.f_clk - 2.5415) < 1e-12
    assert abs(clock.tau_clk - 1 / 2.5415) < 1e-12
    detuned = sfqdrive.ClockConfig(f_clk=2.5415, detuning_mhz=30.0)
    assert abs(detuned.f_eff - 2.5715) < 1e-12
    with pytest.raises(ParameterError):
        sfqdrive.ClockConfig(f_clk=2.5, m=0)


def test_decoherence_channels_validation():
    chans = sfqdrive.DecoherenceChannels(t1_us=30.0, t2_us=40.0)
    assert chans.gamma_phi_per_us >= 0
    with pytest.raises(ParameterError):
        sfqdrive.DecoherenceChannels(t1_us=10.0, t2_us=30.0)  # 1/T2 < 1/(2 T1)
    off = sfqdrive.DecoherenceChannels.off()
    assert not off.enabled and off.gamma1_per_us == 0.0


def test_zero_drive_limit(q0_model, q0_clock):
    # kick disabled: the cycle is pure free precession with the exact phases
    s = sfqdrive.build_cycle_propagator(
        q0_model, sfqdrive.PulseShape(), q0_clock, sfqdrive.DecoherenceChannels.off(), kick_scale=0.0
    )
    tau = q0_clock.tau_clk
    u_free = np.diag(np.exp(-2j * np.pi * q0_model.energies * tau))
    assert np.max(np.abs(s.mat - conj_superop(u_free))) < 1e-12


def test_two_level_kick_rotation_matches_delta_theta():
    # two-level model with the perturbative coupling element: the per-pulse
    # Bloch rotation must reproduce the delta-theta formula
    params = qdevice.TransmonParams(e_j=12.84, e_c=0.28, c_q=80.0, c_c=0.016)
    full = qdevice.diagonalize(params)
    dth = qdevice.delta_theta(full)
    assert dth <= 0.02
    q01 = full.lam / (2 * np.sqrt(full.xi))
    from dataclasses import replace

    toy = replace(
        full,
        energies=full.energies[:2].copy(),
        q_op=np.array([[0.0, q01], [q01, 0.0]]),
    )
    clock = sfqdrive.ClockConfig.subharmonic(toy.f01)
    s = sfqdrive.build_cycle_propagator(toy, sfqdrive.PulseShape(), clock,
                                        sfqdrive.DecoherenceChannels.off())
    rho = np.array([[1, 0], [0, 0]], dtype=complex)
    p1 = s.apply(rho)[1, 1].real
    rotation = 2 * np.arcsin(np.sqrt(p1))
    assert abs(rotation - dth) / dth < 1e-3


def test_cycle_cptp_delta_and_gaussian(q0_model, q0_clock, q0_chans):
    for shape in (sfqdrive.PulseShape(), sfqdrive.PulseShape("gaussian", 2.0)):
        s = sfqdrive.build_cycle_propagator(q0_model, shape, q0_clock, q0_chans)
        assert s.trace_defect() < 1e-9
        assert s.choi_min_eig() > -1e-9


def test_cptp_under_composition(q0_cycle):
    # a full gate worth of cycles still passes the CPTP checks
    gate = q0_cycle.power(117)
    assert gate.trace_defect() < 1e-9 * np.sqrt(117)
    assert gate.choi_min_eig() > -1e-9 * np.sqrt(117)


def test_apply_n_identity_and_squaring(q0_cycle, rng):
    rho = random_density_matrix(4, rng)
    assert np.max(np.abs(sfqdrive.apply_n(q0_cycle, rho, 0) - rho)) < 1e-15
    sequential = rho.copy()
    for _ in range(117):
        sequential = q0_cycle.apply(sequential)
    fast = sfqdrive.apply_n(q0_cycle, rho, 117)
    assert np.max(np.abs(fast - sequential)) < 1e-10
    with pytest.raises(ParameterError):
        sfqdrive.apply_n(q0_cycle, 2 * rho, 1)


def test_calibrated_halfpi_reaches_equator(q0_model, q0_clock):
    # 117 pulses from |0> with T1 = T2 = 30 us land on the equator
    chans = sfqdrive.DecoherenceChannels.from_times(30.0, 30.0)
    cycle = sfqdrive.build_cycle_propagator(q0_model, sfqdrive.PulseShape(), q0_clock, chans)
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0
    out = sfqdrive.apply_n(cycle, rho, 117)
    assert 0.49 <= out[0, 0].real <= 0.51
    assert 0.49 <= out[1, 1].real <= 0.51


def test_clock_phase_to_axis():
    assert sfqdrive.clock_phase_to_axis(0.0, 2) == 0.0
    assert abs(sfqdrive.clock_phase_to_axis(np.pi / 4, 2) - np.pi / 2) < 1e-15
    # quarter qubit period time shift turns X/2 into Y/2
    f01 = 5.083
    clock = sfqdrive.ClockConfig.subharmonic(f01)
    phi = 2 * np.pi * clock.f_eff * (1 / f01) / 4
    assert abs(sfqdrive.clock_phase_to_axis(phi, clock.m) - np.pi / 2) < 1e-12


def test_calibrate_np_two_level_toy(q0_model):
    # exact delta-theta of pi/200 calibrates to 100 pulses
    from dataclasses import replace

    dth_target = np.pi / 200
    q01 = 1.0
    x = dth_target / (4 * np.pi * q01)  # c_c/c_sigma for 2 theta_c q01 = dth
    c_q = 80.0
    c_c = x * c_q / (1 - x)
    toy = replace(
        q0_model,
        energies=q0_model.energies[:2].copy(),
        q_op=np.array([[0.0, q01], [q01, 0.0]]),
        c_q=c_q,
        c_c=c_c,
        c_sigma=c_q + c_c,
    )
    clock = sfqdrive.ClockConfig.subharmonic(toy.f01)
    gate = sfqdrive.calibrate_np(toy, sfqdrive.PulseShape(), clock,
                                 sfqdrive.DecoherenceChannels.off())
    assert gate.n_p == 100


def test_calibrate_np_q0(q0_gate):
    assert q0_gate.n_p == 117


def test_calibrate_np_q3(device_records):
    model = qdevice.build_model(device_records["q3"])
    clock = sfqdrive.ClockConfig.subharmonic(model.f01)
    chans = sfqdrive.DecoherenceChannels.from_times(model.t1, model.t2)
    gate = sfqdrive.calibrate_np(model, sfqdrive.PulseShape(), clock, chans)
    assert abs(gate.n_p - 101) <= 1


def test_pulses_per_halfpi_table():
    rows = [(2.542, 5.442, 117), (2.397, 5.085, 118), (1.900, 3.259, 146),
            (2.342, 5.818, 101), (2.413, 5.691, 106)]
    for f_clk, omega, expected in rows:
        assert sfqdrive.pulses_per_halfpi(f_clk, omega) == expected


def test_frame_equivalence(q0_model, q0_clock, q0_chans, q0_cycle):
    # virtual-Z bookkeeping == clock-phase-shifted pulse train for
    # computational populations
    phi_clk = 0.3
    axis = sfqdrive.clock_phase_to_axis(phi_clk, q0_clock.m)
    shifted_clock = sfqdrive.ClockConfig(f_clk=q0_clock.f_clk, m=q0_clock.m, phase=phi_clk)
    shifted = sfqdrive.build_cycle_propagator(q0_model, sfqdrive.PulseShape(), shifted_clock, q0_chans)
    g_shift = sfqdrive.gate_superop(shifted, q0_model, 117, 117 * q0_clock.tau_clk)
    g_book = sfqdrive.gate_superop(q0_cycle, q0_model, 117, 117 * q0_clock.tau_clk, axis_angle=axis)
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = 1.0
    p_shift = np.diag(g_shift.apply(rho)).real[:2]
    p_book = np.diag(g_book.apply(rho)).real[:2]
    assert np.max(np.abs(p_shift - p_book)) < 1e-6


def test_detuned_clock_collapses_fidelity(q0_model, q0_chans):
    clock = sfqdrive.ClockConfig.subharmonic(q0_model.f01, detuning_mhz=30.0)
    cycle = sfqdrive.build_cycle_propagator(q0_model, sfqdrive.PulseShape(), clock, q0_chans)
    gate = sfqdrive.gate_superop(cycle, q0_model, 117, 117 * clock.tau_clk)
    f = metrics.average_fidelity(gate, metrics.GateTarget.x_half(4))
    assert f < 0.9


def test_propagator_deterministic(q0_model, q0_clock, q0_chans):
    a = sfqdrive.build_cycle_propagator(q0_model, sfqdrive.PulseShape(), q0_clock, q0_chans)
    b = sfqdrive.build_cycle_propagator(q0_model, sfqdrive.PulseShape(), q0_clock, q0_chans)
    assert np.array_equal(a.mat, b.mat)


def test_gaussian_step_halving(q0_model, q0_clock, q0_chans):
    shape = sfqdrive.PulseShape("gaussian", 2.0)
    target = metrics.GateTarget.x_half(4)
    fids = []
    for divisor in (20.0, 40.0):
        cycle = sfqdrive.build_cycle_propagator(q0_model, shape, q0_clock, q0_chans,
                                                pulse_step_divisor=divisor)
        gate = sfqdrive.gate_superop(cycle, q0_model, 117, 117 * q0_clock.tau_clk)
        fids.append(metrics.average_fidelity(gate, target))
    assert abs(fids[0] - fids[1]) < 1e-8


def test_gaussian_close_to_delta(q0_model, q0_clock, q0_chans, q0_cycle):
    shape = sfqdrive.PulseShape("gaussian", 2.0)
    cycle = sfqdrive.build_cycle_propagator(q0_model, shape, q0_clock, q0_chans)
    target = metrics.GateTarget.x_half(4)
    f_g = metrics.average_fidelity(sfqdrive.gate_superop(cycle, q0_model, 117, 117 * q0_clock.tau_clk), target)
    f_d = metrics.average_fidelity(sfqdrive.gate_superop(q0_cycle, q0_model, 117, 117 * q0_clock.tau_clk), target)
    assert abs(f_g - f_d) < 1e-4


def test_gaussian_pulse_must_fit_cycle(q0_model, q0_clock, q0_chans):
    with pytest.raises(ParameterError):
        sfqdrive.build_cycle_propagator(q0_model, sfqdrive.PulseShape("gaussian", 40.0),
                                        q0_clock, q0_chans)


def test_sweep_capacitance_decoherence_ladder(device_records):
    rec = device_records["q0"]
    e_j, e_c = qdevice.solve_ej_ec(rec.f01_ghz, rec.anharm_ghz)
    params = qdevice.TransmonParams(e_j=e_j, e_c=e_c, c_q=rec.cq_ff, c_c=0.08,
                                    t1=rec.t1_us, t2=rec.t2_us)
    pts = sfqdrive.sweep_capacitance(params, [rec.cc_ff], [20, 80, None])
    by_t = {p.t_coh_us: p for p in pts}
    assert by_t[20.0].error > by_t[80.0].error > by_t[np.inf].error
    assert by_t[20.0].n_p == by_t[80.0].n_p  # calibration stable across T here


def test_sweep_capacitance_no_decoherence_trend(device_records):
    # with channels off only leakage and discretization remain; the curve
    # trends down with gate time (oscillating through interference nulls)
    rec = device_records["q0"]
    e_j, e_c = qdevice.solve_ej_ec(rec.f01_ghz, rec.anharm_ghz)
    params = qdevice.TransmonParams(e_j=e_j, e_c=e_c, c_q=rec.cq_ff, c_c=0.08,
                                    t1=rec.t1_us, t2=rec.t2_us)
    pts = sfqdrive.sweep_capacitance(params, list(np.geomspace(0.018, 0.30, 10)), [None])
    pts.sort(key=lambda p: p.gate_time_ns)
    err = np.array([p.error for p in pts])
    assert err[-1] == err.min()
    assert err.argmax() < 3  # worst point among the shortest gates
    assert np.median(err[5:]) < np.median(err[:5]) / 3


def test_sweep_capacitance_validation(device_records):
    rec = device_records["q0"]
    e_j, e_c = qdevice.solve_ej_ec(rec.f01_ghz, rec.anharm_ghz)
    params = qdevice.TransmonParams(e_j=e_j, e_c=e_c)
    with pytest.raises(ParameterError):
        sfqdrive.sweep_capacitance(params, [0.3, 0.1], [20])


def test_sweep_pulse_number_two_level_oracle(q0_model):
    # against the analytic over/under-rotation error (2/3) sin^2(dtheta dN / 2)
    model = q0_model.restricted(2)
    clock = sfqdrive.ClockConfig.subharmonic(model.f01)
    chans = sfqdrive.DecoherenceChannels.off()
    gate = sfqdrive.calibrate_np(model, sfqdrive.PulseShape(), clock, chans)
    pts = sfqdrive.sweep_pulse_number(model, gate, range(gate.n_p - 10, gate.n_p + 11), [None])
    dth = 4 * np.pi * (model.c_c / model.c_sigma) * abs(model.q_op[0, 1])
    residual = gate.n_p * dth - np.pi / 2
    for p in pts:
        dn = p.n_p - gate.n_p
        analytic = (2 / 3) * np.sin((dn * dth + residual) / 2) ** 2
        assert abs(p.error - analytic) < 1e-12
    errs = {p.n_p: p.error for p in pts}
    ordered = sorted((abs(n - gate.n_p), e) for n, e in errs.items())
    for (d1, e1), (d2, e2) in zip(ordered, ordered[1:]):
        if d2 > d1:
            assert e2 >= e1 - 1e-12


def test_sweep_pulse_number_brackets(q0_model, q0_gate):
    with pytest.raises(ParameterError):
        sfqdrive.sweep_pulse_number(q0_model, q0_gate, range(10, 20), [20])
