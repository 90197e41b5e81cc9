import numpy as np
import pytest

from sfqsim import qdevice
from sfqsim.errors import CalibrationError, ConfigError, ParameterError


def test_params_validation():
    with pytest.raises(ParameterError):
        qdevice.TransmonParams(e_j=-1.0, e_c=0.25)
    with pytest.raises(ParameterError):
        qdevice.TransmonParams(e_j=14.0, e_c=0.25, n_levels=2)
    with pytest.raises(ParameterError):
        qdevice.TransmonParams(e_j=14.0, e_c=0.25, c_c=90.0, c_q=80.0)
    with pytest.raises(ParameterError):
        qdevice.TransmonParams(e_j=14.0, e_c=0.25, t1=10.0, t2=25.0)  # t2 > 2 t1


def test_transmon_regime_warning():
    with pytest.warns(UserWarning):
        qdevice.diagonalize(qdevice.TransmonParams(e_j=3.0, e_c=0.25))


def test_spectrum_ground_referenced_and_ascending():
    model = qdevice.diagonalize(qdevice.TransmonParams(e_j=14.45, e_c=0.247))
    assert model.energies[0] == 0.0
    assert np.all(np.diff(model.energies) > 0)
    assert model.anharm < 0
    assert model.f01 == model.energies[1]


def test_q0_roundtrip_from_table_values():
    # (e_j, e_c) solved from the q0 row must re-diagonalize to its (f01, anharm)
    e_j, e_c = qdevice.solve_ej_ec(5.083, -0.280)
    model = qdevice.diagonalize(qdevice.TransmonParams(e_j=e_j, e_c=e_c))
    assert abs(model.f01 - 5.083) < 0.01
    assert abs(model.anharm - (-0.280)) < 0.01
    # forward check tighter than the 1e-4 GHz contract
    assert abs(model.f01 - 5.083) < 1e-4
    assert abs(model.anharm + 0.280) < 1e-4


def test_perturbative_frequency_oracle():
    # at E_J/E_C = 50 the sqrt(8 E_J E_C) - E_C estimate is good to 2%
    e_c = 0.25
    e_j = 50 * e_c
    model = qdevice.diagonalize(qdevice.TransmonParams(e_j=e_j, e_c=e_c))
    pert = np.sqrt(8 * e_j * e_c) - e_c
    assert abs(model.f01 - pert) / model.f01 < 0.02


def test_solve_ej_ec_roundtrip():
    model = qdevice.diagonalize(qdevice.TransmonParams(e_j=13.0, e_c=0.26))
    e_j, e_c = qdevice.solve_ej_ec(model.f01, model.anharm)
    assert abs(e_j - 13.0) / 13.0 < 1e-3
    assert abs(e_c - 0.26) / 0.26 < 1e-3


def test_solve_ej_ec_q2_row():
    e_j, e_c = qdevice.solve_ej_ec(3.800, -0.291)
    model = qdevice.diagonalize(qdevice.TransmonParams(e_j=e_j, e_c=e_c))
    assert abs(model.f01 - 3.800) < 1e-4
    assert abs(model.anharm + 0.291) < 1e-4


def test_solve_ej_ec_out_of_box():
    with pytest.raises((CalibrationError, ParameterError)):
        qdevice.solve_ej_ec(5.0, -2.0)  # E_C ~ 2 GHz is outside the search box
    with pytest.raises(ParameterError):
        qdevice.solve_ej_ec(5.0, 0.2)


def test_delta_theta_value():
    # C_c/C_q = 1.003e-3 with xi = 0.2088 gives ~0.01343 rad (117 pulses per pi/2)
    params = qdevice.TransmonParams(e_j=12.84, e_c=0.28, c_q=80.0, c_c=80.0 * 1.003e-3)
    model = qdevice.diagonalize(params)
    assert abs(model.xi - 0.2088) < 1e-3
    dth = qdevice.delta_theta(model)
    assert abs(dth - 0.01343) < 5e-5
    assert abs(dth - np.pi / (2 * 117)) / dth < 5e-3


def test_delta_theta_linear_in_cc():
    base = qdevice.TransmonParams(e_j=12.84, e_c=0.28, c_q=80.0, c_c=0.05)
    doubled = qdevice.TransmonParams(e_j=12.84, e_c=0.28, c_q=80.0, c_c=0.10)
    d1 = qdevice.delta_theta(qdevice.diagonalize(base))
    d2 = qdevice.delta_theta(qdevice.diagonalize(doubled))
    assert abs(d2 - 2 * d1) < 1e-12


def test_delta_theta_small_angle_for_bundled_device(device_records):
    for rec in device_records.values():
        model = qdevice.build_model(rec)
        assert qdevice.delta_theta(model) < 0.02


def test_diagonalize_deterministic():
    params = qdevice.TransmonParams(e_j=14.45, e_c=0.247)
    a = qdevice.diagonalize(params)
    b = qdevice.diagonalize(params)
    assert np.array_equal(a.energies, b.energies)
    assert np.array_equal(a.q_op, b.q_op)


def test_q_op_hermitian_and_parity(q0_model):
    q = q0_model.q_op
    assert np.max(np.abs(q - q.conj().T)) < 1e-12 * max(np.max(np.abs(q)), 1.0)
    # charge-parity selection rule: same-parity elements vanish
    assert abs(q[0, 0]) < 1e-10 and abs(q[0, 2]) < 1e-10 and abs(q[1, 3]) < 1e-10


def test_charge_cutoff_convergence(device_records):
    for rec in device_records.values():
        e_j, e_c = qdevice.solve_ej_ec(rec.f01_ghz, rec.anharm_ghz)
        params = qdevice.TransmonParams(e_j=e_j, e_c=e_c)
        m30 = qdevice.diagonalize(params, n_c=30)
        m40 = qdevice.diagonalize(params, n_c=40)
        assert abs(m30.f01 - m40.f01) < 1e-8
        assert abs(m30.anharm - m40.anharm) < 1e-8


def test_n_levels_exceeding_basis():
    with pytest.raises(ParameterError):
        qdevice.diagonalize(qdevice.TransmonParams(e_j=14.0, e_c=0.25, n_levels=10), n_c=4)


def test_restricted_model(q0_model):
    two = q0_model.restricted(2)
    assert two.dim == 2
    assert np.array_equal(two.energies, q0_model.energies[:2])
    with pytest.raises(ParameterError):
        q0_model.restricted(1)


def test_device_file_loads_five_qubits(device_records):
    assert sorted(device_records) == ["q0", "q1", "q2", "q3", "q4"]
    q0 = device_records["q0"]
    assert q0.f01_ghz == 5.083 and q0.t1_us == 31 and q0.t2_us == 12
    assert q0.f_clk_ghz == 2.542 and q0.omega_r_mhz == 5.442


def test_device_file_malformed(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[q0]\nf01_ghz = 5.0\n")  # missing fields
    with pytest.raises(ConfigError):
        qdevice.load_device_file(bad)
    empty = tmp_path / "empty.cfg"
    empty.write_text("# nothing here\n")
    with pytest.raises(ConfigError):
        qdevice.load_device_file(empty)
