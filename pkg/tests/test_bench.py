import numpy as np
import pytest

from sfqsim import bench, metrics, sfqdrive
from sfqsim.errors import ParameterError
from sfqsim.superop import Superoperator


@pytest.fixture(scope="module")
def table():
    return bench.clifford_table()


def test_table_has_24_elements(table):
    assert len(table.unitaries) == 24


def test_minimal_decomposition_recomposes(table):
    for i, u in enumerate(table.unitaries):
        acc = np.eye(2, dtype=complex)
        for name in table.minimal[i]:
            acc = bench.PRIMITIVE_UNITARIES[name] @ acc
        assert bench._equal_up_to_phase(acc, u, 1e-10)


def test_minimal_gate_count_exactly_1875(table):
    total = sum(len(seq) for seq in table.minimal)
    assert total == 45
    assert total / 24 == 1.875


def test_u3_decomposition_recomposes(table):
    x2 = bench.PRIMITIVE_UNITARIES["x2"]
    for i, u in enumerate(table.unitaries):
        a, b, c = table.u3[i]
        acc = bench._rz(a) @ x2 @ bench._rz(b) @ x2 @ bench._rz(c)
        assert bench._equal_up_to_phase(acc, u, 1e-10)


def test_group_closure_and_inverse(table):
    assert set(np.unique(table.product)) <= set(range(24))
    for i in range(24):
        assert table.product[table.inverse[i], i] == table.identity_index
        assert table.product[i, table.inverse[i]] == table.identity_index


def test_x_half_is_single_primitive(table):
    assert table.minimal[table.x_half_index] == ("x2",)


def test_generate_sequence_identity_case(table):
    rng = np.random.default_rng(0)
    indices, recovery = bench.generate_sequence(1, rng)
    running = table.product[indices[0], table.identity_index]
    assert table.product[recovery, running] == table.identity_index


def test_generate_sequence_deterministic():
    a, ra = bench.generate_sequence(50, np.random.default_rng(42))
    b, rb = bench.generate_sequence(50, np.random.default_rng(42))
    assert np.array_equal(a, b) and ra == rb


def test_sequence_recomposition_fuzz(table):
    # the composed product including recovery is the identity, for many seeds
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(1, 40))
        indices, recovery = bench.generate_sequence(m, rng)
        running = table.identity_index
        for idx in indices:
            running = table.product[idx, running]
        assert table.product[recovery, running] == table.identity_index
        # and at the unitary level, up to global phase
        acc = np.eye(2, dtype=complex)
        for idx in indices:
            acc = table.unitaries[idx] @ acc
        acc = table.unitaries[recovery] @ acc
        assert bench._equal_up_to_phase(acc, np.eye(2), 1e-10)


def test_survival_independent_of_global_phase(table):
    # superoperators ignore global phases by construction
    u = table.unitaries[7]
    s1 = Superoperator.from_unitary(u)
    s2 = Superoperator.from_unitary(np.exp(1j * 0.7) * u)
    assert np.max(np.abs(s1.mat - s2.mat)) < 1e-12


def test_rb_perfect_gates():
    eng = bench.ChannelGateEngine()
    res = bench.run_rb(eng, lengths=(2, 8, 32), k=5, seed=1)
    assert res.alpha == 1.0
    assert res.f_cliff == 1.0
    assert all(abs(p - 1.0) < 1e-12 for p in res.mean_p0)


def test_rb_depolarizing_oracle():
    eng = bench.ChannelGateEngine(error=bench.depolarizing_superop(0.01))
    res = bench.run_rb(eng, k=50, seed=7)
    assert abs(res.alpha - 0.99) < 1e-3
    assert abs(res.f_cliff - 0.995) < 5e-4
    assert 0 < res.alpha <= 1
    assert all(0 <= p <= 1 for p in res.mean_p0)


def test_rb_matches_direct_average_fidelity(rng):
    # gate-independent Markovian channel: RB estimate equals the channel's
    # average fidelity
    g = 0.002
    k0 = np.array([[1, 0], [0, np.sqrt(1 - g)]], complex)
    k1 = np.array([[0, np.sqrt(g)], [0, 0]], complex)
    damping = Superoperator(np.kron(k0, k0.conj()) + np.kron(k1, k1.conj()))
    channel = damping @ bench.depolarizing_superop(0.004)
    eng = bench.ChannelGateEngine(error=channel)
    res = bench.run_rb(eng, lengths=(2, 4, 8, 16, 32, 64, 128, 256, 400), k=50, seed=9)
    f_direct = metrics.average_fidelity(channel, metrics.GateTarget.identity(2))
    assert abs(res.f_cliff - f_direct) < 5e-4


def test_irb_perfect_interleaved_gate():
    eng = bench.ChannelGateEngine(error=bench.depolarizing_superop(0.02))
    res = bench.run_irb(eng, "x2", lengths=(2, 4, 8, 16, 32, 64), k=10, seed=3)
    assert abs(res.f_gate - 1.0) < 1e-6
    assert abs(res.alpha_int - res.alpha_ref) < 1e-6
    assert not res.unphysical


def test_irb_depolarizing_oracle():
    eng = bench.ChannelGateEngine(
        error=bench.depolarizing_superop(0.01),
        interleaved_error=bench.depolarizing_superop(0.004),
    )
    res = bench.run_irb(eng, "x2", k=30, seed=5)
    assert abs(res.f_gate - 0.998) < 5e-4


def test_irb_unphysical_ratio_flag():
    # test-only non-CP channel that cancels part of the reference error,
    # forcing alpha_int > alpha_ref
    dep = bench.depolarizing_superop(0.02)
    inv = Superoperator(np.linalg.inv(dep.mat))
    eng = bench.ChannelGateEngine(error=dep, interleaved_error=inv)
    res = bench.run_irb(eng, "x2", lengths=(2, 4, 8, 16, 32), k=10, seed=5)
    assert res.unphysical


def test_u3rb_perfect():
    eng = bench.ChannelGateEngine()
    res = bench.run_u3rb(eng, lengths=(2, 8, 32), k=5, seed=1)
    assert res.x2_error == 0.0


def test_u3rb_per_x2_depolarizing():
    p = 0.006
    eng = bench.ChannelGateEngine(error=bench.depolarizing_superop(p), error_per="x2")
    res = bench.run_u3rb(eng, k=40, seed=13)
    assert abs(res.x2_error - p / 2) / (p / 2) < 0.10


def test_prb_unitary_error_is_coherent(rng):
    eng = bench.ChannelGateEngine(error=bench.overrotation_superop(0.1))
    prb = bench.run_prb(eng, lengths=(2, 4, 8, 16, 32, 64), k=20, seed=5)
    rb = bench.run_rb(eng, lengths=(2, 4, 8, 16, 32, 64), k=20, seed=5)
    assert prb.epsilon_prb < 1e-6
    assert rb.clifford_error > 1e-3


def test_prb_depolarizing_is_incoherent():
    eng = bench.ChannelGateEngine(error=bench.depolarizing_superop(0.01))
    prb = bench.run_prb(eng, k=20, seed=5)
    rb = bench.run_rb(eng, k=20, seed=5)
    assert abs(prb.epsilon_prb - rb.clifford_error) / rb.clifford_error < 0.05


def test_prb_bound_on_device(q0_engine):
    lengths = (2, 4, 8, 16, 32, 64, 128)
    prb = bench.run_prb(q0_engine, lengths=lengths, k=15, seed=2)
    rb = bench.run_rb(q0_engine, lengths=lengths, k=15, seed=2, composition="u3")
    assert prb.epsilon_prb <= rb.clifford_error + 3 * rb.f_cliff_std + 1e-4


def test_device_rb_above_995(q0_engine):
    res = bench.run_rb(q0_engine, lengths=(2, 4, 8, 16, 32, 64, 128), k=15, seed=4)
    assert res.f_cliff > 0.995


def test_u3rb_consistent_with_direct_error(q0_engine, q0_model, q0_cycle, q0_gate):
    res = bench.run_u3rb(q0_engine, lengths=(2, 4, 8, 16, 32, 64, 128), k=15, seed=6)
    gate = sfqdrive.gate_superop(q0_cycle, q0_model, q0_gate.n_p, q0_gate.duration_ns)
    direct = 1 - metrics.average_fidelity(gate, metrics.GateTarget.x_half(4))
    assert abs(res.x2_error - direct) / direct < 0.15


def test_orbit_np_sweep(q0_engine):
    n_star = q0_engine.gate.n_p
    values = list(range(n_star - 10, n_star + 11))
    res = bench.orbit_sweep(q0_engine, "n_p", values, n_fixed=64, k=10, seed=23)
    assert abs(res.best_value - n_star) <= 1
    assert not res.inconclusive


def test_orbit_detuning_sweep(q0_engine):
    values = np.linspace(-2.0, 2.0, 9)
    res = bench.orbit_sweep(q0_engine, "detuning", values, n_fixed=64, k=8, seed=23)
    assert abs(res.best_value) <= 0.5 + 1e-12  # one step of the grid
    assert not res.inconclusive


def test_orbit_flat_curve_inconclusive():
    eng = bench.ChannelGateEngine()  # perfect gates: p(0) = 1 everywhere
    res = bench.orbit_sweep(eng, "n_p", [1, 2, 3], n_fixed=16, k=5, seed=1)
    assert res.inconclusive
    assert all(abs(p - 1.0) < 1e-12 for p in res.mean_p0)


def test_orbit_rejects_unknown_parameter(q0_engine):
    with pytest.raises(ParameterError):
        q0_engine.with_param("frequency", 1.0)


def test_rb_seeds_reproducible(q0_engine):
    a = bench.run_rb(q0_engine, lengths=(2, 8, 32), k=5, seed=99)
    b = bench.run_rb(q0_engine, lengths=(2, 8, 32), k=5, seed=99)
    assert a.mean_p0 == b.mean_p0 and a.alpha == b.alpha
