import numpy as np
import pytest

from sfqsim import bench, qdevice, sfqdrive


@pytest.fixture(scope="session")
def device_records():
    return {r.name: r for r in qdevice.load_device_file(qdevice.bundled_device_file())}


@pytest.fixture(scope="session")
def q0_model(device_records):
    return qdevice.build_model(device_records["q0"])


@pytest.fixture(scope="session")
def q0_clock(q0_model):
    return sfqdrive.ClockConfig.subharmonic(q0_model.f01)


@pytest.fixture(scope="session")
def q0_chans(q0_model):
    return sfqdrive.DecoherenceChannels.from_times(q0_model.t1, q0_model.t2)


@pytest.fixture(scope="session")
def q0_gate(q0_model, q0_clock, q0_chans):
    return sfqdrive.calibrate_np(q0_model, sfqdrive.PulseShape(), q0_clock, q0_chans)


@pytest.fixture(scope="session")
def q0_cycle(q0_model, q0_clock, q0_chans):
    return sfqdrive.build_cycle_propagator(q0_model, sfqdrive.PulseShape(), q0_clock, q0_chans)


@pytest.fixture(scope="session")
def q0_engine(q0_model, q0_gate):
    return bench.SfqGateEngine(q0_model, gate=q0_gate)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260810)
