"""Behavioral model of the 1:4 / 1:8 SFQ demultiplexer: selection-bit
routing, operating-window bias margins, crosstalk, time-division-multiplexed
drive scheduling against simulated qubits, and the programmable pulse
counter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import sfqdrive
from .errors import ParameterError, ScheduleError
from .qdevice import TransmonModel
from .superop import vec

DB_FLOOR = -120.0  # stands in for -inf in serialized crosstalk matrices


@dataclass(frozen=True)
class DmxConfig:
    """Demultiplexer bias configuration and crosstalk matrix (dB)."""

    n_out: int = 4
    i_main_ma: float = 1.0
    windows: tuple = ()
    lambda_db: np.ndarray | None = None

    def __post_init__(self):
        if self.n_out not in (4, 8):
            raise ParameterError("n_out must be 4 or 8")
        if self.lambda_db is not None:
            lam = np.ascontiguousarray(self.lambda_db, dtype=float)
            if lam.shape != (self.n_out, self.n_out):
                raise ParameterError(f"lambda_db must be {self.n_out}x{self.n_out}")
            if np.max(np.abs(np.diag(lam))) > 1e-12:
                raise ParameterError("lambda_db diagonal must be zero")
            if np.max(lam - np.diag(np.diag(lam))) > 1e-12:
                raise ParameterError("off-diagonal crosstalk must be <= 0 dB")
            lam.setflags(write=False)
            object.__setattr__(self, "lambda_db", lam)

    @property
    def n_select(self) -> int:
        return int(np.log2(self.n_out))


def route(select: tuple, n_out: int = 4) -> int:
    """Binary-tree decode of selection-bit signs, MSB first; + selects the
    0 branch.  Signs may be given as +/-1 ints or '+'/'-' characters."""
    n_bits = int(np.log2(n_out))
    if len(select) != n_bits:
        raise ParameterError(f"need {n_bits} selection bits for n_out={n_out}")
    channel = 0
    for s in select:
        bit = {1: 0, "+": 0, -1: 1, "-": 1}.get(s)
        if bit is None:
            raise ParameterError(f"bad selection sign {s!r}")
        channel = (channel << 1) | bit
    return channel


def select_for_channel(channel: int, n_out: int = 4) -> tuple:
    """Inverse of route."""
    n_bits = int(np.log2(n_out))
    if not 0 <= channel < n_out:
        raise ParameterError(f"channel {channel} out of range for n_out={n_out}")
    return tuple(1 if (channel >> (n_bits - 1 - k)) & 1 == 0 else -1 for k in range(n_bits))


def effective_rabi(config: DmxConfig, selected: int, omega_nominal_mhz) -> np.ndarray:
    """Per-qubit Rabi rates with the DMX set to `selected`:
    Omega_ij = Omega_jj 10^(Lambda_ij / 20)."""
    omega = np.asarray(omega_nominal_mhz, dtype=float)
    if config.lambda_db is None:
        raise ParameterError("config has no crosstalk matrix")
    if omega.shape != (config.n_out,):
        raise ParameterError(f"need {config.n_out} nominal rates")
    rates = omega[selected] * 10.0 ** (config.lambda_db[:, selected] / 20.0)
    rates[selected] = omega[selected]
    return rates


def crosstalk_matrix_from_rates(omega_mhz: np.ndarray) -> np.ndarray:
    """Lambda_ij = 10 log10 (Omega_ij / Omega_jj)^2 with a -120 dB floor."""
    omega = np.asarray(omega_mhz, dtype=float)
    diag = np.diag(omega)
    if np.any(diag <= 0):
        raise ParameterError("diagonal Rabi rates must be positive")
    with np.errstate(divide="ignore"):
        lam = 10.0 * np.log10((omega / diag[np.newaxis, :]) ** 2)
    lam = np.maximum(lam, DB_FLOOR)
    np.fill_diagonal(lam, 0.0)
    return lam


@dataclass(frozen=True)
class MarginResult:
    margin_percent: float
    common_window: tuple
    limiting_channel: int | None
    empty: bool = False


def bias_margin(windows) -> MarginResult:
    """Common operating window of all channels; margin is the half-width of
    the intersection over its center, in percent.  The limiting channel is
    the one whose removal widens the margin the most (None on ties)."""
    windows = [(float(lo), float(hi)) for lo, hi in windows]
    if not windows or any(hi <= lo for lo, hi in windows):
        raise ParameterError("each window must be a non-empty (lo, hi) interval")

    def margin_of(ws):
        lo = max(w[0] for w in ws)
        hi = min(w[1] for w in ws)
        if hi <= lo:
            return None, (lo, hi)
        return 100.0 * (0.5 * (hi - lo)) / (0.5 * (hi + lo)), (lo, hi)

    margin, common = margin_of(windows)
    if margin is None:
        return MarginResult(0.0, common, None, empty=True)
    if len(windows) == 1:
        return MarginResult(margin, common, None)
    improvements = []
    for skip in range(len(windows)):
        rest = [w for k, w in enumerate(windows) if k != skip]
        m, _ = margin_of(rest)
        improvements.append(np.inf if m is None else m - margin)
    best = float(max(improvements))
    winners = [k for k, v in enumerate(improvements) if abs(v - best) < 1e-12]
    limiting = winners[0] if len(winners) == 1 and best > 1e-12 else None
    return MarginResult(margin, common, limiting)


# ---------------------------------------------------------------------------
# time-division multiplexing


@dataclass(frozen=True)
class TdmEntry:
    qubit: int
    n_pulses: int
    t_start_ns: float


@dataclass(frozen=True)
class TdmSchedule:
    entries: tuple
    readout_time_ns: float

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        last_end = -np.inf
        for e in entries:
            if e.t_start_ns < last_end - 1e-12:
                raise ScheduleError("TDM entries overlap or are out of order")
            last_end = e.t_start_ns  # durations checked in the simulator
        if entries and self.readout_time_ns < entries[-1].t_start_ns:
            raise ScheduleError("readout precedes the last drive entry")


@dataclass(frozen=True)
class TdmQubit:
    """Per-channel drive setup for the TDM simulator."""

    model: TransmonModel
    clock: sfqdrive.ClockConfig
    chans: sfqdrive.DecoherenceChannels
    shape: sfqdrive.PulseShape = sfqdrive.PulseShape()


def simulate_tdm(schedule: TdmSchedule, qubits, config: DmxConfig | None = None,
                 guard_ns: float = 0.0) -> list[np.ndarray]:
    """Serially drive one qubit at a time through the DMX; idle qubits decay
    freely, and (when a crosstalk matrix is supplied) feel attenuated pulse
    trains at the driven channel's clock.

    Returns each qubit's density matrix at the readout time.
    """
    qubits = list(qubits)
    n = len(qubits)
    if config is not None and config.n_out < n:
        raise ParameterError("more qubits than DMX outputs")
    for e in schedule.entries:
        if not 0 <= e.qubit < n:
            raise ScheduleError(f"entry refers to unknown qubit {e.qubit}")
    # entry durations set by the driven qubit's clock
    durations = [e.n_pulses * qubits[e.qubit].clock.tau_clk for e in schedule.entries]
    t_cursor = 0.0
    for e, dur in zip(schedule.entries, durations):
        if e.t_start_ns + 1e-12 < t_cursor:
            raise ScheduleError("TDM entries overlap")
        t_cursor = e.t_start_ns + dur + guard_ns
    if schedule.entries and t_cursor - guard_ns > schedule.readout_time_ns + 1e-9:
        raise ScheduleError("schedule extends past the readout time")

    states = []
    for setup in qubits:
        rho = np.zeros((setup.model.dim, setup.model.dim), dtype=complex)
        rho[0, 0] = 1.0
        states.append(vec(rho))
    clocks_at = [0.0] * n

    def idle_to(i, t_target):
        dt = t_target - clocks_at[i]
        if dt > 1e-12:
            setup = qubits[i]
            s = sfqdrive.free_decay_superop(setup.model, setup.chans, dt)
            states[i] = s.mat @ states[i]
        clocks_at[i] = t_target

    for e, dur in zip(schedule.entries, durations):
        driven = qubits[e.qubit]
        for i in range(n):
            idle_to(i, e.t_start_ns)
        # driven channel
        cycle = sfqdrive.build_cycle_propagator(driven.model, driven.shape, driven.clock, driven.chans)
        states[e.qubit] = cycle.power(e.n_pulses).mat @ states[e.qubit]
        clocks_at[e.qubit] += dur
        # crosstalk on the others, at the driven channel's clock
        for i in range(n):
            if i == e.qubit:
                continue
            scale = 0.0
            if config is not None and config.lambda_db is not None:
                scale = 10.0 ** (config.lambda_db[i, e.qubit] / 20.0)
            victim = qubits[i]
            if scale > 1e-9:
                xtalk_clock = sfqdrive.ClockConfig(
                    f_clk=driven.clock.f_clk,
                    m=victim.clock.m,
                    detuning_mhz=driven.clock.detuning_mhz,
                )
                vic_cycle = sfqdrive.build_cycle_propagator(
                    victim.model, victim.shape, xtalk_clock, victim.chans, kick_scale=scale
                )
                states[i] = vic_cycle.power(e.n_pulses).mat @ states[i]
                clocks_at[i] += e.n_pulses * xtalk_clock.tau_clk
            else:
                idle_to(i, e.t_start_ns + dur)
        clocks_at = [max(c, e.t_start_ns + dur) for c in clocks_at]

    for i in range(n):
        idle_to(i, schedule.readout_time_ns)
    return [v.reshape(qubits[i].model.dim, qubits[i].model.dim) for i, v in enumerate(states)]


# ---------------------------------------------------------------------------
# programmable pulse counter


class PulseCounter:
    """Self-resetting, serially programmable 8-bit pulse counter.

    Once programmed, every trigger emits exactly the programmed number of
    pulses and the counter restores its register, so re-triggering without
    reprogramming repeats the same count.
    """

    BITS = 8

    def __init__(self):
        self._register = 0

    def program(self, count: int) -> None:
        if not 0 <= count < 2**self.BITS:
            raise ParameterError(f"program must be in [0, {2**self.BITS - 1}]")
        self._register = int(count)

    def trigger(self) -> int:
        emitted = 0
        remaining = self._register
        while remaining:
            emitted += 1
            remaining -= 1
        # self-reset: register returns to the programmed value
        return emitted

    @property
    def programmed(self) -> int:
        return self._register


def pulse_counter(program: int) -> int:
    """Emitted pulse count for a one-shot program/trigger."""
    counter = PulseCounter()
    counter.program(program)
    return counter.trigger()
