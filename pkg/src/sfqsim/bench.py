"""Single-qubit Clifford machinery and randomized-benchmarking pipelines
(standard, interleaved, two-X/2-per-Clifford, and purity variants), plus
fixed-length ORBIT parameter sweeps.

Gate engines supply one superoperator per Clifford: either composed from
simulated SFQ pulse trains, or an abstract error channel for oracle tests.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares

from . import metrics, sfqdrive
from .errors import CalibrationError, FitError, ParameterError
from .qdevice import TransmonModel
from .superop import Superoperator, vec

_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)


def _rot(axis: np.ndarray, angle: float) -> np.ndarray:
    return np.cos(angle / 2) * np.eye(2) - 1j * np.sin(angle / 2) * axis


def _rz(angle: float) -> np.ndarray:
    return np.diag([np.exp(-1j * angle / 2), np.exp(1j * angle / 2)])


PRIMITIVE_UNITARIES = {
    "i": np.eye(2, dtype=complex),
    "x2": _rot(_SX, np.pi / 2),
    "x2m": _rot(_SX, -np.pi / 2),
    "y2": _rot(_SY, np.pi / 2),
    "y2m": _rot(_SY, -np.pi / 2),
    "x": _rot(_SX, np.pi),
    "y": _rot(_SY, np.pi),
}

# drive azimuth and number of pi/2 pulse trains per primitive
PRIMITIVE_DRIVE = {
    "x2": (0.0, 1),
    "x2m": (np.pi, 1),
    "y2": (np.pi / 2, 1),
    "y2m": (3 * np.pi / 2, 1),
    "x": (0.0, 2),
    "y": (np.pi / 2, 2),
}

_GENERATORS = ("x", "y", "x2", "x2m", "y2", "y2m")


def _equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-10) -> bool:
    inner = np.trace(a.conj().T @ b) / a.shape[0]
    return abs(abs(inner) - 1.0) < tol


def _zyz_angles(u: np.ndarray) -> tuple[float, float, float]:
    """Euler angles with u ~ Rz(alpha) Ry(beta) Rz(gamma) up to global phase."""
    beta = 2.0 * np.arctan2(abs(u[1, 0]), abs(u[0, 0]))
    if abs(u[0, 0]) < 1e-9:  # beta = pi
        diff = np.angle(u[1, 0]) - np.angle(-u[0, 1])
        return diff / 2.0, np.pi, -diff / 2.0
    if abs(u[1, 0]) < 1e-9:  # beta = 0
        return np.angle(u[1, 1]) - np.angle(u[0, 0]), 0.0, 0.0
    total = np.angle(u[1, 1]) - np.angle(u[0, 0])
    diff = np.angle(u[1, 0]) - np.angle(-u[0, 1])
    return (total + diff) / 2.0, beta, (total - diff) / 2.0


@dataclass(frozen=True)
class CliffordTable:
    """The 24 single-qubit Cliffords with a minimal physical decomposition
    (average 1.875 gates) and a two-X/2 virtual-Z decomposition each."""

    unitaries: tuple
    minimal: tuple
    u3: tuple
    product: np.ndarray  # product[i, j] = index of U_i @ U_j
    inverse: np.ndarray
    identity_index: int
    x_half_index: int

    def lookup(self, u: np.ndarray) -> int:
        for i, ui in enumerate(self.unitaries):
            if _equal_up_to_phase(ui, u):
                return i
        raise ParameterError("unitary is not a single-qubit Clifford")


def _build_clifford_table() -> CliffordTable:
    # close the group under the generator set
    unitaries = [np.eye(2, dtype=complex)]

    def find(u: np.ndarray) -> int | None:
        for k, uk in enumerate(unitaries):
            if _equal_up_to_phase(uk, u):
                return k
        return None

    def index_of(u: np.ndarray) -> int:
        k = find(u)
        if k is None:
            raise AssertionError("product left the Clifford group")
        return k

    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            for g in _GENERATORS:
                u = PRIMITIVE_UNITARIES[g] @ unitaries[i]
                if find(u) is None:
                    unitaries.append(u)
                    nxt.append(len(unitaries) - 1)
        frontier = nxt
    assert len(unitaries) == 24, f"Clifford closure found {len(unitaries)} elements"

    # shortest decompositions by breadth-first search over generator strings;
    # the identity costs one physical gate (an idle), giving 45/24 = 1.875
    minimal: dict[int, tuple] = {0: ("i",)}
    layer = {0: ()}
    while len(minimal) < 24:
        new_layer = {}
        for i, seq in layer.items():
            for g in _GENERATORS:
                j = index_of(PRIMITIVE_UNITARIES[g] @ unitaries[i])
                if j != 0 and j not in minimal:
                    minimal[j] = seq + (g,)
                    new_layer[j] = seq + (g,)
        layer = new_layer
    total_gates = sum(len(seq) for seq in minimal.values())
    assert total_gates == 45, f"minimal decomposition totals {total_gates} gates, expected 45"

    # two-X/2 decomposition: U ~ Rz(a) X/2 Rz(b) X/2 Rz(c)
    x2 = PRIMITIVE_UNITARIES["x2"]
    u3 = []
    for u in unitaries:
        alpha, beta, gamma = _zyz_angles(u)
        a, b, c = alpha, np.pi - beta, gamma - np.pi
        recomposed = _rz(a) @ x2 @ _rz(b) @ x2 @ _rz(c)
        assert _equal_up_to_phase(recomposed, u), "u3 decomposition failed to recompose"
        u3.append((a % (2 * np.pi), b % (2 * np.pi), c % (2 * np.pi)))

    product = np.empty((24, 24), dtype=np.intp)
    inverse = np.empty(24, dtype=np.intp)
    for i in range(24):
        for j in range(24):
            product[i, j] = index_of(unitaries[i] @ unitaries[j])
        inverse[i] = index_of(unitaries[i].conj().T)
    product.setflags(write=False)
    inverse.setflags(write=False)

    x_half_index = index_of(x2)
    return CliffordTable(
        unitaries=tuple(unitaries),
        minimal=tuple(minimal[i] for i in range(24)),
        u3=tuple(u3),
        product=product,
        inverse=inverse,
        identity_index=0,
        x_half_index=x_half_index,
    )


@functools.lru_cache(maxsize=1)
def clifford_table() -> CliffordTable:
    return _build_clifford_table()


def generate_sequence(m: int, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """m uniform Cliffords plus the recovery element undoing their product."""
    if m < 1:
        raise ParameterError("sequence length must be >= 1")
    table = clifford_table()
    indices = rng.integers(0, 24, size=m)
    running = table.identity_index
    for idx in indices:
        running = table.product[idx, running]
    recovery = int(table.inverse[running])
    return indices, recovery


# ---------------------------------------------------------------------------
# gate engines


class ChannelGateEngine:
    """Ideal Cliffords followed by a fixed error channel (oracle engine).

    error_per="clifford" attaches the channel once per Clifford;
    error_per="x2" attaches it after each X/2 of the two-X/2 composition.
    The interleaved gate carries only its own error channel
    (interleaved_error); None means a perfect interleaved gate.
    """

    def __init__(self, error: Superoperator | None = None, dim: int = 2,
                 interleaved_error: Superoperator | None = None,
                 error_per: str = "clifford"):
        if error_per not in ("clifford", "x2"):
            raise ParameterError(f"unknown error placement {error_per!r}")
        self.dim = dim
        self.table = clifford_table()
        self._error = error
        self._interleaved_error = interleaved_error
        self._error_per = error_per
        self._cache: dict = {}
        self._int_cache: dict = {}

    def _embed(self, u2: np.ndarray) -> Superoperator:
        u = np.eye(self.dim, dtype=complex)
        u[:2, :2] = u2
        return Superoperator.from_unitary(u)

    def with_param(self, name: str, value) -> "ChannelGateEngine":
        # abstract channels have no gate parameters to sweep
        return self

    def clifford_superop(self, index: int, composition: str = "minimal") -> Superoperator:
        key = (int(index), composition if self._error_per == "x2" else "any")
        if key not in self._cache:
            if self._error_per == "x2":
                if composition != "u3":
                    raise ParameterError("error_per='x2' requires the u3 composition")
                a, b, c = self.table.u3[index]
                x2 = self._embed(PRIMITIVE_UNITARIES["x2"])
                if self._error is not None:
                    x2 = self._error @ x2
                s = (self._embed(_rz(a)) @ x2 @ self._embed(_rz(b))
                     @ x2 @ self._embed(_rz(c)))
            else:
                s = self._embed(self.table.unitaries[index])
                if self._error is not None:
                    s = self._error @ s
            self._cache[key] = s
        return self._cache[key]

    def interleaved_superop(self, index: int) -> Superoperator:
        key = int(index)
        if key not in self._int_cache:
            s = self._embed(self.table.unitaries[key])
            if self._interleaved_error is not None:
                s = self._interleaved_error @ s
            self._int_cache[key] = s
        return self._int_cache[key]

    def rho0(self) -> np.ndarray:
        rho = np.zeros((self.dim, self.dim), dtype=complex)
        rho[0, 0] = 1.0
        return rho

    def survival(self, rho: np.ndarray) -> float:
        return float(rho[0, 0].real)

    def qubit_state(self, rho: np.ndarray) -> np.ndarray:
        """Tomography-style qubit state; leakage population reads as 'not 0'."""
        p0 = rho[0, 0].real
        return np.array([[p0, rho[0, 1]], [rho[1, 0], 1.0 - p0]], dtype=complex)


class SfqGateEngine(ChannelGateEngine):
    """Primitive gates composed from simulated SFQ pulse-train propagators.

    Physical primitives are pi/2 and pi trains about azimuths set by
    virtual-Z frame angles; the identity is an idle of one gate duration.
    """

    def __init__(
        self,
        model: TransmonModel,
        shape: sfqdrive.PulseShape = sfqdrive.PulseShape(),
        clock: sfqdrive.ClockConfig | None = None,
        chans: sfqdrive.DecoherenceChannels | None = None,
        gate: sfqdrive.GateSpec | None = None,
        phase_increment: float = 0.0,
        calibration_scan: int = 5,
    ):
        self.model = model
        self.shape = shape
        self.clock = clock or sfqdrive.ClockConfig.subharmonic(model.f01)
        self.chans = chans if chans is not None else sfqdrive.DecoherenceChannels.from_times(model.t1, model.t2)
        if gate is None:
            gate = sfqdrive.calibrate_np(model, shape, self.clock, self.chans, scan=calibration_scan)
        self.gate = gate
        self.phase_increment = phase_increment
        self.dim = model.dim
        self.table = clifford_table()
        self._cycle = sfqdrive.build_cycle_propagator(model, shape, self.gate.clock, self.chans)
        self._cache = {}
        self._prim_cache: dict = {}

    def with_param(self, name: str, value) -> "SfqGateEngine":
        """Engine with one swept gate parameter replaced (ORBIT support)."""
        if name == "n_p":
            gate = replace(self.gate, n_p=int(value))
            return SfqGateEngine(self.model, self.shape, self.gate.clock, self.chans, gate,
                                 self.phase_increment)
        if name == "detuning":
            clock = replace(self.gate.clock, detuning_mhz=float(value))
            gate = replace(self.gate, clock=clock)
            return SfqGateEngine(self.model, self.shape, clock, self.chans, gate,
                                 self.phase_increment)
        if name == "phase":
            return SfqGateEngine(self.model, self.shape, self.gate.clock, self.chans, self.gate,
                                 phase_increment=float(value))
        raise ParameterError(f"unknown ORBIT parameter {name!r}")

    def z_superop(self, angle: float) -> Superoperator:
        return Superoperator.from_unitary(sfqdrive.axis_phases(self.model, angle))

    def primitive_superop(self, name: str) -> Superoperator:
        if name not in self._prim_cache:
            spec = self.gate
            if name == "i":
                idle = sfqdrive.free_decay_superop(self.model, self.chans, spec.duration_ns)
                s = sfqdrive.frame_correction(self.model, spec.duration_ns) @ idle
            else:
                axis, trains = PRIMITIVE_DRIVE[name]
                n = spec.n_p * trains
                s = sfqdrive.gate_superop(self._cycle, self.model, n,
                                          n * spec.clock.tau_clk, axis_angle=axis)
            self._prim_cache[name] = s
        return self._prim_cache[name]

    def clifford_superop(self, index: int, composition: str = "minimal") -> Superoperator:
        key = (composition, int(index))
        if key not in self._cache:
            if composition == "minimal":
                s = Superoperator.identity(self.dim)
                for name in self.table.minimal[index]:
                    s = self.primitive_superop(name) @ s
            elif composition == "u3":
                a, b, c = self.table.u3[index]
                dphi = self.phase_increment
                x2 = self.primitive_superop("x2")
                s = (self.z_superop(a + dphi) @ x2 @ self.z_superop(b + dphi)
                     @ x2 @ self.z_superop(c + dphi))
            else:
                raise ParameterError(f"unknown composition {composition!r}")
            self._cache[key] = s
        return self._cache[key]

    def interleaved_superop(self, index: int) -> Superoperator:
        if index != self.table.x_half_index:
            # any Clifford can be interleaved; use its minimal composition
            return self.clifford_superop(index, "minimal")
        return self.primitive_superop("x2")


# ---------------------------------------------------------------------------
# decay fitting


def _fit_decay(lengths: np.ndarray, means: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit of p = A alpha^m + B.

    Initialization: B from the longest sequences, A from the endpoints,
    alpha from a log-linear regression of p - B.
    """
    x = np.asarray(lengths, dtype=float)
    y = np.asarray(means, dtype=float)
    if np.ptp(y) < 1e-9:
        return 0.0, float(np.mean(y)), 1.0
    b0 = y[-1]
    a0 = y[0] - y[-1]
    shifted = (y - b0) * np.sign(a0)
    mask = shifted > 1e-12
    if mask.sum() >= 2:
        slope = np.polyfit(x[mask], np.log(shifted[mask]), 1)[0]
        alpha0 = float(np.exp(slope))
    else:
        alpha0 = 0.95
    alpha0 = min(max(alpha0, 1e-6), 1.0 - 1e-9)

    def residual(p):
        a, b, alpha = p
        return a * alpha**x + b - y

    sol = least_squares(
        residual,
        [a0, b0, alpha0],
        bounds=([-2.0, -1.0, 1e-9], [2.0, 2.0, 1.0]),
        method="trf",
    )
    if not sol.success and sol.status <= 0:
        raise FitError("decay fit did not converge")
    a, b, alpha = sol.x
    return float(a), float(b), float(alpha)


@dataclass(frozen=True)
class RBResult:
    """Survival decay points and the fitted p = A alpha^m + B."""

    lengths: tuple
    mean_p0: tuple
    stderr: tuple
    a: float
    b: float
    alpha: float
    alpha_std: float
    f_cliff: float
    f_cliff_std: float
    composition: str
    dimension: int = 2

    @property
    def n_tilde(self) -> float:
        return np.inf if self.alpha >= 1.0 else -1.0 / np.log(self.alpha)

    @property
    def clifford_error(self) -> float:
        return 1.0 - self.f_cliff


@dataclass(frozen=True)
class U3RBResult:
    rb: RBResult

    @property
    def x2_error(self) -> float:
        """With two X/2 per Clifford, the X/2 error is half the Clifford error."""
        return 0.5 * self.rb.clifford_error


@dataclass(frozen=True)
class IRBResult:
    f_gate: float
    alpha_ref: float
    alpha_int: float
    reference: RBResult
    interleaved: RBResult
    unphysical: bool


@dataclass(frozen=True)
class PRBResult:
    """Purity decay P = A gamma^m + B and the incoherent Clifford error."""

    lengths: tuple
    mean_purity: tuple
    stderr: tuple
    gamma: float
    gamma_std: float
    epsilon_prb: float
    dimension: int = 2


@dataclass(frozen=True)
class OrbitResult:
    parameter: str
    values: tuple
    mean_p0: tuple
    stderr: tuple
    best_value: float
    inconclusive: bool


DEFAULT_LENGTHS = (2, 4, 8, 16, 32, 64, 128, 256)
_BOOTSTRAP = 100


def _sequence_rng(seed: int, i_len: int, i_rand: int) -> np.random.Generator:
    # counting scheme so randomizations are independent tasks
    return np.random.default_rng([int(seed), int(i_len), int(i_rand)])


def _run_sequences(engine, lengths, k, seed, composition, interleave=None, collect="survival"):
    """Survival probabilities (or purities) per (length, randomization)."""
    table = clifford_table()
    out = np.empty((len(lengths), k))
    for i_len, m in enumerate(lengths):
        for i_rand in range(k):
            rng = _sequence_rng(seed, i_len, i_rand)
            indices, recovery = generate_sequence(m, rng)
            if interleave is not None:
                running = table.identity_index
                for idx in indices:
                    running = table.product[idx, running]
                    running = table.product[interleave, running]
                recovery = int(table.inverse[running])
            v = vec(engine.rho0())
            for idx in indices:
                v = engine.clifford_superop(idx, composition).mat @ v
                if interleave is not None:
                    v = engine.interleaved_superop(interleave).mat @ v
            if collect == "survival":
                v = engine.clifford_superop(recovery, composition).mat @ v
                rho = v.reshape(engine.dim, engine.dim)
                out[i_len, i_rand] = engine.survival(rho)
            else:
                rho = v.reshape(engine.dim, engine.dim)
                out[i_len, i_rand] = metrics.purity(engine.qubit_state(rho))
    return out


def _bootstrap_alpha(lengths, samples, seed) -> float:
    rng = np.random.default_rng([int(seed), 0xB007])
    k = samples.shape[1]
    alphas = []
    for _ in range(_BOOTSTRAP):
        cols = rng.integers(0, k, size=k)
        try:
            alphas.append(_fit_decay(lengths, samples[:, cols].mean(axis=1))[2])
        except FitError:
            continue
    return float(np.std(alphas)) if alphas else np.inf


def run_rb(engine, lengths=DEFAULT_LENGTHS, k: int = 30, seed: int = 0,
           composition: str = "minimal") -> RBResult:
    """Standard RB: survival of |0> vs sequence length, exponential fit,
    F_cliff = (1 + alpha (D-1)) / D."""
    lengths = tuple(int(m) for m in lengths)
    samples = _run_sequences(engine, lengths, k, seed, composition)
    means = samples.mean(axis=1)
    stderr = samples.std(axis=1, ddof=1) / np.sqrt(k) if k > 1 else np.zeros(len(lengths))
    a, b, alpha = _fit_decay(np.array(lengths), means)
    alpha_std = _bootstrap_alpha(np.array(lengths), samples, seed) if k > 1 else 0.0
    d = 2
    f_cliff = (1.0 + alpha * (d - 1)) / d
    return RBResult(
        lengths=lengths,
        mean_p0=tuple(means),
        stderr=tuple(stderr),
        a=a,
        b=b,
        alpha=alpha,
        alpha_std=alpha_std,
        f_cliff=f_cliff,
        f_cliff_std=alpha_std * (d - 1) / d,
        composition=composition,
    )


def run_irb(engine, target: int | str = "x2", lengths=DEFAULT_LENGTHS, k: int = 30,
            seed: int = 0, composition: str = "minimal") -> IRBResult:
    """Interleaved RB: F_gate = (1 + (D-1) alpha_int / alpha_ref) / D."""
    table = clifford_table()
    index = table.x_half_index if target == "x2" else int(target)
    reference = run_rb(engine, lengths, k, seed, composition)
    samples = _run_sequences(engine, tuple(lengths), k, seed + 1, composition, interleave=index)
    means = samples.mean(axis=1)
    stderr = samples.std(axis=1, ddof=1) / np.sqrt(k) if k > 1 else np.zeros(len(lengths))
    a, b, alpha_int = _fit_decay(np.array(lengths), means)
    alpha_std = _bootstrap_alpha(np.array(lengths), samples, seed + 1) if k > 1 else 0.0
    d = 2
    interleaved = RBResult(
        lengths=tuple(lengths),
        mean_p0=tuple(means),
        stderr=tuple(stderr),
        a=a,
        b=b,
        alpha=alpha_int,
        alpha_std=alpha_std,
        f_cliff=(1.0 + alpha_int) / d,
        f_cliff_std=alpha_std / d,
        composition=composition,
    )
    ratio = alpha_int / reference.alpha
    f_gate = (1.0 + (d - 1) * ratio) / d
    tol = 3.0 * np.hypot(reference.alpha_std, alpha_std) + 1e-12
    return IRBResult(
        f_gate=float(f_gate),
        alpha_ref=reference.alpha,
        alpha_int=alpha_int,
        reference=reference,
        interleaved=interleaved,
        unphysical=bool(alpha_int > reference.alpha + tol),
    )


def run_u3rb(engine, lengths=DEFAULT_LENGTHS, k: int = 30, seed: int = 0) -> U3RBResult:
    """RB with every Clifford composed of two X/2 plus virtual-Z angles."""
    return U3RBResult(rb=run_rb(engine, lengths, k, seed, composition="u3"))


def run_prb(engine, lengths=DEFAULT_LENGTHS, k: int = 30, seed: int = 0,
            composition: str = "u3") -> PRBResult:
    """Purity RB: fit P(m) = A gamma^m + B on the tomography-read qubit
    state; incoherent error epsilon = ((D-1)/D)(1 - sqrt(gamma))."""
    lengths = tuple(int(m) for m in lengths)
    samples = _run_sequences(engine, lengths, k, seed, composition, collect="purity")
    means = samples.mean(axis=1)
    stderr = samples.std(axis=1, ddof=1) / np.sqrt(k) if k > 1 else np.zeros(len(lengths))
    _, _, gamma = _fit_decay(np.array(lengths), means)
    gamma_std = _bootstrap_alpha(np.array(lengths), samples, seed) if k > 1 else 0.0
    d = 2
    eps = (d - 1) / d * (1.0 - np.sqrt(gamma))
    return PRBResult(
        lengths=lengths,
        mean_purity=tuple(means),
        stderr=tuple(stderr),
        gamma=float(gamma),
        gamma_std=gamma_std,
        epsilon_prb=float(eps),
    )


def orbit_sweep(engine, parameter: str, values, n_fixed: int, k: int = 30,
                seed: int = 0) -> OrbitResult:
    """Sweep one gate parameter at fixed RB length; high mean survival marks
    well-calibrated values.  A flat curve (max - min below 3 sigma) is
    flagged inconclusive."""
    if n_fixed < 1:
        raise ParameterError("n_fixed must be >= 1")
    values = [float(v) for v in values]
    means, errs = [], []
    for value in values:
        eng = engine.with_param(parameter, value)
        samples = _run_sequences(eng, (int(n_fixed),), k, seed, "minimal")
        means.append(float(samples.mean()))
        errs.append(float(samples.std(ddof=1) / np.sqrt(k)) if k > 1 else 0.0)
    means_arr = np.array(means)
    spread = float(means_arr.max() - means_arr.min())
    sigma = float(np.median(errs))
    inconclusive = spread <= 3.0 * sigma + 1e-12
    best = values[int(np.argmax(means_arr))]
    return OrbitResult(
        parameter=parameter,
        values=tuple(values),
        mean_p0=tuple(means),
        stderr=tuple(errs),
        best_value=best,
        inconclusive=inconclusive,
    )


# ---------------------------------------------------------------------------
# oracle channels for tests and the CLI's synthetic modes


def depolarizing_superop(p: float, dim: int = 2) -> Superoperator:
    """Qubit-subspace depolarizing channel embedded in a dim-level space."""
    kraus = []
    paulis = [np.eye(2, dtype=complex), _SX, _SY, np.array([[1, 0], [0, -1]], complex)]
    weights = [1.0 - 0.75 * p, 0.25 * p, 0.25 * p, 0.25 * p]
    for w, op in zip(weights, paulis):
        full = np.eye(dim, dtype=complex)
        full[:2, :2] = op
        kraus.append(np.sqrt(w) * full)
    mat = sum(np.kron(g, g.conj()) for g in kraus)
    return Superoperator(mat)


def overrotation_superop(angle: float, dim: int = 2) -> Superoperator:
    """Coherent (unitary) error: extra rotation about x by `angle`."""
    u = np.eye(dim, dtype=complex)
    u[:2, :2] = _rot(_SX, angle)
    return Superoperator.from_unitary(u)
