"""Multi-level transmon model: charge-basis diagonalization and the
per-pulse rotation angle delivered by a flux-quantum voltage kick.

Energies are in GHz (E/h), times in microseconds for coherence inputs and
nanoseconds inside propagators, capacitances in femtofarads.
"""

from __future__ import annotations

import configparser
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import least_squares

from .errors import CalibrationError, ConfigError, IntegrityError, ParameterError

CHARGE_CUTOFF = 30  # charge states |-n_c .. +n_c|; see cutoff convergence test


@dataclass(frozen=True)
class TransmonParams:
    """Bare transmon parameters.

    e_j, e_c: Josephson and charging energies (GHz).
    n_levels: eigenlevels retained after diagonalization (>= 3 so that at
        least one leakage level exists).
    c_q, c_c: qubit and coupling capacitance (fF); only their ratio enters
        the drive strength.
    t1, t2: relaxation and decoherence times (us).
    """

    e_j: float
    e_c: float
    n_levels: int = 4
    c_q: float = 80.0
    c_c: float = 0.08
    t1: float = 30.0
    t2: float = 30.0

    def __post_init__(self):
        if self.e_j <= 0 or self.e_c <= 0:
            raise ParameterError("e_j and e_c must be positive")
        if self.n_levels < 3:
            raise ParameterError("n_levels >= 3 required (need a leakage level)")
        if self.c_c >= self.c_q:
            raise ParameterError("c_c must be smaller than c_q")
        if self.t1 <= 0 or self.t2 <= 0:
            raise ParameterError("t1 and t2 must be positive")
        if self.t2 > 2.0 * self.t1 + 1e-12:
            raise ParameterError("t2 <= 2*t1 required for a physical channel")
        if self.e_j / self.e_c < 20:
            warnings.warn(
                f"E_J/E_C = {self.e_j / self.e_c:.1f} is below the transmon regime",
                stacklevel=2,
            )


@dataclass(frozen=True)
class TransmonModel:
    """Diagonalized transmon truncated to the lowest n_levels eigenstates.

    energies: eigenfrequencies relative to the ground state (GHz, ascending).
    q_op: Cooper-pair-number operator in the truncated eigenbasis.
    """

    energies: np.ndarray
    q_op: np.ndarray
    f01: float
    anharm: float
    c_q: float
    c_c: float
    c_sigma: float
    xi: float
    lam: float
    t1: float
    t2: float
    e_j: float = 0.0
    e_c: float = 0.0

    def __post_init__(self):
        for name in ("energies", "q_op"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return len(self.energies)

    def restricted(self, n_levels: int) -> "TransmonModel":
        """Truncate to the lowest n_levels (used for two-level reference checks)."""
        if not 2 <= n_levels <= self.dim:
            raise ParameterError(f"cannot restrict {self.dim} levels to {n_levels}")
        return replace(
            self,
            energies=self.energies[:n_levels].copy(),
            q_op=self.q_op[:n_levels, :n_levels].copy(),
        )


def charge_hamiltonian(e_j: float, e_c: float, n_c: int = CHARGE_CUTOFF) -> np.ndarray:
    """H = 4 E_C n^2 - (E_J/2) (|n><n+1| + h.c.) on charge states -n_c..n_c."""
    n = np.arange(-n_c, n_c + 1, dtype=float)
    h = np.diag(4.0 * e_c * n**2)
    off = np.full(2 * n_c, -0.5 * e_j)
    h += np.diag(off, 1) + np.diag(off, -1)
    return h


def diagonalize(params: TransmonParams, n_c: int = CHARGE_CUTOFF) -> TransmonModel:
    """Diagonalize the charge-basis Hamiltonian and truncate.

    The eigenvector gauge is fixed by making the largest-magnitude component
    of each eigenvector real-positive, so q_op matrix elements are
    reproducible between runs.
    """
    if params.n_levels > 2 * n_c + 1:
        raise ParameterError(f"n_levels={params.n_levels} exceeds charge-basis size {2 * n_c + 1}")
    h = charge_hamiltonian(params.e_j, params.e_c, n_c)
    herm_defect = np.max(np.abs(h - h.T)) / max(np.max(np.abs(h)), 1e-300)
    if herm_defect > 1e-12:
        raise IntegrityError(f"charge Hamiltonian not Hermitian: defect {herm_defect:.2e}")
    try:
        energies, vecs = eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh on a tridiagonal rarely fails
        raise IntegrityError(f"eigensolve failed: {exc}") from exc
    energies = energies - energies[0]
    k = params.n_levels
    vecs = vecs[:, :k].copy()
    for j in range(k):
        i = np.argmax(np.abs(vecs[:, j]))
        if vecs[i, j] < 0:
            vecs[:, j] = -vecs[:, j]
    n_op = np.diag(np.arange(-n_c, n_c + 1, dtype=float))
    q_op = vecs.T @ n_op @ vecs
    q_op = 0.5 * (q_op + q_op.T)  # symmetrize away rounding noise
    xi = np.sqrt(2.0 * params.e_c / params.e_j)
    return TransmonModel(
        energies=energies[:k],
        q_op=q_op,
        f01=float(energies[1]),
        anharm=float(energies[2] - 2.0 * energies[1]),
        c_q=params.c_q,
        c_c=params.c_c,
        c_sigma=params.c_q + params.c_c,
        xi=float(xi),
        lam=float(1.0 - xi / 8.0),
        t1=params.t1,
        t2=params.t2,
        e_j=params.e_j,
        e_c=params.e_c,
    )


EC_BOUNDS = (0.05, 1.0)
EJ_EC_BOUNDS = (10.0, 200.0)


def solve_ej_ec(f01: float, anharm: float, tol: float = 1e-10) -> tuple[float, float]:
    """Invert diagonalize: find (e_j, e_c) reproducing (f01, anharm).

    Searches E_C in [0.05, 1] GHz and E_J/E_C in [10, 200]; raises
    CalibrationError when no solution exists in that box.
    """
    if f01 <= 0 or anharm >= 0:
        raise ParameterError("need f01 > 0 and anharm < 0")

    def residual(p):
        model = _diag_pair(p[0], p[1])
        return [model[0] - f01, model[1] - anharm]

    # perturbative starting point: f01 ~ sqrt(8 EJ EC) - EC, anharm ~ -EC
    ec0 = min(max(-anharm, EC_BOUNDS[0]), EC_BOUNDS[1])
    ej0 = (f01 + ec0) ** 2 / (8.0 * ec0)
    lo = [EJ_EC_BOUNDS[0] * EC_BOUNDS[0], EC_BOUNDS[0]]
    hi = [EJ_EC_BOUNDS[1] * EC_BOUNDS[1], EC_BOUNDS[1]]
    ej0 = min(max(ej0, lo[0]), hi[0])
    sol = least_squares(residual, [ej0, ec0], bounds=(lo, hi), xtol=tol, ftol=tol, gtol=tol)
    e_j, e_c = float(sol.x[0]), float(sol.x[1])
    ratio = e_j / e_c
    check = residual([e_j, e_c])
    if max(abs(check[0]), abs(check[1])) > 1e-4 or not (
        EJ_EC_BOUNDS[0] - 1e-9 <= ratio <= EJ_EC_BOUNDS[1] + 1e-9
    ):
        raise CalibrationError(
            f"no (e_j, e_c) in search box reproduces f01={f01}, anharm={anharm} "
            f"(residual {check}, E_J/E_C={ratio:.1f})"
        )
    return e_j, e_c


def _diag_pair(e_j: float, e_c: float) -> tuple[float, float]:
    h = charge_hamiltonian(e_j, e_c)
    w = eigh(h, eigvals_only=True, subset_by_index=(0, 2))
    return float(w[1] - w[0]), float((w[2] - w[0]) - 2.0 * (w[1] - w[0]))


def delta_theta(model: TransmonModel) -> float:
    """Rotation angle per SFQ pulse: 2 pi (C_c/C_q) lam / sqrt(xi)."""
    return 2.0 * np.pi * (model.c_c / model.c_q) * model.lam / np.sqrt(model.xi)


# ---------------------------------------------------------------------------
# device parameter files


@dataclass(frozen=True)
class DeviceRecord:
    """One qubit row of a device parameter file."""

    name: str
    f01_ghz: float
    anharm_ghz: float
    t1_us: float
    t2_us: float
    cq_ff: float
    cc_ff: float
    f_clk_ghz: float | None = None  # as-tabulated clock rate, informational
    omega_r_mhz: float | None = None  # as-tabulated Rabi rate, informational


def load_device_file(path) -> list[DeviceRecord]:
    """Parse a key-value device file with one section per qubit."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError:
        raise
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse device file {path}: {exc}") from exc
    records = []
    for section in parser.sections():
        sec = parser[section]
        try:
            records.append(
                DeviceRecord(
                    name=section,
                    f01_ghz=sec.getfloat("f01_ghz"),
                    anharm_ghz=sec.getfloat("anharm_ghz"),
                    t1_us=sec.getfloat("t1_us"),
                    t2_us=sec.getfloat("t2_us"),
                    cq_ff=sec.getfloat("cq_ff"),
                    cc_ff=sec.getfloat("cc_ff"),
                    f_clk_ghz=sec.getfloat("f_clk_ghz", fallback=None),
                    omega_r_mhz=sec.getfloat("omega_r_mhz", fallback=None),
                )
            )
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad or missing field in device section [{section}]: {exc}") from exc
    if not records:
        raise ConfigError(f"device file {path} contains no qubit sections")
    return records


def build_model(record: DeviceRecord, n_levels: int = 4) -> TransmonModel:
    """Solve (e_j, e_c) from the tabulated (f01, anharm) and diagonalize."""
    e_j, e_c = solve_ej_ec(record.f01_ghz, record.anharm_ghz)
    params = TransmonParams(
        e_j=e_j,
        e_c=e_c,
        n_levels=n_levels,
        c_q=record.cq_ff,
        c_c=record.cc_ff,
        t1=record.t1_us,
        t2=record.t2_us,
    )
    return diagonalize(params)


def bundled_device_file() -> Path:
    """The five-qubit device file shipped with the package."""
    return Path(__file__).parent / "data" / "device_5q.cfg"
