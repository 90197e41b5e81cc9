"""Gate-quality metrics: average fidelity over the computational subspace,
leakage/seepage, purity, Kraus and chi-matrix decompositions, and the
analytic coherence limit of a gate of given duration.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegrityError, ParameterError
from .superop import Superoperator, superop_from_choi

KRAUS_EIG_CUT = 1e-12

PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class KrausSet:
    """Operators {G_k} with sum_k G_k^dag G_k = 1."""

    operators: tuple

    def completeness_defect(self) -> float:
        d = self.operators[0].shape[0]
        acc = sum(g.conj().T @ g for g in self.operators)
        return float(np.max(np.abs(acc - np.eye(d))))

    def to_superop(self) -> Superoperator:
        d = self.operators[0].shape[0]
        mat = np.zeros((d * d, d * d), dtype=complex)
        for g in self.operators:
            mat += np.kron(g, g.conj())
        return Superoperator(mat)


@dataclass(frozen=True)
class GateTarget:
    """Ideal computational-subspace unitary plus subspace projectors.

    The computational subspace is spanned by the lowest n_c levels; the
    remaining levels of the d-dimensional model count as leakage.
    """

    u0: np.ndarray
    dim: int
    n_c: int = 2

    def __post_init__(self):
        u0 = np.ascontiguousarray(self.u0, dtype=complex)
        if u0.shape != (self.n_c, self.n_c):
            raise ParameterError(f"u0 must be {self.n_c}x{self.n_c}")
        defect = np.max(np.abs(u0.conj().T @ u0 - np.eye(self.n_c)))
        if defect > 1e-12:
            raise ParameterError(f"target unitary defect {defect:.2e}")
        if self.dim < self.n_c:
            raise ParameterError("dim must be at least n_c")
        u0.setflags(write=False)
        object.__setattr__(self, "u0", u0)

    @property
    def p_c(self) -> np.ndarray:
        p = np.zeros((self.dim, self.dim))
        p[: self.n_c, : self.n_c] = np.eye(self.n_c)
        return p

    @property
    def p_e(self) -> np.ndarray:
        return np.eye(self.dim) - self.p_c

    def embedded_u0(self) -> np.ndarray:
        u = np.eye(self.dim, dtype=complex)
        u[: self.n_c, : self.n_c] = self.u0
        return u

    @classmethod
    def identity(cls, dim: int) -> "GateTarget":
        return cls(np.eye(2, dtype=complex), dim)

    @classmethod
    def x_half(cls, dim: int) -> "GateTarget":
        s = 1.0 / np.sqrt(2.0)
        return cls(np.array([[s, -1j * s], [-1j * s, s]]), dim)

    @classmethod
    def rotation(cls, axis_angle: float, angle: float, dim: int) -> "GateTarget":
        """Rotation by `angle` about the equatorial axis at azimuth `axis_angle`."""
        sx, sy = PAULIS["X"], PAULIS["Y"]
        gen = np.cos(axis_angle) * sx + np.sin(axis_angle) * sy
        u = np.cos(angle / 2) * np.eye(2) - 1j * np.sin(angle / 2) * gen
        return cls(u, dim)


def kraus_from_superop(s: Superoperator) -> KrausSet:
    """Kraus operators from the eigendecomposition of the Choi matrix."""
    choi = s.choi()
    w, v = np.linalg.eigh(0.5 * (choi + choi.conj().T))
    if w.min() < -1e-9:
        raise IntegrityError(f"Choi matrix has negative eigenvalue {w.min():.3e}")
    d = s.dim
    ops = []
    for k in range(len(w)):
        if w[k] > KRAUS_EIG_CUT:
            ops.append(np.sqrt(w[k]) * v[:, k].reshape(d, d).T)
    return KrausSet(operators=tuple(ops))


def average_fidelity(s: Superoperator, target: GateTarget) -> float:
    """F_avg = [sum_k Tr(M_k^dag M_k) + sum_k |Tr M_k|^2] / (n_c (n_c + 1))
    with M_k = P_c U_0^dag G_k P_c; leakage counts as error."""
    kraus = kraus_from_superop(s)
    u0d = target.embedded_u0().conj().T
    n_c = target.n_c
    t1 = t2 = 0.0
    for g in kraus.operators:
        m = (u0d @ g)[:n_c, :n_c]
        t1 += float(np.sum(np.abs(m) ** 2))
        t2 += abs(np.trace(m)) ** 2
    return (t1 + t2) / (n_c * (n_c + 1))


def leakage_seepage(s: Superoperator, target: GateTarget) -> tuple[float, float]:
    """Average leakage L1 out of, and seepage L2 back into, the computational
    subspace: L1 = Tr[P_e S(P_c/n_c)], L2 = 1 - Tr[P_e S(P_e/n_e)]."""
    p_c, p_e = target.p_c, target.p_e
    n_e = target.dim - target.n_c
    l1 = float(np.trace(p_e @ s.apply(p_c / target.n_c)).real)
    if n_e == 0:
        return l1, 0.0
    l2 = 1.0 - float(np.trace(p_e @ s.apply(p_e / n_e)).real)
    return l1, l2


def purity(rho: np.ndarray) -> float:
    """Tr(rho^dag rho)."""
    rho = np.asarray(rho)
    return float(np.sum(np.abs(rho) ** 2).real)


def _pauli_basis(n_qubits: int) -> list[np.ndarray]:
    """(I, X, Y, Z) tensor words in lexicographic order."""
    basis = []
    for word in itertools.product("IXYZ", repeat=n_qubits):
        op = np.array([[1.0 + 0j]])
        for ch in word:
            op = np.kron(op, PAULIS[ch])
        basis.append(op)
    return basis


def _reduce_to_subspace(s: Superoperator, target: GateTarget) -> Superoperator:
    """Compress a d-level map to the computational subspace (trace may leak)."""
    d, n_c = s.dim, target.n_c
    mat = np.zeros((n_c * n_c, n_c * n_c), dtype=complex)
    for i in range(n_c):
        for j in range(n_c):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            out = s.apply(e)[:n_c, :n_c]
            mat[:, i * n_c + j] = out.reshape(-1)
    return Superoperator(mat)


def chi_matrix(s: Superoperator, subspace: GateTarget | None = None) -> np.ndarray:
    """Process matrix over the Pauli basis, normalized so Tr chi = 1 for a
    trace-preserving map (identity process -> single unit entry at (I, I))."""
    if subspace is not None and s.dim != subspace.n_c:
        s = _reduce_to_subspace(s, subspace)
    d = s.dim
    n_qubits = int(round(np.log2(d)))
    if 2**n_qubits != d:
        raise ParameterError(f"chi matrix requires power-of-two dimension, got {d}")
    basis = _pauli_basis(n_qubits)
    n = len(basis)
    chi = np.zeros((n, n), dtype=complex)
    for m, pm in enumerate(basis):
        for k, pk in enumerate(basis):
            op = np.kron(pm, pk.conj())
            chi[m, k] = np.trace(op.conj().T @ s.mat) / d**2
    return chi


def superop_from_chi(chi: np.ndarray) -> Superoperator:
    """Inverse of chi_matrix on the full space."""
    n = chi.shape[0]
    n_qubits = int(round(np.log2(np.sqrt(n))))
    basis = _pauli_basis(n_qubits)
    d = 2**n_qubits
    mat = np.zeros((d * d, d * d), dtype=complex)
    for m, pm in enumerate(basis):
        for k, pk in enumerate(basis):
            mat += chi[m, k] * np.kron(pm, pk.conj())
    return Superoperator(mat)


def process_fidelity(chi_a: np.ndarray, chi_b: np.ndarray) -> float:
    """Tr(chi_a chi_b); symmetric, 1 for identical unitary processes."""
    return float(np.trace(chi_a @ chi_b).real)


def coherence_limit(tau_g_ns: float, t1_us: float, t2_us: float) -> float:
    """Decoherence fidelity limit for a gate of duration tau_g:
    (1/6) [3 + exp(-tau/T1) + 2 exp(-2 tau/T2)]."""
    if tau_g_ns < 0 or t1_us <= 0 or t2_us <= 0:
        raise ParameterError("coherence_limit needs tau >= 0 and positive T1, T2")
    tau_us = tau_g_ns * 1e-3
    return (3.0 + np.exp(-tau_us / t1_us) + 2.0 * np.exp(-2.0 * tau_us / t2_us)) / 6.0


# ---------------------------------------------------------------------------
# serialization helpers for report files


def complex_matrix_to_json(mat: np.ndarray) -> list:
    """Row-major [re, im] pairs."""
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(mat, complex)]


def kraus_to_json(kraus: KrausSet) -> str:
    return json.dumps({"operators": [complex_matrix_to_json(g) for g in kraus.operators]})


def chi_to_json(chi: np.ndarray) -> str:
    return json.dumps({"basis": "pauli-IXYZ-lexicographic", "chi": complex_matrix_to_json(chi)})
