"""Superoperator algebra on vectorized density matrices.

Density matrices are vectorized row-major, so a map rho -> A rho B has
matrix kron(A, B.T).  All maps returned by the drive builders are checked
to be completely positive and trace preserving (CPTP).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IntegrityError

TRACE_TOL = 1e-9
CHOI_TOL = -1e-9


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1)


def unvec(v: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape(d, d)


def conj_superop(u: np.ndarray) -> np.ndarray:
    """Superoperator of the unitary conjugation rho -> u rho u^dagger."""
    return np.kron(u, u.conj())


@dataclass(frozen=True)
class Superoperator:
    """A linear map on d x d density matrices, stored as a d^2 x d^2 matrix."""

    mat: np.ndarray
    dim: int = field(default=0)

    def __post_init__(self):
        mat = np.ascontiguousarray(self.mat, dtype=complex)
        d = int(round(np.sqrt(mat.shape[0])))
        if mat.shape != (d * d, d * d):
            raise ValueError(f"superoperator matrix has bad shape {mat.shape}")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "dim", d)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.mat @ vec(rho))

    def compose(self, other: "Superoperator") -> "Superoperator":
        """self after other: (self . other)(rho) = self(other(rho))."""
        return Superoperator(self.mat @ other.mat)

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return self.compose(other)

    def power(self, n: int) -> "Superoperator":
        """n-fold composition by repeated squaring."""
        if n < 0:
            raise ValueError("power requires n >= 0")
        result = np.eye(self.dim**2, dtype=complex)
        base = np.array(self.mat)
        while n:
            if n & 1:
                result = base @ result
            base = base @ base
            n >>= 1
        return Superoperator(result)

    def choi(self) -> np.ndarray:
        """Choi matrix (unnormalized, trace d for a TP map)."""
        d = self.dim
        return self.mat.reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)

    def trace_defect(self) -> float:
        """Max deviation of Tr S(rho) from Tr rho over a basis of inputs."""
        d = self.dim
        # partial trace of the Choi over the output index must be identity
        ptr = np.trace(self.choi().reshape(d, d, d, d), axis1=1, axis2=3)
        return float(np.max(np.abs(ptr - np.eye(d))))

    def choi_min_eig(self) -> float:
        c = self.choi()
        return float(np.linalg.eigvalsh(0.5 * (c + c.conj().T)).min())

    def check_cptp(self, trace_tol: float = TRACE_TOL, choi_tol: float = CHOI_TOL) -> None:
        defect = self.trace_defect()
        if defect > trace_tol:
            raise IntegrityError(f"trace preservation violated by {defect:.3e}")
        wmin = self.choi_min_eig()
        if wmin < choi_tol:
            raise IntegrityError(f"complete positivity violated: Choi min eig {wmin:.3e}")

    @classmethod
    def identity(cls, dim: int) -> "Superoperator":
        return cls(np.eye(dim * dim, dtype=complex))

    @classmethod
    def from_unitary(cls, u: np.ndarray) -> "Superoperator":
        return cls(conj_superop(np.asarray(u, dtype=complex)))


def superop_from_choi(choi: np.ndarray) -> Superoperator:
    d = int(round(np.sqrt(choi.shape[0])))
    mat = choi.reshape(d, d, d, d).transpose(1, 3, 0, 2).reshape(d * d, d * d)
    return Superoperator(mat)


def random_density_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish random full-rank density matrix (Wishart construction)."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho)
