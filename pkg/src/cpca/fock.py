"""Truncated Fock-basis machinery: pure states, density matrices, loss channel.

One- and two-mode objects only.  Two-mode arrays use mode-major ordering:
the flat index of ``|m, n>`` is ``m * dim2 + n``, matching ``np.kron`` of
single-mode operators with the first mode as the left factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .errors import ContractViolationError

TRACE_TOL = 1e-10
PSD_FLOOR = -1e-9


def destroy(dim: int) -> np.ndarray:
    """Annihilation operator on a ``dim``-dimensional truncated space."""
    return np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(np.complex128)


def mode_operator(op: np.ndarray, index: int, dims: tuple[int, ...]) -> np.ndarray:
    """Embed a single-mode operator at position ``index`` of a tensor product."""
    out = np.array([[1.0 + 0j]])
    for k, d in enumerate(dims):
        out = np.kron(out, op if k == index else np.eye(d, dtype=np.complex128))
    return out


def loss_kraus(dim: int, p: float) -> list[np.ndarray]:
    """Kraus operators of the beam-splitter loss channel.

    Each photon survives with probability ``1 - p``; ``K_l`` transfers
    ``l`` photons into the environment.
    """
    eta = 1.0 - p
    ops = []
    for loss in range(dim):
        K = np.zeros((dim, dim), dtype=np.complex128)
        for n in range(loss, dim):
            K[n - loss, n] = np.sqrt(comb(n, loss, exact=True) * eta ** (n - loss) * p**loss)
        ops.append(K)
    return ops


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix in the Fock basis.

    ``dims`` gives the per-mode truncated dimensions (length 1 or 2).
    """

    mat: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        mat = np.array(self.mat, dtype=np.complex128)
        dims = tuple(int(d) for d in self.dims)
        D = int(np.prod(dims))
        if len(dims) not in (1, 2):
            raise ContractViolationError("only 1- or 2-mode density matrices are supported")
        if mat.shape != (D, D):
            raise ContractViolationError(f"matrix shape {mat.shape} does not match dims {dims}")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-9:
            raise ContractViolationError("density matrix is not Hermitian")
        tr = float(np.trace(mat).real)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ContractViolationError(f"density matrix trace {tr!r} differs from 1")
        evals = np.linalg.eigvalsh((mat + mat.conj().T) / 2.0)
        if float(evals.min()) < PSD_FLOOR:
            raise ContractViolationError(
                f"density matrix is not positive semidefinite (min eigenvalue {evals.min():.3e})"
            )
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_pure(cls, vec: np.ndarray, dims: tuple[int, ...]) -> "DensityMatrix":
        vec = np.asarray(vec, dtype=np.complex128).reshape(-1)
        vec = vec / np.linalg.norm(vec)
        return cls(np.outer(vec, vec.conj()), dims)

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    def eigen_mixture(self, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
        """Decompose into pure states: weights ``w_k`` and column vectors ``V[:, k]``.

        Tiny negative weights from numerical noise are dropped and the
        remainder renormalized to sum to one.
        """
        w, V = np.linalg.eigh(self.mat)
        keep = w > tol
        w, V = w[keep], V[:, keep]
        order = np.argsort(w)[::-1]
        w, V = w[order], V[:, order]
        return w / w.sum(), V

    def apply_loss(self, p: float) -> "DensityMatrix":
        """Apply the loss channel with probability ``p`` to every mode."""
        if not (0.0 <= p < 1.0):
            raise ContractViolationError(f"loss probability must lie in [0, 1), got {p}")
        if p == 0.0:
            return self
        mat = self.mat
        for idx, d in enumerate(self.dims):
            out = np.zeros_like(mat)
            for K in loss_kraus(d, p):
                Kfull = mode_operator(K, idx, self.dims)
                out += Kfull @ mat @ Kfull.conj().T
            mat = out
        mat = (mat + mat.conj().T) / 2.0
        return DensityMatrix(mat / np.trace(mat).real, self.dims)

    def mean_photons(self) -> np.ndarray:
        """Per-mode mean photon numbers."""
        out = []
        for idx, d in enumerate(self.dims):
            num = mode_operator(np.diag(np.arange(d)).astype(np.complex128), idx, self.dims)
            out.append(float(np.trace(self.mat @ num).real))
        return np.array(out)


@dataclass(frozen=True)
class FockState1:
    """Single-mode pure state ``|psi> = sum_n coeffs[n] |n>``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128).reshape(-1)
        if c.size < 1:
            raise ContractViolationError("need at least the vacuum coefficient")
        nrm2 = float(np.sum(np.abs(c) ** 2))
        if abs(nrm2 - 1.0) > TRACE_TOL:
            raise ContractViolationError(f"state norm^2 = {nrm2!r} differs from 1")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def cutoff(self) -> int:
        return self.coeffs.size - 1

    def photon_probs(self) -> np.ndarray:
        return np.abs(self.coeffs) ** 2

    def mean_photon(self) -> float:
        return float(np.sum(np.arange(self.coeffs.size) * self.photon_probs()))

    def to_density(self) -> DensityMatrix:
        return DensityMatrix.from_pure(self.coeffs, (self.coeffs.size,))


@dataclass(frozen=True)
class FockState2:
    """Two-mode pure state ``|psi> = sum_{mn} coeffs[m, n] |m, n>``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.ndim != 2:
            raise ContractViolationError("two-mode coefficients must be a matrix")
        nrm2 = float(np.sum(np.abs(c) ** 2))
        if abs(nrm2 - 1.0) > TRACE_TOL:
            raise ContractViolationError(f"state norm^2 = {nrm2!r} differs from 1")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def cutoffs(self) -> tuple[int, int]:
        return self.coeffs.shape[0] - 1, self.coeffs.shape[1] - 1

    def photon_probs(self) -> np.ndarray:
        return np.abs(self.coeffs) ** 2

    def mean_photons(self) -> tuple[float, float]:
        p = self.photon_probs()
        m = np.arange(p.shape[0])
        n = np.arange(p.shape[1])
        return float(np.sum(p.sum(axis=1) * m)), float(np.sum(p.sum(axis=0) * n))

    def to_density(self) -> DensityMatrix:
        return DensityMatrix.from_pure(self.coeffs.reshape(-1), self.coeffs.shape)
