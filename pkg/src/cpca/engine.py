"""Correlation-matrix estimation and principal temporal-mode extraction.

The central object is the Hermitian matrix ``C[j, k] = <conj(beta_j) beta_k>``
accumulated over measurement frames.  Its eigenvalues are mean photon
numbers plus one, and its eigenvectors (conjugated) are the principal
complex mode functions.  A real-PCA baseline over the X quadrature alone
is included for comparison; it can only produce real mode functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import ContractViolationError, DataFormatError
from .modes import TMF, TimeGrid, canonical_phase

if TYPE_CHECKING:  # pragma: no cover
    from .simulate import FrameSet

#: Accumulation chunk size (frames); fixed so results never depend on
#: worker count or total frame count partitioning.
ACCUMULATE_CHUNK = 1024

HERMITICITY_TOL = 1e-8
#: Relative spread below which eigenvalues are treated as one degenerate group.
DEGENERACY_REL_TOL = 1e-6


@dataclass(frozen=True)
class CorrelationMatrix:
    """Hermitian ``M x M`` matrix of second moments on a time grid.

    ``n_frames`` records how many frames entered the estimate; 0 marks an
    analytically computed matrix.
    """

    grid: TimeGrid
    matrix: np.ndarray
    n_frames: int = 0

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=np.complex128)
        if mat.shape != (self.grid.M, self.grid.M):
            raise ContractViolationError(
                f"matrix shape {mat.shape} does not match grid M={self.grid.M}"
            )
        mat = (mat + mat.conj().T) / 2.0
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)


@dataclass(frozen=True)
class ModeDecomposition:
    """Sorted eigensystem of a correlation matrix.

    ``eigenmodes[k]`` is the k-th principal mode function (phase
    canonicalized), ``eigenvalues[k]`` its second moment and
    ``nbars[k] = eigenvalues[k] - 1`` the mean photon number estimate.
    ``nbars`` may dip below zero for filtered or noisy data and is
    reported as-is.
    """

    eigenmodes: tuple[TMF, ...]
    eigenvalues: np.ndarray
    nbars: np.ndarray
    unitarity_residual: float

    @property
    def grid(self) -> TimeGrid:
        return self.eigenmodes[0].grid

    def occupied(self, nbar_threshold: float) -> list[int]:
        """Indices of modes whose mean photon number exceeds the threshold."""
        return [k for k, n in enumerate(self.nbars) if n > nbar_threshold]


@dataclass(frozen=True)
class RealPcaDecomposition:
    """Eigensystem of the symmetric X-quadrature second-moment matrix.

    For dual-homodyne input the X-moment matrix relates to the signal's
    single-homodyne moment matrix as ``V_dual = (V_signal + I/2) / 2``,
    so both share eigenvectors and the ordering of variances.
    """

    modes: tuple[TMF, ...]
    variances: np.ndarray


def accumulate_ct(frames: "FrameSet") -> CorrelationMatrix:
    """Estimate ``C[j, k] = mean(conj(beta_j) * beta_k)`` over all frames.

    Accumulates in fixed-size chunks combined in index order, so the
    result is bit-identical however the generation work was distributed,
    and matches a single-shot batch product to float accuracy.
    """
    data = frames.data
    n = data.shape[0]
    if n < 2:
        raise DataFormatError(f"need at least 2 frames to estimate correlations, got {n}")
    acc = np.zeros((data.shape[1], data.shape[1]), dtype=np.complex128)
    for start in range(0, n, ACCUMULATE_CHUNK):
        chunk = data[start : start + ACCUMULATE_CHUNK]
        acc += chunk.conj().T @ chunk
    return CorrelationMatrix(frames.grid, acc / n, n_frames=n)


def eigendecompose(corr: CorrelationMatrix) -> ModeDecomposition:
    """Diagonalize a correlation matrix into principal temporal modes.

    Eigenvalues are sorted descending; each eigenmode is returned with its
    global phase canonicalized.  The conjugate of a column eigenvector of
    ``C`` is the mode-function amplitude vector (so that the quadratic
    form ``sum conj(e[j]) beta[j]`` reproduces the eigenvalue).
    """
    mat = corr.matrix
    herm_defect = float(np.max(np.abs(mat - mat.conj().T)))
    if herm_defect > HERMITICITY_TOL:
        raise ContractViolationError(
            f"matrix is not Hermitian within tolerance ({herm_defect:.3e})"
        )
    evals, evecs = np.linalg.eigh(mat)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    modes = tuple(
        canonical_phase(TMF(corr.grid, np.conj(evecs[:, k]))) for k in range(evals.size)
    )
    E = np.array([m.amp for m in modes])
    residual = float(np.max(np.abs(E @ E.conj().T - np.eye(evals.size))))
    return ModeDecomposition(
        eigenmodes=modes,
        eigenvalues=evals.astype(float),
        nbars=(evals - 1.0).astype(float),
        unitarity_residual=residual,
    )


def real_pca(frames: "FrameSet") -> RealPcaDecomposition:
    """Principal component analysis of the X quadrature alone.

    Builds the symmetric second-moment matrix of ``Re(beta)`` and
    diagonalizes it with an orthogonal matrix; mode functions are real.
    """
    data = frames.data
    n = data.shape[0]
    if n < 2:
        raise DataFormatError(f"need at least 2 frames to estimate correlations, got {n}")
    x = data.real
    v = np.zeros((x.shape[1], x.shape[1]))
    for start in range(0, n, ACCUMULATE_CHUNK):
        chunk = x[start : start + ACCUMULATE_CHUNK]
        v += chunk.T @ chunk
    v = (v + v.T) / (2.0 * n)
    evals, evecs = np.linalg.eigh(v)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    evecs = evecs[:, order]
    modes = tuple(
        canonical_phase(TMF(frames.grid, evecs[:, k].astype(np.complex128)))
        for k in range(evals.size)
    )
    return RealPcaDecomposition(modes=modes, variances=evals.astype(float))


def project(frames: "FrameSet", f: TMF) -> np.ndarray:
    """Per-frame mode amplitude ``beta_f = sum_j conj(f[t_j]) beta_j``.

    Conjugate-linear in ``f``; length equals the frame count.
    """
    frames.grid.require_compatible(f.grid)
    return frames.data @ np.conj(f.amp)


def degenerate_groups(eigenvalues: np.ndarray, rel_tol: float = DEGENERACY_REL_TOL) -> list[list[int]]:
    """Group sorted eigenvalues that agree within a relative tolerance.

    Within a group any orthonormal eigenbasis is equally valid, so
    consumers must not rely on a particular basis choice there.
    """
    groups: list[list[int]] = []
    for k, lam in enumerate(eigenvalues):
        if groups:
            ref = eigenvalues[groups[-1][0]]
            scale = max(abs(ref), abs(lam), 1e-30)
            if abs(lam - ref) <= rel_tol * scale:
                groups[-1].append(k)
                continue
        groups.append([k])
    return groups
