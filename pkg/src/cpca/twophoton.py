"""Recovery of the non-orthogonal mode pair of a two-photon state.

Given the two principal modes ``(e1, e2)`` and mean photon numbers
``(N1, N2)`` from the correlation-matrix eigensystem, fourth-order
moments of the dual-homodyne samples fix the remaining freedom in the
state ``alpha |2,0> + beta |1,1> + gamma |0,2>`` and hence the 2x2 map
``D`` from ``(e1, e2)`` to the physical pair ``(f1, f2)``:

- ``m22 = <conj(b_e1)^2 b_e2^2> = 2 alpha gamma`` (scaled by ``(1-p)^2``
  under loss ``p``);
- when ``N1 = N2`` a second moment ``m211 = <conj(b_e1)^2 b_e1 b_e2>``
  resolves the leftover sign of ``beta``.

Loss rescales every ingredient consistently, so the recovered pair is
loss-invariant once the moment magnitude is normalized as
``Q = 4 q' / (N1 + N2)^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .engine import ModeDecomposition, accumulate_ct, eigendecompose, project
from .errors import (
    ContractViolationError,
    InconsistentMomentsError,
    ModeCountError,
    SingleModeStateError,
)
from .modes import TMF, canonical_phase, inner_product, normalize
from .simulate import FrameSet
from .states import ModalState, analytic_ct, analytic_fourth_moments

#: Branch labels.  "exact-11" marks the corner where both fourth moments
#: vanish: the state is |1_e1, 1_e2> and no phase is identifiable (or
#: needed), so the principal modes themselves are returned.
BRANCH_NONDEGENERATE = "nondegenerate"
BRANCH_DEGENERATE = "degenerate"
BRANCH_EXACT_PAIR = "exact-11"

#: Default relative degeneracy tolerance for measured (noisy) spectra and
#: for exact analytic ones.
MC_DEGENERACY_REL_TOL = 0.05
ANALYTIC_DEGENERACY_REL_TOL = 1e-6


@dataclass(frozen=True)
class FourthMoments:
    """Sample estimates of the two fourth-order moments with jackknife errors."""

    m22: complex
    m211: complex
    se_m22: float
    se_m211: float
    n_frames: int

    @property
    def imprecise(self) -> bool:
        """Flag (not abort) when the moment magnitude drowns in its error."""
        return abs(self.m22) < 3.0 * self.se_m22


@dataclass(frozen=True)
class TwoPhotonCoefficients:
    """State coefficients ``(alpha, beta, gamma)`` and how they were resolved."""

    alpha: complex
    beta: complex
    gamma: complex
    branch: str
    n1: float
    n2: float
    Q: float
    theta: float
    m211: complex
    beta_sign: int


@dataclass(frozen=True)
class TwoPhotonSolution:
    """Everything the two-photon pipeline produces for one input record."""

    n1: float
    n2: float
    m22: complex
    m211: complex
    q_prime: float
    theta: float
    Q: float
    alpha: complex
    beta: complex
    gamma: complex
    branch: str
    D: np.ndarray
    f1: TMF
    f2: TMF
    overlap: complex
    se: dict[str, float] = field(default_factory=dict)
    spectrum_head: tuple[float, ...] = ()


def _block_jackknife_se(values: np.ndarray, n_blocks: int = 20) -> float:
    """Leave-one-block-out jackknife standard error of the mean."""
    n = values.shape[0]
    n_blocks = max(2, min(n_blocks, n))
    edges = np.linspace(0, n, n_blocks + 1).astype(int)
    total = values.sum(axis=0)
    estimates = []
    for lo, hi in zip(edges, edges[1:]):
        block = values[lo:hi]
        estimates.append((total - block.sum(axis=0)) / (n - block.shape[0]))
    estimates = np.asarray(estimates)
    dev2 = np.abs(estimates - estimates.mean(axis=0)) ** 2
    return float(np.sqrt((n_blocks - 1) / n_blocks * dev2.sum()))


def estimate_fourth_moments(
    frames: FrameSet, e1: TMF, e2: TMF, n_blocks: int = 20
) -> FourthMoments:
    """Fourth-moment estimates from frame projections onto two orthogonal modes.

    ``m22 = mean(conj(b1)^2 * b2^2)`` and ``m211 = mean(conj(b1)^2 * b1 * b2)``;
    standard errors come from a leave-one-block-out jackknife over frames.
    """
    if abs(inner_product(e1, e2)) > 1e-6:
        raise ContractViolationError("probe modes must be orthogonal")
    b1 = project(frames, e1)
    b2 = project(frames, e2)
    v22 = np.conj(b1) ** 2 * b2**2
    v211 = np.conj(b1) ** 2 * b1 * b2
    return FourthMoments(
        m22=complex(v22.mean()),
        m211=complex(v211.mean()),
        se_m22=_block_jackknife_se(v22, n_blocks),
        se_m211=_block_jackknife_se(v211, n_blocks),
        n_frames=frames.n_frames,
    )


def loss_normalized_Q(q_prime: float, n1: float, n2: float) -> float:
    """Loss-invariant moment magnitude ``Q = 4 q' / (N1 + N2)^2``.

    For a two-photon state ``N1 + N2 = 2 (1 - p)``, which cancels the
    ``(1-p)^2`` scaling of the raw moment magnitude ``q'``.
    """
    if q_prime < 0:
        raise ContractViolationError(f"moment magnitude must be >= 0, got {q_prime}")
    total = n1 + n2
    if total <= 0:
        raise SingleModeStateError(f"total mean photon number {total!r} is not positive")
    return 4.0 * q_prime / total**2


def solve_coefficients(
    n1: float,
    n2: float,
    Q: float,
    theta: float,
    m211: complex,
    *,
    se_gap: float = 0.0,
    se_q: float = 0.0,
    se_m211: float = 0.0,
    degeneracy_rel_tol: float = MC_DEGENERACY_REL_TOL,
) -> TwoPhotonCoefficients:
    """Resolve ``(alpha, beta, gamma)`` from spectrum and moment data.

    Away from degeneracy (``|N1 - N2|`` above the tolerance) the principal
    basis forces ``beta = 0`` and only the loss-rescaled photon split
    matters.  At degeneracy the family is parameterized by ``Q``; the sign
    of ``beta`` comes from the phase of ``m211 ~ 2 alpha beta``.  When both
    fourth moments vanish the state is exactly ``|1,1>`` (branch
    ``exact-11``) and all phases are irrelevant.
    """
    if n2 <= 0:
        raise SingleModeStateError(
            f"second mean photon number {n2!r} is not positive; "
            "the record does not contain a two-mode two-photon state"
        )
    if n1 < n2:
        raise ContractViolationError("mode ordering violated: need N1 >= N2")
    if Q > 1.0 + max(1e-6, 3.0 * se_q):
        raise InconsistentMomentsError(
            f"normalized moment Q = {Q:.6g} exceeds the physical bound 1"
        )
    Qc = float(min(max(Q, 0.0), 1.0))
    gap = n1 - n2
    if gap > max(degeneracy_rel_tol * (n1 + n2), 3.0 * se_gap):
        total = n1 + n2
        alpha = complex(np.sqrt(n1 / total))
        gamma = np.sqrt(n2 / total) * np.exp(1j * theta)
        return TwoPhotonCoefficients(
            alpha, 0j, complex(gamma), BRANCH_NONDEGENERATE, n1, n2, Qc, theta, m211, +1
        )
    q_floor = max(3.0 * se_q, 1e-9)
    m211_floor = max(3.0 * se_m211, 1e-9)
    if Qc < q_floor and abs(m211) < m211_floor:
        return TwoPhotonCoefficients(
            0j, 1.0 + 0j, 0j, BRANCH_EXACT_PAIR, n1, n2, Qc, theta, m211, +1
        )
    sign = +1
    mag = float(np.sqrt(max(0.0, 1.0 - Qc)))
    if mag > 0 and abs(m211) > 3.0 * se_m211:
        predicted = 1j * np.exp(1j * theta / 2.0)  # phase of beta for sign +1
        if abs(np.angle(m211 / predicted)) > np.pi / 2:
            sign = -1
    alpha = complex(np.sqrt(Qc / 2.0))
    beta = sign * 1j * mag * np.exp(1j * theta / 2.0)
    gamma = np.sqrt(Qc / 2.0) * np.exp(1j * theta)
    return TwoPhotonCoefficients(
        alpha, complex(beta), complex(gamma), BRANCH_DEGENERATE, n1, n2, Qc, theta, m211, sign
    )


def build_D(coeffs: TwoPhotonCoefficients) -> np.ndarray:
    """Assemble the 2x2 mode map for the resolved branch, rows unit-normalized.

    Row normalization makes ``f1, f2`` unit-norm mode functions; only the
    directions matter since the two-photon state's prefactor absorbs scale.
    """
    half = np.exp(1j * coeffs.theta / 2.0)
    if coeffs.branch == BRANCH_NONDEGENERATE:
        r1 = coeffs.n1**0.25
        r2 = coeffs.n2**0.25
        d = np.array(
            [
                [r1, 1j * r2 * half],
                [r1, -1j * r2 * half],
            ],
            dtype=np.complex128,
        )
    elif coeffs.branch == BRANCH_DEGENERATE:
        u = np.sqrt(max(0.0, 1.0 - coeffs.Q))
        s = coeffs.beta_sign
        d = np.array(
            [
                [np.sqrt(1.0 + u), -s * 1j * np.sqrt(1.0 - u) * half],
                [np.sqrt(1.0 - u), s * 1j * np.sqrt(1.0 + u) * half],
            ],
            dtype=np.complex128,
        )
    elif coeffs.branch == BRANCH_EXACT_PAIR:
        d = np.eye(2, dtype=np.complex128)
    else:
        raise ContractViolationError(f"unknown branch {coeffs.branch!r}")
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def recover_tmfs(D: np.ndarray, e1: TMF, e2: TMF) -> tuple[TMF, TMF, complex]:
    """Map the principal modes through ``D``: ``(f1, f2)^T = D (e1, e2)^T``.

    Outputs are normalized and phase-canonicalized; also returns their
    inner product.
    """
    if abs(inner_product(e1, e2)) > 1e-6:
        raise ContractViolationError("principal modes must be orthogonal")
    f1 = canonical_phase(normalize(TMF(e1.grid, D[0, 0] * e1.amp + D[0, 1] * e2.amp)))
    f2 = canonical_phase(normalize(TMF(e1.grid, D[1, 0] * e1.amp + D[1, 1] * e2.amp)))
    return f1, f2, inner_product(f1, f2)


def default_nbar_threshold(m_bins: int, n_frames: int) -> float:
    """Occupation threshold separating signal modes from sampling noise.

    Empirical top vacuum eigenvalues of the estimated matrix exceed 1 by
    about ``2 sqrt(M/N)``, so the cut is placed at twice that, floored.
    """
    if n_frames <= 0:
        return 1e-6
    return max(0.15, 4.0 * np.sqrt(m_bins / n_frames))


def _solve_from_decomposition(
    dec: ModeDecomposition,
    moments: FourthMoments,
    nbar_threshold: float,
    degeneracy_rel_tol: float,
    se_gap: float,
    se_ntot: float,
) -> TwoPhotonSolution:
    occupied = dec.occupied(nbar_threshold)
    if len(occupied) != 2 or occupied[:2] != [0, 1]:
        head = ", ".join(f"{v:.4g}" for v in dec.nbars[:8])
        raise ModeCountError(
            f"expected exactly 2 modes above vacuum (threshold {nbar_threshold:.3g}), "
            f"found {len(occupied)}; leading mean photon numbers: [{head}]"
        )
    e1, e2 = dec.eigenmodes[0], dec.eigenmodes[1]
    n1, n2 = float(dec.nbars[0]), float(dec.nbars[1])
    q_prime = abs(moments.m22)
    theta = float(np.angle(moments.m22))
    Q = loss_normalized_Q(q_prime, n1, n2)
    total = n1 + n2
    se_q = 4.0 / total**2 * moments.se_m22 + 8.0 * q_prime / total**3 * se_ntot
    coeffs = solve_coefficients(
        n1,
        n2,
        Q,
        theta,
        moments.m211,
        se_gap=se_gap,
        se_q=se_q,
        se_m211=moments.se_m211,
        degeneracy_rel_tol=degeneracy_rel_tol,
    )
    D = build_D(coeffs)
    f1, f2, overlap = recover_tmfs(D, e1, e2)
    return TwoPhotonSolution(
        n1=n1,
        n2=n2,
        m22=moments.m22,
        m211=moments.m211,
        q_prime=q_prime,
        theta=theta,
        Q=coeffs.Q,
        alpha=coeffs.alpha,
        beta=coeffs.beta,
        gamma=coeffs.gamma,
        branch=coeffs.branch,
        D=D,
        f1=f1,
        f2=f2,
        overlap=overlap,
        se={
            "m22": moments.se_m22,
            "m211": moments.se_m211,
            "nbar_gap": se_gap,
            "Q": se_q,
        },
        spectrum_head=tuple(float(v) for v in dec.nbars[: min(8, dec.nbars.size)]),
    )


def decompose_two_photon_frames(
    frames: FrameSet,
    *,
    nbar_threshold: float | None = None,
    degeneracy_rel_tol: float = MC_DEGENERACY_REL_TOL,
    n_blocks: int = 20,
) -> TwoPhotonSolution:
    """Full Monte-Carlo pipeline: frames -> spectrum -> moments -> ``(f1, f2)``."""
    dec = eigendecompose(accumulate_ct(frames))
    if nbar_threshold is None:
        nbar_threshold = default_nbar_threshold(frames.grid.M, frames.n_frames)
    e1, e2 = dec.eigenmodes[0], dec.eigenmodes[1]
    moments = estimate_fourth_moments(frames, e1, e2, n_blocks)
    m1 = np.abs(project(frames, e1)) ** 2
    m2 = np.abs(project(frames, e2)) ** 2
    se1 = float(m1.std() / np.sqrt(m1.size))
    se2 = float(m2.std() / np.sqrt(m2.size))
    return _solve_from_decomposition(
        dec,
        moments,
        nbar_threshold,
        degeneracy_rel_tol,
        se_gap=float(np.hypot(se1, se2)),
        se_ntot=float(np.hypot(se1, se2)),
    )


def decompose_two_photon_analytic(
    state: ModalState,
    grid=None,
    *,
    degeneracy_rel_tol: float = ANALYTIC_DEGENERACY_REL_TOL,
) -> TwoPhotonSolution:
    """Exact pipeline on a modal state, bypassing sampling entirely.

    The eigensystem comes from the analytic correlation matrix and the
    moments from operator expectations; standard errors are zero, so the
    degeneracy decision uses the (tight) analytic tolerance.
    """
    grid = grid or state.grid
    dec = eigendecompose(analytic_ct(state, grid))
    e1, e2 = dec.eigenmodes[0], dec.eigenmodes[1]
    m22, m211 = analytic_fourth_moments(state, e1, e2)
    moments = FourthMoments(m22=m22, m211=m211, se_m22=0.0, se_m211=0.0, n_frames=0)
    return _solve_from_decomposition(
        dec,
        moments,
        nbar_threshold=1e-6,
        degeneracy_rel_tol=degeneracy_rel_tol,
        se_gap=0.0,
        se_ntot=0.0,
    )
