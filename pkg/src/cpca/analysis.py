"""Diagnostics in extracted modes: photon statistics and Wigner grids.

Dual-homodyne sample moments are anti-normally ordered,
``E[|beta|^(2k)] = <a^k a^dag^k> = sum_n p_n (n+k)!/n!``, so photon-number
distributions are recovered by inverting that linear system under
positivity and normalization constraints.  The inversion is
ill-conditioned; cutoffs are capped (5 single-mode, 4 joint) and standard
errors are propagated by block jackknife rather than pretending the point
estimate is exact.

Wigner grids use the Fock-basis Laguerre kernel with the convention
``integral W dx dp = 1`` and vacuum peak ``1/pi``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls
from scipy.special import comb, eval_genlaguerre

from .errors import ContractViolationError
from .fock import DensityMatrix, FockState1

WIGNER_CONVENTION = "integral dx dp = 1; vacuum peak 1/pi; x = (a + a^dag)/sqrt(2)"

MAX_SINGLE_CUTOFF = 5
MAX_JOINT_CUTOFF = 4
#: Weight of the normalization row in the constrained least-squares fit.
_NORM_WEIGHT = 1e4


class WindowWarning(UserWarning):
    """A phase-space window clips a non-negligible part of the state."""


@dataclass(frozen=True)
class PhotonDistribution:
    """Fitted photon-number probabilities with uncertainty and fit residual.

    ``probs`` is 1-D for a single mode or 2-D (``p[m, n]``) for a joint
    distribution.  ``residual`` is the worst absolute mismatch of the
    refitted moments; ``flags`` carries quality markers such as
    ``ill-conditioned-estimate``.
    """

    probs: np.ndarray
    se: np.ndarray | None
    cutoff: int
    residual: float
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)


@dataclass(frozen=True)
class WignerGrid:
    """Wigner function samples on a rectangular (x, p) window."""

    x: np.ndarray
    p: np.ndarray
    values: np.ndarray
    integral: float
    convention: str = WIGNER_CONVENTION
    flags: tuple[str, ...] = ()


def antinormal_moments(samples: np.ndarray, max_order: int) -> np.ndarray:
    """Radial sample moments ``A_k = mean(|beta|^(2k))`` for ``k = 0..max_order``.

    ``A_k`` estimates ``<a^k a^dag^k>``; ``A_1`` is the mean photon number
    plus one.
    """
    samples = np.asarray(samples).reshape(-1)
    if max_order > 6:
        raise ContractViolationError(f"moment order capped at 6, got {max_order}")
    if samples.size < 100:
        raise ContractViolationError(f"need at least 100 samples, got {samples.size}")
    r2 = np.abs(samples) ** 2
    return np.array([np.mean(r2**k) for k in range(max_order + 1)])


def _moment_matrix(max_order: int, cutoff: int) -> np.ndarray:
    """Rows ``A_k / k!``, columns ``p_n``: entries ``binom(n+k, k)``."""
    k = np.arange(max_order + 1)[:, None]
    n = np.arange(cutoff + 1)[None, :]
    return comb(n + k, k)


def _constrained_fit(design: np.ndarray, rhs: np.ndarray) -> tuple[np.ndarray, float]:
    aug = np.vstack([design, _NORM_WEIGHT * np.ones(design.shape[1])])
    b = np.append(rhs, _NORM_WEIGHT)
    p, _ = nnls(aug, b)
    total = p.sum()
    if total <= 0:
        raise ContractViolationError("constrained fit collapsed to zero probability")
    p = p / total
    residual = float(np.max(np.abs(design @ p - rhs)))
    return p, residual


def photon_distribution(
    moments: np.ndarray,
    cutoff: int,
    se_moments: np.ndarray | None = None,
) -> PhotonDistribution:
    """Invert anti-normal moments into photon probabilities ``p_0..p_cutoff``.

    Constrained least squares with ``p_n >= 0`` and ``sum p_n = 1`` (the
    normalization is the ``k = 0`` moment, re-imposed exactly).  A residual
    well above the moment uncertainty flags an ill-conditioned estimate.
    """
    moments = np.asarray(moments, dtype=float).reshape(-1)
    max_order = moments.size - 1
    if cutoff > max_order:
        raise ContractViolationError(
            f"cutoff {cutoff} needs at least {cutoff + 1} moments, got {moments.size}"
        )
    if cutoff > MAX_SINGLE_CUTOFF:
        raise ContractViolationError(
            f"single-mode cutoff capped at {MAX_SINGLE_CUTOFF} (ill-conditioned beyond)"
        )
    fact = np.array([math.factorial(k) for k in range(max_order + 1)], dtype=float)
    design = _moment_matrix(max_order, cutoff)
    p, residual = _constrained_fit(design, moments / fact)
    tol = 1e-6
    if se_moments is not None:
        tol = max(tol, 3.0 * float(np.max(np.asarray(se_moments) / fact)))
    flags = ("ill-conditioned-estimate",) if residual > tol else ()
    return PhotonDistribution(p, None, cutoff, residual, flags)


def photon_distribution_from_samples(
    samples: np.ndarray,
    cutoff: int,
    max_order: int | None = None,
    n_blocks: int = 20,
) -> PhotonDistribution:
    """Photon distribution of one mode from its dual-homodyne samples.

    Standard errors of the probabilities come from refitting on
    leave-one-block-out jackknife replicates.
    """
    if max_order is None:
        max_order = min(MAX_SINGLE_CUTOFF, cutoff + 1)
    moments = antinormal_moments(samples, max_order)
    base = photon_distribution(moments, cutoff)
    se = _jackknife_distribution_se(
        np.abs(np.asarray(samples).reshape(-1)) ** 2,
        lambda r2: _refit_single(r2, max_order, cutoff),
        base.probs,
        n_blocks,
    )
    return PhotonDistribution(base.probs, se, cutoff, base.residual, base.flags)


def _refit_single(r2: np.ndarray, max_order: int, cutoff: int) -> np.ndarray:
    moments = np.array([np.mean(r2**k) for k in range(max_order + 1)])
    fact = np.array([math.factorial(k) for k in range(max_order + 1)], dtype=float)
    p, _ = _constrained_fit(_moment_matrix(max_order, cutoff), moments / fact)
    return p


def _jackknife_distribution_se(data, refit, full_estimate, n_blocks):
    n = data.shape[0]
    n_blocks = max(2, min(n_blocks, n))
    edges = np.linspace(0, n, n_blocks + 1).astype(int)
    replicates = []
    for lo, hi in zip(edges, edges[1:]):
        mask = np.ones(n, dtype=bool)
        mask[lo:hi] = False
        replicates.append(refit(data[mask]))
    replicates = np.asarray(replicates)
    dev2 = (replicates - replicates.mean(axis=0)) ** 2
    return np.sqrt((n_blocks - 1) / n_blocks * dev2.sum(axis=0))


def joint_photon_distribution(
    samples1: np.ndarray,
    samples2: np.ndarray,
    cutoff: int,
    max_order: int | None = None,
    n_blocks: int = 20,
) -> tuple[PhotonDistribution, float]:
    """Joint photon distribution of two modes plus their Pearson correlation.

    Fits ``E[|b1|^(2j) |b2|^(2k)] = sum_mn p_mn (m+j)!/m! (n+k)!/n!`` by
    constrained least squares; the correlation coefficient of the photon
    numbers is computed from the fitted ``p_mn``.  Deterministic photon
    numbers have no variance; that case reports ``r = 0`` with a
    ``zero-variance`` flag.
    """
    s1 = np.asarray(samples1).reshape(-1)
    s2 = np.asarray(samples2).reshape(-1)
    if s1.size != s2.size:
        raise ContractViolationError("need equally many samples of both modes")
    if cutoff > MAX_JOINT_CUTOFF:
        raise ContractViolationError(
            f"joint cutoff capped at {MAX_JOINT_CUTOFF} (ill-conditioned beyond)"
        )
    if max_order is None:
        max_order = min(MAX_JOINT_CUTOFF, cutoff)
    r1 = np.abs(s1) ** 2
    r2 = np.abs(s2) ** 2
    p, residual = _fit_joint(r1, r2, max_order, cutoff)
    pearson, var_flags = _pearson_from_joint(p)
    flags = tuple(var_flags)
    if residual > 1e-6:
        flags = flags + ("ill-conditioned-estimate",) if residual > 0.05 else flags
    se = _jackknife_distribution_se(
        np.column_stack([r1, r2]),
        lambda rr: _fit_joint(rr[:, 0], rr[:, 1], max_order, cutoff)[0].reshape(-1),
        p.reshape(-1),
        n_blocks,
    ).reshape(p.shape)
    dist = PhotonDistribution(p, se, cutoff, residual, flags)
    return dist, pearson


def joint_photon_distribution_from_moments(
    joint_moments: np.ndarray, cutoff: int
) -> tuple[PhotonDistribution, float]:
    """Joint distribution from a matrix of anti-normal moments.

    ``joint_moments[j, k] = <a1^j a1^dag^j a2^k a2^dag^k>``; exact moments
    of a deterministic photon pair give back that pair with zero photon
    variance, reported as ``r = 0`` with a ``zero-variance`` flag.
    """
    joint_moments = np.asarray(joint_moments, dtype=float)
    if cutoff > MAX_JOINT_CUTOFF:
        raise ContractViolationError(
            f"joint cutoff capped at {MAX_JOINT_CUTOFF} (ill-conditioned beyond)"
        )
    max_order = joint_moments.shape[0] - 1
    p, residual = _fit_joint_moments(joint_moments, max_order, cutoff)
    pearson, var_flags = _pearson_from_joint(p)
    flags = tuple(var_flags) + (("ill-conditioned-estimate",) if residual > 0.05 else ())
    return PhotonDistribution(p, None, cutoff, residual, flags), pearson


def _joint_moment_matrix_from_samples(r1, r2, max_order):
    return np.array(
        [[np.mean(r1**j * r2**k) for k in range(max_order + 1)] for j in range(max_order + 1)]
    )


def _fit_joint(r1, r2, max_order, cutoff):
    return _fit_joint_moments(
        _joint_moment_matrix_from_samples(r1, r2, max_order), max_order, cutoff
    )


def _fit_joint_moments(joint_moments, max_order, cutoff):
    fact = np.array(
        [
            math.factorial(j) * math.factorial(k)
            for j in range(max_order + 1)
            for k in range(max_order + 1)
        ],
        dtype=float,
    )
    single = _moment_matrix(max_order, cutoff)
    design = np.kron(single, single)
    p, residual = _constrained_fit(design, joint_moments.reshape(-1) / fact)
    return p.reshape(cutoff + 1, cutoff + 1), residual


def _pearson_from_joint(p: np.ndarray) -> tuple[float, list[str]]:
    m = np.arange(p.shape[0])
    n = np.arange(p.shape[1])
    pm = p.sum(axis=1)
    pn = p.sum(axis=0)
    mean1 = float(pm @ m)
    mean2 = float(pn @ n)
    var1 = float(pm @ (m - mean1) ** 2)
    var2 = float(pn @ (n - mean2) ** 2)
    if var1 < 1e-12 or var2 < 1e-12:
        return 0.0, ["zero-variance"]
    cov = float(np.einsum("mn,m,n->", p, m - mean1, n - mean2))
    return cov / np.sqrt(var1 * var2), []


def _displacement_element(n: int, m: int, beta: np.ndarray) -> np.ndarray:
    """Matrix element ``<n| D(beta) |m>`` of the displacement operator."""
    b2 = np.abs(beta) ** 2
    if n >= m:
        pref = np.sqrt(math.factorial(m) / math.factorial(n))
        return pref * beta ** (n - m) * np.exp(-b2 / 2.0) * eval_genlaguerre(m, n - m, b2)
    pref = np.sqrt(math.factorial(n) / math.factorial(m))
    return pref * (-np.conj(beta)) ** (m - n) * np.exp(-b2 / 2.0) * eval_genlaguerre(n, m - n, b2)


def wigner_grid(
    state: FockState1 | DensityMatrix,
    window: float = 6.0,
    resolution: int = 101,
) -> WignerGrid:
    """Wigner function of a single-mode state on a square (x, p) window.

    Evaluates the Fock-basis expansion through the displaced-parity
    kernel (Laguerre polynomials).  Warns when more than 2% of the
    integral is missing from the window.
    """
    rho = state.to_density() if isinstance(state, FockState1) else state
    if rho.n_modes != 1:
        raise ContractViolationError("Wigner grids are single-mode only")
    if rho.dims[0] - 1 > 30:
        raise ContractViolationError("cutoff capped at 30 for Wigner evaluation")
    x = np.linspace(-window, window, resolution)
    p = np.linspace(-window, window, resolution)
    xs, ps = np.meshgrid(x, p)
    beta = np.sqrt(2.0) * (xs + 1j * ps)  # D(2 alpha) with alpha = (x+ip)/sqrt(2)
    d = rho.dims[0]
    mat = rho.mat
    values = np.zeros_like(xs)
    parity = (-1.0) ** np.arange(d)
    for m in range(d):
        for n in range(d):
            if abs(mat[m, n]) < 1e-15:
                continue
            values += (mat[m, n] * parity[m] * _displacement_element(n, m, beta)).real
    values *= 1.0 / np.pi  # (2/pi) from the kernel, 1/2 from (x,p) units
    dx = x[1] - x[0]
    integral = float(values.sum() * dx * dx)
    flags = ()
    if abs(integral - 1.0) > 0.02:
        warnings.warn(
            f"phase-space window keeps {integral:.4f} of the distribution; widen it",
            WindowWarning,
            stacklevel=2,
        )
        flags = ("window-clips-state",)
    return WignerGrid(x=x, p=p, values=values, integral=integral, flags=flags)
