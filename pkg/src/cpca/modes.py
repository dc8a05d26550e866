"""Discretized complex temporal mode functions (TMFs) on a shared time grid.

A mode function is stored as the vector of weighted samples
``f[t_j] = sqrt(T/M) * f(j*T/M)``, so that inner products between mode
functions reduce to plain complex dot products and a normalized mode
satisfies ``sum |f[t_j]|^2 = 1``.  All objects are immutable and all
operations are pure.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ContractViolationError,
    DegenerateInputError,
    GridMismatchError,
    LinearDependenceError,
)

#: Time-bin wave packets: decay rate of the double-exponential envelope (1/s).
DEFAULT_DECAY_RATE = 1.1e8
#: Time-bin wave packets: separation of the two bins (s).
DEFAULT_BIN_DELAY = 250e-9
#: Default frame duration (s) and bin count of the reference measurement.
DEFAULT_FRAME_DURATION = 1.5e-6
DEFAULT_FRAME_BINS = 1500

NORM_TOL = 1e-9


class ModeTruncationWarning(UserWarning):
    """A wave packet's tails were clipped by the finite time grid."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid of ``M`` time bins covering ``[0, T]``.

    Parameters
    ----------
    T : float
        Total duration in seconds, strictly positive.
    M : int
        Number of bins, at least 1.

    Two grids are compatible iff both ``T`` and ``M`` match.  Sample
    instants are the right bin edges ``t_j = j*T/M`` for ``j = 1..M``.
    """

    T: float
    M: int

    def __post_init__(self):
        if not (self.T > 0.0):
            raise ContractViolationError(f"grid duration must be positive, got {self.T}")
        if int(self.M) != self.M or self.M < 1:
            raise ContractViolationError(f"grid bin count must be a positive integer, got {self.M}")
        object.__setattr__(self, "M", int(self.M))

    @property
    def dt(self) -> float:
        """Bin width ``T/M`` in seconds."""
        return self.T / self.M

    def times(self) -> np.ndarray:
        """Sample instants ``j*T/M`` for ``j = 1..M``."""
        return np.arange(1, self.M + 1) * self.dt

    def compatible(self, other: "TimeGrid") -> bool:
        return self.T == other.T and self.M == other.M

    def require_compatible(self, other: "TimeGrid") -> None:
        if not self.compatible(other):
            raise GridMismatchError(
                f"incompatible grids: (T={self.T}, M={self.M}) vs (T={other.T}, M={other.M})"
            )


@dataclass(frozen=True)
class TemporalModeFunction:
    """Complex amplitude vector of one temporal mode on a :class:`TimeGrid`.

    ``amp[j]`` already carries the ``sqrt(T/M)`` discretization weight, so
    ``sum |amp|^2 = 1`` for a normalized mode and :func:`inner_product` is
    a plain vector dot product.
    """

    grid: TimeGrid
    amp: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amp, dtype=np.complex128)
        if amp.ndim != 1 or amp.shape[0] != self.grid.M:
            raise ContractViolationError(
                f"amplitude vector has length {amp.shape}, grid has M={self.grid.M}"
            )
        amp.setflags(write=False)
        object.__setattr__(self, "amp", amp)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amp))

    @property
    def is_normalized(self) -> bool:
        """True when ``sum |amp|^2 = 1`` within 1e-12."""
        return abs(self.norm**2 - 1.0) <= 1e-12


TMF = TemporalModeFunction


def inner_product(f: TMF, g: TMF) -> complex:
    """Mode-function inner product, conjugate-linear in the first argument.

    Returns ``sum_j conj(f[t_j]) * g[t_j]``; this equals the commutator
    of the two modes' ladder operators.
    """
    f.grid.require_compatible(g.grid)
    return complex(np.vdot(f.amp, g.amp))


def normalize(f: TMF) -> TMF:
    """Rescale to unit norm. Raises on an identically zero input."""
    n = f.norm
    if not np.isfinite(n) or n < 1e-150:
        raise DegenerateInputError("cannot normalize a zero mode function")
    return TMF(f.grid, f.amp / n)


def _require_normalized(f: TMF, what: str) -> None:
    if abs(f.norm**2 - 1.0) > NORM_TOL:
        raise ContractViolationError(f"{what} must be normalized, |{what}|^2 = {f.norm**2!r}")


def mode_match(f: TMF, g: TMF) -> float:
    """Mode match ``|<f, g>|^2`` in [0, 1].

    Symmetric and invariant under a global phase of either argument;
    both inputs must be normalized.
    """
    _require_normalized(f, "f")
    _require_normalized(g, "g")
    return float(abs(inner_product(f, g)) ** 2)


def canonical_phase(f: TMF) -> TMF:
    """Remove the arbitrary global phase of a mode function.

    Rotates the amplitude vector so that its largest-magnitude component
    is real and positive; ties break toward the lowest bin index.  Used
    everywhere a deterministic representative of a mode is needed.
    """
    mags = np.abs(f.amp)
    idx = int(np.argmax(mags))
    if mags[idx] < 1e-150:
        raise DegenerateInputError("cannot fix the phase of a zero mode function")
    phase = f.amp[idx] / mags[idx]
    return TMF(f.grid, f.amp * np.conj(phase))


def gram_schmidt(f1: TMF, f2: TMF) -> tuple[TMF, TMF, np.ndarray]:
    """Orthonormalize a pair of normalized, linearly independent modes.

    Returns ``(e1, e2, coeffs)`` with ``e1 = f1``, ``e2`` proportional to
    ``f2 - <f1,f2> f1``, and the 2x2 matrix ``coeffs`` expressing the
    inputs in the new basis: ``(f1, f2)^T = coeffs @ (e1, e2)^T``.
    """
    _require_normalized(f1, "f1")
    _require_normalized(f2, "f2")
    c = inner_product(f1, f2)
    if abs(c) > 1.0 - 1e-9:
        raise LinearDependenceError(f"modes are linearly dependent, |<f1,f2>| = {abs(c):.12g}")
    residual = f2.amp - c * f1.amp
    s = float(np.linalg.norm(residual))
    e2 = TMF(f1.grid, residual / s)
    coeffs = np.array([[1.0, 0.0], [c, s]], dtype=np.complex128)
    return f1, e2, coeffs


def superpose(coeffs, fns) -> TMF:
    """Combine mutually orthonormal modes: ``sum_k coeffs[k] * fns[k]``.

    The coefficient vector must have unit norm within 1e-9 and the modes
    must be orthonormal, so the result is normalized by construction (it
    is renormalized exactly before returning).
    """
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    fns = list(fns)
    if len(coeffs) != len(fns) or len(fns) == 0:
        raise ContractViolationError("need one coefficient per mode function")
    if abs(float(np.sum(np.abs(coeffs) ** 2)) - 1.0) > 1e-9:
        raise ContractViolationError(
            f"coefficients must have unit norm, got {float(np.sum(np.abs(coeffs) ** 2)):.12g}"
        )
    for j, fj in enumerate(fns):
        for k, fk in enumerate(fns[j:], start=j):
            ip = inner_product(fj, fk)
            expect = 1.0 if j == k else 0.0
            if abs(ip - expect) > 1e-8:
                raise ContractViolationError(
                    f"mode functions must be orthonormal, <f{j},f{k}> = {ip:.3e}"
                )
    amp = np.zeros(fns[0].grid.M, dtype=np.complex128)
    for ck, fk in zip(coeffs, fns):
        amp += ck * fk.amp
    return normalize(TMF(fns[0].grid, amp))


def timebin_pair(
    grid: TimeGrid,
    gamma: float = DEFAULT_DECAY_RATE,
    center1: float | None = None,
    delta_t: float = DEFAULT_BIN_DELAY,
) -> tuple[TMF, TMF]:
    """Two time-shifted double-decaying-exponential wave packets.

    ``w1`` is proportional to ``exp(-gamma*|t - center1|)`` sampled on the
    grid and normalized; ``w2(t) = w1(t - delta_t)``.  ``center1`` defaults
    to ``0.35*T`` so that both bins fit a frame shaped like the reference
    measurement.  If a packet's ``5/gamma`` tail is clipped by the grid a
    :class:`ModeTruncationWarning` is emitted.
    """
    if gamma <= 0:
        raise ContractViolationError(f"decay rate must be positive, got {gamma}")
    if center1 is None:
        center1 = 0.35 * grid.T
    center2 = center1 + delta_t
    for label, c in (("w1", center1), ("w2", center2)):
        if not (0.0 <= c <= grid.T):
            raise ContractViolationError(
                f"{label} center {c:.3e} s lies outside the grid [0, {grid.T:.3e}] s"
            )
    tail = 5.0 / gamma
    if min(center1, center2) - tail < 0.0 or max(center1, center2) + tail > grid.T:
        warnings.warn(
            "wave packet tails extend beyond the grid and are truncated",
            ModeTruncationWarning,
            stacklevel=2,
        )
    t = grid.times()
    w1 = normalize(TMF(grid, np.exp(-gamma * np.abs(t - center1)).astype(np.complex128)))
    w2 = normalize(TMF(grid, np.exp(-gamma * np.abs(t - center2)).astype(np.complex128)))
    return w1, w2
