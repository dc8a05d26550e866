"""Synthetic continuous-wave dual-homodyne frame records.

Each frame holds one complex sample ``beta = X + iP`` per time bin.  The
joint distribution of the samples in any mode basis is the state's Husimi
Q function, so a frame is generated by drawing the occupied carriers'
values from the (possibly mixed) carrier Q function via exact rejection
sampling and filling the orthogonal complement with vacuum statistics,
``E|beta|^2 = 1`` per mode.

Every frame consumes its own counter-based random substream keyed by
``(seed, frame index)``, so records are reproducible bit-for-bit no
matter how generation work is split across workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.signal import butter, lfilter

from .errors import ContractViolationError, SamplerConfigurationError
from .fock import DensityMatrix
from .modes import TimeGrid
from .states import ModalState

#: Detector-chain defaults of the reference setup.
DEFAULT_HIGHPASS_HZ = 100e3
DEFAULT_LOWPASS_HZ = 14.3e6


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: explicit argument, else the CPCA_THREADS env var, else 1."""
    if workers is not None:
        return max(1, int(workers))
    return max(1, int(os.environ.get("CPCA_THREADS", "1")))


@dataclass(frozen=True)
class FrameSet:
    """N measured frames of M complex dual-homodyne samples.

    ``meta`` records seed, state provenance and filter settings so every
    downstream artifact can cite how the record was produced.
    """

    grid: TimeGrid
    data: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        data = np.array(self.data, dtype=np.complex128)
        if data.ndim != 2 or data.shape[1] != self.grid.M:
            raise ContractViolationError(
                f"frame data of shape {data.shape} does not match grid M={self.grid.M}"
            )
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class DetectorFilter:
    """First-order high-pass plus low-pass model of the detection chain.

    Cutoffs are in Hz; each side can be disabled independently.  Validity
    against a grid's Nyquist frequency is checked at application time.
    """

    highpass_hz: float = DEFAULT_HIGHPASS_HZ
    lowpass_hz: float = DEFAULT_LOWPASS_HZ
    highpass_enabled: bool = True
    lowpass_enabled: bool = True

    def validate(self, grid: TimeGrid) -> None:
        nyquist = 0.5 * grid.M / grid.T
        if self.highpass_enabled and not (0.0 < self.highpass_hz < nyquist):
            raise ContractViolationError(
                f"high-pass cutoff {self.highpass_hz:.4g} Hz outside (0, {nyquist:.4g}) Hz"
            )
        if self.lowpass_enabled and not (0.0 < self.lowpass_hz < nyquist):
            raise ContractViolationError(
                f"low-pass cutoff {self.lowpass_hz:.4g} Hz outside (0, {nyquist:.4g}) Hz"
            )
        if (
            self.highpass_enabled
            and self.lowpass_enabled
            and not (self.highpass_hz < self.lowpass_hz)
        ):
            raise ContractViolationError("high-pass cutoff must lie below low-pass cutoff")

    def as_meta(self) -> dict[str, Any]:
        return {
            "highpass_hz": self.highpass_hz,
            "lowpass_hz": self.lowpass_hz,
            "highpass_enabled": self.highpass_enabled,
            "lowpass_enabled": self.lowpass_enabled,
            "kind": "first-order IIR",
        }


class QSampler:
    """Exact rejection sampler for the Husimi Q function of a Fock-basis state.

    Proposals are complex Gaussians of per-mode variance ``1 + n_max/2``;
    the envelope constant comes from bounding each polynomial-times-
    Gaussian term of ``Q/proposal`` at its radial maximum, so acceptance
    is exact (no burn-in, no autocorrelation).
    """

    MAX_ROUNDS = 60

    def __init__(self, rho: DensityMatrix):
        weights, vecs = rho.eigen_mixture()
        dims = rho.dims
        # trim unoccupied trailing Fock levels per mode to tighten the envelope
        if len(dims) == 1:
            occ = np.max(np.abs(vecs), axis=1)
            d1 = int(np.nonzero(occ > 1e-12)[0].max()) + 1
            vecs = vecs[:d1, :]
            self._vr = vecs  # (d1, K)
            self._dims = (d1,)
        else:
            v3 = np.abs(vecs).reshape(dims[0], dims[1], -1)
            d1 = int(np.nonzero(v3.max(axis=(1, 2)) > 1e-12)[0].max()) + 1
            d2 = int(np.nonzero(v3.max(axis=(0, 2)) > 1e-12)[0].max()) + 1
            self._vr = vecs.reshape(dims[0], dims[1], -1)[:d1, :d2, :]
            self._dims = (d1, d2)
        self._weights = weights
        self._svar = np.array([1.0 + (d - 1) / 2.0 for d in self._dims])
        self._isqfact = [1.0 / np.sqrt(_factorials(d)) for d in self._dims]
        self._envelope = self._envelope_constant()

    @property
    def n_modes(self) -> int:
        return len(self._dims)

    def _envelope_constant(self) -> float:
        gs = []
        for d, s in zip(self._dims, self._svar):
            beta = 1.0 - 1.0 / s
            k = np.arange(d)[:, None] + np.arange(d)[None, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                g = np.where(k == 0, 1.0, (k / (2.0 * beta * np.e)) ** (k / 2.0))
            g = g / np.sqrt(np.outer(_factorials(d), _factorials(d)))
            gs.append(g)
        total = 0.0
        if self.n_modes == 1:
            for w, v in zip(self._weights, self._vr.T):
                av = np.abs(v)
                total += w * float(av @ gs[0] @ av)
        else:
            for k in range(self._weights.size):
                av = np.abs(self._vr[:, :, k])
                total += self._weights[k] * float(
                    np.einsum("ab,cd,ac,bd->", av, av, gs[0], gs[1])
                )
        return float(np.prod(self._svar)) * total

    def _density_ratio(self, z: np.ndarray) -> np.ndarray:
        """``Q(z) / proposal(z)`` for proposals ``z`` of shape (batch, n_modes)."""
        r2 = np.abs(z) ** 2
        expo = np.exp(-np.sum(r2 * (1.0 - 1.0 / self._svar), axis=1))
        if self.n_modes == 1:
            pw = _powers(np.conj(z[:, 0]), self._dims[0]) * self._isqfact[0]
            amps = pw @ self._vr  # (batch, K)
        else:
            pw1 = _powers(np.conj(z[:, 0]), self._dims[0]) * self._isqfact[0]
            pw2 = _powers(np.conj(z[:, 1]), self._dims[1]) * self._isqfact[1]
            amps = np.einsum("bi,ijk,bj->bk", pw1, self._vr, pw2)
        qpoly = (np.abs(amps) ** 2) @ self._weights
        return float(np.prod(self._svar)) * expo * qpoly

    def draw(self, rng: np.random.Generator, size: int = 1) -> np.ndarray:
        """Draw ``size`` samples; shape (size,) for one mode, (size, 2) for two.

        The number of proposal rounds is bounded; exhausting it (or an
        envelope violation) raises :class:`SamplerConfigurationError`.
        """
        out = np.empty((size, self.n_modes), dtype=np.complex128)
        have = 0
        batch = max(64, min(4 * size, 8192))
        for _ in range(self.MAX_ROUNDS):
            scale = np.sqrt(self._svar / 2.0)
            z = (
                rng.standard_normal((batch, self.n_modes))
                + 1j * rng.standard_normal((batch, self.n_modes))
            ) * scale
            ratio = self._density_ratio(z)
            if np.any(ratio > self._envelope * (1.0 + 1e-9)):
                raise SamplerConfigurationError(
                    "rejection envelope violated; sampler configuration is inconsistent"
                )
            accept = rng.uniform(0.0, 1.0, batch) * self._envelope <= ratio
            taken = z[accept]
            take = min(taken.shape[0], size - have)
            out[have : have + take] = taken[:take]
            have += take
            if have == size:
                if self.n_modes == 1:
                    return out[:, 0]
                return out
            batch = min(2 * batch, 65536)
        raise SamplerConfigurationError(
            f"no acceptance after {self.MAX_ROUNDS} proposal rounds "
            f"(envelope constant {self._envelope:.3g})"
        )


def _factorials(d: int) -> np.ndarray:
    return np.array([math.factorial(n) for n in range(d)], dtype=float)


def _powers(z: np.ndarray, d: int) -> np.ndarray:
    out = np.empty((z.size, d), dtype=np.complex128)
    out[:, 0] = 1.0
    for k in range(1, d):
        out[:, k] = out[:, k - 1] * z
    return out


def sample_q(rho: DensityMatrix, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Draw from the Husimi Q distribution of a 1- or 2-mode density matrix.

    Vacuum draws satisfy ``E[alpha] = 0`` and ``E[|alpha|^2] = 1``; a Fock
    state ``|n>`` gives ``E[|alpha|^2] = n + 1``.
    """
    return QSampler(rho).draw(rng, size)


def _frame_rng(seed: int, index: int) -> np.random.Generator:
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def generate_frames(
    state: ModalState,
    grid: TimeGrid,
    n_frames: int,
    seed: int,
    workers: int | None = None,
) -> FrameSet:
    """Simulate ``n_frames`` dual-homodyne frames of a modal state.

    Per frame: draw an all-vacuum record ``v`` (i.i.d. complex Gaussians
    with ``E|v_j|^2 = 1``), draw the carrier amplitudes from the carrier
    density matrix's Q function, then replace the carriers' components:
    ``beta = v - sum_k e_k <e_k, v> + sum_k e_k beta_k``.

    Deterministic given ``seed``; identical for any worker count.
    """
    for c in state.carriers:
        grid.require_compatible(c.grid)
    if n_frames < 1:
        raise ContractViolationError(f"need at least one frame, got {n_frames}")
    carriers = state.carrier_matrix()
    sampler = QSampler(state.rho)
    data = np.empty((n_frames, grid.M), dtype=np.complex128)

    def fill(lo: int, hi: int) -> None:
        for idx in range(lo, hi):
            rng = _frame_rng(seed, idx)
            v = (
                rng.standard_normal(grid.M) + 1j * rng.standard_normal(grid.M)
            ) * np.sqrt(0.5)
            beta = sampler.draw(rng, 1).reshape(-1)
            overlap = carriers.conj() @ v
            data[idx] = v + carriers.T @ (beta - overlap)

    n_workers = resolve_workers(workers)
    if n_workers == 1 or n_frames < 2 * n_workers:
        fill(0, n_frames)
    else:
        bounds = np.linspace(0, n_frames, n_workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            futures = [
                pool.submit(fill, int(lo), int(hi)) for lo, hi in zip(bounds, bounds[1:])
            ]
            for fut in futures:
                fut.result()

    meta = {
        "seed": int(seed),
        "n_frames": int(n_frames),
        "state": dict(state.provenance),
        "loss_p": state.loss_p,
        "filters": None,
        "rng": "philox-per-frame",
    }
    return FrameSet(grid, data, meta)


def apply_detector_filters(frames: FrameSet, filt: DetectorFilter) -> FrameSet:
    """Run each frame through the detector filter chain.

    First-order IIR high-pass then low-pass, applied along the time axis;
    acting on the complex record filters the X and P series identically.
    Settings are recorded in the returned metadata.
    """
    if not (filt.highpass_enabled or filt.lowpass_enabled):
        meta = dict(frames.meta)
        meta["filters"] = None
        return FrameSet(frames.grid, frames.data, meta)
    filt.validate(frames.grid)
    fs = frames.grid.M / frames.grid.T
    data = frames.data
    if filt.highpass_enabled:
        b, a = butter(1, filt.highpass_hz, btype="highpass", fs=fs)
        data = lfilter(b, a, data, axis=1)
    if filt.lowpass_enabled:
        b, a = butter(1, filt.lowpass_hz, btype="lowpass", fs=fs)
        data = lfilter(b, a, data, axis=1)
    meta = dict(frames.meta)
    meta["filters"] = filt.as_meta()
    return FrameSet(frames.grid, data, meta)
