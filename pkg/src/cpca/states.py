"""Truncated Fock-basis models of the reference non-Gaussian states.

Constructors cover single-photon superpositions across two time bins,
two-photon states in a pair of (generally non-orthogonal) modes, squeezed
vacua, and photon-subtracted squeezed states.  Every state is represented
as a :class:`ModalState`: one or two occupied orthonormal carrier modes
with a density matrix over them, all other modes implicitly vacuum.

The analytic-moment operations here are the oracles against which the
Monte Carlo estimation pipeline is validated.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .engine import CorrelationMatrix
from .errors import ContractViolationError, DegenerateInputError, LinearDependenceError
from .fock import DensityMatrix, FockState1, FockState2, destroy, mode_operator
from .modes import TMF, TimeGrid, canonical_phase, gram_schmidt, inner_product, normalize, superpose

#: Default Fock cutoffs: small states vs squeezed-light states (r <= 0.7).
DEFAULT_CUTOFF_SMALL = 6
DEFAULT_CUTOFF_SQUEEZED = 20

CARRIER_ORTHO_TOL = 1e-8


class TruncationWarning(UserWarning):
    """Fock-basis truncation discards more probability than intended."""


@dataclass(frozen=True)
class ModalState:
    """A quantum state occupying up to two orthonormal carrier modes.

    ``rho`` is the density matrix over the carriers (all other temporal
    modes are vacuum).  ``loss_p`` records how much beam-splitter loss has
    already been folded into ``rho``.  ``provenance`` keeps the
    constructor name and parameters for serialization and reports.
    """

    carriers: tuple[TMF, ...]
    rho: DensityMatrix
    loss_p: float = 0.0
    provenance: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.carriers) != self.rho.n_modes:
            raise ContractViolationError(
                f"{len(self.carriers)} carriers but density matrix has {self.rho.n_modes} modes"
            )
        if not (0.0 <= self.loss_p < 1.0):
            raise ContractViolationError(f"loss probability must lie in [0, 1), got {self.loss_p}")
        for j, fj in enumerate(self.carriers):
            for k, fk in enumerate(self.carriers[j:], start=j):
                ip = inner_product(fj, fk)
                expect = 1.0 if j == k else 0.0
                if abs(ip - expect) > CARRIER_ORTHO_TOL:
                    raise ContractViolationError(
                        f"carriers must be orthonormal, <c{j},c{k}> = {ip:.3e}"
                    )
        object.__setattr__(self, "carriers", tuple(self.carriers))

    @property
    def grid(self) -> TimeGrid:
        return self.carriers[0].grid

    def carrier_matrix(self) -> np.ndarray:
        """Carrier amplitudes stacked as rows, shape ``(k, M)``."""
        return np.array([c.amp for c in self.carriers])


def vacuum_state(grid: TimeGrid, carrier: TMF | None = None) -> ModalState:
    """The all-vacuum state on a grid.

    Represented with one placeholder carrier holding ``|0>``, which keeps
    every downstream formula uniform while contributing nothing.
    """
    if carrier is None:
        amp = np.zeros(grid.M, dtype=np.complex128)
        amp[0] = 1.0
        carrier = TMF(grid, amp)
    return ModalState(
        carriers=(normalize(carrier),),
        rho=FockState1(np.array([1.0, 0.0])).to_density(),
        provenance={"constructor": "vacuum_state"},
    )


def fock_mode_state(f: TMF, n: int, cutoff: int | None = None) -> ModalState:
    """Photon-number state ``|n>`` in a single carrier mode ``f``."""
    if n < 0:
        raise ContractViolationError(f"photon number must be >= 0, got {n}")
    cutoff = n if cutoff is None else cutoff
    if cutoff < n:
        raise ContractViolationError(f"cutoff {cutoff} cannot hold |{n}>")
    coeffs = np.zeros(cutoff + 1, dtype=np.complex128)
    coeffs[n] = 1.0
    return ModalState(
        carriers=(normalize(f),),
        rho=FockState1(coeffs).to_density(),
        provenance={"constructor": "fock_mode_state", "n": n, "cutoff": cutoff},
    )


def single_photon_qubit(p1: complex, p2: complex, w1: TMF, w2: TMF) -> ModalState:
    """One photon split across two orthogonal time bins.

    The state ``p1 |1_w1, 0_w2> + p2 |0_w1, 1_w2>`` is a single photon in
    the one carrier mode ``p1*w1 + p2*w2``, which is complex whenever the
    relative phase of ``p1, p2`` is.
    """
    if abs(abs(p1) ** 2 + abs(p2) ** 2 - 1.0) > 1e-9:
        raise ContractViolationError(
            f"|p1|^2 + |p2|^2 must equal 1, got {abs(p1) ** 2 + abs(p2) ** 2:.12g}"
        )
    carrier = superpose([p1, p2], [w1, w2])
    return ModalState(
        carriers=(carrier,),
        rho=FockState1(np.array([0.0, 1.0])).to_density(),
        provenance={"constructor": "single_photon_qubit", "p1": complex(p1), "p2": complex(p2)},
    )


def two_photon_state(f1: TMF, f2: TMF) -> ModalState:
    """Two photons created in a pair of generally non-orthogonal modes.

    Builds ``a^dag_f1 a^dag_f2 |vac>`` with normalization
    ``1/sqrt(1 + |<f1,f2>|^2)``, expanded over the orthonormalized pair
    ``(e1, e2)`` from Gram-Schmidt.  The global phase is fixed so the
    ``|2,0>`` coefficient is real and non-negative.
    """
    e1, e2, coeffs = gram_schmidt(normalize(f1), normalize(f2))
    c = coeffs[1, 0]  # <f1, f2>
    s = coeffs[1, 1].real
    norm = np.sqrt(1.0 + abs(c) ** 2)
    alpha = np.sqrt(2.0) * c / norm
    beta = s / norm
    # rotate the global phase so alpha (or beta when alpha vanishes) is real >= 0
    ref = alpha if abs(alpha) > 1e-12 else beta
    phase = ref / abs(ref)
    alpha, beta = alpha * np.conj(phase), beta * np.conj(phase)
    mat = np.zeros((3, 3), dtype=np.complex128)
    mat[2, 0] = alpha
    mat[1, 1] = beta
    state = FockState2(mat)
    return ModalState(
        carriers=(e1, e2),
        rho=state.to_density(),
        provenance={
            "constructor": "two_photon_state",
            "overlap": complex(c),
            "alpha": complex(alpha),
            "beta": complex(beta),
            "gamma": 0j,
        },
    )


def squeezed_vacuum(r: float, cutoff: int = DEFAULT_CUTOFF_SQUEEZED) -> FockState1:
    """Squeezed vacuum ``exp(r/2 (a^dag^2 - a^2)) |0>`` truncated at ``cutoff``.

    Even coefficients only: ``c_{2n} ~ (tanh r)^n sqrt((2n)!) / (2^n n!)``,
    renormalized after truncation.  Warns when the discarded tail exceeds
    1e-6 of the probability.
    """
    if cutoff < 2 or cutoff % 2 != 0:
        raise ContractViolationError(f"cutoff must be even and >= 2, got {cutoff}")
    coeffs = np.zeros(cutoff + 1, dtype=np.complex128)
    t = np.tanh(r)
    amp = 1.0
    coeffs[0] = 1.0
    for n in range(1, cutoff // 2 + 1):
        # ratio c_{2n}/c_{2n-2} = t * sqrt((2n-1)/(2n)) * ... computed stably
        amp *= t * np.sqrt((2 * n - 1) * (2 * n)) / (2 * n)
        coeffs[2 * n] = amp
    # exact norm of the untruncated series is cosh(r); measure the tail
    tail = 1.0 - float(np.sum(np.abs(coeffs) ** 2)) / np.cosh(r)
    if tail > 1e-6:
        warnings.warn(
            f"squeezed-vacuum truncation discards {tail:.2e} probability; increase cutoff",
            TruncationWarning,
            stacklevel=2,
        )
    return FockState1(coeffs / np.linalg.norm(coeffs))


def _subtracted(coeffs: np.ndarray) -> np.ndarray:
    """Apply the annihilation operator to single-mode coefficients, normalized."""
    out = coeffs[1:] * np.sqrt(np.arange(1, coeffs.size))
    nrm = np.linalg.norm(out)
    if nrm < 1e-150:
        raise DegenerateInputError("photon subtraction annihilated the state")
    out = np.concatenate([out / nrm, [0.0]])
    return out.astype(np.complex128)


def photon_subtracted_epr(r: float, cutoff: int = DEFAULT_CUTOFF_SQUEEZED) -> FockState2:
    """Photon-subtracted two-mode squeezed vacuum, closed form.

    Support lies on ``|n+1, n>`` with coefficients proportional to
    ``sqrt(n+1) (tanh r)^(n+1)``; warns when truncation discards more
    than 1e-4 of the probability.
    """
    if cutoff < 2:
        raise ContractViolationError(f"cutoff must be >= 2, got {cutoff}")
    if r <= 0:
        raise DegenerateInputError("two-mode squeezing must be positive to subtract a photon")
    t = np.tanh(r)
    n = np.arange(cutoff)
    amps = np.sqrt(n + 1.0) * t ** (n + 1)
    mat = np.zeros((cutoff + 1, cutoff + 1), dtype=np.complex128)
    mat[n + 1, n] = amps
    x = t * t
    exact = x / (1.0 - x) ** 2  # sum (n+1) x^(n+1)
    tail = 1.0 - float(np.sum(amps**2)) / exact
    if tail > 1e-4:
        warnings.warn(
            f"photon-subtracted EPR truncation discards {tail:.2e} probability; increase cutoff",
            TruncationWarning,
            stacklevel=2,
        )
    return FockState2(mat / np.linalg.norm(mat))


def photon_subtracted_dualrail(
    s1: complex,
    s2: complex,
    r: float,
    w1: TMF,
    w2: TMF,
    cutoff: int = DEFAULT_CUTOFF_SQUEEZED,
) -> ModalState:
    """Photon subtraction ``(s1 a_w1 + s2 a_w2)`` from squeezed vacua in both bins.

    For ``|s1| = |s2|`` with a real ratio the squeezers separate in the
    rotated bins ``(w1 +/- w2)/sqrt(2)`` and the result is a cat-like
    odd state in the subtracted mode times a squeezed spectator.  For a
    purely imaginary ratio the squeezers combine into a two-mode squeezer
    of ``(w1 +/- i w2)/sqrt(2)`` and subtraction yields the
    photon-number-correlated ``|n+1, n>`` ladder of
    :func:`photon_subtracted_epr`.  Any other ``(s1, s2)`` is built
    numerically in the ``(w1, w2)`` basis.
    """
    if abs(abs(s1) ** 2 + abs(s2) ** 2 - 1.0) > 1e-9:
        raise ContractViolationError(
            f"|s1|^2 + |s2|^2 must equal 1, got {abs(s1) ** 2 + abs(s2) ** 2:.12g}"
        )
    if abs(inner_product(w1, w2)) > CARRIER_ORTHO_TOL:
        raise ContractViolationError("time-bin modes must be orthogonal")
    if r <= 0:
        raise DegenerateInputError("cannot subtract a photon from vacuum (r = 0)")
    prov = {
        "constructor": "photon_subtracted_dualrail",
        "s1": complex(s1),
        "s2": complex(s2),
        "r": float(r),
        "cutoff": int(cutoff),
    }

    if abs(s2) < 1e-12 or abs(s1) < 1e-12:
        # subtraction acts on a single bin; the other bin keeps its squeezed vacuum
        sq = squeezed_vacuum(r, cutoff)
        odd = _subtracted(sq.coeffs)
        first = abs(s2) < 1e-12
        coeffs = np.outer(odd, sq.coeffs) if first else np.outer(sq.coeffs, odd)
        return ModalState(
            carriers=(w1, w2),
            rho=FockState2(coeffs).to_density(),
            provenance=prov,
        )

    ratio = s2 / s1
    if abs(abs(s1) - abs(s2)) < 1e-12 and abs(ratio.imag) < 1e-12:
        # real rotation: single-mode squeezers survive the basis change
        sq = squeezed_vacuum(r, cutoff)
        sub_mode = canonical_phase(superpose([np.conj(s1), np.conj(s2)], [w1, w2]))
        spectator = canonical_phase(superpose([-s2, s1], [w1, w2]))
        coeffs = np.outer(_subtracted(sq.coeffs), sq.coeffs)
        return ModalState(
            carriers=(sub_mode, spectator),
            rho=FockState2(coeffs).to_density(),
            provenance=prov,
        )
    if abs(abs(s1) - abs(s2)) < 1e-12 and abs(ratio.real) < 1e-12:
        # imaginary rotation: the squeezers merge into a two-mode squeezer of
        # (w1 +/- i w2)/sqrt(2) and subtraction produces the |n+1, n> ladder,
        # with the extra photon in the mode orthogonal to the subtracted one
        sub_mode = canonical_phase(superpose([np.conj(s1), np.conj(s2)], [w1, w2]))
        partner = canonical_phase(superpose([np.conj(s1), -np.conj(s2)], [w1, w2]))
        ladder = photon_subtracted_epr(r, cutoff)
        return ModalState(
            carriers=(partner, sub_mode),
            rho=ladder.to_density(),
            provenance=prov,
        )

    # general superposition: build numerically in the (w1, w2) basis
    sq = squeezed_vacuum(r, cutoff)
    a = destroy(cutoff + 1)
    psi = np.outer(sq.coeffs, sq.coeffs)
    phi = s1 * (a @ psi) + s2 * (psi @ a.T)
    nrm = np.linalg.norm(phi)
    if nrm < 1e-150:
        raise DegenerateInputError("photon subtraction annihilated the state")
    return ModalState(
        carriers=(w1, w2),
        rho=FockState2(phi / nrm).to_density(),
        provenance=prov,
    )


def apply_loss(state: ModalState, p: float) -> ModalState:
    """Mix vacuum into every carrier with probability ``p`` (beam splitter).

    A single loss acting identically on all time bins commutes with mode
    basis changes, so applying the per-mode Kraus channel in the carrier
    basis is exact.  Repeated application composes multiplicatively.
    """
    if not (0.0 <= p < 1.0):
        raise ContractViolationError(f"loss probability must lie in [0, 1), got {p}")
    if p == 0.0:
        return state
    return ModalState(
        carriers=state.carriers,
        rho=state.rho.apply_loss(p),
        loss_p=1.0 - (1.0 - state.loss_p) * (1.0 - p),
        provenance=dict(state.provenance),
    )


def coherence_matrix(state: ModalState) -> np.ndarray:
    """Carrier-basis coherences ``G[a, b] = <a^dag_a a_b>``, Hermitian.

    Diagonal entries are the carriers' mean photon numbers.
    """
    dims = state.rho.dims
    ops = [mode_operator(destroy(d), i, dims) for i, d in enumerate(dims)]
    k = len(ops)
    g = np.zeros((k, k), dtype=np.complex128)
    for a in range(k):
        for b in range(k):
            g[a, b] = np.trace(state.rho.mat @ ops[a].conj().T @ ops[b])
    return (g + g.conj().T) / 2.0


def analytic_ct(state: ModalState, grid: TimeGrid) -> CorrelationMatrix:
    """Exact correlation matrix of a modal state: ``I`` plus carrier coherences.

    ``C[j, k] = delta_jk + sum_ab conj(e_a[j]) G[a, b] e_b[k]`` where the
    ``e_a`` are the carriers.  Vacuum (no carriers above threshold) gives
    the identity.
    """
    for c in state.carriers:
        grid.require_compatible(c.grid)
    e = state.carrier_matrix()
    g = coherence_matrix(state)
    mat = np.eye(grid.M, dtype=np.complex128) + e.conj().T @ g @ e
    return CorrelationMatrix(grid, mat, n_frames=0)


def analytic_fourth_moments(state: ModalState, e1: TMF, e2: TMF) -> tuple[complex, complex]:
    """Anti-normally ordered fourth moments of two orthogonal probe modes.

    Returns ``(m22, m211)`` matching what dual-homodyne sample averages
    estimate:

    - ``m22   = <beta^dag_e1^2 beta_e2^2>   = <a^dag_e1^2 a_e2^2>``
    - ``m211  = <beta^dag_e1^2 beta_e1 beta_e2>
              = <a^dag_e1^2 a_e1 a_e2> + 2 <a^dag_e1 a_e2>``

    The measurement-vacuum correction appears only in ``m211``; it
    vanishes for states whose cross-coherence is zero (e.g. in the
    principal-mode basis) but matters for arbitrary probe modes.  Probe
    modes are projected onto the carrier span.
    """
    if abs(inner_product(e1, e2)) > 1e-6:
        raise ContractViolationError("probe modes must be orthogonal")
    dims = state.rho.dims
    ops = [mode_operator(destroy(d), i, dims) for i, d in enumerate(dims)]
    c1 = [inner_product(e1, car) for car in state.carriers]
    c2 = [inner_product(e2, car) for car in state.carriers]
    a1 = sum(c * op for c, op in zip(c1, ops))
    a2 = sum(c * op for c, op in zip(c2, ops))
    weights, vecs = state.rho.eigen_mixture()
    m22 = 0j
    m211 = 0j
    cross = 0j
    for w, v in zip(weights, vecs.T):
        a1v = a1 @ v
        a2v = a2 @ v
        a1a1v = a1 @ a1v
        m22 += w * np.vdot(a1a1v, a2 @ a2v)
        m211 += w * np.vdot(a1a1v, a2 @ a1v)
        cross += w * np.vdot(a1v, a2v)
    return complex(m22), complex(m211 + 2.0 * cross)
