"""Acceptance suite: one test per shipped criterion, at pinned tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line
per criterion.  Tolerances here are contractual; do not loosen them.
"""

import json
import time

import numpy as np
import pytest

from cpca.analysis import joint_photon_distribution
from cpca.cli import main as cli_main
from cpca.engine import accumulate_ct, eigendecompose, project, real_pca
from cpca.fock import FockState1, FockState2
from cpca.modes import (
    TMF,
    TimeGrid,
    gram_schmidt,
    inner_product,
    mode_match,
    normalize,
    superpose,
    timebin_pair,
)
from cpca.simulate import generate_frames, sample_q
from cpca.states import (
    ModalState,
    analytic_ct,
    analytic_fourth_moments,
    apply_loss,
    fock_mode_state,
    photon_subtracted_dualrail,
    single_photon_qubit,
    two_photon_state,
    vacuum_state,
)
from cpca.twophoton import decompose_two_photon_analytic, default_nbar_threshold

from oracles import bruteforce_fourth_moments

GRID64 = TimeGrid(1.5e-6, 64)
W1, W2 = timebin_pair(GRID64)
BIN1, BIN2, _ = gram_schmidt(W1, W2)
ISQ2 = 1 / np.sqrt(2)


def _report(criterion, text):
    print(f"\nACCEPTANCE PASS criterion {criterion}: {text}")


def random_mode(rng, grid):
    return normalize(TMF(grid, rng.standard_normal(grid.M) + 1j * rng.standard_normal(grid.M)))


def random_nonorthogonal_pair(rng, grid):
    f1 = random_mode(rng, grid)
    raw = random_mode(rng, grid)
    perp = raw.amp - inner_product(f1, raw) * f1.amp
    perp = perp / np.linalg.norm(perp)
    c = rng.uniform(0.1, 0.85) * np.exp(1j * rng.uniform(-np.pi, np.pi))
    return f1, TMF(grid, c * f1.amp + np.sqrt(1 - abs(c) ** 2) * perp)


def pair_match(got, want):
    direct = min(mode_match(got[0], want[0]), mode_match(got[1], want[1]))
    swapped = min(mode_match(got[0], want[1]), mode_match(got[1], want[0]))
    return max(direct, swapped)


def test_criterion_01_analytic_single_photon_cpca():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    f = random_mode(rng, GRID64)
    dec = eigendecompose(analytic_ct(fock_mode_state(f, 1), GRID64))
    assert abs(dec.eigenvalues[0] - 2.0) < 1e-9
    assert np.max(np.abs(dec.eigenvalues[1:] - 1.0)) < 1e-9
    match = mode_match(dec.eigenmodes[0], f)
    assert match >= 1 - 1e-9
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    _report(1, f"spectrum {{2,1,...}} within 1e-9, mode match {match:.12f}, {elapsed:.2f}s")


def test_criterion_02_monte_carlo_single_photon():
    start = time.perf_counter()
    state = single_photon_qubit(ISQ2, 1j * ISQ2, W1, W2)
    target = superpose([ISQ2, 1j * ISQ2], [W1, W2])
    frames = generate_frames(state, GRID64, 20_000, seed=20240)
    dec = eigendecompose(accumulate_ct(frames))
    match = mode_match(dec.eigenmodes[0], target)
    assert match >= 0.98
    assert abs(dec.nbars[0] - 1.0) <= 0.05
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0
    _report(2, f"N=20000 mode match {match:.4f}, nbar1 {dec.nbars[0]:.4f}, {elapsed:.1f}s")


def test_criterion_03_loss_invariance():
    rng = np.random.default_rng(31)
    f = random_mode(rng, GRID64)
    base = fock_mode_state(f, 1)
    e0 = eigendecompose(analytic_ct(base, GRID64)).eigenmodes[0]
    results = []
    for p in (0.2, 0.5):
        dec = eigendecompose(analytic_ct(apply_loss(base, p), GRID64))
        match = mode_match(dec.eigenmodes[0], e0)
        assert match >= 1 - 1e-9
        assert abs(dec.eigenvalues[0] - ((1 - p) * 1.0 + 1.0)) < 1e-9
        results.append(f"p={p}: match {match:.12f}, lam1 {dec.eigenvalues[0]:.9f}")
    _report(3, "; ".join(results))


def test_criterion_04_real_pca_baseline():
    state = single_photon_qubit(ISQ2, ISQ2, W1, W2)  # real mode function
    frames = generate_frames(state, GRID64, 20_000, seed=20244)
    cpca_mode = eigendecompose(accumulate_ct(frames)).eigenmodes[0]
    pca_mode = real_pca(frames).modes[0]
    match = mode_match(pca_mode, cpca_mode)
    assert match >= 0.99
    _report(4, f"real-PCA vs CPCA top-mode match {match:.4f} at N=20000")


def test_criterion_05_two_photon_roundtrip_master():
    start = time.perf_counter()
    grid = TimeGrid(1.0e-6, 12)
    rng = np.random.default_rng(55)
    worst_clean, worst_lossy, worst_cross = 1.0, 1.0, 1.0
    for _ in range(100):
        f1, f2 = random_nonorthogonal_pair(rng, grid)
        state = two_photon_state(f1, f2)
        sol = decompose_two_photon_analytic(state, grid)
        m = pair_match((sol.f1, sol.f2), (f1, f2))
        worst_clean = min(worst_clean, m)
        assert m >= 0.999
        lossy = decompose_two_photon_analytic(apply_loss(state, 0.5), grid)
        ml = pair_match((lossy.f1, lossy.f2), (f1, f2))
        worst_lossy = min(worst_lossy, ml)
        assert ml >= 0.999
        mc = pair_match((lossy.f1, lossy.f2), (sol.f1, sol.f2))
        worst_cross = min(worst_cross, mc)
        assert mc >= 0.999
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0
    _report(
        5,
        f"100 pairs: worst clean {worst_clean:.6f}, lossy {worst_lossy:.6f}, "
        f"lossy-vs-clean {worst_cross:.6f}, {elapsed:.1f}s",
    )


def test_criterion_06_degenerate_branch_and_diagonal_qutrit():
    circ1 = superpose([ISQ2, 1j * ISQ2], [BIN1, BIN2])
    circ2 = superpose([ISQ2, -1j * ISQ2], [BIN1, BIN2])
    sol = decompose_two_photon_analytic(two_photon_state(circ1, circ2), GRID64)
    assert sol.branch == "degenerate"
    match = pair_match((sol.f1, sol.f2), (circ1, circ2))
    assert match >= 0.999

    diag1 = superpose([ISQ2, ISQ2 * np.exp(1j * np.pi / 4)], [BIN1, BIN2])
    diag2 = superpose([ISQ2, ISQ2 * np.exp(-1j * np.pi / 4)], [BIN1, BIN2])
    sol6 = decompose_two_photon_analytic(two_photon_state(diag1, diag2), GRID64)
    overlap = abs(sol6.overlap)
    assert overlap == pytest.approx(1 / np.sqrt(2), abs=0.01)
    _report(
        6,
        f"circular qutrit branch={sol.branch} match {match:.6f}; "
        f"diagonal qutrit |<f1,f2>| = {overlap:.4f} (theory 0.7071)",
    )


def test_criterion_07_moment_identities_vs_bruteforce():
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(10):
        # random two-photon state with alpha canonical real >= 0, cutoff 2 <= 4
        raw = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        raw[0] = abs(raw[0])
        raw /= np.linalg.norm(raw)
        alpha, beta, gamma = raw
        mat = np.zeros((3, 3), dtype=complex)
        mat[2, 0], mat[1, 1], mat[0, 2] = alpha, beta, gamma
        state = ModalState(carriers=(BIN1, BIN2), rho=FockState2(mat).to_density())
        m22, _ = analytic_fourth_moments(state, BIN1, BIN2)
        bf22, _ = bruteforce_fourth_moments(state, BIN1, BIN2)
        expected = 2.0 * np.conj(alpha) * gamma
        worst = max(worst, abs(m22 - expected), abs(m22 - bf22))
        assert abs(m22 - expected) < 1e-10
        assert abs(m22 - bf22) < 1e-10
        for p in (0.2, 0.5):
            lossy = apply_loss(state, p)
            m22_p, _ = analytic_fourth_moments(lossy, BIN1, BIN2)
            bf22_p, _ = bruteforce_fourth_moments(lossy, BIN1, BIN2)
            worst = max(worst, abs(m22_p - (1 - p) ** 2 * m22), abs(m22_p - bf22_p))
            assert abs(m22_p - (1 - p) ** 2 * m22) < 1e-10
            assert abs(m22_p - bf22_p) < 1e-10
    _report(7, f"m22 = 2*alpha*gamma and (1-p)^2 scaling vs ancilla oracle, worst |err| {worst:.2e}")


def test_criterion_08_q_normalization_invariance():
    grid = TimeGrid(1.0e-6, 12)
    rng = np.random.default_rng(88)
    worst = 0.0
    for _ in range(20):
        f1, f2 = random_nonorthogonal_pair(rng, grid)
        state = two_photon_state(f1, f2)
        q0 = decompose_two_photon_analytic(state, grid).Q
        for p in (0.2, 0.5):
            qp = decompose_two_photon_analytic(apply_loss(state, p), grid).Q
            worst = max(worst, abs(qp - q0))
            assert abs(qp - q0) < 1e-10
    _report(8, f"Q(p) = Q(0) for 20 random states at p in {{0.2, 0.5}}, worst |dQ| {worst:.2e}")


def test_criterion_09_sampler_validation():
    rng = np.random.default_rng(99)
    notes = []
    for n in range(4):
        coeffs = np.zeros(n + 1)
        coeffs[n] = 1.0
        draws = sample_q(FockState1(coeffs).to_density(), rng, 100_000)
        m = np.abs(draws) ** 2
        se = m.std() / np.sqrt(m.size)
        assert abs(m.mean() - (n + 1)) < 3 * se
        notes.append(f"|{n}>: {m.mean():.4f}")
    grid = TimeGrid(1.0e-6, 16)
    w1, w2, _ = gram_schmidt(*timebin_pair(grid, gamma=3e7, delta_t=300e-9))
    state = single_photon_qubit(ISQ2, 1j * ISQ2, w1, w2)
    analytic = analytic_ct(state, grid).matrix
    n_frames = 4000
    worst_ratio = 0.0
    for seed in range(10):
        frames = generate_frames(state, grid, n_frames, seed=seed)
        emp = accumulate_ct(frames).matrix
        ratio = np.linalg.norm(emp - analytic) / np.sqrt(grid.M**2 / n_frames)
        worst_ratio = max(worst_ratio, ratio)
        assert ratio <= 5.0
    _report(9, f"Fock moments {', '.join(notes)}; convergence ratio <= {worst_ratio:.2f} over 10 seeds")


def test_criterion_10_photon_subtracted_epr_qualitative():
    state = photon_subtracted_dualrail(ISQ2, -1j * ISQ2, 0.5, W1, W2, cutoff=14)
    frames = generate_frames(state, GRID64, 50_000, seed=1010)
    dec = eigendecompose(accumulate_ct(frames))
    threshold = default_nbar_threshold(GRID64.M, 50_000)
    occupied = dec.occupied(threshold)
    assert occupied == [0, 1]
    plus = superpose([ISQ2, 1j * ISQ2], [W1, W2])
    minus = superpose([ISQ2, -1j * ISQ2], [W1, W2])
    matches = []
    for k in (0, 1):
        m = max(mode_match(dec.eigenmodes[k], plus), mode_match(dec.eigenmodes[k], minus))
        assert m >= 0.95
        matches.append(m)
    b1 = project(frames, dec.eigenmodes[0])
    b2 = project(frames, dec.eigenmodes[1])
    _, pearson = joint_photon_distribution(b1, b2, cutoff=4)
    assert pearson > 0.3
    _report(
        10,
        f"two occupied modes (nbar {dec.nbars[0]:.3f}, {dec.nbars[1]:.3f}), "
        f"matches {matches[0]:.4f}/{matches[1]:.4f}, photon Pearson r = {pearson:.3f}",
    )


def test_criterion_11_pipeline_determinism(tmp_path, monkeypatch):
    cfg_path = tmp_path / "state.json"
    cfg_path.write_text(
        json.dumps(
            {
                "constructor": "two_photon_state",
                "parameters": {
                    "r1": [1.0, 0.0],
                    "r2": [0.0, 0.0],
                    "r3": [0.2, 0.0],
                    "r4": [0.0, 0.9797958971132712],
                },
                "grid": {"duration_s": 1.5e-6, "bins": 32},
            }
        )
    )
    artifacts = []
    for run, workers in (("a", "1"), ("b", "1"), ("c", "3")):
        monkeypatch.setenv("CPCA_THREADS", workers)
        sub = tmp_path / run
        sub.mkdir()
        frames = sub / "frames.cpca"
        analysis = sub / "analysis.json"
        solution = sub / "solution.json"
        assert (
            cli_main(
                [
                    "simulate",
                    "--state-config",
                    str(cfg_path),
                    "--frames",
                    "4000",
                    "--seed",
                    "777",
                    "--out",
                    str(frames),
                ]
            )
            == 0
        )
        assert cli_main(["analyze", "--frames", str(frames), "--modes", "6", "--out", str(analysis)]) == 0
        assert cli_main(["decompose2", "--frames", str(frames), "--out", str(solution)]) == 0
        artifacts.append(
            (
                frames.read_bytes(),
                analysis.read_text(),
                solution.read_text(),
                (sub / "solution_f1.csv").read_text(),
            )
        )
    assert artifacts[0] == artifacts[1] == artifacts[2]
    _report(11, "simulate/analyze/decompose2 byte-identical across reruns and worker counts 1 vs 3")
