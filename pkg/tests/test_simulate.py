"""Q-function sampler statistics, frame generation, detector filters."""

import numpy as np
import pytest
from scipy.stats import chisquare
from scipy.signal import butter, freqz

from cpca.errors import ContractViolationError, GridMismatchError
from cpca.fock import FockState1
from cpca.modes import TMF, TimeGrid, gram_schmidt, normalize, timebin_pair
from cpca.simulate import (
    DetectorFilter,
    FrameSet,
    QSampler,
    apply_detector_filters,
    generate_frames,
    sample_q,
)
from cpca.states import (
    analytic_ct,
    fock_mode_state,
    single_photon_qubit,
    two_photon_state,
    vacuum_state,
)
from cpca.engine import accumulate_ct, project

GRID = TimeGrid(1.5e-6, 64)
W1, W2 = timebin_pair(GRID)
ISQ2 = 1 / np.sqrt(2)


def fock_rho(n):
    c = np.zeros(n + 1)
    c[n] = 1.0
    return FockState1(c).to_density()


class TestSampleQ:
    @pytest.mark.parametrize("n", [0, 1, 2, 3])
    def test_fock_second_moment(self, n):
        rng = np.random.default_rng(100 + n)
        draws = sample_q(fock_rho(n), rng, 100_000)
        m = np.abs(draws) ** 2
        se = m.std() / np.sqrt(m.size)
        assert abs(m.mean() - (n + 1)) < 3 * se

    @pytest.mark.parametrize("n", [1, 2])
    def test_radial_density_matches_gamma(self, n):
        # |alpha|^2 of a Fock |n> Q draw follows a Gamma(n+1, 1) law
        rng = np.random.default_rng(17 + n)
        u = np.abs(sample_q(fock_rho(n), rng, 100_000)) ** 2
        from scipy.stats import gamma

        edges = gamma.ppf(np.linspace(0.0, 1.0, 41), a=n + 1)
        edges[0], edges[-1] = 0.0, np.inf
        counts, _ = np.histogram(u, bins=edges)
        _, p = chisquare(counts)
        assert p > 0.001

    def test_two_mode_photon_pair(self):
        st_ = two_photon_state(W1, W2)
        rng = np.random.default_rng(5)
        draws = sample_q(st_.rho, rng, 50_000)
        assert draws.shape == (50_000, 2)
        m1 = np.abs(draws[:, 0]) ** 2
        m2 = np.abs(draws[:, 1]) ** 2
        for m in (m1, m2):  # each mode holds one photon: <|b|^2> = 2
            assert abs(m.mean() - 2.0) < 3 * m.std() / np.sqrt(m.size)

    def test_sampler_draw_shapes(self):
        rng = np.random.default_rng(0)
        one = QSampler(fock_rho(1)).draw(rng, 7)
        assert one.shape == (7,)


class TestGenerateFrames:
    def test_deterministic_and_worker_invariant(self):
        st_ = single_photon_qubit(ISQ2, 1j * ISQ2, W1, W2)
        a = generate_frames(st_, GRID, 300, seed=9)
        b = generate_frames(st_, GRID, 300, seed=9)
        c = generate_frames(st_, GRID, 300, seed=9, workers=3)
        assert np.array_equal(a.data, b.data)
        assert np.array_equal(a.data, c.data)
        assert a.meta["seed"] == 9

    def test_prefix_property(self):
        # per-frame substreams: a shorter run is a prefix of a longer one
        st_ = vacuum_state(GRID)
        long = generate_frames(st_, GRID, 50, seed=3)
        short = generate_frames(st_, GRID, 20, seed=3)
        assert np.array_equal(long.data[:20], short.data)

    def test_vacuum_correlations_are_identity(self):
        grid = TimeGrid(1.0e-6, 16)
        frames = generate_frames(vacuum_state(grid), grid, 50_000, seed=11)
        corr = accumulate_ct(frames)
        assert np.max(np.abs(corr.matrix - np.eye(16))) < 0.06

    def test_single_photon_projected_moment(self):
        st_ = fock_mode_state(W1, 1)
        frames = generate_frames(st_, GRID, 20_000, seed=21)
        b = project(frames, W1)
        m = np.abs(b) ** 2
        se = m.std() / np.sqrt(m.size)
        assert abs(m.mean() - 2.0) < 3 * se

    def test_complement_modes_uncorrelated(self):
        st_ = fock_mode_state(W1, 1)
        frames = generate_frames(st_, GRID, 20_000, seed=22)
        _, g, _ = gram_schmidt(W1, W2)  # orthogonal to the carrier
        cross = np.conj(project(frames, W1)) * project(frames, g)
        se = cross.std() / np.sqrt(cross.size)
        assert abs(cross.mean()) < 3 * se

    def test_empirical_correlation_convergence(self):
        # Frobenius error over sqrt(M^2/N) bounded across seeds
        grid = TimeGrid(1.0e-6, 16)
        w1, w2, _ = gram_schmidt(*timebin_pair(grid, gamma=3e7, delta_t=300e-9))
        st_ = single_photon_qubit(ISQ2, 1j * ISQ2, w1, w2)
        analytic = analytic_ct(st_, grid).matrix
        n = 4000
        for seed in range(5):
            frames = generate_frames(st_, grid, n, seed=seed)
            emp = accumulate_ct(frames).matrix
            ratio = np.linalg.norm(emp - analytic) / np.sqrt(grid.M**2 / n)
            assert ratio <= 5.0

    def test_rejects_bad_inputs(self):
        st_ = fock_mode_state(W1, 1)
        with pytest.raises(GridMismatchError):
            generate_frames(st_, TimeGrid(1.5e-6, 32), 10, seed=0)
        with pytest.raises(ContractViolationError):
            generate_frames(st_, GRID, 0, seed=0)


class TestDetectorFilters:
    def test_disabled_is_identity(self):
        st_ = vacuum_state(GRID)
        frames = generate_frames(st_, GRID, 50, seed=1)
        out = apply_detector_filters(
            frames, DetectorFilter(highpass_enabled=False, lowpass_enabled=False)
        )
        assert np.array_equal(out.data, frames.data)

    def test_highpass_rejects_dc(self):
        # pick a cutoff whose transient (1/(2 pi fc) ~ 80 ns) dies inside the frame
        grid = TimeGrid(1.5e-6, 512)
        data = np.ones((4, grid.M), dtype=complex)
        frames = FrameSet(grid, data)
        filt = DetectorFilter(highpass_hz=2e6, lowpass_enabled=False)
        out = apply_detector_filters(frames, filt)
        tail = np.abs(out.data[:, -grid.M // 4 :])  # t >= 1.1 us ~ 14 time constants
        assert np.max(tail) < 0.01

    def test_lowpass_shrinks_white_noise_variance(self):
        rng = np.random.default_rng(8)
        grid = TimeGrid(1.5e-6, 512)
        data = (rng.standard_normal((200, 512)) + 1j * rng.standard_normal((200, 512))) * np.sqrt(
            0.5
        )
        frames = FrameSet(grid, data)
        filt = DetectorFilter(highpass_enabled=False, lowpass_hz=5e6)
        out = apply_detector_filters(frames, filt)
        var = np.mean(np.abs(out.data[:, 64:]) ** 2)
        # independent prediction: noise gain of the first-order filter
        fs = grid.M / grid.T
        b, a = butter(1, 5e6, btype="lowpass", fs=fs)
        w, h = freqz(b, a, worN=8192)
        gain = float(np.mean(np.abs(h) ** 2))
        assert var < 1.0
        assert var == pytest.approx(gain, rel=0.1)

    def test_settings_recorded(self):
        st_ = vacuum_state(GRID)
        frames = generate_frames(st_, GRID, 10, seed=2)
        out = apply_detector_filters(frames, DetectorFilter())
        assert out.meta["filters"]["highpass_hz"] == 100e3
        assert out.meta["filters"]["lowpass_hz"] == 14.3e6

    def test_cutoff_above_nyquist_rejected(self):
        grid = TimeGrid(1.5e-6, 16)  # Nyquist ~ 5.3 MHz
        frames = FrameSet(grid, np.zeros((3, 16), dtype=complex))
        with pytest.raises(ContractViolationError):
            apply_detector_filters(frames, DetectorFilter())  # 14.3 MHz low-pass

    def test_ordering_constraint(self):
        with pytest.raises(ContractViolationError):
            DetectorFilter(highpass_hz=5e6, lowpass_hz=1e6).validate(GRID)
