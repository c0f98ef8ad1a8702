"""LCM and direct-Milstein steppers: hand oracles, domain guarantees, explosion
handling.

Hand-substitution oracles were derived in tools/derive_oracles.py before the
steppers were written.
"""

import io
import math

import numpy as np
import pytest

from sislab.model import ModelParams, log_coeffs
from sislab.paths import LevyIncrements, coarsen, generate
from sislab.schemes import (
    SchemeParams,
    Trajectory,
    lcm_evolve,
    lcm_simulate,
    lcm_step,
    milstein_direct_simulate,
    milstein_direct_step,
    milstein_evolve,
    trajectory_to_csv,
)

P_CONV1 = ModelParams(N=10, beta=0.5, sigma=0.2, mu_plus_gamma=4.0, I0=1.0)
P_EXT = ModelParams(N=100, beta=0.42, sigma=0.9, mu_plus_gamma=10.0, I0=90.0)

# oracle: three drift-only direct-Milstein iterates from I0=1 (dW=0, h=0.25)
MILSTEIN_DRIFT_ITERATES = (0.765, 0.58390365375, 0.44446054581544199)


class TestSchemeParams:
    def test_validation(self):
        SchemeParams(h=0.25, alpha=1.0, theta=1.5)
        with pytest.raises(ValueError):
            SchemeParams(h=0.25, alpha=0.0, theta=2.0)
        with pytest.raises(ValueError):
            SchemeParams(h=0.25, alpha=1.1, theta=2.0)
        with pytest.raises(ValueError):
            SchemeParams(h=0.25, alpha=0.5, theta=1.0)
        with pytest.raises(ValueError):
            SchemeParams(h=0.0, alpha=0.5, theta=2.0)


class TestLcmStep:
    S = SchemeParams(h=0.25, alpha=0.1, theta=2.0)

    def test_hand_substitution(self):
        # oracle: Ybar = 0 + (-1.12)(0.25) + 0 + (-0.36)(-0.125) = -0.235
        y1, truncated = lcm_step(0.0, 0.0, -0.125, P_CONV1, self.S)
        assert y1 == pytest.approx(-0.235, rel=1e-13)
        assert not truncated

    def test_truncation_branch(self):
        # the one-step map is a downward parabola in dW (gg' < 0); its vertex
        # dW = 5 gives Ybar = -0.235 + 9 - 4.5 = 4.265 >= log 10, forcing a reset
        y1, truncated = lcm_step(0.0, 5.0, 0.5 * 5.0**2 - 0.125, P_CONV1, self.S)
        assert truncated
        assert y1 == math.log(P_CONV1.N) - self.S.alpha * self.S.h**self.S.theta
        assert y1 < math.log(P_CONV1.N)

    def test_one_step_consistency(self):
        # below the boundary the step IS the unclamped Milstein expression
        rng = np.random.default_rng(11)
        for _ in range(200):
            y = rng.uniform(-8.0, 1.5)
            dw = rng.normal(0.0, 0.5)
            dz = 0.5 * dw**2 - 0.125
            fy, gy, ggy = log_coeffs(y, P_CONV1)
            expected = y + fy * self.S.h + gy * dw + ggy * dz
            got, truncated = lcm_step(y, dw, dz, P_CONV1, self.S)
            if expected < math.log(P_CONV1.N):
                assert not truncated
                assert got == expected
            else:
                assert truncated

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            lcm_step(float("nan"), 0.0, -0.125, P_CONV1, self.S)
        with pytest.raises(ValueError):
            lcm_step(0.0, float("inf"), -0.125, P_CONV1, self.S)

    def test_single_step_mean(self):
        # E[Y_1] = Y_0 + f(Y_0) h since dW and dZeta are centered; 5 SE window
        n = 1_000_000
        rng = np.random.default_rng(555)
        dw = rng.normal(0.0, math.sqrt(self.S.h), size=(n, 1))
        out = lcm_evolve(0.0, dw, self.S.h, P_CONV1, self.S, record_stride=1)
        y1 = out.y_snaps[:, 1]
        fy, _, _ = log_coeffs(0.0, P_CONV1)
        se = y1.std() / math.sqrt(n)
        assert abs(y1.mean() - fy * self.S.h) < 5.0 * se


class TestLcmSimulate:
    def test_domain_preserved_illustrative(self):
        # 100 paths at a coarse step: every state strictly inside (0, N)
        s = SchemeParams(h=0.5, alpha=0.1, theta=2.0)
        log_n = math.log(P_EXT.N)
        for idx in range(100):
            grid = generate(base_seed=900, path_index=idx, t_final=4.0, fine_steps=8)
            traj = lcm_simulate(coarsen(grid, 0), P_EXT, s)
            assert np.all(np.isfinite(traj.log_values))
            assert np.all(traj.log_values < log_n)
            assert np.all(traj.values < P_EXT.N)
            np.testing.assert_array_equal(traj.values, np.exp(traj.log_values))

    def test_truncation_count_by_recomputation(self):
        s = SchemeParams(h=0.25, alpha=0.1, theta=2.0)
        p = ModelParams(N=100, beta=0.42, sigma=0.01, mu_plus_gamma=10.0, I0=10.0)
        grid = generate(base_seed=31, path_index=0, t_final=16.0, fine_steps=64)
        inc = coarsen(grid, 0)
        traj = lcm_simulate(inc, p, s)
        count = 0
        y = math.log(p.I0)
        for k in range(len(inc)):
            y, truncated = lcm_step(y, inc.dW[k], inc.dZeta[k], p, s)
            count += truncated
        assert traj.truncation_count == count
        assert traj.truncation_count == int(traj.truncated.sum())
        assert traj.truncation_count > 0  # this parameter set truncates often
        assert y == traj.log_values[-1]  # scalar and batch routes agree exactly

    def test_accepts_grid_directly(self):
        grid = generate(base_seed=1, path_index=0, t_final=1.0, fine_steps=16)
        s = SchemeParams(h=grid.h_fine, alpha=0.1, theta=2.0)
        a = lcm_simulate(grid, P_CONV1, s)
        b = lcm_simulate(coarsen(grid, 0), P_CONV1, s)
        np.testing.assert_array_equal(a.log_values, b.log_values)

    def test_step_size_mismatch_rejected(self):
        grid = generate(1, 0, 1.0, 16)
        with pytest.raises(ValueError):
            lcm_simulate(coarsen(grid, 0), P_CONV1, SchemeParams(h=0.5, alpha=0.1, theta=2.0))

    def test_times_and_initial_state(self):
        grid = generate(1, 0, 1.0, 8)
        s = SchemeParams(h=grid.h_fine, alpha=0.1, theta=2.0)
        traj = lcm_simulate(grid, P_CONV1, s)
        np.testing.assert_allclose(traj.times, np.arange(9) * 0.125, rtol=0, atol=0)
        assert traj.values[0] == P_CONV1.I0
        assert traj.log_values[0] == math.log(P_CONV1.I0)
        assert not traj.truncated[0]

    def test_coupling_reproducibility(self):
        # level-L run is a pure function of (base_seed, path_index, L)
        s0 = SchemeParams(h=2.0**-6, alpha=0.1, theta=2.0)
        runs = []
        for _ in range(2):
            grid = generate(base_seed=77, path_index=5, t_final=1.0, fine_steps=64)
            for level in (0, 2):
                h = grid.h_fine * 2**level
                s = SchemeParams(h=h, alpha=0.1, theta=2.0)
                runs.append(lcm_simulate(coarsen(grid, level), P_CONV1, s).values)
        np.testing.assert_array_equal(runs[0], runs[2])
        np.testing.assert_array_equal(runs[1], runs[3])


class TestLcmEvolveBatch:
    def test_matches_scalar_route(self):
        s = SchemeParams(h=0.125, alpha=0.1, theta=2.0)
        dw = np.vstack([generate(8, i, 1.0, 8).increments for i in range(5)])
        out = lcm_evolve(math.log(P_EXT.I0), dw, s.h, P_EXT, s, record_stride=1)
        for i in range(5):
            y = math.log(P_EXT.I0)
            for k in range(8):
                dz = 0.5 * dw[i, k] ** 2 - 0.5 * s.h
                y, _ = lcm_step(y, dw[i, k], dz, P_EXT, s)
            assert y == out.y_snaps[i, -1]

    def test_record_stride(self):
        s = SchemeParams(h=0.25, alpha=0.1, theta=2.0)
        dw = generate(3, 0, 4.0, 16).increments[None, :]
        full = lcm_evolve(0.0, dw, s.h, P_EXT, s, record_stride=1)
        sub = lcm_evolve(0.0, dw, s.h, P_EXT, s, record_stride=4)
        np.testing.assert_array_equal(sub.y_snaps, full.y_snaps[:, ::4])
        assert sub.y_snaps.shape == (1, 5)

    def test_truncation_counts(self):
        p = ModelParams(N=100, beta=0.42, sigma=0.01, mu_plus_gamma=10.0, I0=10.0)
        s = SchemeParams(h=0.25, alpha=0.1, theta=2.0)
        dw = np.vstack([generate(21, i, 8.0, 32).increments for i in range(4)])
        out = lcm_evolve(math.log(p.I0), dw, s.h, p, s, record_flags=True)
        np.testing.assert_array_equal(out.trunc_counts, out.flags.sum(axis=1))
        assert out.trunc_counts.min() > 0


class TestMilsteinStep:
    def test_hand_substitution(self):
        # oracle: 1 + 0.125 + 0 + 2.88*(-0.125) = 0.765
        i1 = milstein_direct_step(1.0, 0.0, -0.125, P_CONV1, h=0.25)
        assert i1 == pytest.approx(0.765, rel=1e-13)

    def test_zero_is_fixed_point(self):
        for dw in (0.0, 1.0, -2.5):
            dz = 0.5 * dw**2 - 0.125
            assert milstein_direct_step(0.0, dw, dz, P_CONV1, h=0.25) == 0.0

    def test_boundary_exit(self):
        # from I=N the drift alone steps straight to the absorbing boundary
        i1 = milstein_direct_step(10.0, 0.0, -0.125, P_CONV1, h=0.25)
        assert i1 == 0.0

    def test_drift_only_iteration(self):
        I = 1.0
        for expected in MILSTEIN_DRIFT_ITERATES:
            I = milstein_direct_step(I, 0.0, -0.125, P_CONV1, h=0.25)
            assert I == pytest.approx(expected, rel=1e-12)


class TestMilsteinSimulate:
    def test_violation_fraction_at_coarse_step(self):
        # Monte Carlo oracle (scaled down from the acceptance run): the unguarded
        # scheme leaves (0, N) on most paths at h = 2^-2
        s_h = 0.25
        violated = 0
        for idx in range(32):
            grid = generate(base_seed=5150, path_index=idx, t_final=5.0, fine_steps=20)
            traj = milstein_direct_simulate(coarsen(grid, 0), P_EXT)
            violated += traj.domain_violation
        assert violated > 16

    def test_explosion_freezes_trajectory(self):
        # force explosion with a handcrafted increment sequence
        big = np.array([50.0, 50.0, 50.0, 50.0, 0.0, 0.0])
        inc = LevyIncrements(h=0.25, dW=big, dZeta=0.5 * big**2 - 0.125)
        traj = milstein_direct_simulate(inc, P_EXT)
        assert traj.exploded
        assert traj.domain_violation
        k = traj.explosion_index
        assert k is not None and k >= 1
        assert np.all(np.isnan(traj.values[k:]))
        assert np.all(np.isfinite(traj.values[:k]))
        assert traj.violation_index <= k

    def test_continues_after_finite_violation(self):
        # the iterate leaves (0,N) long before it overflows: stepping must keep
        # going through the finite-but-invalid stretch and only freeze at the
        # first non-finite state
        dw = np.zeros(12)
        inc = LevyIncrements(h=0.25, dW=dw, dZeta=0.5 * dw**2 - 0.125)
        traj = milstein_direct_simulate(inc, P_EXT)
        assert traj.domain_violation and traj.exploded
        assert traj.violation_index < traj.explosion_index
        gap = slice(traj.violation_index, traj.explosion_index)
        assert np.all(np.isfinite(traj.values[gap]))
        assert np.all(np.isnan(traj.values[traj.explosion_index:]))

    def test_fine_step_tracks_domain(self):
        grid = generate(base_seed=77, path_index=0, t_final=1.0, fine_steps=2**10)
        traj = milstein_direct_simulate(coarsen(grid, 0), P_CONV1)
        assert not traj.domain_violation
        assert not traj.exploded
        assert traj.log_values is None

    def test_batch_matches_single(self):
        dw = np.vstack([generate(13, i, 1.0, 16).increments for i in range(3)])
        out = milstein_evolve(P_EXT.I0, dw, 1.0 / 16, P_EXT, record_stride=1)
        for i in range(3):
            inc = LevyIncrements(h=1.0 / 16, dW=dw[i],
                                 dZeta=0.5 * dw[i] ** 2 - 0.5 / 16)
            traj = milstein_direct_simulate(inc, P_EXT)
            got = out.i_snaps[i]
            mask = np.isfinite(traj.values)
            np.testing.assert_array_equal(got[mask], traj.values[mask])
            np.testing.assert_array_equal(np.isnan(got), np.isnan(traj.values))


class TestDomainPreservationProperty:
    def test_random_parameter_sweep(self):
        # seeded sweep over (params, h, path); the full 10^4-draw gate lives in
        # the acceptance suite. Y must stay finite and strictly below log N.
        rng = np.random.default_rng(20240814)
        draws = 0
        while draws < 2000:
            N = float(rng.uniform(2.0, 300.0))
            beta = float(rng.uniform(0.01, 3.0))
            sigma = float(rng.uniform(0.001, 2.0))
            mug = float(rng.uniform(0.01, 20.0))
            i0 = float(rng.uniform(1e-6, 1.0 - 1e-6)) * N
            if not 0.0 < i0 < N:
                continue
            p = ModelParams(N=N, beta=beta, sigma=sigma, mu_plus_gamma=mug, I0=i0)
            h = 2.0 ** -int(rng.integers(0, 11))
            s = SchemeParams(h=h, alpha=float(rng.uniform(0.01, 1.0)),
                             theta=float(rng.uniform(1.5, 3.0)))
            n_paths = 40
            steps = 32
            dw = rng.normal(0.0, math.sqrt(h), size=(n_paths, steps))
            out = lcm_evolve(math.log(i0), dw, h, p, s, record_stride=1)
            y = out.y_snaps
            assert np.all(np.isfinite(y)), (p, s)
            assert np.all(y < math.log(N)), (p, s)
            draws += n_paths


class TestTrajectoryCsv:
    def test_lcm_layout(self):
        grid = generate(1, 0, 0.5, 4)
        s = SchemeParams(h=grid.h_fine, alpha=0.1, theta=2.0)
        traj = lcm_simulate(grid, P_CONV1, s)
        buf = io.StringIO()
        trajectory_to_csv(traj, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "t,I,Y,truncated"
        assert len(lines) == 6
        first = lines[1].split(",")
        assert float(first[0]) == 0.0
        assert float(first[1]) == 1.0
        assert first[3] == "0"

    def test_milstein_layout(self):
        grid = generate(1, 0, 0.5, 4)
        traj = milstein_direct_simulate(coarsen(grid, 0), P_CONV1)
        buf = io.StringIO()
        trajectory_to_csv(traj, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "t,I"
        assert len(lines) == 6

    def test_seventeen_digit_round_trip(self):
        traj = Trajectory(times=np.array([0.0, 0.1]),
                          values=np.array([1.0 / 3.0, 2.0 / 3.0]))
        buf = io.StringIO()
        trajectory_to_csv(traj, buf)
        row = buf.getvalue().splitlines()[1].split(",")
        assert float(row[1]) == 1.0 / 3.0
