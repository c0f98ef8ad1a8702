"""Brownian grid generation, coarse aggregation, and the binary dump format."""

import math

import numpy as np
import pytest

from sislab.paths import (
    BrownianGrid,
    LevyAreaIncrement,
    coarsen,
    generate,
    load_increments,
    path_rng,
    save_increments,
)


class TestGenerate:
    def test_determinism(self):
        a = generate(base_seed=42, path_index=3, t_final=1.0, fine_steps=256)
        b = generate(base_seed=42, path_index=3, t_final=1.0, fine_steps=256)
        np.testing.assert_array_equal(a.increments, b.increments)
        assert a.seed_record == (42, 3)

    def test_distinct_paths_differ(self):
        a = generate(42, 0, 1.0, 256)
        b = generate(42, 1, 1.0, 256)
        assert not np.array_equal(a.increments, b.increments)

    def test_distinct_base_seeds_differ(self):
        a = generate(1, 0, 1.0, 256)
        b = generate(2, 0, 1.0, 256)
        assert not np.array_equal(a.increments, b.increments)

    def test_rejects_zero_steps(self):
        with pytest.raises(ValueError):
            generate(0, 0, 1.0, 0)

    def test_h_fine(self):
        grid = generate(0, 0, 2.0, 1024)
        assert grid.h_fine == 2.0 / 1024

    def test_increment_moments(self):
        # CLT bound: |mean| < 4 sqrt(h/n); chi-square: var within 2% of h
        h = 2.0**-10
        n = 1_000_000
        grid = generate(base_seed=2024, path_index=0, t_final=n * h, fine_steps=n)
        assert abs(grid.increments.mean()) < 4.0 * math.sqrt(h / n)
        assert abs(grid.increments.var() / h - 1.0) < 0.02

    def test_negative_base_seed_is_stable(self):
        # seeds are reduced mod 2^64 before keying the generator
        a = generate(-1, 0, 1.0, 16)
        b = generate(2**64 - 1, 0, 1.0, 16)
        np.testing.assert_array_equal(a.increments, b.increments)


class TestPathRng:
    def test_keyed_by_pair(self):
        x = path_rng(7, 11).standard_normal(8)
        y = path_rng(7, 11).standard_normal(8)
        np.testing.assert_array_equal(x, y)
        z = path_rng(11, 7).standard_normal(8)
        assert not np.array_equal(x, z)


class TestCoarsen:
    def test_identity_level(self):
        grid = generate(5, 0, 1.0, 64)
        inc = coarsen(grid, 0)
        np.testing.assert_array_equal(inc.dW, grid.increments)
        np.testing.assert_array_equal(inc.dZeta, 0.5 * inc.dW**2 - 0.5 * grid.h_fine)

    def test_pairwise_additivity(self):
        grid = BrownianGrid(t_final=1.0, fine_steps=2,
                            increments=np.array([0.25, -0.0625]), seed_record=(0, 0))
        inc = coarsen(grid, 1)
        assert len(inc) == 1
        assert inc.dW[0] == 0.25 + -0.0625

    def test_zero_increment_dzeta(self):
        grid = BrownianGrid(t_final=1.0, fine_steps=4,
                            increments=np.zeros(4), seed_record=(0, 0))
        inc = coarsen(grid, 2)
        assert inc.h == 1.0
        assert inc.dZeta[0] == -0.5

    def test_sequence_protocol(self):
        grid = generate(5, 0, 1.0, 16)
        inc = coarsen(grid, 2)
        assert len(inc) == 4
        item = inc[1]
        assert isinstance(item, LevyAreaIncrement)
        assert item.dW == inc.dW[1]
        assert item.dZeta == 0.5 * item.dW**2 - 0.5 * inc.h

    def test_exact_cell_sums(self):
        # each coarse increment must equal the numpy reduction of its fine cell
        grid = generate(9, 4, 1.0, 1024)
        for level in (1, 3, 5, 10):
            width = 2**level
            inc = coarsen(grid, level)
            cells = grid.increments.reshape(-1, width)
            np.testing.assert_array_equal(inc.dW, cells.sum(axis=1))
            # and stay within float-noise of an exactly-rounded summation
            exact = np.array([math.fsum(c) for c in cells])
            np.testing.assert_allclose(inc.dW, exact, rtol=0, atol=1e-13)

    def test_telescoping_to_total(self):
        grid = generate(9, 4, 1.0, 1024)
        total = grid.increments.sum()
        for level in (0, 2, 4, 8):
            assert coarsen(grid, level).dW.sum() == pytest.approx(total, abs=1e-12)

    def test_rejects_non_dividing_level(self):
        grid = generate(0, 0, 1.0, 12)
        with pytest.raises(ValueError):
            coarsen(grid, 3)  # 8 does not divide 12

    def test_martingale_moments(self):
        # E[dZeta] = 0 and E[dW dZeta] = 0, each within 4 standard errors
        grid = generate(base_seed=77, path_index=0, t_final=200.0, fine_steps=200_000)
        inc = coarsen(grid, 0)
        n = len(inc)
        for s in (inc.dZeta, inc.dW * inc.dZeta):
            se = s.std() / math.sqrt(n)
            assert abs(s.mean()) < 4.0 * se


class TestBinaryDump:
    def test_round_trip(self, tmp_path):
        grid = generate(base_seed=123, path_index=45, t_final=2.5, fine_steps=512)
        fname = tmp_path / "path.bin"
        save_increments(grid, fname)
        back = load_increments(fname)
        assert back.t_final == grid.t_final
        assert back.fine_steps == grid.fine_steps
        assert back.seed_record == grid.seed_record
        np.testing.assert_array_equal(back.increments, grid.increments)

    def test_layout_is_little_endian_f64(self, tmp_path):
        import struct

        grid = BrownianGrid(t_final=1.0, fine_steps=2,
                            increments=np.array([1.5, -2.25]), seed_record=(7, 9))
        fname = tmp_path / "p.bin"
        save_increments(grid, fname)
        raw = fname.read_bytes()
        t, m, seed, idx = struct.unpack("<dQQQ", raw[:32])
        assert (t, m, seed, idx) == (1.0, 2, 7, 9)
        assert struct.unpack("<2d", raw[32:]) == (1.5, -2.25)
