"""Tests for PEG construction, systematic encoding and alist I/O."""

import numpy as np
import pytest

from onebit_idd.ldpc import construct_code, encode, load_alist, save_alist
from onebit_idd.ldpc.code import has_four_cycle


class TestConstruction:
    def test_deterministic_per_seed(self):
        h1 = construct_code(512, 0.5, seed=11).h
        h2 = construct_code(512, 0.5, seed=11).h
        np.testing.assert_array_equal(h1, h2)

    def test_seeds_differ(self):
        h1 = construct_code(128, 0.5, seed=0).h
        h2 = construct_code(128, 0.5, seed=1).h
        assert np.any(h1 != h2)

    def test_regular_three_six(self, code512):
        assert code512.h.shape == (256, 512)
        np.testing.assert_array_equal(code512.h.sum(axis=0), 3)
        np.testing.assert_array_equal(code512.h.sum(axis=1), 6)

    def test_total_ones(self, code512):
        assert int(code512.h.sum()) == 1536

    def test_girth_at_least_six(self, code512):
        assert not has_four_cycle(code512.h)

    def test_invalid_profile(self):
        with pytest.raises(ValueError):
            construct_code(100, 0.3)  # 3*100 not divisible by 70


class TestEncoding:
    def test_all_zero(self, code512):
        cw = encode(np.zeros(256, dtype=np.uint8), code512)
        assert not cw.any()

    def test_zero_syndrome_random_messages(self, code512):
        rng = np.random.default_rng(0)
        msgs = rng.integers(0, 2, (20, 256)).astype(np.uint8)
        cws = encode(msgs, code512)
        assert not ((cws @ code512.h.T) % 2).any()

    def test_unit_messages_are_generator_rows(self, code512):
        g = code512.generator
        eye = np.eye(256, dtype=np.uint8)
        np.testing.assert_array_equal(encode(eye, code512), g)

    def test_systematic_positions(self, code512):
        rng = np.random.default_rng(1)
        msg = rng.integers(0, 2, 256).astype(np.uint8)
        cw = encode(msg, code512)
        np.testing.assert_array_equal(cw[code512.message_cols], msg)

    def test_generator_orthogonal_to_h(self, code512):
        assert not ((code512.generator @ code512.h.T) % 2).any()

    def test_wrong_length_rejected(self, code512):
        with pytest.raises(ValueError):
            encode(np.zeros(255, dtype=np.uint8), code512)


class TestAlist:
    def test_roundtrip(self, tmp_path, small_code):
        path = tmp_path / "code.alist"
        save_alist(small_code, path)
        h = load_alist(path)
        np.testing.assert_array_equal(h, small_code.h)

    def test_format_header(self, tmp_path, small_code):
        path = tmp_path / "code.alist"
        save_alist(small_code, path)
        lines = path.read_text().splitlines()
        n, m = small_code.h.shape[1], small_code.h.shape[0]
        assert lines[0] == f"{n} {m}"
        assert lines[1] == "3 6"
        assert len(lines) == 4 + n + m

    def test_reproducible_from_seed_alone(self, tmp_path):
        # a code written to disk equals a fresh construction from the seed
        code = construct_code(96, 0.5, seed=7)
        path = tmp_path / "c.alist"
        save_alist(code, path)
        again = construct_code(96, 0.5, seed=7)
        np.testing.assert_array_equal(load_alist(path), again.h)
