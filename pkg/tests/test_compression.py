import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skilltext.compression import (COUNT_BITS, LENGTH_BITS, Catalog, CodecConfig, MalformedBitstream,
                                   cost_breakdown, decode_text, encode_text, expected_bits, measure_corpus,
                                   synthetic_corpus)
from skilltext.density_evolution import de_solve_single
from skilltext.graph_model import SingleClassConfig, sample_single_class
from skilltext.learners import psi_one_skill
from skilltext.peeling import run_scns


class TestExpectedBits:
    def test_no_texts_is_pure_fallback(self):
        b = cost_breakdown(CodecConfig(10_000, 3.0, 0.0))
        assert b.expected_bits == 236.4 and b.degenerate

    def test_breakeven(self):
        assert expected_bits(CodecConfig(2 ** 47.28, 5.0, 1000.0)) == pytest.approx(236.4, abs=1e-9)

    def test_gain_at_2_20(self):
        assert expected_bits(CodecConfig(2 ** 20, 5.0, 1000.0)) == pytest.approx(100.0, abs=1e-9)

    def test_matches_formula(self):
        c, R, n, z = 3.0, 1.4, 5000.0, 200.0
        p = float(de_solve_single(c, R).p)
        a = math.exp(-c * math.exp(-c * R * (1 - p)))
        ref = a * c * math.log2(n * (1 - math.exp(-c * R * (1 - p)))) + (1 - a) * z
        assert expected_bits(CodecConfig(n, c, R, lossless_bits_per_text=z)) == pytest.approx(ref, rel=1e-12)

    @given(st.floats(2.0, 1e12), st.floats(1.0, 100.0), st.floats(0.5, 6.0), st.floats(0.0, 4.0))
    @settings(max_examples=200, deadline=None)
    def test_non_decreasing_in_num_skills(self, n, factor, c, R):
        # the < 2 learned-skill fallback is a step down, so compare only non-degenerate points
        a = cost_breakdown(CodecConfig(n, c, R))
        b = cost_breakdown(CodecConfig(n * factor, c, R))
        if a.degenerate or b.degenerate:
            return
        assert b.expected_bits >= a.expected_bits - 1e-9

    def test_rejects_negative_z(self):
        with pytest.raises(ValueError):
            CodecConfig(100, 3.0, 1.0, lossless_bits_per_text=-1.0)


class TestCodec:
    cat = Catalog(np.array([2, 5, 9, 11, 40]))

    def test_width(self):
        assert self.cat.width == 3
        assert Catalog(np.array([4])).width == 0
        assert Catalog(np.arange(1024)).width == 10
        assert Catalog(np.arange(1025)).width == 11

    def test_empty_text(self):
        bits = encode_text([], self.cat)
        assert bits == "1" + "0" * COUNT_BITS
        assert decode_text(bits, self.cat) == frozenset()

    def test_semantic_layout(self):
        bits = encode_text([9, 2], self.cat, b"ignored")
        assert bits == "1" + format(2, "016b") + "000" + "010"
        assert decode_text(bits, self.cat) == {2, 9}

    def test_fallback_round_trip(self):
        raw = bytes(range(256))
        bits = encode_text([2, 3], self.cat, raw)
        assert bits[0] == "0" and len(bits) == 1 + LENGTH_BITS + 8 * 256
        assert decode_text(bits, self.cat) == raw

    def test_single_skill_catalog(self):
        cat = Catalog(np.array([7]))
        assert decode_text(encode_text([7, 7], cat), cat) == {7}

    @pytest.mark.parametrize("bits", ["", "2", "1" + "0" * 5, "1" + format(1, "016b") + "00",
                                      "1" + format(0, "016b") + "1", "0" + "0" * 10,
                                      "0" + format(2, "032b") + "0" * 8])
    def test_malformed(self, bits):
        with pytest.raises(MalformedBitstream):
            decode_text(bits, self.cat)

    def test_index_out_of_range(self):
        with pytest.raises(MalformedBitstream):
            decode_text("1" + format(1, "016b") + "111", self.cat)

    def test_catalog_must_be_sorted(self):
        with pytest.raises(ValueError):
            Catalog(np.array([3, 1]))

    @given(st.lists(st.integers(0, 60), max_size=12), st.binary(max_size=40))
    def test_round_trip_property(self, skills, raw):
        out = decode_text(encode_text(skills, self.cat, raw), self.cat)
        if set(skills) <= set(self.cat.skills.tolist()):
            assert out == frozenset(skills)
        else:
            assert out == raw


def test_corpus_round_trip_and_path_choice():
    graph = sample_single_class(SingleClassConfig(3000, 1.5, 3.0, seed=6))
    learned = run_scns(graph, psi_one_skill()).learned
    cat = Catalog.from_learned(learned)
    for skills, raw in synthetic_corpus(6, 10_000, 3.0, 3000, 30):
        bits = encode_text(skills, cat, raw)
        understood = bool(learned[skills].all())
        assert (bits[0] == "1") == understood
        out = decode_text(bits, cat)
        assert out == (frozenset(skills.tolist()) if understood else raw)


def test_corpus_accounting():
    rep = measure_corpus(CodecConfig(4000, 3.0, 2.0), num_texts=3000, seed=1)
    overhead = rep.semantic_fraction * (1 + COUNT_BITS) + (1 - rep.semantic_fraction) * (1 + LENGTH_BITS)
    assert rep.mean_bits == pytest.approx(rep.mean_payload_bits + overhead, abs=1e-9)
    assert 0.9 < rep.semantic_fraction <= 1.0
    assert rep.expected_bits_catalog == pytest.approx(
        cost_breakdown(CodecConfig(4000, 3.0, 2.0), rep.catalog_size).expected_bits)
