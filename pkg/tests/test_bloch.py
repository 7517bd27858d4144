"""Formal Bloch-group arithmetic and the dossier-driven residue elements."""

import math
from fractions import Fraction

import pytest

from mahlerlab.bloch import (
    AlgebraicPoint,
    CurveDossier,
    DProfile,
    FormalDilogSum,
    MissingValueError,
    d_profile,
    dossier_residue_sum,
    galois_expand,
    load_dossiers,
    normalize,
    residue_element,
)

DOSSIERS = load_dossiers()

ALPHA = AlgebraicPoint(
    (1, -1, 1),
    (complex(0.5, math.sqrt(3) / 2), complex(0.5, -math.sqrt(3) / 2)),
)


class TestAlgebraicPoint:
    def test_validates_minpoly(self):
        with pytest.raises(ValueError):
            AlgebraicPoint((1, -1, 1), (0.5 + 0.1j,))

    def test_embeddings_distinct(self):
        with pytest.raises(ValueError):
            AlgebraicPoint((1, 0, -2, 0, 1), (1.0 + 0j, 1.0 + 0j))

    def test_inverse(self):
        inv = ALPHA.inverse()
        assert abs(inv.embeddings[0] - 1 / ALPHA.embeddings[0]) < 1e-14
        assert inv.minpoly == (1, -1, 1)


class TestNormalize:
    def test_degenerate_conventions(self):
        s = FormalDilogSum([(1, "0"), (2, "1"), (3, "inf")])
        assert normalize(s).is_empty()

    def test_cancellation(self):
        s = FormalDilogSum([(3, ALPHA), (-3, ALPHA)])
        assert normalize(s).is_empty()

    def test_merge(self):
        two = AlgebraicPoint.rational(Fraction(2))
        s = normalize(FormalDilogSum([(1, two), (1, two)]))
        assert len(s) == 1 and s.terms[0][0] == 2

    def test_inversion_rule(self):
        half = AlgebraicPoint.rational(Fraction(1, 2))
        two = AlgebraicPoint.rational(Fraction(2))
        s = normalize(FormalDilogSum([(-1, half)]))
        assert len(s) == 1
        c, arg = s.terms[0]
        assert c == 1 and arg.same_number(two)

    def test_minus_one_is_two_torsion(self):
        s = normalize(FormalDilogSum([(5, AlgebraicPoint.rational(Fraction(-1)))]))
        assert s.is_empty()

    def test_idempotent(self):
        s = FormalDilogSum(
            [(1, "0"), (2, ALPHA), (-1, ALPHA.inverse()), (1, "inf")]
        )
        once = normalize(s)
        twice = normalize(once)
        assert len(once) == len(twice)
        for (c1, a1), (c2, a2) in zip(once.terms, twice.terms):
            assert c1 == c2 and a1.same_number(a2)


class TestDProfile:
    def test_empty_sum_trivial(self):
        prof = d_profile(FormalDilogSum([]))
        assert prof.verdict == "trivial"
        assert prof.is_numerically_trivial

    def test_real_argument_inconclusive(self):
        prof = d_profile(FormalDilogSum([(1, AlgebraicPoint.rational(Fraction(2)))]))
        assert prof.verdict == "inconclusive"
        assert prof.is_numerically_trivial
        assert max(abs(v) for v in prof.values) <= 1e-15

    def test_sixth_root_nontrivial(self):
        prof = d_profile(FormalDilogSum([(-1, ALPHA)]))
        assert prof.verdict == "nontrivial"
        assert not prof.is_numerically_trivial
        # conjugate embeddings carry negated values
        assert abs(prof.values[0] + prof.values[1]) <= 1e-13

    def test_incompatible_embeddings_rejected(self):
        three = AlgebraicPoint(
            (-1, 0, 0, 1),
            (
                1.0 + 0j,
                complex(-0.5, math.sqrt(3) / 2),
                complex(-0.5, -math.sqrt(3) / 2),
            ),
        )
        with pytest.raises(ValueError):
            d_profile(FormalDilogSum([(1, ALPHA), (1, three)]))


class TestResidueElements:
    def test_21a1_point_B_gives_two(self):
        u = residue_element(DOSSIERS["21a1"], "B")
        assert len(u) == 1
        c, arg = u.terms[0]
        assert c == 1
        assert arg.same_number(AlgebraicPoint.rational(Fraction(2)))
        prof = d_profile(u)
        assert prof.verdict == "inconclusive"  # nontrivial claim is D-invisible

    def test_45a2_point_A_negative_alpha_multiple(self):
        u = residue_element(DOSSIERS["45a2"], "A")
        assert len(u) == 1
        c, arg = u.terms[0]
        assert arg.same_number(ALPHA)
        assert c < 0  # a negative rational multiple of {alpha}_2
        prof = d_profile(u)
        assert prof.verdict == "nontrivial"

    def test_48a1_point_P3_trivial(self):
        u = residue_element(DOSSIERS["48a1"], "P3")
        assert u.is_empty()
        assert d_profile(u).verdict == "trivial"

    def test_48a1_units_give_zero(self):
        for name in ("O", "A", "B", "A+B"):
            assert residue_element(DOSSIERS["48a1"], name).is_empty()

    def test_14a4_all_points_trivial(self):
        for lbl in ("14a4", "14a4b"):
            d = DOSSIERS[lbl]
            for name in d.point_names():
                assert residue_element(d, name).is_empty(), (lbl, name)

    def test_90b1_printed_point(self):
        u = residue_element(DOSSIERS["90b1"], "B1")
        assert len(u) == 1
        prof = d_profile(u)
        assert prof.verdict == "inconclusive"  # real quadratic argument

    def test_90b1_partial_data_raises(self):
        with pytest.raises(MissingValueError):
            residue_element(DOSSIERS["90b1"], "B3")

    def test_unknown_point_rejected(self):
        with pytest.raises(MissingValueError):
            residue_element(DOSSIERS["21a1"], "17B")


class TestGlobalResidueSum:
    def test_geometric_sums_vanish(self):
        for lbl in ("21a1", "14a4", "14a4b", "45a2", "48a1"):
            total = dossier_residue_sum(DOSSIERS[lbl])
            prof = d_profile(total)
            assert max(abs(v) for v in prof.values) <= 1e-8, lbl

    def test_galois_expand_counts(self):
        u = residue_element(DOSSIERS["45a2"], "A")
        expanded = galois_expand(u)
        assert len(expanded) == 2  # both embeddings of the quadratic field


class TestDossierShape:
    def test_divisors_have_degree_zero(self):
        # weight degree-2 points (split closed points) by their two names
        deg2 = {"P1", "P2", "P3", "B1", "B2", "B3", "B4", "B5", "B6"}
        for d in DOSSIERS.values():
            for name in d.divisors:
                total = 0
                for p, v in d.divisors[name].items():
                    total += v * (2 if p in deg2 else 1)
                assert total == 0, (d.curve, name)

    def test_entry_evaluation_from_coordinates(self):
        # where coordinates are stored and finite, direct evaluation agrees
        # with the stored entry values
        d = DOSSIERS["21a1"]
        u = residue_element(d, "2B")  # uses f = -x at 2B via stored table
        v = d.valuation([["1+(x+1)*y", 1]], "2B")
        assert v == 2
        assert u.is_empty()  # {-1}_2 is 2-torsion
