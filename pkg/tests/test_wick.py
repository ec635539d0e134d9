import itertools

import pytest
from hypothesis import given, settings, strategies as st

from threeregion.errors import ConfigurationError, DomainError
from threeregion.rho import synthetic_dominance_set
from threeregion.wick import (OperatorLabel, derived_amplitudes, double_factorial, entry_string,
                              expand, label_name, npoint, pairings, parse_string)


@pytest.mark.parametrize("n,count", [(0, 1), (2, 1), (4, 3), (6, 15), (8, 105), (12, 10395)])
def test_pairing_counts(n, count):
    assert len(pairings(n)) == count == double_factorial(n - 1)


def test_pairings_sorted_and_perfect():
    ms = pairings(6)
    assert ms == sorted(ms)
    for m in ms:
        assert all(i < j for i, j in m)
        assert sorted(itertools.chain.from_iterable(m)) == list(range(6))


@pytest.mark.parametrize("n", [3, -2, 14])
def test_pairings_rejects(n):
    with pytest.raises(DomainError):
        pairings(n)


def test_odd_string_vanishes():
    ops = parse_string("ABC", "-++")
    assert npoint(ops, lambda l, r: 1.0) == 0


def test_four_point_bcbc_enumeration():
    vals = {("B", "-", "C", "-"): 2.0, ("B", "-", "B", "+"): 3.0, ("C", "-", "C", "+"): 5.0,
            ("B", "-", "C", "+"): 7.0, ("C", "-", "B", "+"): 11.0, ("B", "+", "C", "+"): 13.0}
    pf = lambda l, r: vals[(l.detector, l.sign, r.detector, r.sign)]
    ops = parse_string("BCBC", "--++")
    # d_BC^-- d_BC^++ + d_BB^-+ d_CC^-+ + d_BC^-+ d_CB^-+
    assert npoint(ops, pf) == 2 * 13 + 3 * 5 + 7 * 11


def test_missing_pair_named():
    with pytest.raises(ConfigurationError, match="OperatorLabel"):
        npoint(parse_string("AB", "-+"), lambda l, r: {}[l])


def test_expand_text():
    assert expand(parse_string("BCBC", "--++")) == (
        "d_BCBC^--++ = d_BC^--·d_BC^++ + d_BB^-+·d_CC^-+ + d_BC^-+·d_CB^-+")


def test_entry_string_layout():
    # row ↓↑↑, column ↑↑↓
    assert label_name(entry_string(3, 6)) == "d_ABBC^--++"
    assert label_name(entry_string(7, 7)) == "d_ABCABC^---+++"


def test_derived_zero_base():
    d = derived_amplitudes(synthetic_dominance_set(1e-300).scaled(0.0))
    assert all(v == 0 for v in d.values())


@pytest.mark.parametrize("s", [1e-3, 0.1, 1.0])
def test_derived_dominance_set(s):
    d = derived_amplitudes(synthetic_dominance_set(s))
    assert d["d_BCBC^--++"] == pytest.approx(s * s)
    assert d["d_ACBC^--++"] == pytest.approx(s * s)
    assert d["d_ABAB^--++"] == 0
    assert d["d_ABCABC^---+++"] == 0
    assert d.config_id == f"synthetic-dominance-{s!r}"


def test_physical_bcbc_nonnegative(physical_sets):
    for s in physical_sets.values():
        assert derived_amplitudes(s)["d_BCBC^--++"].real >= -1e-15


labels = st.builds(OperatorLabel, st.sampled_from("ABC"), st.sampled_from("-+"))


@settings(max_examples=60, deadline=None)
@given(st.lists(labels, min_size=0, max_size=8), st.floats(0.1, 3.0))
def test_npoint_homogeneous_in_pair_scale(ops, lam):
    base = lambda l, r: complex(1 + ord(l.detector) % 3 + 2 * (l.sign == "+"),
                                ord(r.detector) % 5 - (r.sign == "-"))
    a = npoint(ops, base)
    b = npoint(ops, lambda l, r: lam * base(l, r))
    assert b == pytest.approx(lam ** (len(ops) // 2) * a, rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(labels, min_size=2, max_size=8).filter(lambda x: len(x) % 2 == 0))
def test_npoint_unit_pairs_counts_matchings(ops):
    assert npoint(ops, lambda l, r: 1.0) == double_factorial(len(ops) - 1)
