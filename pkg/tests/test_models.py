import pytest

import misstab as mt
from misstab.models import MAR, MCAR, NMAR, Mechanism


def test_mechanism_validation():
    with pytest.raises(ValueError):
        Mechanism(MCAR, target=1)
    with pytest.raises(ValueError):
        Mechanism(MAR)
    with pytest.raises(ValueError):
        Mechanism("sometimes")


def test_spec_rejects_self_mar():
    with pytest.raises(ValueError):
        mt.ModelSpec((0,), (Mechanism(MAR, target=0),))


def test_enumeration_count(table5, table8, table4):
    assert len(mt.enumerate_models(table5)) == 4
    assert len(mt.enumerate_models(table8)) == 16
    assert len(mt.enumerate_models(table4)) == 64


def test_enumeration_order_one_missing(table5):
    labels = [s.label(table5) for s in mt.enumerate_models(table5)]
    assert labels == ["(a...)", "(ai..)", "(a.j.)", "(a..k)"]


def test_enumeration_order_two_missing(table8):
    models = mt.enumerate_models(table8)
    assert models[0].label(table8) == "(a...,b...)"
    assert models[10].label(table8) == "(a.j.,b.j.)"   # 11th model
    assert models[11].label(table8) == "(a.j.,b..k)"
    assert models[15].label(table8) == "(a..k,b..k)"
    spec = mt.parse_model_text("Y1:Y2,Y2:self", table8)
    assert mt.model_index(spec, table8) == 11


def test_category_counts_three_by_three():
    counts = mt.category_counts(3, 3)
    assert (counts["MCAR"], counts["NMAR"], counts["MAR"],
            counts["MCAR+NMAR"], counts["MCAR+MAR"], counts["NMAR+MAR"],
            counts["NMAR+MAR+MCAR"]) == (1, 1, 8, 6, 18, 18, 12)


@pytest.mark.parametrize("n", range(1, 7))
def test_category_counts_total(n):
    for k in range(1, n + 1):
        assert sum(mt.category_counts(n, k).values()) == (n + 1) ** k


def test_categories_partition_the_enumeration(table4):
    from collections import Counter
    got = Counter(s.category for s in mt.enumerate_models(table4))
    want = mt.category_counts(3, 3)
    assert dict(got) == {k: v for k, v in want.items() if v}


def test_parse_round_trip(table8):
    for spec in mt.enumerate_models(table8):
        again = mt.parse_model_text(spec.to_text(table8), table8)
        assert again == spec


def test_parse_errors(table8):
    with pytest.raises(mt.TableError):
        mt.parse_model_text("Y9:self,Y2:const", table8)
    with pytest.raises(mt.TableError):
        mt.parse_model_text("Y1:self", table8)          # Y2 unassigned
    with pytest.raises(mt.TableError):
        mt.parse_model_text("Y3:self,Y2:const", table8)  # not missing-capable
    with pytest.raises(mt.TableError):
        mt.parse_model_text("Y1:Y1,Y2:const", table8)    # self via MAR


def test_degrees_of_freedom(table5, table8, table4):
    nmar5 = mt.parse_model_text("Y1:self", table5)
    mcar5 = mt.parse_model_text("Y1:const", table5)
    assert mt.free_parameter_count(nmar5, table5) == 10
    assert mt.degrees_of_freedom(nmar5, table5) == 2
    assert mt.degrees_of_freedom(mcar5, table5) == 3
    nmar8 = mt.parse_model_text("Y1:self,Y2:self", table8)
    assert mt.free_parameter_count(nmar8, table8) == 13
    assert mt.degrees_of_freedom(nmar8, table8) == 5
    mcar8 = mt.parse_model_text("Y1:const,Y2:const", table8)
    assert mt.degrees_of_freedom(mcar8, table8) == 7
    nmar4 = mt.parse_model_text("Y1:self,Y2:self,Y3:self", table4)
    assert mt.free_parameter_count(nmar4, table4) == 18
    assert mt.degrees_of_freedom(nmar4, table4) == 9
