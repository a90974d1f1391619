from fractions import Fraction

import pytest
from pydantic import ValidationError

from src.core.wta import GrammarRule, Wtg
from src.tools.oracle_tool import ImageOracleInput, ImageOracleTool, OracleResult, image_candidates, preimage_sum
from tests.conftest import T, load_fixture


def test_preimage_sum(hom_image_wta, hom_image_h):
    assert preimage_sum(hom_image_wta, hom_image_h, T("f(a,g(a,a),g(a,a))")) == 2
    assert preimage_sum(hom_image_wta, hom_image_h, T("f(a,g(a,a),a)")) == 0


def test_constructed_image_passes(hom_image_wta, hom_image_h):
    tool = ImageOracleTool(hom_image_wta, hom_image_h)
    result = tool.run(max_height=3)
    assert result.passed
    assert result.mismatch is None
    assert result.checked > 0
    assert result.max_height == 3


def test_merged_image_passes():
    tool = ImageOracleTool(load_fixture("relabel.wtg"), load_fixture("relabel.hom"))
    assert tool.run(max_height=3).passed


def test_corrupt_image_fails(hom_image_wta, hom_image_h):
    tool = ImageOracleTool(hom_image_wta, hom_image_h, image=load_fixture("image_corrupt.wtah"))
    result = tool.run(max_height=3)
    assert not result.passed
    assert result.checked == 2
    assert result.mismatch.tree == "f(g(a,a),a,a)"
    assert result.mismatch.expected == "2"
    assert result.mismatch.actual == "3"
    assert ImageOracleTool.format_result(result) == (
        "ORACLE: fail\n"
        "checked 2 trees of height <= 3\n"
        "first mismatch: f(g(a,a),a,a) (preimage sum 2, image 3)\n")


def test_height_zero_has_no_candidates(hom_image_wta, hom_image_h):
    tool = ImageOracleTool(hom_image_wta, hom_image_h)
    assert image_candidates(hom_image_wta, hom_image_h, tool.image, 0) == []
    result = tool.run(max_height=0)
    assert result == OracleResult(passed=True, checked=0, max_height=0)
    assert ImageOracleTool.format_result(result) == "ORACLE: pass\nchecked 0 trees of height <= 0\n"


def test_candidates_are_sorted(hom_image_wta, hom_image_h):
    tool = ImageOracleTool(hom_image_wta, hom_image_h)
    candidates = image_candidates(hom_image_wta, hom_image_h, tool.image, 2)
    assert candidates == [T("f(a,a,a)"), T("f(g(a,a),a,a)"), T("f(a,g(a,a),g(a,a))"),
                          T("f(g(a,a),g(a,a),g(a,a))")]


def test_negative_height_is_rejected(hom_image_wta, hom_image_h):
    with pytest.raises(ValidationError):
        ImageOracleInput(max_height=-1)
    with pytest.raises(ValidationError):
        ImageOracleTool(hom_image_wta, hom_image_h).run(max_height=-1)


@pytest.mark.parametrize("wtg,hom", [("hom_image.wtg", "hom_image.hom"), ("relabel.wtg", "relabel.hom")])
def test_fixture_pairs_pass_at_height_four(wtg, hom):
    result = ImageOracleTool(load_fixture(wtg), load_fixture(hom)).run(max_height=4)
    assert result.passed
    assert result.max_height == 4


def test_merged_symbols_pass_at_height_four():
    h = load_fixture("tetris.hom")
    A = Wtg(["q", "qf"],
            [GrammarRule(T("alpha"), "q", Fraction(1)),
             GrammarRule(T("beta"), "q", Fraction(-3)),
             GrammarRule(T("psi(q,q)"), "qf", Fraction(1))],
            {"qf": 1}, alphabet=h.source)
    assert ImageOracleTool(A, h).run(max_height=4).passed
