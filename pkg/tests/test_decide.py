from fractions import Fraction

import pytest
from pydantic import ValidationError

from src.core.decide import DecisionSettings, decide_hom, linearize, render_report, summary_block
from src.core.errors import HomomorphismException, LinearizationException, NotTetrisFreeException, PreconditionException
from src.core.hatldp import decide_ldp, pumping_constant, validate_hat_preconditions
from src.core.hom import Homomorphism
from src.core.terms import enumerate_trees
from src.core.wta import GrammarRule, Wtg
from src.tools.oracle_tool import preimage_sum
from tests.conftest import T, load_fixture, shuffle_and_rename


def test_linearize_bounded_duplication(fin):
    G = linearize(fin, 2)
    assert G.name == "lin_fin"
    assert set(G.rules) == {GrammarRule(T("a"), "q", Fraction(1)), GrammarRule(T("f(a,a)"), "qf", Fraction(1))}
    assert G.final_weights == {"qf": Fraction(1)}
    assert G.evaluate(T("f(a,a)")) == fin.evaluate(T("f(a,a)")) == 1


def test_linearize_refuses_the_ldp(image_of_a):
    with pytest.raises(LinearizationException):
        linearize(image_of_a, 2, check=True)


def test_linearize_rule_limit(fin):
    with pytest.raises(LinearizationException):
        linearize(fin, 2, max_rules=1)


def test_linearize_equals_the_series_without_the_ldp(fin):
    G = linearize(fin, pumping_constant(fin), check=True)
    trees = enumerate_trees(fin.alphabet, 3)
    assert len(trees) == 26
    for t in trees:
        assert G.evaluate(t) == fin.evaluate(t)


def test_linearize_agrees_below_the_constant(image_of_a):
    G = linearize(image_of_a, 2)
    for t in [T("f(a,a,a)"), T("f(a,g(a,a),g(a,a))"), T("f(g(a,g(a,a)),a,a)")]:
        assert G.evaluate(t) == image_of_a.evaluate(t)


def test_nonregular_image(hom_image_wta, hom_image_h):
    decision = decide_hom(hom_image_wta, hom_image_h)
    assert not decision.regular
    assert decision.grammar is None
    assert decision.certificate is decision.ldp
    assert decision.ldp.witness.tree == T("f(a,g(a,g(a,a)),g(a,g(a,a)))")
    assert [stage.name for stage in decision.trace] == ["tetris-free", "hom-image", "ldp"]
    assert len(decision.image.rules) == 6


def test_regular_image():
    A = load_fixture("relabel.wtg")
    h = load_fixture("relabel.hom")
    decision = decide_hom(A, h)
    assert decision.regular
    assert decision.certificate is decision.grammar
    assert decision.grammar.name == "lin_R'"
    assert len(decision.grammar.rules) == 3
    assert decision.grammar.evaluate(T("f(g(a),a)")) == Fraction(-3, 2)
    assert [stage.name for stage in decision.trace] == ["tetris-free", "hom-image", "ldp", "linearize"]
    for t in enumerate_trees(h.target, 3):
        assert decision.grammar.evaluate(t) == preimage_sum(A, h, t)


@pytest.mark.parametrize("wtg,hom,witness", [
    ("B.wtg", "h_star.hom", ("psi(gamma(alpha),alpha)", "phi(alpha,alpha)")),
    ("C.wtg", "h_kappa.hom", ("psi(alpha,alpha)", "kappa(alpha,alpha)")),
    ("tetris_prime.wtg", "tetris_prime.hom", ("psi(alpha,alpha)", "beta")),
])
def test_rejects_homomorphisms_that_are_not_tetris_free(wtg, hom, witness):
    with pytest.raises(NotTetrisFreeException) as info:
        decide_hom(load_fixture(wtg), load_fixture(hom))
    assert info.value.witness == (T(witness[0]), T(witness[1]))


def test_rejects_erasing_homomorphisms():
    A = Wtg(["q"], [GrammarRule(T("alpha"), "q"), GrammarRule(T("gamma(q)"), "q")], {"q": 1})
    h = Homomorphism({"alpha": T("a"), "gamma": T("x1")})
    with pytest.raises(HomomorphismException):
        decide_hom(A, h)


def test_settings_are_validated():
    with pytest.raises(ValidationError):
        DecisionSettings(max_rules=0)
    assert DecisionSettings().tetris_oracle_height >= 0


def test_nonregular_report(hom_image_wta, hom_image_h):
    decision = decide_hom(hom_image_wta, hom_image_h)
    report = render_report(decision)
    lines = report.splitlines()
    assert lines[0] == "RESULT: NONREGULAR"
    assert lines[1] == "LDP witness: f(a,g(a,g(a,a)),g(a,g(a,a))) at e, constrained 2, height 2"
    assert "witness=f(a,g(a,g(a,a)),g(a,g(a,a)))" in lines
    assert "witness_constrained_position=2" in lines
    assert "pumping_constant=2" in lines


def test_regular_summary_block():
    decision = decide_hom(load_fixture("relabel.wtg"), load_fixture("relabel.hom"))
    values = summary_block(decision)
    assert values["result"] == "REGULAR"
    assert values["certificate_rules"] == "3"
    assert values["image_rules"] == "6"
    assert "witness" not in values
    assert set(k for k in values if k.startswith("seconds_")) == {
        "seconds_tetris_free", "seconds_hom_image", "seconds_ldp", "seconds_linearize"}
    assert render_report(decision).startswith("RESULT: REGULAR\ncertificate: lin_R' with 3 rules\n")


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("wtg,hom", [("hom_image.wtg", "hom_image.hom"), ("relabel.wtg", "relabel.hom")])
def test_decision_ignores_rule_order_and_state_names(wtg, hom, seed):
    A = load_fixture(wtg)
    h = load_fixture(hom)
    expected = decide_hom(A, h)
    decision = decide_hom(shuffle_and_rename(A, seed), h)
    assert decision.regular == expected.regular
    assert decision.ldp.pumping_constant == expected.ldp.pumping_constant
    assert len(decision.image.rules) == len(expected.image.rules)
    if expected.regular:
        assert len(decision.grammar.rules) == len(expected.grammar.rules)
        for t in enumerate_trees(h.target, 3):
            assert decision.grammar.evaluate(t) == expected.grammar.evaluate(t)
    else:
        assert decision.ldp.witness == expected.ldp.witness


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_ldp_ignores_rule_order_and_state_names(subsequence, fin, seed):
    shuffled = shuffle_and_rename(subsequence, seed)
    for t in enumerate_trees(subsequence.alphabet, 3):
        assert shuffled.evaluate(t) == subsequence.evaluate(t)
    expected = decide_ldp(subsequence)
    report = decide_ldp(shuffled)
    assert report.has_ldp and expected.has_ldp
    assert report.pumping_constant == expected.pumping_constant == 4
    assert report.witness == expected.witness

    shuffled_fin = shuffle_and_rename(fin, seed)
    assert not decide_ldp(shuffled_fin).has_ldp
    G = linearize(shuffled_fin, pumping_constant(shuffled_fin), check=True)
    for t in enumerate_trees(fin.alphabet, 3):
        assert G.evaluate(t) == fin.evaluate(t)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_rejection_ignores_rule_order_and_state_names(cancelling_ldp, seed):
    shuffled = shuffle_and_rename(cancelling_ldp, seed)
    for t in enumerate_trees(cancelling_ldp.alphabet, 3):
        assert shuffled.evaluate(t) == cancelling_ldp.evaluate(t)
    assert not validate_hat_preconditions(shuffled).valid
    with pytest.raises(PreconditionException):
        decide_ldp(shuffled)
