from fractions import Fraction

import pytest

from src.core.errors import GrammarException
from src.core.terms import BOT
from src.core.wta import GrammarRule, Wtg, enumerate_runs
from src.core.wtah import (
    ConstrainedRule,
    Wtah,
    canonical_constraints,
    enumerate_constrained_runs,
    enumerate_wtah_support,
    format_constraints,
    h_R_rule,
    h_R_run,
    has_run,
    hom_image,
    run_trees,
    sink_run,
    validate_eq_restricted,
)
from tests.conftest import T, load_fixture


def _chain(n):
    text = "alpha"
    for _ in range(n):
        text = f"gamma({text})"
    return text


def test_canonical_constraints():
    assert canonical_constraints([[(3,), (2,)], [(2,), (4,)], [(1,)]]) == (((2,), (3,), (4,)),)
    assert canonical_constraints([[(1,)], [(2,)]]) == ()
    assert format_constraints((((1,), (2, 1)), ((3,), (4,)))) == "[1=2.1, 3=4]"
    assert format_constraints(()) == ""


def test_fixture_is_eq_restricted(image_of_a):
    report = validate_eq_restricted(image_of_a)
    assert report.valid
    assert report.diagnostics == []
    assert image_of_a.all_states == ("q", "qf", BOT)


def test_two_processing_copies_are_rejected():
    report = validate_eq_restricted(load_fixture("image_not_restricted.wtah"))
    assert not report
    assert any(line.startswith("clause (ii).2") for line in report.diagnostics)


def test_missing_sink_rule_is_reported():
    report = validate_eq_restricted(load_fixture("missing_sink.wtah"))
    assert not report.valid
    assert report.diagnostics == ["clause (i): missing sink rule g(BOT,BOT) -> BOT @ 1"]


def test_final_sink_is_reported(image_of_a):
    M = Wtah(image_of_a.states, image_of_a.rules, {"qf": 1, BOT: 1}, alphabet=image_of_a.alphabet)
    assert "clause (i): sink state BOT is final" in validate_eq_restricted(M).diagnostics


def test_constraints_must_sit_on_states():
    with pytest.raises(GrammarException):
        Wtah(["q"], [ConstrainedRule(T("f(q,a)"), "q", (((1,), (2,)),))], {"q": 1})


def test_evaluate(image_of_a):
    assert image_of_a.evaluate(T("f(a,g(a,a),g(a,a))")) == 2
    assert image_of_a.evaluate(T("f(a,g(a,a),a)")) == 0
    assert image_of_a.evaluate(T("g(a,a)")) == 0
    assert has_run(image_of_a, T("g(a,g(a,a))"), "q")
    assert has_run(image_of_a, T("g(a,g(a,a))"), BOT)
    assert not has_run(image_of_a, T("g(g(a,a),a)"), "q")


@pytest.mark.parametrize("n,m", [(n, m) for n in range(3) for m in range(3)])
def test_image_series(image_of_a, hom_image_h, n, m):
    t = hom_image_h(T(f"psi({_chain(n)},{_chain(m)})"))
    assert image_of_a.evaluate(t) == 2 ** (n + m)


def test_constrained_runs(image_of_a):
    t = T("f(a,g(a,a),g(a,a))")
    [run] = enumerate_constrained_runs(image_of_a, t, "qf")
    assert run.weight == 2
    assert run.tree() == t
    assert run.is_run_of(image_of_a, t)
    assert not run.is_run_of(image_of_a, T("f(a,a,a)"))
    assert run.rule_at((3,)).target == BOT


def test_sink_run(image_of_a):
    run = sink_run(T("g(a,a)"), image_of_a)
    assert run.target == BOT
    assert [p for _, p in run.steps] == [(1,), (2,), ()]
    assert run.weight == 1
    assert run.is_run_of(image_of_a, T("g(a,a)"))
    with pytest.raises(GrammarException):
        sink_run(T("g(a,a)"), load_fixture("missing_sink.wtah"))


def test_h_R_rule(hom_image_h):
    rule = h_R_rule(GrammarRule(T("psi(q,p)"), "qf", Fraction(5)), hom_image_h)
    assert rule == ConstrainedRule(T("f(p,q,BOT)"), "qf", (((2,), (3,)),), Fraction(5))
    assert h_R_rule(GrammarRule(T("gamma(q)"), "q"), hom_image_h).constraints == ()


def test_hom_image_matches_fixture(hom_image_wta, hom_image_h, image_of_a):
    image = hom_image(hom_image_wta, hom_image_h)
    assert image.name == "A'"
    assert set(image.rules) == set(image_of_a.rules)
    assert image.final_weights == image_of_a.final_weights
    assert validate_eq_restricted(image).valid


def test_hom_image_merges_equal_images():
    h = load_fixture("tetris.hom")
    A = Wtg(["q", "qf"],
            [GrammarRule(T("alpha"), "q", Fraction(1)),
             GrammarRule(T("beta"), "q", Fraction(2)),
             GrammarRule(T("psi(q,q)"), "qf", Fraction(1))],
            {"qf": 1}, alphabet=h.source)
    image = hom_image(A, h)
    assert ConstrainedRule(T("a"), "q", (), Fraction(3)) in image.rules
    assert image.evaluate(T("f(a,a,a)")) == 9


def test_hom_image_drops_cancelled_rules():
    h = load_fixture("tetris.hom")
    A = Wtg(["q", "qf"],
            [GrammarRule(T("alpha"), "q", Fraction(1)),
             GrammarRule(T("beta"), "q", Fraction(-1)),
             GrammarRule(T("psi(q,q)"), "qf", Fraction(1))],
            {"qf": 1}, alphabet=h.source)
    image = hom_image(A, h)
    assert not any(r.target == "q" for r in image.rules)
    assert image.evaluate(T("f(a,a,a)")) == 0


def test_h_R_run_traces_source_runs(hom_image_wta, hom_image_h):
    image = hom_image(hom_image_wta, hom_image_h)
    s = T("psi(gamma(alpha),gamma(gamma(alpha)))")
    [run] = enumerate_runs(hom_image_wta, s, "qf")
    traced = h_R_run(run, hom_image_wta, hom_image_h, image)
    assert traced.is_run_of(image, hom_image_h(s))
    assert traced.weight == run.weight == 8
    assert traced.target == "qf"


def test_run_trees(image_of_a):
    found = run_trees(image_of_a, 2, targets=["qf"])
    assert found == {"qf": [T("f(a,a,a)"), T("f(g(a,a),a,a)"), T("f(a,g(a,a),g(a,a))"),
                            T("f(g(a,a),g(a,a),g(a,a))")]}
    assert run_trees(image_of_a, 1)["q"] == [T("a"), T("g(a,a)")]


def test_support(image_of_a):
    assert enumerate_wtah_support(image_of_a, 2) == {
        T("f(a,a,a)"): 1,
        T("f(g(a,a),a,a)"): 2,
        T("f(a,g(a,a),g(a,a))"): 2,
        T("f(g(a,a),g(a,a),g(a,a))"): 4,
    }


def test_as_wtg_requires_constraint_free(image_of_a):
    with pytest.raises(GrammarException):
        image_of_a.as_wtg()
    M = Wtah(["q"], [ConstrainedRule(T("a"), "q"), ConstrainedRule(T("a"), BOT)], {"q": 2})
    G = M.as_wtg()
    assert G.evaluate(T("a")) == 2
    assert G.states == ("q",)


def test_cancelling_runs(b_prime):
    assert validate_eq_restricted(b_prime).valid
    t = T("f(a,g(a,a),g(a,a))")
    runs = enumerate_constrained_runs(b_prime, t, "qf")
    assert sorted(run.weight for run in runs) == [-2, 2]
    assert b_prime.evaluate(t) == 0
