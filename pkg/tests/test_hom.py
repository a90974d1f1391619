from collections import defaultdict

import pytest

from src.core.errors import AlphabetException, ArityException, HomomorphismException
from src.core.hom import (
    Homomorphism,
    apply,
    check_properties,
    is_tetris_free,
    preimages,
    tetris_free_bounded_oracle,
    violates,
)
from src.core.terms import enumerate_trees
from tests.conftest import T, load_fixture


def test_apply(hom_image_h):
    assert apply(hom_image_h, T("psi(gamma(alpha),alpha)")) == T("f(a,g(a,a),g(a,a))")
    assert hom_image_h(T("gamma(gamma(alpha))")) == T("g(a,g(a,a))")


def test_apply_rejects_foreign_symbols(hom_image_h):
    with pytest.raises(AlphabetException):
        apply(hom_image_h, T("beta"))
    with pytest.raises(ArityException):
        apply(hom_image_h, T("gamma(alpha,alpha)"))


def test_properties(hom_image_h):
    assert check_properties(hom_image_h).model_dump() == {"nonerasing": True, "nondeleting": True}
    deleting = Homomorphism({"alpha": T("a"), "psi": T("f(x1,x1)")}, source={"alpha": 0, "psi": 2})
    assert not deleting.nondeleting
    assert deleting.nonerasing
    erasing = Homomorphism({"alpha": T("a"), "gamma": T("x1")})
    assert not erasing.nonerasing
    with pytest.raises(HomomorphismException):
        erasing.require_nondeleting_nonerasing()
    with pytest.raises(HomomorphismException):
        deleting.require_nondeleting_nonerasing()


def test_inferred_alphabets(hom_image_h):
    h = Homomorphism({"alpha": T("a"), "gamma": T("g(a,x1)"), "psi": T("f(x2,x1,x1)")})
    assert dict(h.source) == {"alpha": 0, "gamma": 1, "psi": 2}
    assert dict(h.target) == {"a": 0, "g": 2, "f": 3}
    assert h.max_image_height == 1


def test_invalid_homomorphisms():
    with pytest.raises(AlphabetException):
        Homomorphism({"alpha": T("a")}, source={"alpha": 0, "beta": 0})
    with pytest.raises(ArityException):
        Homomorphism({"psi": T("f(x1,x3)")}, source={"psi": 2})
    with pytest.raises(AlphabetException):
        Homomorphism({"alpha": T("b")}, source={"alpha": 0}, target={"a": 0})


def test_preimages():
    h = load_fixture("tetris.hom")
    assert preimages(h, T("a")) == {T("alpha"), T("beta")}
    assert len(preimages(h, T("f(a,a,a)"))) == 4
    assert preimages(h, T("f(a,a,f(a,a,a))")) == set()


def test_preimages_respect_copies(hom_image_h):
    assert preimages(hom_image_h, T("f(a,g(a,a),g(a,a))")) == {T("psi(gamma(alpha),alpha)")}
    assert preimages(hom_image_h, T("f(a,g(a,a),a)")) == set()
    assert preimages(hom_image_h, T("g(a,a)")) == {T("gamma(alpha)")}


def test_preimages_require_nondeleting():
    erasing = Homomorphism({"alpha": T("a"), "gamma": T("x1")})
    with pytest.raises(HomomorphismException):
        preimages(erasing, T("a"))


@pytest.mark.parametrize("fixture", ["hom_image.hom", "tetris.hom", "relabel.hom"])
def test_tetris_free(fixture):
    h = load_fixture(fixture)
    check = is_tetris_free(h)
    assert check.tetris_free
    assert check.witness is None
    assert tetris_free_bounded_oracle(h, 3).tetris_free


@pytest.mark.parametrize("fixture,witness", [
    ("tetris_prime.hom", ("psi(alpha,alpha)", "beta")),
    ("h_star.hom", ("psi(gamma(alpha),alpha)", "phi(alpha,alpha)")),
    ("h_kappa.hom", ("psi(alpha,alpha)", "kappa(alpha,alpha)")),
])
def test_not_tetris_free(fixture, witness):
    h = load_fixture(fixture)
    check = is_tetris_free(h)
    assert not check.tetris_free
    assert check.conclusive
    assert check.witness == (T(witness[0]), T(witness[1]))
    s, s_prime = check.witness
    assert apply(h, s) == apply(h, s_prime)
    assert violates(h, s, s_prime)


DECIDED_HOMS = ["hom_image.hom", "tetris.hom", "relabel.hom", "tetris_prime.hom", "h_star.hom", "h_kappa.hom"]


@pytest.mark.parametrize("fixture", DECIDED_HOMS)
def test_bounded_oracle_agrees(fixture):
    h = load_fixture(fixture)
    exact = is_tetris_free(h)
    bounded = tetris_free_bounded_oracle(h, 3)
    assert exact.conclusive
    assert bounded.tetris_free == exact.tetris_free
    if not bounded.tetris_free:
        s, s_prime = bounded.witness
        assert violates(h, s, s_prime)
        assert max(s.height, s_prime.height) <= 3


# h_kappa has about 180000 source trees of height <= 3
@pytest.mark.parametrize("fixture,height", [
    ("hom_image.hom", 3), ("tetris.hom", 3), ("relabel.hom", 3),
    ("tetris_prime.hom", 3), ("h_star.hom", 3), ("h_kappa.hom", 2),
])
def test_preimages_match_brute_force(fixture, height):
    h = load_fixture(fixture)
    groups = defaultdict(set)
    memo = {}
    for s in enumerate_trees(h.source, height):
        groups[apply(h, s, memo)].add(s)
    for t, sources in groups.items():
        found = preimages(h, t)
        assert sources <= found
        # nonerasing images are at least as high as their sources
        if t.height <= height:
            assert found == sources


def test_unrealisable_tiling_is_inconclusive():
    h = load_fixture("unrealisable_tiling.hom")
    check = is_tetris_free(h, oracle_height=2)
    assert not check.tetris_free
    assert not check.conclusive
    assert check.witness is None
    assert tetris_free_bounded_oracle(h, 3).tetris_free
    assert preimages(h, T("f(a,g(a))")) == {T("kappa(alpha)")}


def test_equal_images_are_not_a_violation():
    h = load_fixture("tetris.hom")
    assert not violates(h, T("alpha"), T("beta"))
    assert not violates(h, T("alpha"), T("psi(alpha,alpha)"))
