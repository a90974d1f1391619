import random
from dataclasses import replace
from pathlib import Path

import pytest

from src.core.terms import Tree, parse_tree
from src.utils.file_utils import load_object

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def load_fixture(name: str):
    return load_object(fixture_path(name))


def T(text: str):
    return parse_tree(text)


def shuffle_and_rename(M, seed: int):
    """A copy of the grammar or WTAh M with shuffled rules and states named s0, s1, ..."""
    rng = random.Random(seed)
    names = {q: f"s{i}" for i, q in enumerate(reversed(M.states))}

    def rename(t: Tree) -> Tree:
        if t.is_leaf:
            return Tree(names.get(t.label, t.label))
        return Tree(t.label, (rename(c) for c in t.children))

    rules = [replace(r, lhs=rename(r.lhs), target=names.get(r.target, r.target)) for r in M.rules]
    rng.shuffle(rules)
    states = [names[q] for q in M.states]
    rng.shuffle(states)
    final = {names[q]: w for q, w in M.final_weights.items()}
    return type(M)(states, rules, final, alphabet=M.alphabet, name=M.name)


@pytest.fixture
def hom_image_wta():
    return load_fixture("hom_image.wtg")


@pytest.fixture
def hom_image_h():
    return load_fixture("hom_image.hom")


@pytest.fixture
def image_of_a():
    return load_fixture("image_of_a.wtah")


@pytest.fixture
def fin():
    return load_fixture("fin.wtah")


@pytest.fixture
def subsequence():
    return load_fixture("subsequence.wtah")


@pytest.fixture
def cancelling_ldp():
    return load_fixture("cancelling_ldp.wtah")


@pytest.fixture
def b_prime():
    return load_fixture("B_prime.wtah")


@pytest.fixture
def c_prime():
    return load_fixture("C_prime.wtah")
