"""
Tree homomorphisms: application, preimages, structural properties and
tetris-freeness.
"""

from collections import defaultdict
from dataclasses import dataclass
from itertools import product
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple

from pydantic import BaseModel, ConfigDict

from src.config.config import TETRIS_ORACLE_HEIGHT
from src.core.errors import AlphabetException, ArityException, HomomorphismException
from src.core.terms import (
    Position,
    RankedAlphabet,
    Tree,
    apply_var_substitution,
    enumerate_trees,
    format_tree,
    is_variable,
    match_pattern,
    positions,
    subtree,
    variable,
    variable_index,
    variables,
)
from src.utils.logging_utils import setup_logger

logger = setup_logger(__name__)


class HomProperties(BaseModel):
    nonerasing: bool
    nondeleting: bool


class TetrisCheck(BaseModel):
    """
    Outcome of a tetris-freeness test.

    Attributes:
        tetris_free: Whether the condition holds
        witness: A violating pair (s, s') with h(s) = h(s'), larger tree first
        conclusive: False when an ambiguity was found but no genuine pair could be built
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    tetris_free: bool
    witness: Optional[Tuple[Tree, Tree]] = None
    conclusive: bool = True


class Homomorphism:
    """
    A tree homomorphism given by one image tree per source symbol.

    Args:
        images: σ -> h'(σ), a tree over the target alphabet and x1..x_rk(σ)
        source: Σ, inferred from images when None (ranks from the highest variable used)
        target: Δ, inferred from images when None
        name: Display name
        alphabet_names: Display names of Σ and Δ

    Raises:
        AlphabetException: For a missing or unknown image symbol.
        ArityException: For variables beyond the rank of the symbol or rank mismatches.
    """

    def __init__(self, images: Mapping[str, Tree], source: Optional[Mapping[str, int]] = None,
                 target: Optional[Mapping[str, int]] = None, name: str = "h",
                 alphabet_names: Tuple[str, str] = ("Sigma", "Delta")):
        self.name = name
        self.alphabet_names = alphabet_names
        self.images: Dict[str, Tree] = dict(images)
        if source is None:
            source = {sigma: max((variable_index(x) for x in variables(u)), default=0)
                      for sigma, u in self.images.items()}
        if target is None:
            target = RankedAlphabet.from_trees(self.images.values())
        self.source = source if isinstance(source, RankedAlphabet) else RankedAlphabet(source)
        self.target = target if isinstance(target, RankedAlphabet) else RankedAlphabet(target)
        missing = [sigma for sigma in self.source if sigma not in self.images]
        if missing:
            raise AlphabetException(f"homomorphism {name} has no image for {missing}")
        for sigma, image in self.images.items():
            if sigma not in self.source:
                raise AlphabetException(f"{sigma!r} is not a source symbol of {name}")
            k = self.source[sigma]
            for p in positions(image):
                node = subtree(image, p)
                if is_variable(node.label):
                    if not node.is_leaf:
                        raise ArityException(f"variable {node.label} has children in h({sigma})")
                    if variable_index(node.label) > k:
                        raise ArityException(f"h({sigma}) uses {node.label} but {sigma} has rank {k}")
                    continue
                if node.label not in self.target:
                    raise AlphabetException(f"symbol {node.label!r} of h({sigma}) is not in the target alphabet")
                if self.target[node.label] != node.rank:
                    raise ArityException(f"symbol {node.label!r} used with {node.rank} children in h({sigma})")

    @property
    def nonerasing(self) -> bool:
        return all(not is_variable(u.label) for u in self.images.values())

    @property
    def nondeleting(self) -> bool:
        return all(variables(u) == [variable(i) for i in range(1, self.source[sigma] + 1)]
                   for sigma, u in self.images.items())

    @property
    def max_image_height(self) -> int:
        return max((u.height for u in self.images.values()), default=0)

    def require_nondeleting_nonerasing(self) -> None:
        if not self.nonerasing:
            raise HomomorphismException(f"homomorphism {self.name} is erasing")
        if not self.nondeleting:
            raise HomomorphismException(f"homomorphism {self.name} is deleting")

    def image_classes(self) -> Dict[Tree, List[str]]:
        """Image tree -> source symbols sharing it, symbols sorted by name."""
        classes: Dict[Tree, List[str]] = defaultdict(list)
        for sigma in sorted(self.images):
            classes[self.images[sigma]].append(sigma)
        return dict(classes)

    def __call__(self, s: Tree) -> Tree:
        return apply(self, s)

    def __repr__(self) -> str:
        return f"<Homomorphism {self.name}: {len(self.source)} -> {len(self.target)} symbols>"


def apply(h: Homomorphism, s: Tree, memo: Optional[Dict[Tree, Tree]] = None) -> Tree:
    """
    h(s), defined inductively by h(σ(s1..sk)) = h'(σ)[x1 <- h(s1), ...].

    Raises:
        AlphabetException: If s uses a symbol outside the source alphabet.
    """
    if memo is None:
        memo = {}
    cached = memo.get(s)
    if cached is not None:
        return cached
    if s.label not in h.images:
        raise AlphabetException(f"symbol {s.label!r} is not in the source alphabet of {h.name}")
    if h.source[s.label] != s.rank:
        raise ArityException(f"symbol {s.label!r} has rank {h.source[s.label]} but {s.rank} children")
    theta = {variable(i): apply(h, child, memo) for i, child in enumerate(s.children, start=1)}
    result = apply_var_substitution(h.images[s.label], theta)
    memo[s] = result
    return result


def check_properties(h: Homomorphism) -> HomProperties:
    return HomProperties(nonerasing=h.nonerasing, nondeleting=h.nondeleting)


def preimages(h: Homomorphism, t: Tree) -> Set[Tree]:
    """
    h⁻¹(t) by top-down matching of the images against t.

    Raises:
        HomomorphismException: If h is deleting or erasing.
    """
    h.require_nondeleting_nonerasing()
    memo: Dict[Tree, Set[Tree]] = {}

    def solve(node: Tree) -> Set[Tree]:
        if node in memo:
            return memo[node]
        found: Set[Tree] = set()
        for sigma in sorted(h.images):
            bindings = match_pattern(h.images[sigma], node, is_variable)
            if bindings is None:
                continue
            theta: Dict[str, Tree] = {}
            consistent = True
            for _, x, sub in bindings:
                if theta.setdefault(x, sub) != sub:
                    consistent = False
                    break
            if not consistent:
                continue
            k = h.source[sigma]
            choices = [solve(theta[variable(i)]) for i in range(1, k + 1)]
            for children in product(*choices):
                found.add(Tree(sigma, children))
        memo[node] = found
        return found

    return solve(t)


def violates(h: Homomorphism, s: Tree, s_prime: Tree) -> bool:
    """True if h(s) = h(s') but s and s' differ in shape or in the image of some symbol."""
    if apply(h, s) != apply(h, s_prime):
        return False
    pos = positions(s)
    if pos != positions(s_prime):
        return True
    return any(h.images[subtree(s, p).label] != h.images[subtree(s_prime, p).label] for p in pos)


def _ordered(pair: Tuple[Tree, Tree]) -> Tuple[Tree, Tree]:
    s, s_prime = pair
    return (s, s_prime) if s.sort_key() >= s_prime.sort_key() else (s_prime, s)


def tetris_free_bounded_oracle(h: Homomorphism, max_height: int) -> TetrisCheck:
    """
    Test the tetris-free condition on every pair of source trees of height <= max_height.

    The returned witness is minimal by total size, then term order.
    """
    h.require_nondeleting_nonerasing()
    memo: Dict[Tree, Tree] = {}
    groups: Dict[Tree, List[Tree]] = defaultdict(list)
    trees = enumerate_trees(h.source, max_height)
    for s in trees:
        groups[apply(h, s, memo)].append(s)
    logger.debug(f"tetris oracle {h.name}: {len(trees)} source trees, {len(groups)} images")
    best: Optional[Tuple[Tuple, Tuple[Tree, Tree]]] = None
    for members in groups.values():
        for i, s in enumerate(members):
            for s_prime in members[i + 1:]:
                if not violates(h, s, s_prime):
                    continue
                pair = _ordered((s, s_prime))
                key = (s.size + s_prime.size, pair[0].sort_key(), pair[1].sort_key())
                if best is None or key < best[0]:
                    best = (key, pair)
    if best is None:
        return TetrisCheck(tetris_free=True)
    return TetrisCheck(tetris_free=False, witness=best[1])


@dataclass(frozen=True)
class _SplitRule:
    symbol: str
    children: Tuple[str, ...]
    target: str
    block: Tree


def _split_rules(blocks: Iterable[Tree]) -> List[_SplitRule]:
    """
    The tiling automaton: one state "q" for block roots and one state per inner
    node of each block, so that runs to "q" are exactly the tilings by blocks.
    """
    rules: List[_SplitRule] = []
    for index, block in enumerate(blocks):

        def state_of(p: Position) -> str:
            return "q" if not p else f"b{index}@{'.'.join(map(str, p))}"

        for p in positions(block):
            node = subtree(block, p)
            if is_variable(node.label):
                continue
            children = tuple("q" if is_variable(child.label) else state_of(p + (i,))
                             for i, child in enumerate(node.children, start=1))
            rules.append(_SplitRule(node.label, children, state_of(p), block))
    return rules


def _derivation(h: Homomorphism, t: Tree, run: Dict[Position, _SplitRule]) -> Optional[Tree]:
    """
    A source tree for the tiling recorded in run, reading each variable at its
    lex-first occurrence; None if the tiling does not come from h.
    """
    classes = h.image_classes()

    def build(p: Position) -> Tree:
        block = run[p].block
        children = []
        for i in range(1, len(variables(block)) + 1):
            first = next(q for q in positions(block) if subtree(block, q).label == variable(i))
            children.append(build(p + first))
        return Tree(classes[block][0], children)

    s = build(())
    return s if apply(h, s) == t else None


def is_tetris_free(h: Homomorphism, oracle_height: Optional[int] = None) -> TetrisCheck:
    """
    Decide tetris-freeness through unambiguity of the tiling automaton.

    Symbols with equal images are merged; h is tetris-free when no tree has two
    different tilings by image blocks. Ambiguity is detected on the product of
    the tiling automaton with itself, with a flag recording whether the two
    runs have diverged. A minimal ambiguous tree yields the witness pair; if
    that pair is not realisable (repeated variables may forbid it) the bounded
    oracle up to oracle_height is consulted.

    Raises:
        HomomorphismException: If h is deleting or erasing.
    """
    h.require_nondeleting_nonerasing()
    rules = _split_rules(h.image_classes())
    by_symbol: Dict[str, List[_SplitRule]] = defaultdict(list)
    for rule in rules:
        by_symbol[rule.symbol].append(rule)

    # product state (state1, state2, diverged) -> (key, tree, run1, run2)
    best: Dict[Tuple[str, str, bool], Tuple[Tuple, Tree, Dict, Dict]] = {}
    changed = True
    while changed:
        changed = False
        for symbol, group in sorted(by_symbol.items()):
            for r1 in group:
                for r2 in group:
                    options = []
                    for c1, c2 in zip(r1.children, r2.children):
                        options.append([(c1, c2, d) for d in (False, True) if (c1, c2, d) in best])
                    for combo in product(*options):
                        diverged = r1 != r2 or any(d for _, _, d in combo)
                        key_state = (r1.target, r2.target, diverged)
                        parts = [best[c] for c in combo]
                        tree = Tree(symbol, (part[1] for part in parts))
                        key = (tree.size, format_tree(tree))
                        current = best.get(key_state)
                        if current is not None and current[0] <= key:
                            continue
                        run1: Dict[Position, _SplitRule] = {(): r1}
                        run2: Dict[Position, _SplitRule] = {(): r2}
                        for i, part in enumerate(parts, start=1):
                            run1.update({(i,) + p: r for p, r in part[2].items()})
                            run2.update({(i,) + p: r for p, r in part[3].items()})
                        best[key_state] = (key, tree, run1, run2)
                        changed = True

    ambiguous = best.get(("q", "q", True))
    if ambiguous is None:
        logger.debug(f"tiling automaton of {h.name} is unambiguous")
        return TetrisCheck(tetris_free=True)

    _, t, run1, run2 = ambiguous
    block_runs = []
    for run in (run1, run2):
        block_runs.append({p: r for p, r in run.items() if r.target == "q"})
    s = _derivation(h, t, block_runs[0])
    s_prime = _derivation(h, t, block_runs[1])
    if s is not None and s_prime is not None and violates(h, s, s_prime):
        return TetrisCheck(tetris_free=False, witness=_ordered((s, s_prime)))

    height = TETRIS_ORACLE_HEIGHT if oracle_height is None else oracle_height
    logger.warning(f"ambiguous tiling {t} of {h.name} is not realisable, checking pairs up to height {height}")
    fallback = tetris_free_bounded_oracle(h, height)
    if not fallback.tetris_free:
        return fallback
    return TetrisCheck(tetris_free=False, conclusive=False)
