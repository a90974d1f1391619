"""
Ranked alphabets, trees, positions, contexts and substitutions.

Trees are immutable values. Positions are tuples of 1-based child indices; the
empty tuple is the root. Python's tuple order is exactly the lexicographic
order on positions (a prefix sorts before its extensions).

Term syntax: ``f(a,g(a,a))``, nullary symbols without parentheses, whitespace
insignificant. A label wrapped in square brackets (``[g(a,BOT)]``) is a single
symbol, which is how Δ-part symbols print.
"""

import re
from itertools import product
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from src.core.errors import AlphabetException, ArityException, FormatException, HomRegException, PositionException

BOT = "BOT"
BOX = "BOX"

Position = Tuple[int, ...]

_VARIABLE = re.compile(r"^x([1-9][0-9]*)$")
_PLAIN_LABEL = re.compile(r"[^\s(),\[\]=;@{}:\->/]+")


def is_variable(label: str) -> bool:
    """Return True if label is one of the formal variables x1, x2, ..."""
    return _VARIABLE.match(label) is not None


def variable_index(label: str) -> int:
    """Return i for the variable xi."""
    match = _VARIABLE.match(label)
    if match is None:
        raise AlphabetException(f"{label!r} is not a variable")
    return int(match.group(1))


def variable(index: int) -> str:
    return f"x{index}"


def is_reserved(label: str) -> bool:
    """Return True for the names that may never be alphabet symbols."""
    return label in (BOT, BOX) or is_variable(label)


class Tree:
    """
    A finite ordered ranked tree.

    Attributes:
        label (str): Symbol at the root
        children (Tuple[Tree, ...]): Ordered direct subtrees
        height (int): Length of the longest position
        size (int): Number of positions
    """

    __slots__ = ("label", "children", "height", "size", "_hash")

    def __init__(self, label: str, children: Iterable["Tree"] = ()):
        children = tuple(children)
        if not label:
            raise FormatException("tree labels must be nonempty")
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "children", children)
        object.__setattr__(self, "height", 1 + max(c.height for c in children) if children else 0)
        object.__setattr__(self, "size", 1 + sum(c.size for c in children))
        object.__setattr__(self, "_hash", hash((label, children)))

    def __setattr__(self, name, value):
        raise AttributeError("Tree is immutable")

    @property
    def rank(self) -> int:
        return len(self.children)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Tree) or self._hash != other._hash:
            return False
        return self.label == other.label and self.children == other.children

    def __ne__(self, other) -> bool:
        return not self.__eq__(other)

    def __str__(self) -> str:
        return format_tree(self)

    def __repr__(self) -> str:
        return f"Tree({format_tree(self)!r})"

    def sort_key(self) -> Tuple[int, int, str]:
        """Canonical order: height, then size, then the printed term."""
        return (self.height, self.size, format_tree(self))


def leaf(label: str) -> Tree:
    return Tree(label)


class RankedAlphabet(Mapping[str, int]):
    """
    A finite map from symbol names to ranks.

    Raises:
        AlphabetException: For empty or reserved names.
        ArityException: For negative ranks.
    """

    def __init__(self, symbols: Mapping[str, int]):
        self._symbols: Dict[str, int] = {}
        for name, rank in symbols.items():
            if not name:
                raise AlphabetException("symbol names must be nonempty")
            if is_reserved(name):
                raise AlphabetException(f"{name!r} is reserved and cannot be an alphabet symbol")
            if int(rank) < 0:
                raise ArityException(f"symbol {name!r} has negative rank {rank}")
            self._symbols[name] = int(rank)

    def __getitem__(self, name: str) -> int:
        return self._symbols[name]

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._symbols))

    def __len__(self) -> int:
        return len(self._symbols)

    def __eq__(self, other) -> bool:
        if isinstance(other, RankedAlphabet):
            return self._symbols == other._symbols
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._symbols.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{name}/{rank}" for name, rank in sorted(self._symbols.items()))
        return f"RankedAlphabet({body})"

    def rank(self, name: str) -> int:
        if name not in self._symbols:
            raise AlphabetException(f"symbol {name!r} is not in the alphabet")
        return self._symbols[name]

    def of_rank(self, k: int) -> List[str]:
        return sorted(name for name, rank in self._symbols.items() if rank == k)

    @property
    def max_rank(self) -> int:
        return max(self._symbols.values(), default=0)

    def merge(self, other: "RankedAlphabet") -> "RankedAlphabet":
        """
        Union of two alphabets.

        Raises:
            ArityException: If a symbol has different ranks in the two alphabets.
        """
        merged = dict(self._symbols)
        for name, rank in other.items():
            if merged.get(name, rank) != rank:
                raise ArityException(f"symbol {name!r} has ranks {merged[name]} and {rank}")
            merged[name] = rank
        return RankedAlphabet(merged)

    def is_compatible(self, other: "RankedAlphabet") -> bool:
        """True if every common symbol has the same rank in both alphabets."""
        return all(other.get(name, rank) == rank for name, rank in self._symbols.items())

    @classmethod
    def from_trees(cls, trees: Iterable[Tree], skip: Callable[[str], bool] = is_reserved) -> "RankedAlphabet":
        """
        Infer an alphabet from the symbols used in trees.

        Args:
            trees: Trees to scan
            skip: Predicate for labels that are not alphabet symbols (states, variables, holes)

        Raises:
            ArityException: If a symbol is used with two different ranks.
        """
        symbols: Dict[str, int] = {}
        for tree in trees:
            for node in _nodes(tree):
                if skip(node.label):
                    continue
                if symbols.get(node.label, node.rank) != node.rank:
                    raise ArityException(
                        f"symbol {node.label!r} used with ranks {symbols[node.label]} and {node.rank}")
                symbols[node.label] = node.rank
        return cls(symbols)


def _nodes(t: Tree) -> Iterator[Tree]:
    stack = [t]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(node.children)


def check_ranked(t: Tree, alphabet: Mapping[str, int], extra_leaves: Iterable[str] = ()) -> None:
    """
    Check that t is well-ranked over alphabet, allowing extra leaf labels.

    Raises:
        AlphabetException: For unknown labels.
        ArityException: For nodes whose child count differs from the rank.
    """
    leaves = set(extra_leaves)
    for node in _nodes(t):
        if node.label in leaves and node.is_leaf:
            continue
        if node.label not in alphabet:
            raise AlphabetException(f"symbol {node.label!r} is not in the alphabet")
        if alphabet[node.label] != node.rank:
            raise ArityException(
                f"symbol {node.label!r} has rank {alphabet[node.label]} but {node.rank} children")


# Positions

def format_position(p: Position) -> str:
    """Print a position as dotted digits; the root prints as ``e``."""
    return ".".join(str(i) for i in p) if p else "e"


def parse_position(text: str) -> Position:
    text = text.strip()
    if text in ("e", "ε", ""):
        return ()
    try:
        path = tuple(int(part) for part in text.split("."))
    except ValueError:
        raise FormatException(f"invalid position {text!r}")
    if any(i < 1 for i in path):
        raise FormatException(f"positions use 1-based child indices: {text!r}")
    return path


def positions(t: Tree) -> List[Position]:
    """All positions of t in lexicographic order."""
    result: List[Position] = []

    def walk(node: Tree, prefix: Position) -> None:
        result.append(prefix)
        for i, child in enumerate(node.children, start=1):
            walk(child, prefix + (i,))

    walk(t, ())
    return result


def subtree(t: Tree, p: Position) -> Tree:
    """
    The subtree t|_p.

    Raises:
        PositionException: If p is not a position of t.
    """
    node = t
    for depth, i in enumerate(p):
        if not 1 <= i <= node.rank:
            raise PositionException(f"{format_position(p)} is not a position of {t} (fails at depth {depth})")
        node = node.children[i - 1]
    return node


def label_at(t: Tree, p: Position) -> str:
    return subtree(t, p).label


def substitute(t: Tree, p: Position, replacement: Tree) -> Tree:
    """
    The substitution t[replacement]_p.

    Raises:
        PositionException: If p is not a position of t.
    """
    if not p:
        return replacement
    i = p[0]
    if not 1 <= i <= t.rank:
        raise PositionException(f"{format_position(p)} is not a position of {t}")
    children = list(t.children)
    children[i - 1] = substitute(children[i - 1], p[1:], replacement)
    return Tree(t.label, children)


def positions_with(t: Tree, labels: Iterable[str]) -> List[Position]:
    """pos_S(t): the positions whose label is in labels, in lexicographic order."""
    wanted = set(labels)
    return [p for p in positions(t) if label_at(t, p) in wanted]


def variables(t: Tree) -> List[str]:
    """var(t), sorted by variable index."""
    found = {node.label for node in _nodes(t) if is_variable(node.label) and node.is_leaf}
    return sorted(found, key=variable_index)


def apply_var_substitution(u: Tree, theta: Mapping[str, Tree]) -> Tree:
    """
    Simultaneously replace the leaves labelled by keys of theta.

    Unmapped variables stay in place.
    """
    if u.is_leaf and u.label in theta:
        return theta[u.label]
    if u.is_leaf:
        return u
    return Tree(u.label, (apply_var_substitution(c, theta) for c in u.children))


def fill_multicontext(context: Tree, trees) -> Tree:
    """
    Fill the BOX leaves of a (multi-)context in lexicographic order.

    Args:
        context: Tree with at least one BOX leaf
        trees: One tree per BOX occurrence, or a single Tree replicated into every hole

    Raises:
        ArityException: If the number of trees differs from the number of holes.
    """
    holes = positions_with(context, [BOX])
    if not holes:
        raise ArityException(f"{context} has no {BOX} leaf")
    if isinstance(trees, Tree):
        trees = [trees] * len(holes)
    trees = list(trees)
    if len(trees) == 1 and len(holes) > 1:
        trees = trees * len(holes)
    if len(trees) != len(holes):
        raise ArityException(f"context has {len(holes)} holes but {len(trees)} trees were given")
    result = context
    for hole, filler in zip(holes, trees):
        result = substitute(result, hole, filler)
    return result


def is_context(t: Tree) -> bool:
    return len(positions_with(t, [BOX])) == 1


def match_pattern(pattern: Tree, t: Tree,
                  is_hole: Callable[[str], bool]) -> Optional[List[Tuple[Position, str, Tree]]]:
    """
    Match a pattern against t at the root.

    Hole leaves of the pattern (states, variables) bind the subtree of t at the
    same position; every other node must carry the same label and rank.

    Returns:
        The bindings (position, hole label, subtree) in lexicographic order of
        positions, or None if the pattern does not match.
    """
    bindings: List[Tuple[Position, str, Tree]] = []

    def walk(pat: Tree, node: Tree, prefix: Position) -> bool:
        if pat.is_leaf and is_hole(pat.label):
            bindings.append((prefix, pat.label, node))
            return True
        if pat.label != node.label or pat.rank != node.rank:
            return False
        return all(walk(pc, nc, prefix + (i,))
                   for i, (pc, nc) in enumerate(zip(pat.children, node.children), start=1))

    if not walk(pattern, t, ()):
        return None
    return bindings


def enumerate_trees(alphabet: Mapping[str, int], max_height: int, limit: Optional[int] = None) -> List[Tree]:
    """
    All trees over alphabet of height at most max_height, in canonical order.

    Raises:
        HomRegException: If more than limit trees would be produced.
    """
    if max_height < 0:
        return []
    nullary = [Tree(name) for name in sorted(alphabet) if alphabet[name] == 0]
    level: List[Tree] = list(nullary)
    for _ in range(max_height):
        grown: List[Tree] = list(nullary)
        for name in sorted(alphabet):
            k = alphabet[name]
            if k == 0:
                continue
            for children in product(level, repeat=k):
                grown.append(Tree(name, children))
                if limit is not None and len(grown) > limit:
                    raise HomRegException(f"more than {limit} trees of height <= {max_height}")
        level = grown
    return sorted(level, key=Tree.sort_key)


# Term syntax

def format_tree(t: Tree) -> str:
    if t.is_leaf:
        return t.label
    return f"{t.label}({','.join(format_tree(c) for c in t.children)})"


def _read_label(text: str, index: int) -> Tuple[str, int]:
    if index < len(text) and text[index] == "[":
        depth = 0
        for end in range(index, len(text)):
            if text[end] == "[":
                depth += 1
            elif text[end] == "]":
                depth -= 1
                if depth == 0:
                    return re.sub(r"\s+", "", text[index:end + 1]), end + 1
        raise FormatException(f"unbalanced '[' in {text!r}")
    match = _PLAIN_LABEL.match(text, index)
    if match is None:
        raise FormatException(f"expected a symbol at offset {index} of {text!r}")
    return match.group(0), match.end()


def _skip_ws(text: str, index: int) -> int:
    while index < len(text) and text[index].isspace():
        index += 1
    return index


def parse_tree_prefix(text: str, index: int = 0) -> Tuple[Tree, int]:
    """
    Parse one term starting at index.

    Returns:
        The tree and the offset just after it.
    """
    index = _skip_ws(text, index)
    label, index = _read_label(text, index)
    index = _skip_ws(text, index)
    if index >= len(text) or text[index] != "(":
        return Tree(label), index
    children: List[Tree] = []
    index += 1
    while True:
        child, index = parse_tree_prefix(text, index)
        children.append(child)
        index = _skip_ws(text, index)
        if index >= len(text):
            raise FormatException(f"unterminated argument list in {text!r}")
        if text[index] == ",":
            index += 1
            continue
        if text[index] == ")":
            return Tree(label, children), index + 1
        raise FormatException(f"unexpected {text[index]!r} at offset {index} of {text!r}")


def parse_tree(text: str) -> Tree:
    """
    Parse a term such as ``f(a,g(a,a))``.

    Raises:
        FormatException: On malformed input or trailing text.
    """
    tree, index = parse_tree_prefix(text)
    if _skip_ws(text, index) != len(text):
        raise FormatException(f"trailing text after term: {text[index:]!r}")
    return tree
