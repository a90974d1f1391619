"""
Weighted tree grammars and automata over the rationals.

A Wtg has general left-hand sides (trees over the alphabet with state leaves);
it is a WTA when every left-hand side is a single symbol over states. Final
states are generalised to final weights so that linear combinations with
negative coefficients stay representable.
"""

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field

from src.core.errors import AlphabetException, ArityException, GrammarException
from src.core.field import ONE, ZERO, fprod, rational
from src.core.terms import (
    Position,
    RankedAlphabet,
    Tree,
    format_position,
    format_tree,
    is_reserved,
    match_pattern,
    positions,
    subtree,
    substitute,
)
from src.utils.logging_utils import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class GrammarRule:
    """A rule lhs -> target with a nonzero weight."""

    lhs: Tree
    target: str
    weight: Fraction = ONE

    def state_bindings(self, is_state: Callable[[str], bool]) -> List[Tuple[Position, str]]:
        """pos_Q(lhs) with the state at each position, lexicographically ordered."""
        return [(p, subtree(self.lhs, p).label) for p in positions(self.lhs)
                if subtree(self.lhs, p).is_leaf and is_state(subtree(self.lhs, p).label)]

    def __str__(self) -> str:
        return f"{format_tree(self.lhs)} -> {self.target} @ {self.weight}"


@dataclass(frozen=True)
class Run:
    """
    A run listed by the rules it applies.

    Attributes:
        steps: (rule, position) pairs, a position always listed after its extensions
        target: State reached at the root
    """

    steps: Tuple[Tuple[GrammarRule, Position], ...]
    target: str

    @property
    def weight(self) -> Fraction:
        return fprod(rule.weight for rule, _ in self.steps)

    def tree(self, is_state: Callable[[str], bool]) -> Tree:
        """The tree this run evaluates, rebuilt by composing the applied rules."""
        at = {p: rule for rule, p in self.steps}

        def build(p: Position) -> Tree:
            rule = at[p]
            result = rule.lhs
            for q_pos, _ in rule.state_bindings(is_state):
                result = substitute(result, q_pos, build(p + q_pos))
            return result

        return build(())

    def describe(self) -> str:
        return "; ".join(f"{format_position(p)}: {rule}" for rule, p in self.steps)


class Wtg:
    """
    A weighted tree grammar.

    Args:
        states: State names, disjoint from the alphabet
        rules: GrammarRule objects (weights must be nonzero)
        final_weights: State -> weight; zero entries are dropped
        alphabet: Declared alphabet, inferred from the rules when None
        name: Display name used by the block format

    Raises:
        GrammarException: For malformed rules, unknown states or zero weights.
        AlphabetException: For symbols outside the alphabet.
        ArityException: For rank mismatches.
    """

    def __init__(self, states: Iterable[str], rules: Iterable[GrammarRule],
                 final_weights: Mapping[str, object], alphabet: Optional[Mapping[str, int]] = None,
                 name: str = "G"):
        self.name = name
        self.states: Tuple[str, ...] = tuple(dict.fromkeys(states))
        self._state_set = frozenset(self.states)
        for q in self.states:
            if not q or is_reserved(q):
                raise GrammarException(f"invalid state name {q!r}")
        self.rules: Tuple[GrammarRule, ...] = tuple(rules)
        if alphabet is None:
            alphabet = RankedAlphabet.from_trees(
                (r.lhs for r in self.rules), skip=lambda label: label in self._state_set or is_reserved(label))
        self.alphabet = alphabet if isinstance(alphabet, RankedAlphabet) else RankedAlphabet(alphabet)
        clash = self._state_set.intersection(self.alphabet)
        if clash:
            raise GrammarException(f"names used both as states and symbols: {sorted(clash)}")
        self.final_weights: Dict[str, Fraction] = {}
        for q, w in final_weights.items():
            if q not in self._state_set:
                raise GrammarException(f"final weight for unknown state {q!r}")
            w = rational(w)
            if w != 0:
                self.final_weights[q] = w
        self._by_root: Dict[str, List[GrammarRule]] = defaultdict(list)
        for rule in self.rules:
            self._check_rule(rule)
            self._by_root[rule.lhs.label].append(rule)
        self.is_wta = all(
            all(c.is_leaf and self.is_state(c.label) for c in r.lhs.children) for r in self.rules)

    def _check_rule(self, rule: GrammarRule) -> None:
        if rule.weight == 0:
            raise GrammarException(f"rule {rule} has weight 0")
        if rule.target not in self._state_set:
            raise GrammarException(f"rule {rule} targets unknown state {rule.target!r}")
        if self.is_state(rule.lhs.label):
            raise GrammarException(f"rule {rule} has a bare state or a state with children as left-hand side")
        for p in positions(rule.lhs):
            node = subtree(rule.lhs, p)
            if self.is_state(node.label):
                if not node.is_leaf:
                    raise GrammarException(f"state {node.label!r} has children in rule {rule}")
                continue
            if node.label not in self.alphabet:
                raise AlphabetException(f"symbol {node.label!r} of rule {rule} is not in the alphabet")
            if self.alphabet[node.label] != node.rank:
                raise ArityException(f"symbol {node.label!r} used with {node.rank} children in rule {rule}")

    def is_state(self, label: str) -> bool:
        return label in self._state_set

    def rules_for(self, symbol: str) -> List[GrammarRule]:
        return list(self._by_root.get(symbol, ()))

    def state_weights(self, t: Tree, memo: Optional[Dict[Tree, Dict[str, Fraction]]] = None) -> Dict[str, Fraction]:
        """The nonzero entries of (wt^q(t))_q, memoized bottom-up over subtrees."""
        if memo is None:
            memo = {}
        return self._weights(t, memo)

    def _weights(self, t: Tree, memo: Dict[Tree, Dict[str, Fraction]]) -> Dict[str, Fraction]:
        cached = memo.get(t)
        if cached is not None:
            return cached
        totals: Dict[str, Fraction] = defaultdict(Fraction)
        for rule in self._by_root.get(t.label, ()):
            bindings = match_pattern(rule.lhs, t, self.is_state)
            if bindings is None:
                continue
            weight = rule.weight
            for _, q, sub in bindings:
                weight *= self._weights(sub, memo).get(q, ZERO)
                if weight == 0:
                    break
            if weight != 0:
                totals[rule.target] += weight
        result = {q: w for q, w in totals.items() if w != 0}
        memo[t] = result
        return result

    def evaluate(self, t: Tree) -> Fraction:
        weights = self.state_weights(t)
        return sum((w * weights.get(q, ZERO) for q, w in self.final_weights.items()), ZERO)

    def rename_states(self, mapping: Mapping[str, str], name: Optional[str] = None) -> "Wtg":
        """Rename states injectively; unmapped states keep their names."""
        rename = {q: mapping.get(q, q) for q in self.states}
        if len(set(rename.values())) != len(rename):
            raise GrammarException("state renaming is not injective")

        def swap(t: Tree) -> Tree:
            if t.is_leaf and t.label in rename:
                return Tree(rename[t.label])
            return Tree(t.label, (swap(c) for c in t.children))

        return Wtg(
            [rename[q] for q in self.states],
            [GrammarRule(swap(r.lhs), rename[r.target], r.weight) for r in self.rules],
            {rename[q]: w for q, w in self.final_weights.items()},
            alphabet=self.alphabet,
            name=name or self.name,
        )

    def __repr__(self) -> str:
        kind = "WTA" if self.is_wta else "WTG"
        return f"<{kind} {self.name}: {len(self.states)} states, {len(self.rules)} rules>"


def state_weight(grammar: Wtg, t: Tree, q: str) -> Fraction:
    """wt^q(t): the summed weight of all runs of grammar on t reaching q."""
    return grammar.state_weights(t).get(q, ZERO)


def evaluate(grammar: Wtg, t: Tree) -> Fraction:
    """⟦G⟧(t) = Σ_q final(q)·wt^q(t)."""
    return grammar.evaluate(t)


def enumerate_runs(grammar: Wtg, t: Tree, q: str) -> List[Run]:
    """
    Every run of grammar on t that reaches q.

    Exponential; used as an independent check of state_weight.
    """

    def runs(node: Tree, state: str) -> List[Tuple[Tuple[GrammarRule, Position], ...]]:
        found = []
        for rule in grammar.rules_for(node.label):
            if rule.target != state:
                continue
            bindings = match_pattern(rule.lhs, node, grammar.is_state)
            if bindings is None:
                continue
            child_runs = [[tuple((r, p + sub_p) for r, sub_p in steps) for steps in runs(sub, child_state)]
                          for p, child_state, sub in bindings]
            for combination in product(*child_runs):
                steps = tuple(step for part in combination for step in part)
                found.append(steps + ((rule, ()),))
        return found

    return [Run(steps, q) for steps in runs(t, q)]


def live_trees(grammar: Wtg, max_height: int) -> List[Tuple[Tree, Dict[str, Fraction]]]:
    """
    Trees of height <= max_height whose state-weight vector is nonzero.

    Only valid for WTA: a tree with a zero vector contributes nothing to any
    tree containing it, so such trees are pruned while growing.
    """
    if not grammar.is_wta:
        grammar = to_wta(grammar)
    by_height: List[List[Tuple[Tree, Dict[str, Fraction]]]] = []
    memo: Dict[Tree, Dict[str, Fraction]] = {}
    for h in range(max_height + 1):
        level: List[Tuple[Tree, Dict[str, Fraction]]] = []
        lower = [tree for trees in by_height for tree, _ in trees]
        for symbol in sorted(grammar.alphabet):
            k = grammar.alphabet[symbol]
            if h == 0:
                candidates = [Tree(symbol)] if k == 0 else []
            elif k == 0 or not by_height[h - 1]:
                candidates = []
            else:
                candidates = [Tree(symbol, children) for children in product(lower, repeat=k)
                              if any(c.height == h - 1 for c in children)]
            for tree in candidates:
                weights = grammar.state_weights(tree, memo)
                if weights:
                    level.append((tree, weights))
        by_height.append(sorted(level, key=lambda item: item[0].sort_key()))
        logger.debug(f"{grammar.name}: {len(level)} live trees of height {h}")
    return [item for level in by_height for item in level]


def enumerate_support(grammar: Wtg, max_height: int) -> Dict[Tree, Fraction]:
    """All t with he(t) <= max_height and ⟦G⟧(t) != 0, with their values."""
    if max_height < 0:
        return {}
    wta = to_wta(grammar)
    support: Dict[Tree, Fraction] = {}
    for tree, weights in live_trees(wta, max_height):
        value = sum((w * weights.get(q, ZERO) for q, w in wta.final_weights.items()), ZERO)
        if value != 0:
            support[tree] = value
    return support


def _fresh(base: str, taken: set) -> str:
    name = base
    while name in taken:
        name += "'"
    taken.add(name)
    return name


def to_wta(grammar: Wtg) -> Wtg:
    """
    Flatten a WTG into a WTA with the same series.

    Every non-root, non-state node of a left-hand side gets a fresh state with
    a single weight-1 rule; a WTA input is returned unchanged.
    """
    if grammar.is_wta:
        return grammar
    taken = set(grammar.states) | set(grammar.alphabet)
    states = list(grammar.states)
    rules: List[GrammarRule] = []

    def flatten(node: Tree, base: str) -> Tree:
        children = []
        for i, child in enumerate(node.children, start=1):
            if child.is_leaf and grammar.is_state(child.label):
                children.append(child)
                continue
            fresh = _fresh(f"{base}.{i}", taken)
            states.append(fresh)
            rules.append(GrammarRule(flatten(child, fresh), fresh, ONE))
            children.append(Tree(fresh))
        return Tree(node.label, children)

    for index, rule in enumerate(grammar.rules):
        rules.append(GrammarRule(flatten(rule.lhs, f"{rule.target}~r{index}"), rule.target, rule.weight))
    result = Wtg(states, rules, grammar.final_weights, alphabet=grammar.alphabet, name=grammar.name)
    logger.debug(f"to_wta {grammar.name}: {len(grammar.rules)} -> {len(rules)} rules")
    return result


def linear_combination(parts: Sequence[Tuple[object, Wtg]], name: str = "L") -> Wtg:
    """
    The disjoint union of the grammars with final weights scaled by the coefficients.

    Raises:
        AlphabetException: If the alphabets differ.
    """
    if not parts:
        raise GrammarException("linear_combination needs at least one grammar")
    alphabet = parts[0][1].alphabet
    states: List[str] = []
    rules: List[GrammarRule] = []
    final: Dict[str, Fraction] = {}
    for index, (coefficient, grammar) in enumerate(parts, start=1):
        if grammar.alphabet != alphabet:
            raise AlphabetException(f"alphabet mismatch: {alphabet!r} vs {grammar.alphabet!r}")
        coefficient = rational(coefficient)
        rename = {q: f"{index}.{q}" for q in grammar.states}
        renamed = grammar.rename_states(rename)
        states.extend(renamed.states)
        rules.extend(renamed.rules)
        for q, w in renamed.final_weights.items():
            if coefficient * w != 0:
                final[q] = coefficient * w
    return Wtg(states, rules, final, alphabet=alphabet, name=name)


def relabel_tree(t: Tree, mapping: Mapping[str, str], keep: Callable[[str], bool]) -> Tree:
    """Rename the labels of t through mapping, leaving labels accepted by keep untouched."""
    label = t.label if keep(t.label) else mapping.get(t.label, t.label)
    return Tree(label, (relabel_tree(c, mapping, keep) for c in t.children))


def relabel_alphabet(alphabet: RankedAlphabet, mapping: Mapping[str, str]) -> RankedAlphabet:
    """
    The image alphabet under a rank-preserving relabeling.

    Raises:
        ArityException: If two symbols of different rank are sent to one name.
    """
    image: Dict[str, int] = {}
    for symbol, rank in alphabet.items():
        target = mapping.get(symbol, symbol)
        if image.get(target, rank) != rank:
            raise ArityException(f"relabeling sends symbols of ranks {image[target]} and {rank} to {target!r}")
        image[target] = rank
    return RankedAlphabet(image)


def relabel_and_merge(grammar: Wtg, mapping: Mapping[str, str], name: Optional[str] = None) -> Wtg:
    """
    Relabel symbols and add up the weights of rules that become identical.

    Rules whose summed weight is 0 are dropped.
    """
    alphabet = relabel_alphabet(grammar.alphabet, mapping)
    merged: Dict[Tuple[Tree, str], Fraction] = {}
    for rule in grammar.rules:
        key = (relabel_tree(rule.lhs, mapping, grammar.is_state), rule.target)
        merged[key] = merged.get(key, ZERO) + rule.weight
    rules = [GrammarRule(lhs, target, w) for (lhs, target), w in merged.items() if w != 0]
    if len(rules) < len(merged):
        logger.debug(f"relabel_and_merge dropped {len(merged) - len(rules)} rules with summed weight 0")
    return Wtg(grammar.states, rules, grammar.final_weights, alphabet=alphabet, name=name or grammar.name)


class ZeroCheck(BaseModel):
    """Result of a zeroness test."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    is_zero: bool
    witness: Optional[Tree] = None
    value: Optional[Fraction] = None
    dimension: int = 0
    representatives: List[Tree] = Field(default_factory=list)


class _Echelon:
    """Incremental row-echelon basis over the rationals."""

    def __init__(self):
        self.rows: List[Tuple[int, List[Fraction]]] = []

    def insert(self, vector: List[Fraction]) -> bool:
        v = list(vector)
        for pivot, row in self.rows:
            if v[pivot] != 0:
                factor = v[pivot] / row[pivot]
                v = [a - factor * b for a, b in zip(v, row)]
        for i, a in enumerate(v):
            if a != 0:
                self.rows.append((i, v))
                return True
        return False


def is_zero(grammar: Wtg) -> ZeroCheck:
    """
    Decide whether ⟦G⟧ is the zero series by forward closure.

    The basis of span{(wt^q(t))_q | t} is grown by height rounds; each round
    applies every rule to tuples of basis vectors that use at least one vector
    from the previous round. G is zero iff the final-weight functional vanishes
    on the basis. The first basis vector with nonzero pairing carries a
    minimal-height witness.
    """
    wta = grammar if grammar.is_wta else to_wta(grammar)
    index = {q: i for i, q in enumerate(wta.states)}
    final = [wta.final_weights.get(q, ZERO) for q in wta.states]
    echelon = _Echelon()
    basis: List[Tuple[List[Fraction], Tree]] = []
    rules_by_symbol: Dict[str, List[Tuple[List[int], int, Fraction]]] = defaultdict(list)
    for rule in wta.rules:
        rules_by_symbol[rule.lhs.label].append(
            ([index[c.label] for c in rule.lhs.children], index[rule.target], rule.weight))

    def apply(symbol: str, vectors: Sequence[List[Fraction]]) -> List[Fraction]:
        result = [ZERO] * len(index)
        for child_states, target, weight in rules_by_symbol[symbol]:
            w = weight
            for vec, q in zip(vectors, child_states):
                w *= vec[q]
                if w == 0:
                    break
            result[target] += w
        return result

    previous_start = 0
    rounds = 0
    while True:
        candidates: List[Tuple[Tree, List[Fraction]]] = []
        for symbol in sorted(wta.alphabet):
            k = wta.alphabet[symbol]
            if rounds == 0:
                if k == 0:
                    candidates.append((Tree(symbol), apply(symbol, [])))
                continue
            if k == 0:
                continue
            for combo in product(range(len(basis)), repeat=k):
                if all(i < previous_start for i in combo):
                    continue
                vectors = [basis[i][0] for i in combo]
                candidates.append((Tree(symbol, (basis[i][1] for i in combo)), apply(symbol, vectors)))
        candidates.sort(key=lambda item: item[0].sort_key())
        start = len(basis)
        for tree, vector in candidates:
            if echelon.insert(vector):
                basis.append((vector, tree))
        if len(basis) == start:
            break
        previous_start = start
        rounds += 1
    logger.debug(f"is_zero {wta.name}: basis dimension {len(basis)} after {rounds + 1} rounds")

    for vector, tree in basis:
        value = sum((f * v for f, v in zip(final, vector)), ZERO)
        if value != 0:
            return ZeroCheck(is_zero=False, witness=tree, value=value, dimension=len(basis),
                             representatives=[t for _, t in basis])
    return ZeroCheck(is_zero=True, dimension=len(basis), representatives=[t for _, t in basis])
