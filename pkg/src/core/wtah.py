"""
Weighted tree automata with hom-constraints (WTAh).

Rules carry an equivalence relation on the state positions of their
left-hand side; a run may only apply a rule when the subtrees at related
positions are identical. The sink state BOT processes duplicated copies.
"""

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from pydantic import BaseModel, Field

from src.core.errors import AlphabetException, ArityException, GrammarException
from src.core.field import ONE, ZERO, fprod, rational
from src.core.hom import Homomorphism, apply
from src.core.terms import (
    BOT,
    Position,
    RankedAlphabet,
    Tree,
    format_position,
    format_tree,
    is_reserved,
    match_pattern,
    positions,
    positions_with,
    subtree,
    substitute,
    variable,
)
from src.core.wta import GrammarRule, Run, Wtg, relabel_alphabet, relabel_tree, to_wta
from src.utils.logging_utils import setup_logger

logger = setup_logger(__name__)

Constraints = Tuple[Tuple[Position, ...], ...]


def canonical_constraints(groups: Iterable[Iterable[Position]]) -> Constraints:
    """
    Merge position groups (pairs or classes) into the canonical partition:
    sorted classes of sorted positions, trivial classes omitted.
    """
    parent: Dict[Position, Position] = {}

    def find(p: Position) -> Position:
        while parent.setdefault(p, p) != p:
            parent[p] = parent[parent[p]]
            p = parent[p]
        return p

    for group in groups:
        group = list(group)
        for p in group:
            find(p)
        for p in group[1:]:
            a, b = find(group[0]), find(p)
            if a != b:
                parent[max(a, b)] = min(a, b)
    classes: Dict[Position, List[Position]] = defaultdict(list)
    for p in parent:
        classes[find(p)].append(p)
    return tuple(sorted(tuple(sorted(c)) for c in classes.values() if len(c) > 1))


def format_constraints(constraints: Constraints) -> str:
    """``[1=2.1, 3=4]``; empty for no constraints."""
    if not constraints:
        return ""
    return "[" + ", ".join("=".join(format_position(p) for p in c) for c in constraints) + "]"


@dataclass(frozen=True)
class ConstrainedRule:
    """
    A rule lhs -E-> target with weight.

    constraints holds only the nontrivial classes of E, canonically ordered, so
    two rules are equal exactly when they are syntactically the same.
    """

    lhs: Tree
    target: str
    constraints: Constraints = ()
    weight: Fraction = ONE

    def state_positions(self, is_state: Callable[[str], bool]) -> List[Position]:
        return [p for p in positions(self.lhs)
                if subtree(self.lhs, p).is_leaf and is_state(subtree(self.lhs, p).label)]

    def classes(self, is_state: Callable[[str], bool]) -> List[Tuple[Position, ...]]:
        """All classes of E on pos_Q(lhs), singletons included, ordered by first position."""
        constrained = {p for c in self.constraints for p in c}
        singles = [(p,) for p in self.state_positions(is_state) if p not in constrained]
        return sorted(list(self.constraints) + singles)

    def class_of(self, p: Position) -> Tuple[Position, ...]:
        for c in self.constraints:
            if p in c:
                return c
        return (p,)

    def is_constrained(self, p: Position) -> bool:
        return len(self.class_of(p)) > 1

    def with_weight(self, weight: Fraction) -> "ConstrainedRule":
        return ConstrainedRule(self.lhs, self.target, self.constraints, weight)

    def __str__(self) -> str:
        constraints = format_constraints(self.constraints)
        middle = f" {constraints}" if constraints else ""
        return f"{format_tree(self.lhs)}{middle} -> {self.target} @ {self.weight}"


def sink_rule(symbol: str, rank: int) -> ConstrainedRule:
    return ConstrainedRule(Tree(symbol, [Tree(BOT)] * rank), BOT, (), ONE)


class ValidationReport(BaseModel):
    valid: bool
    diagnostics: List[str] = Field(default_factory=list)

    def __bool__(self) -> bool:
        return self.valid


class Wtah:
    """
    A WTAh with the designated sink state BOT.

    Args:
        states: Non-sink states
        rules: ConstrainedRule objects, sink rules included
        final_weights: State -> weight; a plain final state has weight 1
        alphabet: Δ, inferred from the rules when None
        name: Display name

    Raises:
        GrammarException: For zero weights, unknown states or constraints on non-state positions.
        AlphabetException: For symbols outside the alphabet.
        ArityException: For rank mismatches.
    """

    def __init__(self, states: Iterable[str], rules: Iterable[ConstrainedRule],
                 final_weights: Mapping[str, object], alphabet: Optional[Mapping[str, int]] = None,
                 name: str = "M"):
        self.name = name
        self.states: Tuple[str, ...] = tuple(q for q in dict.fromkeys(states) if q != BOT)
        for q in self.states:
            if not q or is_reserved(q):
                raise GrammarException(f"invalid state name {q!r}")
        self._state_set = frozenset(self.states) | {BOT}
        self.rules: Tuple[ConstrainedRule, ...] = tuple(rules)
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
        self._by_root: Dict[str, List[ConstrainedRule]] = defaultdict(list)
        for rule in self.rules:
            self._check_rule(rule)
            self._by_root[rule.lhs.label].append(rule)

    def _check_rule(self, rule: ConstrainedRule) -> None:
        if rule.weight == 0:
            raise GrammarException(f"rule {rule} has weight 0")
        if rule.target not in self._state_set:
            raise GrammarException(f"rule {rule} targets unknown state {rule.target!r}")
        if self.is_state(rule.lhs.label):
            raise GrammarException(f"rule {rule} has a bare state as left-hand side")
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
        state_positions = set(rule.state_positions(self.is_state))
        for c in rule.constraints:
            for p in c:
                if p not in state_positions:
                    raise GrammarException(
                        f"constraint position {format_position(p)} of rule {rule} is not a state position")

    def is_state(self, label: str) -> bool:
        return label in self._state_set

    @property
    def all_states(self) -> Tuple[str, ...]:
        return self.states + (BOT,)

    def rules_for(self, symbol: str) -> List[ConstrainedRule]:
        return list(self._by_root.get(symbol, ()))

    @property
    def non_sink_rules(self) -> List[ConstrainedRule]:
        return [r for r in self.rules if r.target != BOT]

    @property
    def is_constraint_free(self) -> bool:
        return all(not r.constraints for r in self.rules)

    def _matches(self, rule: ConstrainedRule, t: Tree) -> Optional[List[Tuple[Position, str, Tree]]]:
        bindings = match_pattern(rule.lhs, t, self.is_state)
        if bindings is None:
            return None
        if rule.constraints:
            bound = {p: sub for p, _, sub in bindings}
            for c in rule.constraints:
                first = bound[c[0]]
                if any(bound[p] != first for p in c[1:]):
                    return None
        return bindings

    def state_weights(self, t: Tree, memo: Optional[Dict[Tree, Dict[str, Fraction]]] = None) -> Dict[str, Fraction]:
        """Nonzero entries of (wt^q(t))_q with constraints enforced."""
        if memo is None:
            memo = {}
        return self._weights(t, memo)

    def _weights(self, t: Tree, memo: Dict[Tree, Dict[str, Fraction]]) -> Dict[str, Fraction]:
        cached = memo.get(t)
        if cached is not None:
            return cached
        totals: Dict[str, Fraction] = defaultdict(Fraction)
        for rule in self._by_root.get(t.label, ()):
            bindings = self._matches(rule, t)
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

    def evaluate(self, t: Tree, memo: Optional[Dict[Tree, Dict[str, Fraction]]] = None) -> Fraction:
        weights = self.state_weights(t, memo)
        return sum((w * weights.get(q, ZERO) for q, w in self.final_weights.items()), ZERO)

    def reachable(self, t: Tree, memo: Optional[Dict[Tree, FrozenSet[str]]] = None) -> FrozenSet[str]:
        """States q such that some run for t to q exists, regardless of weights."""
        if memo is None:
            memo = {}
        cached = memo.get(t)
        if cached is not None:
            return cached
        found: Set[str] = set()
        for rule in self._by_root.get(t.label, ()):
            if rule.target in found:
                continue
            bindings = self._matches(rule, t)
            if bindings is not None and all(q in self.reachable(sub, memo) for _, q, sub in bindings):
                found.add(rule.target)
        result = frozenset(found)
        memo[t] = result
        return result

    def as_wtg(self) -> Wtg:
        """
        The constraint-free grammar of the non-sink rules.

        Raises:
            GrammarException: If a non-sink rule has constraints or reads BOT.
        """
        rules = []
        for rule in self.non_sink_rules:
            if rule.constraints or positions_with(rule.lhs, [BOT]):
                raise GrammarException(f"rule {rule} is not constraint-free")
            rules.append(GrammarRule(rule.lhs, rule.target, rule.weight))
        final = {q: w for q, w in self.final_weights.items() if q != BOT}
        return Wtg(self.states, rules, final, alphabet=self.alphabet, name=self.name)

    def __repr__(self) -> str:
        return f"<WTAh {self.name}: {len(self.states)} states + {BOT}, {len(self.rules)} rules>"


def validate_eq_restricted(M: Wtah) -> ValidationReport:
    """
    Check that M is eq-restricted.

    (i): BOT is not final, δ(BOT,…,BOT) -> BOT with weight 1 exists for every δ, no other rule targets BOT.
    (ii).1: the non-BOT states of each class of a non-sink rule form a singleton.
    (ii).2: each class of a non-sink rule has exactly one position with a non-BOT state.
    """
    diagnostics: List[str] = []
    if BOT in M.final_weights:
        diagnostics.append(f"clause (i): sink state {BOT} is final")
    for symbol in M.alphabet:
        expected = sink_rule(symbol, M.alphabet[symbol])
        if expected not in M.rules:
            diagnostics.append(f"clause (i): missing sink rule {expected}")
    for rule in M.rules:
        if rule.target != BOT:
            continue
        if rule != sink_rule(rule.lhs.label, rule.lhs.rank):
            diagnostics.append(f"clause (i): rule {rule} targets {BOT} but is not a sink rule")
    for rule in M.non_sink_rules:
        for c in rule.classes(M.is_state):
            labels = [subtree(rule.lhs, p).label for p in c]
            leading = [q for q in labels if q != BOT]
            where = "{" + ",".join(format_position(p) for p in c) + "}"
            if len(set(leading)) != 1:
                diagnostics.append(f"clause (ii).1: class {where} of rule {rule} has non-{BOT} states {sorted(set(leading))}")
            if len(leading) != 1:
                diagnostics.append(
                    f"clause (ii).2: class {where} of rule {rule} has {len(leading)} positions with non-{BOT} states")
    return ValidationReport(valid=not diagnostics, diagnostics=diagnostics)


def wtah_state_weight(M: Wtah, t: Tree, q: str) -> Fraction:
    return M.state_weights(t).get(q, ZERO)


def wtah_evaluate(M: Wtah, t: Tree) -> Fraction:
    return M.evaluate(t)


def has_run(M: Wtah, t: Tree, q: str) -> bool:
    return q in M.reachable(t)


@dataclass(frozen=True)
class ConstrainedRun:
    """
    A run of a WTAh, listed by the rules it applies (a position after its extensions).
    """

    steps: Tuple[Tuple[ConstrainedRule, Position], ...]
    target: str

    @property
    def weight(self) -> Fraction:
        return fprod(rule.weight for rule, _ in self.steps)

    def rule_at(self, p: Position) -> Optional[ConstrainedRule]:
        for rule, q in self.steps:
            if q == p:
                return rule
        return None

    def tree(self) -> Tree:
        at = {p: rule for rule, p in self.steps}

        def build(p: Position) -> Tree:
            result = at[p].lhs
            for sub in positions(at[p].lhs):
                if p + sub in at and sub:
                    result = substitute(result, sub, build(p + sub))
            return result

        return build(())

    def is_run_of(self, M: Wtah, t: Optional[Tree] = None) -> bool:
        """True if every step is a rule of M applied consistently, on t when given."""
        at = {p: rule for rule, p in self.steps}
        if len(at) != len(self.steps) or () not in at or at[()].target != self.target:
            return False
        try:
            built = self.tree()
        except (KeyError, IndexError):
            return False
        if t is not None and built != t:
            return False
        rules = set(M.rules)
        used: Set[Position] = set()

        def check(p: Position) -> bool:
            rule = at[p]
            used.add(p)
            if rule not in rules:
                return False
            if M._matches(rule, subtree(built, p)) is None:
                return False
            for sub in rule.state_positions(M.is_state):
                child = at.get(p + sub)
                if child is None or child.target != subtree(rule.lhs, sub).label or not check(p + sub):
                    return False
            return True

        return check(()) and used == set(at)

    def describe(self) -> str:
        return "; ".join(f"{format_position(p)}: {rule}" for rule, p in self.steps)


def enumerate_constrained_runs(M: Wtah, t: Tree, q: str) -> List[ConstrainedRun]:
    """Every run of M for t to q (exponential, for cross-checks)."""

    def runs(node: Tree, state: str) -> List[Tuple[Tuple[ConstrainedRule, Position], ...]]:
        found = []
        for rule in M.rules_for(node.label):
            if rule.target != state:
                continue
            bindings = M._matches(rule, node)
            if bindings is None:
                continue
            child_runs = [[tuple((r, p + sub) for r, sub in steps) for steps in runs(child, child_state)]
                          for p, child_state, child in bindings]
            for combination in product(*child_runs):
                found.append(tuple(step for part in combination for step in part) + ((rule, ()),))
        return found

    return [ConstrainedRun(steps, q) for steps in runs(t, q)]


def sink_run(t: Tree, M: Optional[Wtah] = None) -> ConstrainedRun:
    """
    The unique run to BOT for t.

    Raises:
        GrammarException: If M lacks a sink rule needed for t.
    """
    steps: List[Tuple[ConstrainedRule, Position]] = []
    rules = set(M.rules) if M is not None else None

    def walk(node: Tree, p: Position) -> None:
        for i, child in enumerate(node.children, start=1):
            walk(child, p + (i,))
        rule = sink_rule(node.label, node.rank)
        if rules is not None and rule not in rules:
            raise GrammarException(f"{M.name} has no sink rule {rule}")
        steps.append((rule, p))

    walk(t, ())
    return ConstrainedRun(tuple(steps), BOT)


def _needed_states(M: Wtah, targets: Iterable[str]) -> Set[str]:
    needed = set(targets)
    changed = True
    while changed:
        changed = False
        for rule in M.rules:
            if rule.target not in needed:
                continue
            for c in rule.classes(M.is_state):
                q = subtree(rule.lhs, _leader(rule, c)).label
                if q not in needed:
                    needed.add(q)
                    changed = True
    return needed


def _leader(rule: ConstrainedRule, c: Sequence[Position]) -> Position:
    """The lex-minimal non-BOT position of a class, or its first position."""
    for p in c:
        if subtree(rule.lhs, p).label != BOT:
            return p
    return c[0]


def run_trees(M: Wtah, max_height: int, targets: Optional[Iterable[str]] = None) -> Dict[str, List[Tree]]:
    """
    For each target state, the trees of height <= max_height that have a run to it.

    Trees are grown rule by rule: the leading position of each class takes a
    tree with a run to its state, the other positions of the class copy it.
    Results are in canonical order.
    """
    targets = list(M.states) if targets is None else list(targets)
    needed = _needed_states(M, targets)
    reach_memo: Dict[Tree, FrozenSet[str]] = {}
    found: Dict[str, Set[Tree]] = {q: set() for q in needed}
    for bound in range(max_height + 1):
        grown: Dict[str, Set[Tree]] = {q: set(trees) for q, trees in found.items()}
        for rule in M.rules:
            if rule.target not in needed or rule.lhs.height > bound:
                continue
            choices = []
            classes = rule.classes(M.is_state)
            for c in classes:
                lead = _leader(rule, c)
                limit = bound - max(len(p) for p in c)
                candidates = [t for t in found[subtree(rule.lhs, lead).label] if t.height <= limit
                              and all(subtree(rule.lhs, p).label in M.reachable(t, reach_memo) for p in c)]
                choices.append(candidates)
            for picked in product(*choices):
                tree = rule.lhs
                for c, t in zip(classes, picked):
                    for p in c:
                        tree = substitute(tree, p, t)
                grown[rule.target].add(tree)
        found = grown
        logger.debug(f"run_trees {M.name}: height <= {bound}: " +
                     ", ".join(f"{q}={len(found[q])}" for q in sorted(found)))
    return {q: sorted(found.get(q, ()), key=Tree.sort_key) for q in targets}


def state_supports(M: Wtah, max_height: int) -> Dict[str, Dict[Tree, Fraction]]:
    """For each non-sink state q: {t: wt^q(t)} over trees of height <= max_height with wt^q(t) != 0."""
    memo: Dict[Tree, Dict[str, Fraction]] = {}
    supports: Dict[str, Dict[Tree, Fraction]] = {}
    for q, trees in run_trees(M, max_height).items():
        weights = {t: M.state_weights(t, memo).get(q, ZERO) for t in trees}
        supports[q] = {t: w for t, w in weights.items() if w != 0}
    return supports


def enumerate_wtah_support(M: Wtah, max_height: int) -> Dict[Tree, Fraction]:
    """All t with he(t) <= max_height and ⟦M⟧(t) != 0."""
    memo: Dict[Tree, Dict[str, Fraction]] = {}
    candidates: Set[Tree] = set()
    for trees in run_trees(M, max_height, targets=list(M.final_weights)).values():
        candidates.update(trees)
    support = {}
    for t in sorted(candidates, key=Tree.sort_key):
        value = M.evaluate(t, memo)
        if value != 0:
            support[t] = value
    return support


def _lex_first_occurrences(u: Tree, k: int) -> Tuple[Dict[Position, str], List[List[Position]]]:
    """Variable positions of u: position -> variable and, per x_i, its sorted positions."""
    occurrences = [positions_with(u, [variable(i)]) for i in range(1, k + 1)]
    at = {p: variable(i) for i, ps in enumerate(occurrences, start=1) for p in ps}
    return at, occurrences


def h_R_rule(rule: GrammarRule, h: Homomorphism) -> ConstrainedRule:
    """
    The constrained rule h^R(r) for a WTA rule r = σ(q1..qk) -> q.

    The lex-minimal occurrence of x_i in h(σ) becomes q_i, other occurrences
    become BOT, and E relates all occurrences of each x_i.
    """
    sigma = rule.lhs.label
    states = [c.label for c in rule.lhs.children]
    u = h.images[sigma]
    _, occurrences = _lex_first_occurrences(u, len(states))
    lhs = u
    for i, ps in enumerate(occurrences):
        for j, p in enumerate(ps):
            lhs = substitute(lhs, p, Tree(states[i] if j == 0 else BOT))
    return ConstrainedRule(lhs, rule.target, canonical_constraints(occurrences), rule.weight)


def relabel_and_merge_wtah(M: Wtah, mapping: Mapping[str, str], name: Optional[str] = None) -> Wtah:
    """Relabel symbols of a WTAh and add up the weights of rules that become identical."""
    alphabet = relabel_alphabet(M.alphabet, mapping)
    merged: Dict[Tuple[Tree, str, Constraints], Fraction] = {}
    for rule in M.rules:
        key = (relabel_tree(rule.lhs, mapping, M.is_state), rule.target, rule.constraints)
        merged[key] = merged.get(key, ZERO) + rule.weight
    rules = [ConstrainedRule(lhs, target, constraints, w)
             for (lhs, target, constraints), w in merged.items() if w != 0]
    if len(rules) < len(merged):
        logger.info(f"{len(merged) - len(rules)} merged rules of {M.name} cancel to weight 0 and were dropped")
    return Wtah(M.states, rules, M.final_weights, alphabet=alphabet, name=name or M.name)


def _annotated(symbol: str, index: int) -> str:
    return f"<{symbol}#{index}>"


def hom_image(A: Wtg, h: Homomorphism, name: Optional[str] = None) -> Wtah:
    """
    An eq-restricted WTAh recognizing h(⟦A⟧).

    Each rule r of A becomes h^R(r) with its root symbol annotated by r, so
    that rules from different sources stay apart; sink rules are added for
    every target symbol; finally the annotations are erased and identical
    rules are merged by summing their weights.

    Raises:
        HomomorphismException: If h is deleting or erasing.
        AlphabetException: If A uses symbols outside the source alphabet of h.
    """
    h.require_nondeleting_nonerasing()
    if not A.alphabet.is_compatible(h.source) or any(s not in h.source for s in A.alphabet):
        raise AlphabetException(f"alphabet of {A.name} does not match the source alphabet of {h.name}")
    if not A.is_wta:
        A = to_wta(A)
    annotated_symbols = dict(h.target)
    erase: Dict[str, str] = {}
    rules: List[ConstrainedRule] = []
    for index, rule in enumerate(A.rules):
        image_rule = h_R_rule(rule, h)
        root = image_rule.lhs
        tag = _annotated(root.label, index)
        annotated_symbols[tag] = root.rank
        erase[tag] = root.label
        rules.append(ConstrainedRule(Tree(tag, root.children), image_rule.target,
                                     image_rule.constraints, image_rule.weight))
    rules.extend(sink_rule(symbol, h.target[symbol]) for symbol in h.target)
    annotated = Wtah(A.states, rules, A.final_weights, alphabet=annotated_symbols, name=f"{A.name}''")
    image = relabel_and_merge_wtah(annotated, erase, name=name or f"{A.name}'")
    logger.info(f"hom_image {A.name} under {h.name}: {len(A.rules)} rules -> {len(image.rules)} rules")
    return image


def h_R_run(run: Run, A: Wtg, h: Homomorphism, image: Optional[Wtah] = None) -> ConstrainedRun:
    """
    Trace a run of A through h.

    The image of the subrun at x_i goes to the lex-minimal occurrence of x_i in
    h(σ); other occurrences get the unique sink run of the processed tree.
    Rule weights come from image (the merged automaton) when given.

    Raises:
        GrammarException: If a traced rule is missing from image.
    """
    at = {p: rule for rule, p in run.steps}
    s = run.tree(A.is_state)
    merged: Dict[Tuple[Tree, str, Constraints], ConstrainedRule] = {}
    if image is not None:
        merged = {(r.lhs, r.target, r.constraints): r for r in image.rules}

    def trace(p: Position) -> List[Tuple[ConstrainedRule, Position]]:
        rule = at[p]
        image_rule = h_R_rule(rule, h)
        if image is not None:
            key = (image_rule.lhs, image_rule.target, image_rule.constraints)
            if key not in merged:
                raise GrammarException(f"rule {image_rule} is not a rule of {image.name}")
            image_rule = merged[key]
        u = h.images[rule.lhs.label]
        _, occurrences = _lex_first_occurrences(u, rule.lhs.rank)
        steps: List[Tuple[ConstrainedRule, Position]] = []
        for i, ps in enumerate(occurrences, start=1):
            for j, o in enumerate(ps):
                if j == 0:
                    steps.extend((r, o + q) for r, q in trace(p + (i,)))
                else:
                    copy = apply(h, subtree(s, p + (i,)))
                    steps.extend((r, o + q) for r, q in sink_run(copy).steps)
        steps.append((image_rule, ()))
        return steps

    return ConstrainedRun(tuple(trace(())), run.target)
