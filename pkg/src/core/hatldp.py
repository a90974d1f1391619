"""
Δ-parts, the constraint-free WTA Â, the translation t ↦ t̂, the pumping
constant, the height-counting WTA B̂ and the large duplication property (LDP).

Â reads a tree through the Δ-parts of the rules of an eq-restricted WTAh and
ignores the copies processed by BOT. B̂ is Â with a counter min(height, N)
attached to every state that refuses to let a constrained subtree reach
height N, so ⟦Â⟧ - ⟦B̂⟧ is nonzero exactly on trees with a large duplicated
subtree.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from src.config.config import TIGHT_PUMPING_CONSTANT
from src.core.errors import HatTreeException, PreconditionException
from src.core.field import ONE, ZERO
from src.core.hom import Homomorphism
from src.core.terms import BOT, Position, Tree, format_position, format_tree, positions, subtree, substitute
from src.core.wta import GrammarRule, Wtg, is_zero, linear_combination
from src.core.wtah import (
    ConstrainedRule,
    Constraints,
    ValidationReport,
    Wtah,
    enumerate_constrained_runs,
    enumerate_wtah_support,
)
from src.utils.logging_utils import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class DeltaPart:
    """
    The Δ-part ℓ̂ of a non-sink rule, with the data needed to rebuild ℓ.

    Attributes:
        shape: lhs with every state position overwritten by BOT
        arity: Number of non-BOT state positions
        placement: The non-BOT state positions, lexicographically ordered
        constraints: Nontrivial constraint classes of the rule
        leaders: BOT position -> non-BOT position of its class
    """

    shape: Tree
    arity: int
    placement: Tuple[Position, ...]
    constraints: Constraints
    leaders: Tuple[Tuple[Position, Position], ...]

    @property
    def symbol(self) -> str:
        return hat_symbol(self.shape)

    @property
    def depth(self) -> int:
        """Largest depth of a Δ-labelled position of the shape."""
        return max(len(p) for p in positions(self.shape) if subtree(self.shape, p).label != BOT)

    def constrained(self, p: Position) -> bool:
        return any(p in c for c in self.constraints)


def hat_symbol(shape: Tree) -> str:
    """Leaf shapes print as their symbol, others as ``[f(BOT,BOT,BOT)]``."""
    if shape.is_leaf:
        return shape.label
    return f"[{format_tree(shape)}]"


def delta_part(rule: ConstrainedRule, M: Wtah) -> DeltaPart:
    """
    The Δ-part of a non-sink rule of M.

    Raises:
        PreconditionException: For sink rules.
    """
    if rule.target == BOT:
        raise PreconditionException(f"rule {rule} targets {BOT} and has no Δ-part")
    shape = rule.lhs
    placement: List[Position] = []
    leaders: List[Tuple[Position, Position]] = []
    for p in rule.state_positions(M.is_state):
        if subtree(rule.lhs, p).label != BOT:
            placement.append(p)
        shape = substitute(shape, p, Tree(BOT))
    for p in rule.state_positions(M.is_state):
        if subtree(rule.lhs, p).label != BOT:
            continue
        lead = [x for x in rule.class_of(p) if subtree(rule.lhs, x).label != BOT]
        if lead:
            leaders.append((p, lead[0]))
    return DeltaPart(shape, len(placement), tuple(placement), rule.constraints, tuple(leaders))


def delta_parts(M: Wtah) -> Dict[str, DeltaPart]:
    """Hat symbol -> Δ-part, first rule wins when several rules share a shape."""
    parts: Dict[str, DeltaPart] = {}
    for rule in M.non_sink_rules:
        part = delta_part(rule, M)
        parts.setdefault(part.symbol, part)
    return parts


def validate_hat_preconditions(M: Wtah) -> ValidationReport:
    """
    Check that rules with equal Δ-parts agree on (a) their constraint sets and
    (b) the placement of their non-BOT state positions.
    """
    diagnostics: List[str] = []
    seen: Dict[Tree, Tuple[ConstrainedRule, DeltaPart]] = {}
    for rule in M.non_sink_rules:
        part = delta_part(rule, M)
        if part.shape not in seen:
            seen[part.shape] = (rule, part)
            continue
        other_rule, other = seen[part.shape]
        if part.constraints != other.constraints:
            diagnostics.append(
                f"clause (a): rules {other_rule} and {rule} share Δ-part {part.symbol} but differ in constraints")
        if part.placement != other.placement:
            diagnostics.append(
                f"clause (b): rules {other_rule} and {rule} share Δ-part {part.symbol} "
                f"but place their non-{BOT} states differently")
    for rule in M.non_sink_rules:
        part = delta_part(rule, M)
        unled = [p for p in rule.state_positions(M.is_state)
                 if subtree(rule.lhs, p).label == BOT and p not in dict(part.leaders)]
        if unled:
            diagnostics.append(f"rule {rule} has {BOT} positions without a leading copy: "
                               f"{', '.join(format_position(p) for p in unled)}")
    return ValidationReport(valid=not diagnostics, diagnostics=diagnostics)


def _require_hat_preconditions(M: Wtah) -> None:
    report = validate_hat_preconditions(M)
    if not report.valid:
        raise PreconditionException(f"{M.name} violates the Δ-part conditions", report.diagnostics)


def build_hat_wta(M: Wtah) -> Wtg:
    """
    The WTA Â over Δ-part symbols: one rule ℓ̂(q1..qk) -> q of weight wt(r) per non-sink rule r.

    Raises:
        PreconditionException: If validate_hat_preconditions fails.
    """
    _require_hat_preconditions(M)
    alphabet: Dict[str, int] = {}
    merged: Dict[Tuple[Tree, str], Fraction] = {}
    for rule in M.non_sink_rules:
        part = delta_part(rule, M)
        alphabet[part.symbol] = part.arity
        lhs = Tree(part.symbol, (Tree(subtree(rule.lhs, p).label) for p in part.placement))
        merged[(lhs, rule.target)] = merged.get((lhs, rule.target), ZERO) + rule.weight
    rules = [GrammarRule(lhs, target, w) for (lhs, target), w in merged.items() if w != 0]
    final = {q: w for q, w in M.final_weights.items() if q != BOT}
    hat = Wtg(M.states, rules, final, alphabet=alphabet, name=f"{M.name}^")
    logger.debug(f"build_hat_wta {M.name}: {len(alphabet)} Δ-parts, {len(rules)} rules")
    return hat


def hat_tree(M: Wtah, t: Tree) -> Tree:
    """
    t̂: the root Δ-part of any run of M for t to a non-BOT state, recursively
    applied at the non-BOT state positions.

    Raises:
        HatTreeException: With reason "no-run" or "ambiguous-decomposition".
    """
    reach: Dict[Tree, frozenset] = {}
    memo: Dict[Tree, Tree] = {}

    def hat(node: Tree) -> Tree:
        if node in memo:
            return memo[node]
        decompositions = set()
        for rule in M.rules_for(node.label):
            if rule.target == BOT:
                continue
            bindings = M._matches(rule, node)
            if bindings is None or not all(q in M.reachable(sub, reach) for _, q, sub in bindings):
                continue
            part = delta_part(rule, M)
            decompositions.add((part.symbol, tuple(subtree(node, p) for p in part.placement)))
        if not decompositions:
            raise HatTreeException(f"{node} has no run of {M.name} to a non-{BOT} state", "no-run")
        if len(decompositions) > 1:
            symbols = sorted(symbol for symbol, _ in decompositions)
            raise HatTreeException(f"{node} decomposes in {len(decompositions)} ways: {symbols}",
                                   "ambiguous-decomposition")
        symbol, children = decompositions.pop()
        result = Tree(symbol, (hat(c) for c in children))
        memo[node] = result
        return result

    return hat(t)


def unhat_tree(M: Wtah, t_hat: Tree, parts: Optional[Dict[str, DeltaPart]] = None) -> Tree:
    """
    Rebuild t from t̂: non-BOT positions of each shape take the unhatted
    children, BOT positions copy their leading position.

    Raises:
        HatTreeException: For a symbol that is not a Δ-part of M.
    """
    if parts is None:
        parts = delta_parts(M)
    part = parts.get(t_hat.label)
    if part is None or part.arity != t_hat.rank:
        raise HatTreeException(f"{t_hat.label!r} is not a Δ-part of {M.name}", "no-run")
    filled = {p: unhat_tree(M, c, parts) for p, c in zip(part.placement, t_hat.children)}
    tree = part.shape
    for p, child in filled.items():
        tree = substitute(tree, p, child)
    for p, lead in part.leaders:
        tree = substitute(tree, p, filled[lead])
    return tree


def pumping_constant(M: Wtah, h: Optional[Homomorphism] = None, tight: Optional[bool] = None,
                     hat: Optional[Wtg] = None) -> int:
    """
    N = N̂ · max he(h(σ)), both factors at least 1.

    N̂ is the number of states of Â, or with tight the dimension of the space
    spanned by the state-weight vectors of Â. Without h the left-hand sides of
    the non-sink rules of M stand in for the images.
    """
    if tight is None:
        tight = TIGHT_PUMPING_CONSTANT
    if hat is None:
        hat = build_hat_wta(M)
    n_hat = is_zero(hat).dimension if tight else len(hat.states)
    if h is not None:
        height = h.max_image_height
    else:
        height = max((r.lhs.height for r in M.non_sink_rules), default=0)
    return max(1, n_hat) * max(1, height)


def counter_state(q: str, n: int) -> str:
    return f"{q}#{n}"


def build_counter_wta(hat: Wtg, M: Wtah, N: int) -> Wtg:
    """
    B̂: Â with states ⟨q,n⟩, n ∈ {0..N}, where n = min(he(t), N) for the tree t
    the state processed. Constrained children must carry n < N.
    """
    parts = delta_parts(M)
    states = [counter_state(q, n) for q in hat.states for n in range(N + 1)]
    rules: List[GrammarRule] = []
    for rule in hat.rules:
        part = parts[rule.lhs.label]
        child_states = [c.label for c in rule.lhs.children]
        ranges = [range(N) if part.constrained(p) else range(N + 1) for p in part.placement]
        lead_index = {p: i for i, p in enumerate(part.placement)}
        for counters in product(*ranges):
            n = part.depth
            for p, c in zip(part.placement, counters):
                n = max(n, len(p) + c)
            for p, lead in part.leaders:
                n = max(n, len(p) + counters[lead_index[lead]])
            lhs = Tree(rule.lhs.label, (Tree(counter_state(q, c)) for q, c in zip(child_states, counters)))
            rules.append(GrammarRule(lhs, counter_state(rule.target, min(n, N)), rule.weight))
    final = {counter_state(q, n): w for q, w in hat.final_weights.items() for n in range(N + 1)}
    counted = Wtg(states, rules, final, alphabet=hat.alphabet, name=f"{hat.name}#")
    logger.debug(f"build_counter_wta: N={N}, {len(states)} states, {len(rules)} rules")
    return counted


class LdpWitness(BaseModel):
    """A tree in the support with a constrained subtree of height >= N."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    tree: Tree
    position: Position
    constrained_position: Position
    subtree_height: int

    def describe(self) -> str:
        return (f"{format_tree(self.tree)} at {format_position(self.position)}, "
                f"constrained {format_position(self.constrained_position)}, height {self.subtree_height}")


class LdpReport(BaseModel):
    """Outcome of the LDP decision."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    has_ldp: bool
    witness: Optional[LdpWitness] = None
    pumping_constant: int = 0
    hat_states: int = 0
    basis_dimension: int = 0
    hat_witness: Optional[Tree] = None


def locate_duplication(M: Wtah, t: Tree, N: int) -> Optional[LdpWitness]:
    """
    The length-lexicographically minimal rule position p of an accepting run of
    M for t, together with the first position p' of a nontrivial class of that
    rule with he(t|_{pp'}) >= N.
    """
    best: Optional[Tuple[Tuple, LdpWitness]] = None
    for q in M.final_weights:
        if q == BOT:
            continue
        for run in enumerate_constrained_runs(M, t, q):
            for rule, p in run.steps:
                for c in rule.constraints:
                    for p_prime in c:
                        height = subtree(t, p + p_prime).height
                        if height < N:
                            continue
                        key = (len(p), p, len(p_prime), p_prime)
                        if best is None or key < best[0]:
                            best = (key, LdpWitness(tree=t, position=p, constrained_position=p_prime,
                                                    subtree_height=height))
    return None if best is None else best[1]


def decide_ldp(M: Wtah, h: Optional[Homomorphism] = None, N: Optional[int] = None,
               tight: Optional[bool] = None) -> LdpReport:
    """
    Decide whether M has the LDP by testing ⟦Â⟧ - ⟦B̂⟧ for zeroness.

    Raises:
        PreconditionException: If validate_hat_preconditions fails.
    """
    hat = build_hat_wta(M)
    if N is None:
        N = pumping_constant(M, h=h, tight=tight, hat=hat)
    counted = build_counter_wta(hat, M, N)
    difference = linear_combination([(ONE, hat), (-ONE, counted)], name=f"{M.name}^-#")
    check = is_zero(difference)
    logger.info(f"decide_ldp {M.name}: N={N}, basis dimension {check.dimension}, zero={check.is_zero}")
    if check.is_zero:
        return LdpReport(has_ldp=False, pumping_constant=N, hat_states=len(hat.states),
                         basis_dimension=check.dimension)
    t = unhat_tree(M, check.witness)
    witness = locate_duplication(M, t, N)
    if witness is None:
        raise PreconditionException(
            f"{M.name}: {format_tree(t)} separates Â and B̂ but has no constrained subtree of height >= {N}")
    return LdpReport(has_ldp=True, witness=witness, pumping_constant=N, hat_states=len(hat.states),
                     basis_dimension=check.dimension, hat_witness=check.witness)


def ldp_bounded_oracle(M: Wtah, N: int, max_height: int) -> LdpReport:
    """Search the support up to max_height for a tree with a constrained subtree of height >= N."""
    for t in enumerate_wtah_support(M, max_height):
        witness = locate_duplication(M, t, N)
        if witness is not None:
            return LdpReport(has_ldp=True, witness=witness, pumping_constant=N)
    return LdpReport(has_ldp=False, pumping_constant=N)
