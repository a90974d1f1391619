"""
Linearization of a WTAh without the LDP and the decision whether h(⟦A⟧) is regular.
"""

import time
from fractions import Fraction
from itertools import product
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from src.config.config import MAX_LINEARIZE_RULES, TETRIS_ORACLE_HEIGHT, TIGHT_PUMPING_CONSTANT
from src.core.errors import LinearizationException, NotTetrisFreeException
from src.core.field import ZERO
from src.core.hatldp import LdpReport, decide_ldp
from src.core.hom import Homomorphism, TetrisCheck, is_tetris_free
from src.core.terms import BOT, Tree, format_position, format_tree, subtree, substitute
from src.core.wta import GrammarRule, Wtg
from src.core.wtah import Wtah, hom_image, state_supports
from src.utils.logging_utils import setup_logger

logger = setup_logger(__name__)


class DecisionSettings(BaseModel):
    """Knobs of the decision pipeline, defaulting to the configuration file."""

    max_rules: int = Field(default=MAX_LINEARIZE_RULES, ge=1)
    tight_pumping_constant: bool = TIGHT_PUMPING_CONSTANT
    tetris_oracle_height: int = Field(default=TETRIS_ORACLE_HEIGHT, ge=0)


class StageSummary(BaseModel):
    name: str
    seconds: float
    details: Dict[str, str] = Field(default_factory=dict)


class Decision(BaseModel):
    """
    Result of the regularity decision.

    Exactly one of grammar (when regular) and ldp.witness (when not) is set.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    regular: bool
    grammar: Optional[Wtg] = None
    ldp: LdpReport
    image: Optional[Wtah] = None
    trace: List[StageSummary] = Field(default_factory=list)

    @property
    def certificate(self):
        return self.grammar if self.regular else self.ldp


def linearize(M: Wtah, N: int, max_rules: Optional[int] = None, check: bool = False) -> Wtg:
    """
    lin(M): instantiate every constrained class with the trees of height < N
    carrying a nonzero weight in the leading state.

    Each instantiation of a rule r gets weight wt(r)·Π wt^{q_p}(t_p) over the
    instantiated non-BOT positions; instantiations with equal left-hand side and
    target are summed. Unconstrained state positions are kept, sink rules and
    the sink state are dropped.

    Raises:
        LinearizationException: If M has the LDP (with check), a BOT position
            has no leading copy, or more than max_rules rules would be produced.
    """
    if max_rules is None:
        max_rules = MAX_LINEARIZE_RULES
    if check:
        report = decide_ldp(M, N=N)
        if report.has_ldp:
            raise LinearizationException(f"{M.name} has the LDP: {report.witness.describe()}")
    supports = state_supports(M, N - 1)

    plans = []
    total = 0
    for rule in M.non_sink_rules:
        classes = list(rule.constraints)
        choices = []
        for c in classes:
            leading = [p for p in c if subtree(rule.lhs, p).label != BOT]
            if not leading:
                raise LinearizationException(f"class {{{', '.join(format_position(p) for p in c)}}} "
                                             f"of rule {rule} has no leading copy")
            trees = set(supports.get(subtree(rule.lhs, leading[0]).label, {}))
            for p in leading[1:]:
                trees &= set(supports.get(subtree(rule.lhs, p).label, {}))
            choices.append((c, leading, sorted(trees, key=Tree.sort_key)))
        for p in rule.state_positions(M.is_state):
            if subtree(rule.lhs, p).label == BOT and not rule.is_constrained(p):
                raise LinearizationException(f"{BOT} position {format_position(p)} of rule {rule} is unconstrained")
        count = 1
        for _, _, trees in choices:
            count *= len(trees)
        total += count
        if total > max_rules:
            raise LinearizationException(
                f"linearization of {M.name} needs more than {max_rules} rules (at least {total} with N={N})")
        plans.append((rule, choices))
    logger.info(f"linearize {M.name}: N={N}, {total} instantiated rules")

    merged: Dict[Tuple[Tree, str], Fraction] = {}
    for rule, choices in plans:
        for picked in product(*(trees for _, _, trees in choices)):
            lhs = rule.lhs
            weight = rule.weight
            for (c, leading, _), t in zip(choices, picked):
                for p in c:
                    lhs = substitute(lhs, p, t)
                for p in leading:
                    weight *= supports[subtree(rule.lhs, p).label][t]
            key = (lhs, rule.target)
            merged[key] = merged.get(key, ZERO) + weight
    rules = [GrammarRule(lhs, target, w) for (lhs, target), w in merged.items() if w != 0]
    final = {q: w for q, w in M.final_weights.items() if q != BOT}
    return Wtg(M.states, rules, final, alphabet=M.alphabet, name=f"lin_{M.name}")


def _stage(trace: List[StageSummary], name: str, started: float, **details) -> None:
    summary = StageSummary(name=name, seconds=round(time.perf_counter() - started, 6),
                           details={k: str(v) for k, v in details.items()})
    trace.append(summary)
    logger.info(f"stage {name} finished in {summary.seconds:.3f}s " +
                " ".join(f"{k}={v}" for k, v in summary.details.items()))


def decide_hom(A: Wtg, h: Homomorphism, settings: Optional[DecisionSettings] = None) -> Decision:
    """
    Decide whether h(⟦A⟧) is regular.

    Step 1 builds the eq-restricted WTAh A' for h(⟦A⟧), step 2 decides the LDP
    for A' (LDP means not regular), step 3 linearizes A' into a grammar
    certificate.

    Raises:
        HomomorphismException: If h is deleting or erasing.
        NotTetrisFreeException: If h is not tetris-free (with a witness pair when one is known).
    """
    settings = settings or DecisionSettings()
    trace: List[StageSummary] = []

    started = time.perf_counter()
    h.require_nondeleting_nonerasing()
    tetris: TetrisCheck = is_tetris_free(h, oracle_height=settings.tetris_oracle_height)
    _stage(trace, "tetris-free", started, tetris_free=tetris.tetris_free, conclusive=tetris.conclusive)
    if not tetris.tetris_free:
        if tetris.witness is None:
            raise NotTetrisFreeException(
                f"homomorphism {h.name} could not be shown tetris-free: its tiling automaton is ambiguous "
                f"but no violating pair exists up to height {settings.tetris_oracle_height}", None)
        s, s_prime = tetris.witness
        raise NotTetrisFreeException(f"homomorphism {h.name} is not tetris-free: {format_tree(s)} and "
                                     f"{format_tree(s_prime)} have the same image", tetris.witness)

    started = time.perf_counter()
    image = hom_image(A, h)
    _stage(trace, "hom-image", started, source_rules=len(A.rules), image_rules=len(image.rules))

    started = time.perf_counter()
    report = decide_ldp(image, h=h, tight=settings.tight_pumping_constant)
    _stage(trace, "ldp", started, N=report.pumping_constant, N_hat=report.hat_states,
           basis_dimension=report.basis_dimension, has_ldp=report.has_ldp)
    if report.has_ldp:
        return Decision(regular=False, ldp=report, image=image, trace=trace)

    started = time.perf_counter()
    grammar = linearize(image, report.pumping_constant, max_rules=settings.max_rules)
    _stage(trace, "linearize", started, certificate_rules=len(grammar.rules))
    return Decision(regular=True, grammar=grammar, ldp=report, image=image, trace=trace)


def summary_block(decision: Decision) -> Dict[str, str]:
    """The flat key=value summary appended to reports."""
    values = {
        "result": "REGULAR" if decision.regular else "NONREGULAR",
        "pumping_constant": str(decision.ldp.pumping_constant),
        "hat_states": str(decision.ldp.hat_states),
        "basis_dimension": str(decision.ldp.basis_dimension),
    }
    if decision.image is not None:
        values["image_rules"] = str(len(decision.image.rules))
    if decision.grammar is not None:
        values["certificate_rules"] = str(len(decision.grammar.rules))
    witness = decision.ldp.witness
    if witness is not None:
        values["witness"] = format_tree(witness.tree)
        values["witness_position"] = format_position(witness.position)
        values["witness_constrained_position"] = format_position(witness.constrained_position)
        values["witness_subtree_height"] = str(witness.subtree_height)
    for stage in decision.trace:
        values[f"seconds_{stage.name.replace('-', '_')}"] = f"{stage.seconds:.6f}"
    return values


def render_report(decision: Decision) -> str:
    lines = [f"RESULT: {'REGULAR' if decision.regular else 'NONREGULAR'}"]
    if decision.regular:
        lines.append(f"certificate: {decision.grammar.name} with {len(decision.grammar.rules)} rules")
    else:
        lines.append(f"LDP witness: {decision.ldp.witness.describe()}")
    for stage in decision.trace:
        details = ", ".join(f"{k}={v}" for k, v in stage.details.items())
        lines.append(f"stage {stage.name}: {stage.seconds:.3f}s ({details})")
    lines.append("")
    lines.extend(f"{key}={value}" for key, value in summary_block(decision).items())
    return "\n".join(lines) + "\n"
