"""
Brute-force oracles that cross-check the constructions.

The image oracle compares ⟦hom_image(A, h)⟧(t) with Σ_{s ∈ h⁻¹(t)} ⟦A⟧(s)
on every tree of bounded height that can have a nonzero value on either side.
"""

from fractions import Fraction
from typing import Dict, List, Optional, Set

from pydantic import BaseModel, Field

from src.config.config import DEFAULT_MAX_HEIGHT
from src.core.field import ZERO, format_rational
from src.core.hom import Homomorphism, apply, preimages
from src.core.terms import Tree, format_tree
from src.core.wta import Wtg, enumerate_support
from src.core.wtah import Wtah, hom_image, run_trees
from src.utils.logging_utils import setup_logger

logger = setup_logger(__name__)


class ImageOracleInput(BaseModel):
    """Input for the image oracle."""
    max_height: int = Field(DEFAULT_MAX_HEIGHT, ge=0, description="Largest tree height compared.")


class Mismatch(BaseModel):
    tree: str
    expected: str
    actual: str


class OracleResult(BaseModel):
    passed: bool
    checked: int
    max_height: int
    mismatch: Optional[Mismatch] = None


def preimage_sum(A: Wtg, h: Homomorphism, t: Tree, memo: Optional[Dict[Tree, Dict[str, Fraction]]] = None) -> Fraction:
    """Σ_{s ∈ h⁻¹(t)} ⟦A⟧(s)."""
    if memo is None:
        memo = {}
    total = ZERO
    for s in preimages(h, t):
        weights = A.state_weights(s, memo)
        total += sum((w * weights.get(q, ZERO) for q, w in A.final_weights.items()), ZERO)
    return total


def image_candidates(A: Wtg, h: Homomorphism, image: Wtah, max_height: int) -> List[Tree]:
    """
    Every t of height <= max_height that can be nonzero on either side.

    h(s) for s in the support of A (a nondeleting h never lowers the height),
    plus the trees with a run of the image to a final state.
    """
    found: Set[Tree] = set()
    memo: Dict[Tree, Tree] = {}
    for s in enumerate_support(A, max_height):
        t = apply(h, s, memo)
        if t.height <= max_height:
            found.add(t)
    for trees in run_trees(image, max_height, targets=list(image.final_weights)).values():
        found.update(trees)
    return sorted(found, key=Tree.sort_key)


class ImageOracleTool:
    """
    Compare a hom image WTAh against the preimage-sum oracle.

    Args:
        A: The source WTA
        h: The homomorphism
        image: The automaton under test, hom_image(A, h) when None
    """

    name: str = "oracle_image"
    description: str = "Check the hom image automaton against preimage sums on all small trees."
    args_schema = ImageOracleInput

    def __init__(self, A: Wtg, h: Homomorphism, image: Optional[Wtah] = None):
        self.A = A
        self.h = h
        self.image = image if image is not None else hom_image(A, h)

    def run(self, max_height: int = DEFAULT_MAX_HEIGHT) -> OracleResult:
        args = self.args_schema(max_height=max_height)
        candidates = image_candidates(self.A, self.h, self.image, args.max_height)
        logger.info(f"image oracle {self.image.name}: {len(candidates)} candidate trees up to height {args.max_height}")
        source_memo: Dict[Tree, Dict[str, Fraction]] = {}
        image_memo: Dict[Tree, Dict[str, Fraction]] = {}
        for checked, t in enumerate(candidates, start=1):
            expected = preimage_sum(self.A, self.h, t, source_memo)
            actual = self.image.evaluate(t, image_memo)
            if expected != actual:
                logger.warning(f"image oracle mismatch on {format_tree(t)}: "
                               f"expected {format_rational(expected)}, got {format_rational(actual)}")
                return OracleResult(passed=False, checked=checked, max_height=args.max_height,
                                    mismatch=Mismatch(tree=format_tree(t), expected=format_rational(expected),
                                                      actual=format_rational(actual)))
        return OracleResult(passed=True, checked=len(candidates), max_height=args.max_height)

    @staticmethod
    def format_result(result: OracleResult) -> str:
        lines = [f"ORACLE: {'pass' if result.passed else 'fail'}",
                 f"checked {result.checked} trees of height <= {result.max_height}"]
        if result.mismatch is not None:
            lines.append(f"first mismatch: {result.mismatch.tree} "
                         f"(preimage sum {result.mismatch.expected}, image {result.mismatch.actual})")
        return "\n".join(lines) + "\n"
