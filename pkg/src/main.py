"""
homreg main module.

Command-line entry point: decide whether the image of a weighted tree
automaton under a tree homomorphism is regular, plus the commands that
expose the individual stages and oracles.
"""

import argparse
import sys
from typing import Optional, Sequence, Tuple

from src.config.config import DEFAULT_MAX_HEIGHT, MAX_LINEARIZE_RULES, TETRIS_ORACLE_HEIGHT, config
from src.core.decide import DecisionSettings, decide_hom, linearize, render_report
from src.core.errors import (
    HomomorphismException,
    HomRegException,
    NotTetrisFreeException,
    PreconditionException,
)
from src.core.field import format_rational
from src.core.hatldp import decide_ldp, hat_tree, pumping_constant
from src.core.hom import Homomorphism, is_tetris_free
from src.core.terms import check_ranked, format_tree, parse_tree
from src.core.wta import Wtg, is_zero
from src.core.wtah import Wtah, hom_image, validate_eq_restricted
from src.tools.oracle_tool import ImageOracleTool
from src.utils.block_format import format_wtg
from src.utils.file_utils import check_pair, load_object, write_decision
from src.utils.logging_utils import set_level, setup_logger

logger = setup_logger(__name__)

EXIT_REGULAR = 0
EXIT_ERROR = 1
EXIT_REJECTED = 2
EXIT_NONREGULAR = 10


class CommandError(HomRegException):
    """Exception raised for command-line arguments that name the wrong kind of object."""


def _load(path: str, kind: type):
    block = load_object(path)
    if not isinstance(block, kind):
        raise CommandError(f"{path} holds a {type(block).__name__}, expected a {kind.__name__}")
    return block


def _load_pair(args) -> Tuple[Wtg, Homomorphism]:
    A = _load(args.wta, Wtg)
    h = _load(args.hom, Homomorphism)
    check_pair(A, h)
    return A, h


def _image_or_wtah(args) -> Tuple[Wtah, Optional[Homomorphism]]:
    """The WTAh given with --wtah, or the hom image of --wta/--hom."""
    if args.wtah:
        M = _load(args.wtah, Wtah)
        report = validate_eq_restricted(M)
        if not report.valid:
            raise PreconditionException(f"{M.name} is not eq-restricted", report.diagnostics)
        return M, None
    if not (args.wta and args.hom):
        raise CommandError("give either --wtah FILE or both --wta FILE and --hom FILE")
    A, h = _load_pair(args)
    h.require_nondeleting_nonerasing()
    return hom_image(A, h), h


def cmd_decide(args) -> int:
    A, h = _load_pair(args)
    settings = DecisionSettings(max_rules=args.max_rules, tight_pumping_constant=args.tight,
                                tetris_oracle_height=args.oracle_height)
    decision = decide_hom(A, h, settings)
    sys.stdout.write(render_report(decision))
    if args.out:
        for role, path in write_decision(decision, args.out).items():
            print(f"{role}: {path}")
    return EXIT_REGULAR if decision.regular else EXIT_NONREGULAR


def cmd_eval(args) -> int:
    if bool(args.wtg) == bool(args.wtah):
        raise CommandError("give exactly one of --wtg FILE and --wtah FILE")
    automaton = _load(args.wtah, Wtah) if args.wtah else _load(args.wtg, Wtg)
    t = parse_tree(args.tree)
    check_ranked(t, automaton.alphabet)
    print(format_rational(automaton.evaluate(t)))
    return EXIT_REGULAR


def cmd_oracle_image(args) -> int:
    A, h = _load_pair(args)
    image = _load(args.image, Wtah) if args.image else None
    tool = ImageOracleTool(A, h, image=image)
    result = tool.run(max_height=args.max_height)
    sys.stdout.write(tool.format_result(result))
    return EXIT_REGULAR if result.passed else EXIT_ERROR


def cmd_tetris_free(args) -> int:
    h = _load(args.hom, Homomorphism)
    check = is_tetris_free(h, oracle_height=args.oracle_height)
    print(f"TETRIS-FREE: {_tetris_verdict(check.tetris_free, check.conclusive)}")
    if check.witness is not None:
        s, s_prime = check.witness
        print(f"witness: {format_tree(s)} and {format_tree(s_prime)}")
    return EXIT_REGULAR if check.tetris_free else EXIT_REJECTED


def _tetris_verdict(tetris_free: bool, conclusive: bool) -> str:
    if tetris_free:
        return "yes"
    return "no" if conclusive else "inconclusive"


def cmd_ldp(args) -> int:
    M, h = _image_or_wtah(args)
    report = decide_ldp(M, h=h, N=args.N, tight=args.tight)
    print(f"LDP: {'yes' if report.has_ldp else 'no'}")
    print(f"N={report.pumping_constant} hat_states={report.hat_states} basis_dimension={report.basis_dimension}")
    if report.witness is not None:
        print(f"witness: {report.witness.describe()}")
    return EXIT_NONREGULAR if report.has_ldp else EXIT_REGULAR


def cmd_linearize(args) -> int:
    M, h = _image_or_wtah(args)
    N = args.N if args.N is not None else pumping_constant(M, h=h, tight=args.tight)
    grammar = linearize(M, N, max_rules=args.max_rules, check=args.check)
    sys.stdout.write(format_wtg(grammar))
    return EXIT_REGULAR


def cmd_zero(args) -> int:
    G = _load(args.wtg, Wtg)
    check = is_zero(G)
    print(f"ZERO: {'yes' if check.is_zero else 'no'}")
    print(f"dimension={check.dimension}")
    if check.witness is not None:
        print(f"witness: {format_tree(check.witness)} (value {format_rational(check.value)})")
    return EXIT_REGULAR


def cmd_hat(args) -> int:
    M = _load(args.wtah, Wtah)
    t = parse_tree(args.tree)
    check_ranked(t, M.alphabet)
    print(format_tree(hat_tree(M, t)))
    return EXIT_REGULAR


def _add_pair_arguments(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--wta", required=required, help="WTA file (wtg block)")
    parser.add_argument("--hom", required=required, help="homomorphism file (hom block)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homreg",
                                     description="Regularity of homomorphic images of weighted tree automata.")
    parser.add_argument("--log-level", default=config.get("logging.level", "INFO"),
                        help="logging level (messages go to stderr)")
    commands = parser.add_subparsers(dest="command", required=True)

    decide = commands.add_parser("decide", help="decide whether h(A) is regular")
    _add_pair_arguments(decide)
    decide.add_argument("--out", help="directory for the report, certificate and image files")
    decide.add_argument("--max-rules", type=int, default=MAX_LINEARIZE_RULES)
    decide.add_argument("--tight", action="store_true", help="use the forward-space dimension for N")
    decide.add_argument("--oracle-height", type=int, default=TETRIS_ORACLE_HEIGHT)
    decide.set_defaults(handler=cmd_decide)

    evaluate = commands.add_parser("eval", help="evaluate a wtg or wtah on a tree")
    evaluate.add_argument("--wtg")
    evaluate.add_argument("--wtah")
    evaluate.add_argument("--tree", required=True)
    evaluate.set_defaults(handler=cmd_eval)

    oracle = commands.add_parser("oracle-image", help="compare hom_image with preimage sums")
    _add_pair_arguments(oracle)
    oracle.add_argument("--image", help="wtah to test instead of the constructed image")
    oracle.add_argument("--max-height", type=int, default=DEFAULT_MAX_HEIGHT)
    oracle.set_defaults(handler=cmd_oracle_image)

    tetris = commands.add_parser("tetris-free", help="decide whether a homomorphism is tetris-free")
    tetris.add_argument("--hom", required=True)
    tetris.add_argument("--oracle-height", type=int, default=TETRIS_ORACLE_HEIGHT)
    tetris.set_defaults(handler=cmd_tetris_free)

    ldp = commands.add_parser("ldp", help="decide the large duplication property")
    _add_pair_arguments(ldp, required=False)
    ldp.add_argument("--wtah")
    ldp.add_argument("--N", type=int, help="pumping constant (computed when omitted)")
    ldp.add_argument("--tight", action="store_true")
    ldp.set_defaults(handler=cmd_ldp)

    lin = commands.add_parser("linearize", help="print the constraint-free grammar of a WTAh without the LDP")
    _add_pair_arguments(lin, required=False)
    lin.add_argument("--wtah")
    lin.add_argument("--N", type=int)
    lin.add_argument("--tight", action="store_true")
    lin.add_argument("--max-rules", type=int, default=MAX_LINEARIZE_RULES)
    lin.add_argument("--check", action="store_true", help="refuse automata with the LDP")
    lin.set_defaults(handler=cmd_linearize)

    zero = commands.add_parser("zero", help="decide whether a wtg is the zero series")
    zero.add_argument("--wtg", required=True)
    zero.set_defaults(handler=cmd_zero)

    hat = commands.add_parser("hat", help="print the Δ-part tree of a tree")
    hat.add_argument("--wtah", required=True)
    hat.add_argument("--tree", required=True)
    hat.set_defaults(handler=cmd_hat)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the exit status."""
    args = build_parser().parse_args(argv)
    set_level(args.log_level)
    logger.debug(f"command {args.command}")
    try:
        return args.handler(args)
    except NotTetrisFreeException as e:
        print(f"TETRIS-FREE: {_tetris_verdict(False, e.witness is not None)}")
        if e.witness is not None:
            print(f"witness: {format_tree(e.witness[0])} and {format_tree(e.witness[1])}")
        print(f"rejected: {e}", file=sys.stderr)
        return EXIT_REJECTED
    except PreconditionException as e:
        print(f"rejected: {e}", file=sys.stderr)
        for line in e.diagnostics:
            print(f"  {line}", file=sys.stderr)
        return EXIT_REJECTED
    except HomomorphismException as e:
        print(f"rejected: {e}", file=sys.stderr)
        return EXIT_REJECTED
    except HomRegException as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
