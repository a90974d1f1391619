"""
Block text format for alphabets, weighted tree grammars, WTAh and homomorphisms.

One object per block::

    wtg A over Q {
      states q, qf;
      final qf: 1;
      rule psi(q,q) -> qf @ 1;
      rule gamma(q) -> q @ 2;
    }

    wtah A' over Q {
      states q, qf;
      sink BOT;
      final qf;
      rule f(q,q,BOT) [1=3] -> qf @ 1;
    }

    hom h : Sigma -> Delta { alpha -> a; gamma -> g(a,x1); psi -> f(x2,x1,x1); }

    alphabet Sigma { alpha/0, gamma/1, psi/2; }

Statements end with ``;``. ``#`` starts a comment at the beginning of a line
or after whitespace (``q#1`` is a name). Rule weights default to 1, ``final q;``
means final weight 1, and constraint classes are dotted positions joined by
``=`` and separated by commas.
"""

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

from src.core.errors import FormatException
from src.core.field import ONE, format_rational, parse_rational
from src.core.hom import Homomorphism
from src.core.terms import (BOT, RankedAlphabet, Tree, format_tree, parse_position, parse_tree, parse_tree_prefix,
                             variable_index, variables)
from src.core.wta import GrammarRule, Wtg
from src.core.wtah import ConstrainedRule, Wtah, canonical_constraints, format_constraints
from src.utils.logging_utils import setup_logger

logger = setup_logger(__name__)

_COMMENT = re.compile(r"(?:^|(?<=\s))#[^\n]*", re.MULTILINE)
_AUTOMATON_HEADER = re.compile(r"^(wtg|wtah)\s+(\S+)\s+over\s+(\S+)$")
_HOM_HEADER = re.compile(r"^hom\s+([^\s:]+)\s*:\s*(\S+?)\s*->\s*(\S+)$")
_ALPHABET_HEADER = re.compile(r"^alphabet\s+(\S+)$")
_SYMBOL = re.compile(r"^([^\s/]+)\s*/\s*([0-9]+)$")

SEMIRING = "Q"


@dataclass(frozen=True)
class AlphabetBlock:
    """A named ranked alphabet."""

    name: str
    alphabet: RankedAlphabet


Block = Union[AlphabetBlock, Wtg, Wtah, Homomorphism]


# Scanning

def strip_comments(text: str) -> str:
    return _COMMENT.sub("", text)


def _line_of(text: str, offset: int) -> int:
    return text.count("\n", 0, offset) + 1


def _split_top(text: str, sep: str) -> List[str]:
    """Split at sep outside parentheses and brackets."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif ch == sep and depth == 0:
            parts.append(text[start:i].strip())
            start = i + 1
    parts.append(text[start:].strip())
    return parts


def _find_arrow(text: str, last: bool) -> int:
    found = -1
    depth = 0
    for i, ch in enumerate(text):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        elif depth == 0 and text.startswith("->", i):
            if not last:
                return i
            found = i
    return found


def _split_block(text: str) -> Tuple[str, List[Tuple[str, int]]]:
    """
    Separate the header from the statements of a block.

    Returns:
        The header and (statement, line) pairs.
    """
    text = strip_comments(text)
    brace = text.find("{")
    if brace < 0:
        raise FormatException("missing '{'", _line_of(text, len(text.rstrip())))
    header = " ".join(text[:brace].split())
    end = text.rstrip()
    if not end.endswith("}"):
        raise FormatException("missing '}' at the end of the block", _line_of(text, len(end)))
    close = len(end) - 1

    statements: List[Tuple[str, int]] = []
    depth = 0
    start = brace + 1
    for i in range(brace + 1, close):
        ch = text[i]
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
            if depth < 0:
                raise FormatException(f"unbalanced {ch!r}", _line_of(text, i))
        elif ch in "{}":
            raise FormatException(f"unexpected {ch!r} inside the block", _line_of(text, i))
        elif ch == ";" and depth == 0:
            chunk = text[start:i]
            if chunk.strip():
                lead = len(chunk) - len(chunk.lstrip())
                statements.append((" ".join(chunk.split()), _line_of(text, start + lead)))
            start = i + 1
    rest = text[start:close]
    if rest.strip():
        lead = len(rest) - len(rest.lstrip())
        raise FormatException("missing ';' after statement", _line_of(text, start + lead))
    return header, statements


def _keyword(statement: str) -> Tuple[str, str]:
    word, _, rest = statement.partition(" ")
    return word, rest.strip()


def _tree(text: str, line: int) -> Tree:
    try:
        return parse_tree(text)
    except FormatException as e:
        raise FormatException(str(e), line) from e


def _weight(text: str, line: int) -> Fraction:
    try:
        return parse_rational(text)
    except FormatException as e:
        raise FormatException(str(e), line) from e


def _symbols(text: str, line: int) -> Dict[str, int]:
    symbols: Dict[str, int] = {}
    for part in _split_top(text, ","):
        match = _SYMBOL.match(part)
        if match is None:
            raise FormatException(f"expected symbol/rank, got {part!r}", line)
        symbols[match.group(1)] = int(match.group(2))
    return symbols


def _names(text: str, line: int) -> List[str]:
    names = _split_top(text, ",")
    if any(not name or " " in name for name in names):
        raise FormatException(f"malformed name list {text!r}", line)
    return names


def _final(text: str, line: int, final: Dict[str, Fraction]) -> None:
    for part in _split_top(text, ","):
        state, colon, weight = part.partition(":")
        state = state.strip()
        if not state:
            raise FormatException(f"malformed final entry {part!r}", line)
        final[state] = _weight(weight, line) if colon else ONE


def _constraints(text: str, line: int):
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise FormatException(f"expected a constraint list, got {text!r}", line)
    groups = []
    for part in _split_top(text[1:-1], ","):
        if not part:
            continue
        try:
            groups.append([parse_position(p.strip()) for p in part.split("=")])
        except FormatException as e:
            raise FormatException(f"malformed constraint {part!r}: {e}", line) from e
    return canonical_constraints(groups)


def _rule(text: str, line: int, constrained: bool):
    arrow = _find_arrow(text, last=True)
    if arrow < 0:
        raise FormatException(f"rule without '->': {text!r}", line)
    left, right = text[:arrow], text[arrow + 2:]
    try:
        lhs, index = parse_tree_prefix(left)
    except FormatException as e:
        raise FormatException(str(e), line) from e
    rest = left[index:].strip()
    constraints = ()
    if rest:
        if not constrained:
            raise FormatException(f"constraints are not allowed in a wtg rule: {rest!r}", line)
        constraints = _constraints(rest, line)
    target, at, weight = right.partition("@")
    target = target.strip()
    if not target or " " in target:
        raise FormatException(f"malformed rule target {target!r}", line)
    weight = _weight(weight, line) if at else ONE
    if constrained:
        return ConstrainedRule(lhs, target, constraints, weight)
    return GrammarRule(lhs, target, weight)


# Parsing

def _parse_automaton(text: str, kind: str) -> Union[Wtg, Wtah]:
    header, statements = _split_block(text)
    match = _AUTOMATON_HEADER.match(header)
    if match is None or match.group(1) != kind:
        raise FormatException(f"expected '{kind} NAME over {SEMIRING} {{', got {header!r}", 1)
    name, semiring = match.group(2), match.group(3)
    if semiring != SEMIRING:
        raise FormatException(f"unsupported weight structure {semiring!r}, only {SEMIRING} is available", 1)

    constrained = kind == "wtah"
    alphabet: Optional[Dict[str, int]] = None
    states: Optional[List[str]] = None
    final: Dict[str, Fraction] = {}
    rules = []
    for statement, line in statements:
        word, rest = _keyword(statement)
        if word == "alphabet":
            alphabet = {**(alphabet or {}), **_symbols(rest, line)}
        elif word == "states":
            states = (states or []) + _names(rest, line)
        elif word == "final":
            _final(rest, line, final)
        elif word == "rule":
            rules.append(_rule(rest, line, constrained))
        elif word == "sink" and constrained:
            if rest != BOT:
                raise FormatException(f"the sink state is always {BOT}, got {rest!r}", line)
        else:
            raise FormatException(f"unknown statement {word!r} in a {kind} block", line)
    if states is None:
        states = [rule.target for rule in rules] + list(final)
    logger.debug(f"parsed {kind} {name}: {len(states)} states, {len(rules)} rules")
    if constrained:
        return Wtah(states, rules, final, alphabet=alphabet, name=name)
    return Wtg(states, rules, final, alphabet=alphabet, name=name)


def parse_wtg(text: str) -> Wtg:
    """
    Parse a ``wtg NAME over Q { ... }`` block.

    Without a ``states`` statement the states are the rule targets and final
    states; without an ``alphabet`` statement the alphabet is inferred.

    Raises:
        FormatException: For syntax errors, with the line number.
        GrammarException, AlphabetException, ArityException: For invalid grammars.
    """
    return _parse_automaton(text, "wtg")


def parse_wtah(text: str) -> Wtah:
    """Parse a ``wtah NAME over Q { ... }`` block; sink rules must be listed."""
    return _parse_automaton(text, "wtah")


def parse_hom(text: str) -> Homomorphism:
    """
    Parse a ``hom NAME : SIGMA -> DELTA { ... }`` block.

    Image statements are ``sigma -> term`` or ``sigma/k -> term``; the optional
    ``source`` and ``target`` statements declare the alphabets.
    """
    header, statements = _split_block(text)
    match = _HOM_HEADER.match(header)
    if match is None:
        raise FormatException(f"expected 'hom NAME : SOURCE -> TARGET {{', got {header!r}", 1)
    name, source_name, target_name = match.groups()

    source: Optional[Dict[str, int]] = None
    target: Optional[Dict[str, int]] = None
    ranks: Dict[str, int] = {}
    images: Dict[str, Tree] = {}
    for statement, line in statements:
        word, rest = _keyword(statement)
        if word == "source" and _find_arrow(statement, last=False) < 0:
            source = {**(source or {}), **_symbols(rest, line)}
            continue
        if word == "target" and _find_arrow(statement, last=False) < 0:
            target = {**(target or {}), **_symbols(rest, line)}
            continue
        arrow = _find_arrow(statement, last=False)
        if arrow < 0:
            raise FormatException(f"expected 'symbol -> image', got {statement!r}", line)
        symbol = statement[:arrow].strip()
        ranked = _SYMBOL.match(symbol)
        if ranked is not None:
            symbol = ranked.group(1)
            ranks[symbol] = int(ranked.group(2))
        if not symbol or " " in symbol:
            raise FormatException(f"malformed source symbol {symbol!r}", line)
        if symbol in images:
            raise FormatException(f"second image for {symbol!r}", line)
        images[symbol] = _tree(statement[arrow + 2:].strip(), line)

    if source is None and ranks:
        source = {sigma: ranks.get(sigma, max((variable_index(x) for x in variables(u)), default=0))
                  for sigma, u in images.items()}
    elif source is not None:
        for symbol, k in ranks.items():
            if source.get(symbol, k) != k:
                raise FormatException(f"rank of {symbol!r} differs from the source declaration")
    logger.debug(f"parsed hom {name}: {len(images)} images")
    return Homomorphism(images, source=source, target=target, name=name,
                        alphabet_names=(source_name, target_name))


def parse_alphabet(text: str) -> AlphabetBlock:
    header, statements = _split_block(text)
    match = _ALPHABET_HEADER.match(header)
    if match is None:
        raise FormatException(f"expected 'alphabet NAME {{', got {header!r}", 1)
    symbols: Dict[str, int] = {}
    for statement, line in statements:
        symbols.update(_symbols(statement, line))
    return AlphabetBlock(match.group(1), RankedAlphabet(symbols))


def parse_block(text: str) -> Block:
    """
    Parse any block, dispatching on its first word.

    Raises:
        FormatException: For an unknown block kind or syntax errors.
    """
    stripped = strip_comments(text).split()
    kind = stripped[0] if stripped else ""
    if kind == "wtg":
        return parse_wtg(text)
    if kind == "wtah":
        return parse_wtah(text)
    if kind == "hom":
        return parse_hom(text)
    if kind == "alphabet":
        return parse_alphabet(text)
    raise FormatException(f"unknown block kind {kind!r}", 1)


# Printing

def _format_symbols(alphabet: RankedAlphabet) -> str:
    return ", ".join(f"{name}/{alphabet[name]}" for name in alphabet)


def _format_final(final: Dict[str, Fraction]) -> str:
    return ", ".join(q if w == ONE else f"{q}: {format_rational(w)}" for q, w in final.items())


def format_wtg(grammar: Wtg) -> str:
    lines = [f"wtg {grammar.name} over {SEMIRING} {{"]
    if len(grammar.alphabet):
        lines.append(f"  alphabet {_format_symbols(grammar.alphabet)};")
    if grammar.states:
        lines.append(f"  states {', '.join(grammar.states)};")
    if grammar.final_weights:
        lines.append(f"  final {_format_final(grammar.final_weights)};")
    for rule in grammar.rules:
        lines.append(f"  rule {format_tree(rule.lhs)} -> {rule.target} @ {format_rational(rule.weight)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def format_wtah(M: Wtah) -> str:
    lines = [f"wtah {M.name} over {SEMIRING} {{"]
    if len(M.alphabet):
        lines.append(f"  alphabet {_format_symbols(M.alphabet)};")
    if M.states:
        lines.append(f"  states {', '.join(M.states)};")
    lines.append(f"  sink {BOT};")
    if M.final_weights:
        lines.append(f"  final {_format_final(M.final_weights)};")
    for rule in M.rules:
        constraints = format_constraints(rule.constraints)
        middle = f" {constraints}" if constraints else ""
        lines.append(f"  rule {format_tree(rule.lhs)}{middle} -> {rule.target} @ {format_rational(rule.weight)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def format_hom(h: Homomorphism) -> str:
    source_name, target_name = h.alphabet_names
    lines = [f"hom {h.name} : {source_name} -> {target_name} {{",
             f"  source {_format_symbols(h.source)};"]
    if len(h.target):
        lines.append(f"  target {_format_symbols(h.target)};")
    for sigma in h.source:
        lines.append(f"  {sigma} -> {format_tree(h.images[sigma])};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def format_alphabet(block: AlphabetBlock) -> str:
    return f"alphabet {block.name} {{ {_format_symbols(block.alphabet)}; }}\n"


def format_block(block: Block) -> str:
    if isinstance(block, Wtah):
        return format_wtah(block)
    if isinstance(block, Wtg):
        return format_wtg(block)
    if isinstance(block, Homomorphism):
        return format_hom(block)
    if isinstance(block, AlphabetBlock):
        return format_alphabet(block)
    raise TypeError(f"cannot format {type(block).__name__}")
