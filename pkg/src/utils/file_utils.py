"""
Reading and writing block files, named workspaces of loaded objects and the
output files of a decision.
"""

from pathlib import Path
from typing import Dict, Iterable, Optional, Union

from src.config.config import CERTIFICATE_NAME, IMAGE_NAME, REPORT_NAME
from src.core.decide import Decision, render_report
from src.core.errors import AlphabetException, HomRegException
from src.core.hom import Homomorphism
from src.core.terms import RankedAlphabet
from src.core.wta import Wtg
from src.core.wtah import Wtah
from src.utils.block_format import AlphabetBlock, Block, format_block, format_wtah, parse_block
from src.utils.logging_utils import setup_logger

logger = setup_logger(__name__)

PathLike = Union[str, Path]


def read_text(path: PathLike) -> str:
    with open(path, 'r', encoding='utf-8') as f:
        return f.read()


def write_text(path: PathLike, text: str) -> Path:
    """Write text as UTF-8, creating missing parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        f.write(text)
    logger.debug(f"wrote {path} ({len(text)} characters)")
    return path


def load_object(path: PathLike) -> Block:
    """
    Load the single block stored in a file.

    Args:
        path (str or Path): A UTF-8 file holding one wtg, wtah, hom or alphabet block

    Returns:
        The parsed object.

    Raises:
        FormatException: For syntax errors (with the line number).
        HomRegException: For objects that parse but do not validate.
    """
    try:
        block = parse_block(read_text(path))
    except HomRegException as e:
        logger.error(f"{path}: {e}")
        raise
    logger.info(f"loaded {type(block).__name__} {_name_of(block)} from {path}")
    return block


def save_object(block: Block, path: PathLike) -> Path:
    return write_text(path, format_block(block))


def _name_of(block: Block) -> str:
    return block.name


def check_pair(grammar: Union[Wtg, Wtah], h: Homomorphism) -> None:
    """
    Require that the grammar is over the source alphabet of h.

    Raises:
        AlphabetException: If a symbol is missing from Σ or has a different rank.
    """
    for symbol, rank in grammar.alphabet.items():
        if symbol not in h.source:
            raise AlphabetException(f"symbol {symbol!r} of {grammar.name} is not a source symbol of {h.name}")
        if h.source[symbol] != rank:
            raise AlphabetException(
                f"symbol {symbol!r} has rank {rank} in {grammar.name} but {h.source[symbol]} in {h.name}")


class Workspace:
    """
    Parsed objects keyed by name.

    Homomorphisms whose header names a loaded alphabet are checked against it,
    whichever of the two is added first.
    """

    def __init__(self):
        self.alphabets: Dict[str, RankedAlphabet] = {}
        self.grammars: Dict[str, Wtg] = {}
        self.automata: Dict[str, Wtah] = {}
        self.homomorphisms: Dict[str, Homomorphism] = {}

    @classmethod
    def from_paths(cls, paths: Iterable[PathLike]) -> "Workspace":
        workspace = cls()
        for path in paths:
            workspace.load(path)
        return workspace

    def load(self, path: PathLike) -> Block:
        block = load_object(path)
        self.add(block)
        return block

    def add(self, block: Block) -> None:
        """
        Register an object under its name.

        Raises:
            AlphabetException: For a duplicate name or a homomorphism that
                disagrees with a named alphabet.
        """
        if block.name in self:
            raise AlphabetException(f"duplicate object name {block.name!r}")
        if isinstance(block, AlphabetBlock):
            self.alphabets[block.name] = block.alphabet
            for h in self.homomorphisms.values():
                self._check_hom(h)
        elif isinstance(block, Wtah):
            self.automata[block.name] = block
        elif isinstance(block, Wtg):
            self.grammars[block.name] = block
        elif isinstance(block, Homomorphism):
            self._check_hom(block)
            self.homomorphisms[block.name] = block
        else:
            raise TypeError(f"cannot store {type(block).__name__}")

    def _check_hom(self, h: Homomorphism) -> None:
        source_name, target_name = h.alphabet_names
        source = self.alphabets.get(source_name)
        if source is not None and source != h.source:
            raise AlphabetException(f"source alphabet of {h.name} differs from {source_name} {source!r}")
        target = self.alphabets.get(target_name)
        if target is not None and not (set(h.target) <= set(target) and h.target.is_compatible(target)):
            raise AlphabetException(f"images of {h.name} are not over {target_name} {target!r}")

    def __contains__(self, name: str) -> bool:
        return any(name in table for table in (self.alphabets, self.grammars, self.automata, self.homomorphisms))

    def grammar(self, name: str) -> Wtg:
        return self._lookup(self.grammars, name, "wtg")

    def automaton(self, name: str) -> Wtah:
        return self._lookup(self.automata, name, "wtah")

    def homomorphism(self, name: str) -> Homomorphism:
        return self._lookup(self.homomorphisms, name, "hom")

    @staticmethod
    def _lookup(table, name: str, kind: str):
        if name not in table:
            raise AlphabetException(f"no {kind} named {name!r} in the workspace")
        return table[name]

    def pair(self, grammar_name: str, hom_name: str):
        """The grammar and homomorphism with the given names, checked to fit together."""
        grammar = self.grammar(grammar_name)
        h = self.homomorphism(hom_name)
        check_pair(grammar, h)
        return grammar, h


def write_decision(decision: Decision, out_dir: PathLike, certificate_name: Optional[str] = None,
                   report_name: Optional[str] = None) -> Dict[str, Path]:
    """
    Write the report, the certificate grammar (when regular) and the image WTAh.

    Returns:
        dict: File role -> written path
    """
    out_dir = Path(out_dir)
    written = {"report": write_text(out_dir / (report_name or REPORT_NAME), render_report(decision))}
    if decision.grammar is not None:
        written["certificate"] = save_object(decision.grammar, out_dir / (certificate_name or CERTIFICATE_NAME))
    if decision.image is not None:
        written["image"] = write_text(out_dir / IMAGE_NAME, format_wtah(decision.image))
    logger.info(f"decision written to {out_dir}: {', '.join(sorted(written))}")
    return written
