"""
Collapsible Pushdown - A Python toolkit for level-2 collapsible pushdown systems.

This package provides functionality to:
- Simulate level-2 collapsible stacks and explore configuration graphs
- Encode configurations as finite trees and decode them back
- Build tree automata for single transitions and for the reachable configurations
- Decide reachability, also along regular constraints on transition names
- Evaluate first-order queries with reachability atoms
"""

__version__ = "1.0.0"

from .config_loader import ConfigLoader
from .cps import CpsSpec, load_cps, parse_cps
from .fo_eval import eval_sentence_automata, eval_sentence_bounded, parse_formula, solutions
from .logger import Logger
from .loops import LoopSummaries, loops_of
from .reachability import domain_automaton, is_reachable, reach, reach_regular
from .stack import Configuration, Stack2, StackLetter, StackOp, apply_op
from .tree_automata import Nfta
from .tree_codec import Tree, decode, encode_config, encode_stack
from .validator import BoundsValidator, SystemValidator

__all__ = [
    "BoundsValidator",
    "ConfigLoader",
    "Configuration",
    "CpsSpec",
    "Logger",
    "LoopSummaries",
    "Nfta",
    "Stack2",
    "StackLetter",
    "StackOp",
    "SystemValidator",
    "Tree",
    "apply_op",
    "decode",
    "domain_automaton",
    "encode_config",
    "encode_stack",
    "eval_sentence_automata",
    "eval_sentence_bounded",
    "is_reachable",
    "load_cps",
    "loops_of",
    "parse_cps",
    "parse_formula",
    "reach",
    "reach_regular",
    "solutions",
]
