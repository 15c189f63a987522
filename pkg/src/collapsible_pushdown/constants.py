"""
Constants and default values for the collapsible pushdown toolkit.

This module contains enums, budget defaults, text-format tokens and
message templates used throughout the package.
"""

import re
from enum import Enum

# Version information
VERSION = "1.0.0"

# Text-format tokens
BOTTOM = "⊥"
EPSILON = "~"          # epsilon node label in tree text and in memory
ROOT_ADDRESS_TEXT = "."  # how the empty address is printed in tree text
WILDCARD = "*"


class OpKind(Enum):
    """The six level-2 stack operations."""
    POP1 = "pop1"
    POP2 = "pop2"
    CLONE2 = "clone2"
    PUSH = "push"
    COLLAPSE = "collapse"


class LogLevel(Enum):
    """Logging levels."""
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"


class LogMode(Enum):
    """Logging output modes."""
    CONSOLE = "console"
    FILE = "file"
    BOTH = "both"


class ExitCode(Enum):
    """Process exit codes of the command line tool."""
    OK = 0
    FALSE = 1
    INPUT_ERROR = 2
    BUDGET = 3
    INTERRUPTED = 130


class VerdictSource(Enum):
    """Provenance of a first-order verdict."""
    EXACT = "exact-automata"
    BOUNDED = "bounded"


# Default configuration values
DEFAULT_CONFIG = {
    # configuration-graph exploration
    "max_words": 4,
    "max_word_length": 5,
    "max_radius": 12,
    "max_visited": 20000,
    # loop summaries: bound escalation above the queried word
    "loops_extra_start": 2,
    "loops_extra_max": 6,
    # loops word automaton (empirical quotient)
    "loops_quotient_length": 6,
    "loops_quotient_suffix": 2,
    # tree automata
    "automaton_state_budget": 200000,
    # bounded first-order backend
    "fo_bound": 14,
    # logging
    "log_mode": LogMode.CONSOLE.value,
    "log_path": "cpk.log",
    "verbose": 0,
}

# Keys of DEFAULT_CONFIG that must be positive integers
BUDGET_KEYS = (
    "max_words",
    "max_word_length",
    "max_radius",
    "max_visited",
    "loops_extra_start",
    "loops_extra_max",
    "loops_quotient_length",
    "loops_quotient_suffix",
    "automaton_state_budget",
    "fo_bound",
)

# Environment variable overriding budgets, e.g. "max_radius=8,fo_bound=10"
BUDGET_ENV_VAR = "CPK_BUDGET"

VALIDATION_PATTERNS = {
    "name": re.compile(r"^[^\s:|^@~()*]+$"),
    "address": re.compile(r"^[01]*$"),
    "log_mode": re.compile(r"^(console|file|both)$"),
    "budget_pair": re.compile(r"^\s*([a-z_]+)\s*=\s*(-?\d+)\s*$"),
}

# Abbreviations used in op names inside system documents
OP_NAMES = {
    "pop1": OpKind.POP1,
    "pop2": OpKind.POP2,
    "clone2": OpKind.CLONE2,
    "clone": OpKind.CLONE2,
    "push": OpKind.PUSH,
    "collapse": OpKind.COLLAPSE,
}

# Error messages
ERROR_MESSAGES = {
    "file_not_found": "File not found: {path}",
    "invalid_config": "Invalid configuration: {error}",
    "unknown_symbol": "Unknown stack symbol: {symbol}",
    "unknown_state": "Unknown control state: {state}",
    "unknown_op": "Unknown stack operation: {op}",
    "unknown_transition": "Unknown transition name: {name}",
    "push_bottom": "Transition {name} pushes the bottom symbol",
    "bad_level": "Collapse level must be 1 or 2, got {level}",
    "stack_invariant": "Stack invariant violated: {detail}",
    "not_constructible": "Stack is not constructible from the initial stack: {stack}",
    "parse_stack": "Cannot parse stack text {text!r}: {detail}",
    "parse_tree": "Cannot parse tree text at line {line}: {detail}",
    "parse_formula": "Cannot parse formula at position {position}: {detail}",
    "invalid_tree": "Tree is not a valid encoding: {detail}",
    "budget": "Budget {kind} exceeded (limit {limit})",
    "non_convergence": "{what} did not stabilise within budget {limit}",
    "unsupported_atom": "Exact backend cannot compile atom {atom}",
}

# Width of the console summary banner
SUMMARY_BANNER_WIDTH = 60
