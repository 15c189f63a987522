"""
Shared systems, stacks and trees for the test suite.
"""

from typing import List

from collapsible_pushdown.constants import EPSILON
from collapsible_pushdown.cps import CpsSpec, ExplorationBounds, parse_cps, reachable_set
from collapsible_pushdown.stack import Configuration, Stack2, parse_config, parse_stack
from collapsible_pushdown.tree_codec import Tree

# Three states, one symbol: clone, push a at level 2, pop and collapse.
SYS1_DOC = {
    "alphabet": ["a"],
    "states": ["0", "1", "2"],
    "initial": "0",
    "transitions": [
        {"name": "cl", "from": "0", "to": "1", "op": "clone2"},
        {"name": "a", "from": "1", "to": "0", "op": "push", "sym": "a", "level": 2},
        {"name": "a′", "from": "1", "to": "2", "op": "push", "sym": "a", "level": 2},
        {"name": "p", "from": "2", "top": "a", "to": "2", "op": "pop1"},
        {"name": "co", "from": "2", "top": "a", "to": "0", "op": "collapse"},
    ],
}

# Two states, two symbols, every operation used.
STRESS_A_DOC = {
    "alphabet": ["a", "b"],
    "states": ["p", "q"],
    "initial": "p",
    "transitions": [
        {"name": "pa", "from": "p", "to": "p", "op": "push", "sym": "a", "level": 1},
        {"name": "pb", "from": "p", "to": "q", "op": "push", "sym": "b", "level": 2},
        {"name": "cl", "from": "q", "to": "p", "op": "clone2"},
        {"name": "co", "from": "q", "top": "b", "to": "p", "op": "collapse"},
        {"name": "po", "from": "p", "top": "a", "to": "q", "op": "pop1"},
        {"name": "p2", "from": "q", "to": "p", "op": "pop2"},
    ],
}

# One state that may do anything.
STRESS_B_DOC = {
    "alphabet": ["a", "b"],
    "states": ["s"],
    "initial": "s",
    "transitions": [
        {"name": "a1", "from": "s", "to": "s", "op": "push", "sym": "a", "level": 1},
        {"name": "b2", "from": "s", "to": "s", "op": "push", "sym": "b", "level": 2},
        {"name": "cl", "from": "s", "to": "s", "op": "clone2"},
        {"name": "co", "from": "s", "to": "s", "op": "collapse"},
        {"name": "p1", "from": "s", "to": "s", "op": "pop1"},
        {"name": "p2", "from": "s", "to": "s", "op": "pop2"},
    ],
}

STACK3_TEXT = "⊥ a^2 b^2 : ⊥ a^2@0 b^2@0 c^2 : ⊥ a^2 c : ⊥ a^2@2 d^2 e : ⊥ a^2@2"

T3_NODES = {
    '': ('⊥', 1),
    '0': ('a', 2),
    '00': ('b', 2),
    '001': EPSILON,
    '0010': ('c', 2),
    '1': EPSILON,
    '10': ('a', 2),
    '100': ('c', 1),
    '101': EPSILON,
    '1010': ('d', 2),
    '10100': ('e', 1),
    '1011': EPSILON,
}

SMALL_BOUNDS = ExplorationBounds(max_words=3, max_word_length=4, max_radius=8, max_visited=5000)
GRAPH_BOUNDS = ExplorationBounds(max_words=3, max_word_length=3, max_radius=6, max_visited=400)


def sys1() -> CpsSpec:
    return parse_cps(SYS1_DOC)


def stress_a() -> CpsSpec:
    return parse_cps(STRESS_A_DOC)


def stress_b() -> CpsSpec:
    return parse_cps(STRESS_B_DOC)


def stack3() -> Stack2:
    return parse_stack(STACK3_TEXT)


def t3() -> Tree:
    return Tree(T3_NODES)


def config(text: str) -> Configuration:
    return parse_config(text)


def stack(text: str) -> Stack2:
    return parse_stack(text)


def reachable_stacks(spec: CpsSpec, bounds: ExplorationBounds = SMALL_BOUNDS) -> List[Stack2]:
    """Distinct stacks of the bounded reachable set, in canonical order."""
    stacks = {c.stack for c in reachable_set(spec, spec.initial_config(), bounds)}
    return sorted(stacks, key=str)


def enumerated_stacks() -> List[Stack2]:
    """Reachable stacks of SYS1 and both stress systems."""
    found = set()
    for spec in (sys1(), stress_a(), stress_b()):
        found.update(reachable_stacks(spec))
    return sorted(found, key=str)


class MockLogger:
    """Mock logger recording (level, message) pairs and fixpoint reports."""

    def __init__(self):
        self.messages = []
        self.fixpoints = []
        self.budgets = []

    def debug(self, message, **kwargs):
        self.messages.append(('DEBUG', message))

    def info(self, message, **kwargs):
        self.messages.append(('INFO', message))

    def warning(self, message, **kwargs):
        self.messages.append(('WARNING', message))

    def error(self, message, **kwargs):
        self.messages.append(('ERROR', message))

    def log_fixpoint(self, name, rounds, converged, **fields):
        self.fixpoints.append((name, rounds, converged))

    def log_budget(self, kind, used, limit):
        self.budgets.append((kind, used, limit))


def mutations(t: Tree, sym: str = 'a') -> List[Tree]:
    """One-edit neighbours of a configuration tree: relabelled, pruned or grown nodes."""
    out = []
    for d in t.addresses():
        if not d:
            continue
        label = t[d]
        if d == '0':
            swaps = [(sym, 1)]
        elif label == EPSILON:
            swaps = [(sym, 1), (sym, 2)]
        else:
            swaps = [(label[0], 3 - label[1]), EPSILON]
        out += [t.edit(add={d: s}) for s in swaps]
        if d != '0' and d + '0' not in t and d + '1' not in t:
            out.append(t.edit(remove=[d]))
        if d + '0' not in t:
            out += [t.edit(add={d + '0': (sym, level)}) for level in (1, 2)]
        if d + '1' not in t:
            out.append(t.edit(add={d + '1': EPSILON}))
    return out
