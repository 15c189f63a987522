"""
Collapsible pushdown systems: definition, transition firing, bounded
configuration-graph exploration and the brute-force oracles the rest of
the package is checked against.
"""

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Set, Tuple, Union

import networkx as nx

from .constants import BOTTOM, DEFAULT_CONFIG, ERROR_MESSAGES, OP_NAMES, WILDCARD, OpKind
from .errors import SpecError
from .logger import NullLogger
from .stack import (
    Configuration, Stack2, StackOp, apply_op, format_config, initial_stack, is_substack,
)


EdgeLabel = Tuple[str, StackOp]
StatePair = Tuple[str, str]


@dataclass(frozen=True)
class Rule:
    """One expanded transition (source, top, target, op) with its schema name."""
    name: str
    source: str
    top: str
    target: str
    op: StackOp

    @property
    def label(self) -> EdgeLabel:
        return (self.target, self.op)


@dataclass(frozen=True)
class CpsSpec:
    """A level-2 collapsible pushdown system with wildcards already expanded."""
    alphabet: Tuple[str, ...]
    states: Tuple[str, ...]
    initial: str
    rules: Tuple[Rule, ...]
    bottom: str = BOTTOM
    schema_count: int = 0

    def __post_init__(self):
        index: Dict[Tuple[str, str], List[Rule]] = {}
        for rule in self.rules:
            index.setdefault((rule.source, rule.top), []).append(rule)
        object.__setattr__(self, '_index', {k: tuple(v) for k, v in index.items()})

    def rules_for(self, state: str, top: str) -> Tuple[Rule, ...]:
        return self._index.get((state, top), ())

    @property
    def names(self) -> Tuple[str, ...]:
        seen = []
        for rule in self.rules:
            if rule.name not in seen:
                seen.append(rule.name)
        return tuple(seen)

    def rules_named(self, name: str) -> Tuple[Rule, ...]:
        found = tuple(r for r in self.rules if r.name == name)
        if not found:
            raise SpecError(ERROR_MESSAGES['unknown_transition'].format(name=name))
        return found

    def labels(self) -> List[EdgeLabel]:
        """Distinct edge labels in canonical order."""
        return sorted({r.label for r in self.rules}, key=label_key)

    def label_names(self) -> Dict[EdgeLabel, str]:
        """Abbreviation map: a label is named when exactly one schema carries it."""
        by_label: Dict[EdgeLabel, Set[str]] = {}
        for rule in self.rules:
            by_label.setdefault(rule.label, set()).add(rule.name)
        return {label: next(iter(names)) for label, names in by_label.items() if len(names) == 1}

    def label_of(self, name: str) -> EdgeLabel:
        labels = {r.label for r in self.rules_named(name)}
        return next(iter(labels))

    def push_glyphs(self) -> List[Tuple[str, int]]:
        """Letters (sym, level) some rule can push."""
        return sorted({(r.op.sym, r.op.level) for r in self.rules if r.op.kind is OpKind.PUSH})

    def initial_config(self) -> Configuration:
        return Configuration(self.initial, initial_stack(self.bottom))


@dataclass(frozen=True)
class ExplorationBounds:
    """Limits for configuration-graph exploration."""
    max_words: int = DEFAULT_CONFIG['max_words']
    max_word_length: int = DEFAULT_CONFIG['max_word_length']
    max_radius: int = DEFAULT_CONFIG['max_radius']
    max_visited: int = DEFAULT_CONFIG['max_visited']

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "ExplorationBounds":
        return cls(
            max_words=config.get('max_words', cls.max_words),
            max_word_length=config.get('max_word_length', cls.max_word_length),
            max_radius=config.get('max_radius', cls.max_radius),
            max_visited=config.get('max_visited', cls.max_visited),
        )

    def admits(self, stack: Stack2) -> bool:
        return stack.height <= self.max_words and all(len(w) <= self.max_word_length for w in stack.words)

    def as_dict(self) -> Dict[str, int]:
        return {
            'max_words': self.max_words,
            'max_word_length': self.max_word_length,
            'max_radius': self.max_radius,
            'max_visited': self.max_visited,
        }


@dataclass(frozen=True)
class Run:
    """A sequence of configurations with the edge labels between them."""
    configs: Tuple[Configuration, ...]
    labels: Tuple[EdgeLabel, ...] = ()

    @property
    def length(self) -> int:
        return len(self.configs) - 1

    def stacks(self) -> List[Stack2]:
        return [c.stack for c in self.configs]


@dataclass
class LabeledGraph:
    """A finite fragment of a configuration graph backed by a networkx MultiDiGraph."""
    root: Configuration
    graph: nx.MultiDiGraph = field(default_factory=nx.MultiDiGraph)
    truncated: bool = False

    def vertices(self) -> List[Configuration]:
        return sorted(self.graph.nodes, key=lambda c: c.sort_key())

    def edges(self) -> List[Tuple[Configuration, EdgeLabel, Configuration]]:
        triples = [(u, data['label'], v) for u, v, data in self.graph.edges(data=True)]
        return sorted(triples, key=lambda t: (t[0].sort_key(), label_key(t[1]), t[2].sort_key()))

    def __contains__(self, config: Configuration) -> bool:
        return self.graph.has_node(config)


@dataclass(frozen=True)
class OracleResult:
    """Answer of a bounded oracle; negatives are only valid relative to ``bounds``."""
    found: bool
    run: Optional[Run]
    bounds: ExplorationBounds
    exhausted: bool = False


def label_key(label: EdgeLabel):
    return (label[0], label[1].sort_key())


def format_label(label: EdgeLabel) -> str:
    return f"({label[0]},{label[1]})"


# ---------------------------------------------------------------------------
# parsing

def _parse_op(entry: Dict[str, Any]) -> StackOp:
    op_name = str(entry.get('op', '')).lower()
    if op_name not in OP_NAMES:
        raise SpecError(ERROR_MESSAGES['unknown_op'].format(op=entry.get('op')))
    kind = OP_NAMES[op_name]
    if kind is OpKind.PUSH:
        level = entry.get('level', 1)
        if level not in (1, 2):
            raise SpecError(ERROR_MESSAGES['bad_level'].format(level=level))
        return StackOp.push(str(entry.get('sym')), level)
    return StackOp(kind)


def parse_cps(document: Dict[str, Any], logger=None) -> CpsSpec:
    """
    Build a validated CpsSpec from a system document.

    Raises:
        SpecError: if the document is malformed or inconsistent
    """
    from .validator import SystemValidator

    logger = logger or NullLogger()
    result = SystemValidator().validate(document)
    for warning in result.warnings:
        logger.warning(warning)
    if not result.is_valid:
        raise SpecError("; ".join(result.errors))

    bottom = str(document.get('bottom', BOTTOM))
    alphabet = [bottom] + [str(a) for a in document['alphabet'] if str(a) != bottom]
    states = tuple(str(q) for q in document['states'])

    rules: List[Rule] = []
    seen = set()
    transitions = document.get('transitions', [])
    for i, entry in enumerate(transitions):
        name = str(entry.get('name', f"t{i}"))
        op = _parse_op(entry)
        tops = alphabet if str(entry.get('top', WILDCARD)) == WILDCARD else [str(entry['top'])]
        for top in tops:
            rule = Rule(name, str(entry['from']), top, str(entry['to']), op)
            key = (rule.source, rule.top, rule.target, rule.op)
            if key in seen:
                continue
            seen.add(key)
            rules.append(rule)

    logger.debug(f"parsed system: {len(transitions)} schemas, {len(rules)} rules")
    return CpsSpec(tuple(alphabet), states, str(document['initial']), tuple(rules), bottom,
                   len(transitions))


def load_cps(path: Union[str, Path], logger=None) -> CpsSpec:
    """Read and parse a system file."""
    system_file = Path(path)
    if not system_file.exists():
        raise FileNotFoundError(ERROR_MESSAGES['file_not_found'].format(path=path))
    with open(system_file, 'r', encoding='utf-8') as f:
        document = json.load(f)
    return parse_cps(document, logger)


# ---------------------------------------------------------------------------
# transitions

def fire(spec: CpsSpec, c: Configuration) -> List[Tuple[Rule, Configuration]]:
    """Every rule applicable at c with its resulting configuration, in rule order."""
    out = []
    for rule in spec.rules_for(c.state, c.stack.top.sym):
        result = apply_op(c.stack, rule.op)
        if result is not None:
            out.append((rule, Configuration(rule.target, result)))
    return out


def successors(spec: CpsSpec, c: Configuration) -> List[Tuple[EdgeLabel, Configuration]]:
    """All labelled successors of c, without duplicates, in canonical order."""
    pairs = {(rule.label, nxt) for rule, nxt in fire(spec, c)}
    return sorted(pairs, key=lambda p: (label_key(p[0]), p[1].sort_key()))


def run_check(spec: CpsSpec, run: Run) -> bool:
    """True iff every consecutive pair of the run is a legal labelled transition."""
    if not run.configs or len(run.labels) != len(run.configs) - 1:
        return False
    for i, label in enumerate(run.labels):
        if (label, run.configs[i + 1]) not in successors(spec, run.configs[i]):
            return False
    return True


def bfs_graph(spec: CpsSpec, bounds: ExplorationBounds,
              start: Optional[Configuration] = None, logger=None) -> LabeledGraph:
    """
    Explore the configuration graph breadth-first from the initial configuration.

    Only configurations inside ``bounds`` are kept; ``truncated`` records whether
    any successor was dropped.
    """
    logger = logger or NullLogger()
    root = start or spec.initial_config()
    g = LabeledGraph(root)
    g.graph.add_node(root)
    depth = {root: 0}
    queue = deque([root])
    frontier = []

    while queue:
        current = queue.popleft()
        if depth[current] >= bounds.max_radius:
            frontier.append(current)
            continue
        for label, nxt in successors(spec, current):
            if not bounds.admits(nxt.stack):
                g.truncated = True
                continue
            if nxt not in depth:
                if len(depth) >= bounds.max_visited:
                    g.truncated = True
                    continue
                depth[nxt] = depth[current] + 1
                g.graph.add_node(nxt)
                queue.append(nxt)
            g.graph.add_edge(current, nxt, key=format_label(label), label=label)

    for current in frontier:
        for label, nxt in successors(spec, current):
            if nxt in depth:
                g.graph.add_edge(current, nxt, key=format_label(label), label=label)
            else:
                g.truncated = True

    logger.debug(f"bfs: {g.graph.number_of_nodes()} vertices, "
                 f"{g.graph.number_of_edges()} edges, truncated={g.truncated}")
    return g


def _rebuild_run(parents: Dict, target: Configuration) -> Run:
    configs, labels = [target], []
    while parents[configs[-1]] is not None:
        prev, label = parents[configs[-1]]
        labels.append(label)
        configs.append(prev)
    return Run(tuple(reversed(configs)), tuple(reversed(labels)))


def reach_oracle(spec: CpsSpec, c1: Configuration, c2: Configuration,
                 bounds: ExplorationBounds) -> OracleResult:
    """Breadth-first search for a run from c1 to c2 inside the bounds."""
    parents = {c1: None}
    depth = {c1: 0}
    queue = deque([c1])
    exhausted = True
    while queue:
        current = queue.popleft()
        if current == c2:
            return OracleResult(True, _rebuild_run(parents, current), bounds)
        if depth[current] >= bounds.max_radius:
            exhausted = False
            continue
        for label, nxt in successors(spec, current):
            if nxt in parents:
                continue
            if not bounds.admits(nxt.stack) or len(parents) >= bounds.max_visited:
                exhausted = False
                continue
            parents[nxt] = (current, label)
            depth[nxt] = depth[current] + 1
            queue.append(nxt)
    return OracleResult(False, None, bounds, exhausted)


def reachable_set(spec: CpsSpec, c1: Configuration, bounds: ExplorationBounds) -> Set[Configuration]:
    """Every configuration the bounded search reaches from c1."""
    seen = {c1}
    queue = deque([(c1, 0)])
    while queue:
        current, d = queue.popleft()
        if d >= bounds.max_radius:
            continue
        for _, nxt in successors(spec, current):
            if nxt not in seen and bounds.admits(nxt.stack) and len(seen) < bounds.max_visited:
                seen.add(nxt)
                queue.append((nxt, d + 1))
    return seen


# ---------------------------------------------------------------------------
# loop oracle

def _closure(pairs: Iterable[StatePair], states: Iterable[str]) -> FrozenSet[StatePair]:
    """Reflexive-transitive closure of a relation over states."""
    rel = set(pairs) | {(q, q) for q in states}
    changed = True
    while changed:
        changed = False
        for (a, b) in list(rel):
            for (c, d) in list(rel):
                if b == c and (a, d) not in rel:
                    rel.add((a, d))
                    changed = True
    return frozenset(rel)


def _high_loops(spec: CpsSpec, s: Stack2, avoid: Optional[Stack2],
                bounds: ExplorationBounds) -> Set[StatePair]:
    """Pairs realised by simple high loops of s that never visit ``avoid``."""
    pairs = set()
    for q in spec.states:
        start = Configuration(q, s)
        seen = set()
        queue = deque()
        for _, nxt in successors(spec, start):
            if nxt.stack != s and is_substack(s, nxt.stack) and nxt.stack != avoid \
                    and bounds.admits(nxt.stack) and nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, 1))
        while queue:
            current, d = queue.popleft()
            for _, nxt in successors(spec, current):
                if nxt.stack == s:
                    pairs.add((q, nxt.state))
                    continue
                if d >= bounds.max_radius or nxt in seen or len(seen) >= bounds.max_visited:
                    continue
                if is_substack(s, nxt.stack) and nxt.stack != avoid and bounds.admits(nxt.stack):
                    seen.add(nxt)
                    queue.append((nxt, d + 1))
    return pairs


def _low_loops(spec: CpsSpec, s: Stack2, bounds: ExplorationBounds) -> Set[StatePair]:
    """Pairs realised by simple low loops of s."""
    if s.top.level != 1 or len(s.top_word) < 2:
        return set()
    below = apply_op(s, StackOp.pop1())
    inner = _loops_avoiding(spec, below, s, bounds)
    pairs = set()
    for q in spec.states:
        for _, down in successors(spec, Configuration(q, s)):
            if down.stack != below:
                continue
            for (p, p2) in inner:
                if p != down.state:
                    continue
                for _, up in successors(spec, Configuration(p2, below)):
                    if up.stack == s:
                        pairs.add((q, up.state))
    return pairs


def _loops_avoiding(spec: CpsSpec, s: Stack2, avoid: Optional[Stack2],
                    bounds: ExplorationBounds) -> FrozenSet[StatePair]:
    simple = _high_loops(spec, s, avoid, bounds) | _low_loops(spec, s, bounds)
    return _closure(simple, spec.states)


def loops_oracle(spec: CpsSpec, s: Stack2, bounds: ExplorationBounds) -> FrozenSet[StatePair]:
    """
    Loops(s) found by searching runs that follow the loop grammar.

    Simple high loops stay strictly above s; simple low loops pop one
    level-1 letter, loop on the shorter stack without revisiting s, and
    push the letter back. The result is closed under composition and
    contains the identity.
    """
    return _loops_avoiding(spec, s, None, bounds)


# ---------------------------------------------------------------------------
# DOT

def _dot_quote(text: str) -> str:
    return '"' + text.replace('\\', '\\\\').replace('"', '\\"') + '"'


def to_dot(g: LabeledGraph, abbreviations: Optional[Dict[EdgeLabel, str]] = None) -> str:
    """Deterministic DOT text; vertices are named by their canonical configuration text."""
    abbreviations = abbreviations or {}
    out = ["digraph cpg {"]
    for v in g.vertices():
        name = _dot_quote(format_config(v))
        shape = ' [shape=doublecircle]' if v == g.root else ''
        out.append(f"  {name}{shape};")
    for u, label, v in g.edges():
        text = abbreviations.get(label, format_label(label))
        out.append(f"  {_dot_quote(format_config(u))} -> {_dot_quote(format_config(v))} "
                   f"[label={_dot_quote(text)}];")
    out.append("}")
    return "\n".join(out) + "\n"


def to_text(g: LabeledGraph, abbreviations: Optional[Dict[EdgeLabel, str]] = None) -> str:
    """Plain listing: one vertex per line, then one edge per line."""
    abbreviations = abbreviations or {}
    lines = [f"vertex {format_config(v)}" for v in g.vertices()]
    for u, label, v in g.edges():
        lines.append(f"edge {format_config(u)} --{abbreviations.get(label, format_label(label))}--> "
                     f"{format_config(v)}")
    if g.truncated:
        lines.append("truncated")
    return "\n".join(lines) + "\n"
