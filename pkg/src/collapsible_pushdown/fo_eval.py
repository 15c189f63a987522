"""
First-order queries over configuration graphs.

Formulas are s-expressions::

    (exists x φ)  (forall x φ)  (and φ ψ ...)  (or φ ψ ...)  (not φ)
    (edge NAME x y)  (edge * x y)  (reach x y)  (reachr R x y)  (= x y)

The term ``init`` denotes the initial configuration. Two evaluators are
provided: an exact one compiling the sentence to tree automata over
convolutions of encodings, and a bounded one enumerating reachable
configurations with small encodings.
"""

import itertools
import re
from collections import deque
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

import networkx as nx

from .constants import DEFAULT_CONFIG, ERROR_MESSAGES, VerdictSource
from .cps import CpsSpec, EdgeLabel, ExplorationBounds, bfs_graph, fire, label_key, successors
from .errors import ParseError, SpecError, UnsupportedFormula
from .logger import NullLogger
from .reachability import (
    Presentation, RegularConstraint, domain_automaton, reach_regular, regular_domain_automaton,
)
from .reach_automaton import reach_automaton
from .stack import Configuration
from .tree_automata import Nfta
from .tree_codec import encode_config
from .tree_ops import edge_automaton, tree_alphabet

INIT = "init"
ANY_EDGE = "*"

VARIABLE_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_']*$")
TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")


# ---------------------------------------------------------------------------
# syntax

class Formula:
    """Base class of formula nodes."""

    def __str__(self) -> str:
        return to_sexpr(self)


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Edge(Formula):
    name: str
    source: str
    target: str


@dataclass(frozen=True)
class Reach(Formula):
    source: str
    target: str


@dataclass(frozen=True)
class ReachR(Formula):
    constraint: str
    source: str
    target: str


@dataclass(frozen=True)
class Equal(Formula):
    left: str
    right: str


def _tokenize(text: str) -> List[Tuple[str, int]]:
    return [(m.group(0), m.start()) for m in TOKEN_RE.finditer(text)]


class _Parser:
    def __init__(self, text: str, spec: Optional[CpsSpec], constraints: Optional[Dict[str, Any]]):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.spec = spec
        self.constraints = constraints

    def fail(self, detail: str, position: Optional[int] = None) -> ParseError:
        if position is None:
            position = self.tokens[self.pos][1] if self.pos < len(self.tokens) else len(self.text)
        return ParseError(ERROR_MESSAGES['parse_formula'].format(position=position, detail=detail),
                          self.text, position)

    def next(self) -> Tuple[str, int]:
        if self.pos >= len(self.tokens):
            raise self.fail("unexpected end of formula")
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, value: str) -> None:
        token, at = self.next()
        if token != value:
            raise self.fail(f"expected {value!r}, found {token!r}", at)

    def variable(self, allow_init: bool = False) -> str:
        token, at = self.next()
        if token == INIT and allow_init:
            return token
        if token == INIT or not VARIABLE_RE.match(token):
            raise self.fail(f"{token!r} is not a variable", at)
        return token

    def term(self) -> str:
        return self.variable(allow_init=True)

    def formula(self) -> Formula:
        self.expect('(')
        head, at = self.next()
        if head in ('exists', 'forall'):
            var = self.variable()
            body = self.formula()
            node = Exists(var, body) if head == 'exists' else Forall(var, body)
        elif head in ('and', 'or'):
            parts = [self.formula(), self.formula()]
            while self.pos < len(self.tokens) and self.tokens[self.pos][0] == '(':
                parts.append(self.formula())
            kind = And if head == 'and' else Or
            node = parts[0]
            for part in parts[1:]:
                node = kind(node, part)
        elif head == 'not':
            node = Not(self.formula())
        elif head == 'edge':
            name, name_at = self.next()
            if name != ANY_EDGE and self.spec is not None and name not in self.spec.names:
                raise self.fail(ERROR_MESSAGES['unknown_transition'].format(name=name), name_at)
            node = Edge(name, self.term(), self.term())
        elif head == 'reach':
            node = Reach(self.term(), self.term())
        elif head == 'reachr':
            name, name_at = self.next()
            if self.constraints is not None and name not in self.constraints:
                raise self.fail(f"unknown constraint {name!r}", name_at)
            node = ReachR(name, self.term(), self.term())
        elif head == '=':
            node = Equal(self.term(), self.term())
        else:
            raise self.fail(f"unknown connective {head!r}", at)
        self.expect(')')
        return node


def parse_formula(text: str, spec: Optional[CpsSpec] = None,
                  constraints: Optional[Dict[str, Any]] = None) -> Formula:
    """
    Parse a formula; with ``spec``/``constraints`` given, edge and constraint names are checked.

    Raises:
        ParseError: on malformed text or unknown names
    """
    parser = _Parser(text, spec, constraints)
    node = parser.formula()
    if parser.pos != len(parser.tokens):
        raise parser.fail("trailing input after formula")
    return node


def free_vars(phi: Formula) -> FrozenSet[str]:
    if isinstance(phi, (Exists, Forall)):
        return free_vars(phi.body) - {phi.var}
    if isinstance(phi, Not):
        return free_vars(phi.body)
    if isinstance(phi, (And, Or)):
        return free_vars(phi.left) | free_vars(phi.right)
    if isinstance(phi, (Edge, Reach, ReachR)):
        terms = (phi.source, phi.target)
    else:
        terms = (phi.left, phi.right)
    return frozenset(t for t in terms if t != INIT)


def to_sexpr(phi: Formula) -> str:
    if isinstance(phi, Exists):
        return f"(exists {phi.var} {to_sexpr(phi.body)})"
    if isinstance(phi, Forall):
        return f"(forall {phi.var} {to_sexpr(phi.body)})"
    if isinstance(phi, Not):
        return f"(not {to_sexpr(phi.body)})"
    if isinstance(phi, And):
        return f"(and {to_sexpr(phi.left)} {to_sexpr(phi.right)})"
    if isinstance(phi, Or):
        return f"(or {to_sexpr(phi.left)} {to_sexpr(phi.right)})"
    if isinstance(phi, Edge):
        return f"(edge {phi.name} {phi.source} {phi.target})"
    if isinstance(phi, Reach):
        return f"(reach {phi.source} {phi.target})"
    if isinstance(phi, ReachR):
        return f"(reachr {phi.constraint} {phi.source} {phi.target})"
    return f"(= {phi.left} {phi.right})"


def _edge_labels(spec: CpsSpec, name: str) -> FrozenSet[EdgeLabel]:
    if name == ANY_EDGE:
        return frozenset(spec.labels())
    return frozenset(rule.label for rule in spec.rules_named(name))


def _constraint(constraints: Optional[Dict[str, RegularConstraint]], name: str) -> RegularConstraint:
    if not constraints or name not in constraints:
        raise SpecError(f"Unknown constraint {name!r}")
    return constraints[name]


# ---------------------------------------------------------------------------
# verdicts

@dataclass(frozen=True)
class Verdict:
    value: bool
    source: VerdictSource
    bound: Optional[int] = None

    def __post_init__(self):
        if self.source is VerdictSource.BOUNDED and self.bound is None:
            raise ValueError("bounded verdicts must carry their bound")

    def __str__(self) -> str:
        text = "true" if self.value else "false"
        if self.source is VerdictSource.BOUNDED:
            return f"{text} ({self.source.value}, B={self.bound})"
        return f"{text} ({self.source.value})"


# ---------------------------------------------------------------------------
# exact backend

@dataclass
class Compiled:
    """A compiled subformula: an automaton over ``tracks`` (one per variable), or a constant."""
    tracks: Tuple[str, ...] = ()
    automaton: Optional[Nfta] = None
    value: Optional[bool] = None

    @property
    def constant(self) -> bool:
        return self.automaton is None


class AutomataEvaluator:
    """
    Compiles formulas bottom-up to automata over convolutions of encodings.

    A compiled automaton is only required to be right on tuples of
    reachable configurations; each quantifier intersects its variable's
    track with the domain automaton before projecting it away.
    """

    def __init__(self, spec: CpsSpec, constraints: Optional[Dict[str, RegularConstraint]] = None,
                 config: Optional[dict] = None, logger=None):
        self.spec = spec
        self.constraints = constraints or {}
        self.config = config or DEFAULT_CONFIG
        self.logger = logger or NullLogger()
        self.budget = self.config.get('automaton_state_budget', DEFAULT_CONFIG['automaton_state_budget'])
        self.alphabet = tree_alphabet(spec)
        self.presentation = Presentation(spec, self.config, self.logger)
        self.metadata: List[Dict[str, Any]] = []
        self._domain: Optional[Nfta] = None
        self._diagonal: Optional[Nfta] = None
        self._edges: Dict[FrozenSet[EdgeLabel], Nfta] = {}
        self._regular: Dict[str, Nfta] = {}
        self._pairs: Dict[Optional[str], Nfta] = {}

    # -- building blocks ------------------------------------------------------

    @property
    def domain(self) -> Nfta:
        if self._domain is None:
            self._domain = domain_automaton(self.spec, self.presentation, config=self.config,
                                            logger=self.logger).trim()
        return self._domain

    @property
    def diagonal(self) -> Nfta:
        if self._diagonal is None:
            self._diagonal = Nfta.diagonal(self.alphabet)
        return self._diagonal

    def edges(self, labels: FrozenSet[EdgeLabel]) -> Nfta:
        if labels not in self._edges:
            self._edges[labels] = edge_automaton(self.spec, sorted(labels, key=label_key), self.logger)
        return self._edges[labels]

    def regular(self, name: str) -> Nfta:
        if name not in self._regular:
            self._regular[name] = regular_domain_automaton(
                self.spec, _constraint(self.constraints, name), self.config, self.logger)
        return self._regular[name]

    def pairs(self, name: Optional[str] = None) -> Nfta:
        """Runs between valid configurations, optionally along the named constraint."""
        if name not in self._pairs:
            constraint = None if name is None else _constraint(self.constraints, name)
            self._pairs[name] = reach_automaton(self.spec, constraint, self.presentation, self.config, self.logger)
        return self._pairs[name]

    def init_tree(self):
        return encode_config(self.spec.initial_config())

    def _record(self, phi: Formula, result: Compiled) -> Compiled:
        entry = {'formula': to_sexpr(phi), 'tracks': list(result.tracks)}
        if result.constant:
            entry['value'] = result.value
        else:
            entry['states'], entry['transitions'] = result.automaton.size()
            self.logger.debug(f"compiled {entry['formula']} over {entry['tracks']}: "
                              f"{entry['states']} states")
        self.metadata.append(entry)
        return result

    @staticmethod
    def _align(c: Compiled, tracks: Tuple[str, ...]) -> Nfta:
        if c.tracks == tracks:
            return c.automaton
        return c.automaton.cylindrify(len(tracks), [tracks.index(v) for v in c.tracks]).trim()

    def _binary(self, automaton: Nfta, x: str, y: str) -> Compiled:
        """A two-track automaton read as (x, y), with tracks put in sorted order."""
        if x == y:
            same = automaton.intersect(self.diagonal).project(1)
            return Compiled((x,), same)
        if x < y:
            return Compiled((x, y), automaton)
        return Compiled((y, x), automaton.cylindrify(2, [1, 0]).trim())

    def _pin_init(self, automaton: Nfta, track: int) -> Nfta:
        """Fix one track of a two-track automaton to the initial configuration and drop it."""
        pinned = Nfta.singleton(self.alphabet, self.init_tree()).cylindrify(2, [track])
        return automaton.intersect(pinned).project(track)

    # -- compilation ----------------------------------------------------------

    def _atom(self, phi: Formula) -> Compiled:
        spec = self.spec
        if isinstance(phi, Equal):
            x, y = phi.left, phi.right
            if x == y:
                return Compiled(value=True)
            if INIT in (x, y):
                var = y if x == INIT else x
                return Compiled((var,), Nfta.singleton(self.alphabet, self.init_tree()))
            return self._binary(self.diagonal, x, y)

        if isinstance(phi, Edge):
            labels = _edge_labels(spec, phi.name)
            x, y = phi.source, phi.target
            if x == INIT and y == INIT:
                init = spec.initial_config()
                return Compiled(value=any(label in labels and nxt == init
                                          for label, nxt in successors(spec, init)))
            automaton = self.edges(labels)
            if x == INIT:
                return Compiled((y,), self._pin_init(automaton, 0))
            if y == INIT:
                return Compiled((x,), self._pin_init(automaton, 1))
            return self._binary(automaton, x, y)

        if isinstance(phi, (Reach, ReachR)):
            name = phi.constraint if isinstance(phi, ReachR) else None
            x, y = phi.source, phi.target
            if x != INIT:
                if y == INIT:
                    return Compiled((x,), self._pin_init(self.pairs(name), 1))
                return self._binary(self.pairs(name), x, y)
            if isinstance(phi, Reach):
                if phi.target == INIT:
                    return Compiled(value=True)
                return Compiled((phi.target,), self.domain)
            if phi.target == INIT:
                init = spec.initial_config()
                return Compiled(value=reach_regular(spec, init, init, _constraint(self.constraints, phi.constraint),
                                                   self.config, self.logger))
            return Compiled((phi.target,), self.regular(phi.constraint))

        raise UnsupportedFormula(ERROR_MESSAGES['unsupported_atom'].format(atom=to_sexpr(phi)))

    def compile(self, phi: Formula) -> Compiled:
        if isinstance(phi, Forall):
            return self._record(phi, self.compile(Not(Exists(phi.var, Not(phi.body)))))

        if isinstance(phi, Not):
            inner = self.compile(phi.body)
            if inner.constant:
                return self._record(phi, Compiled(value=not inner.value))
            flipped = inner.automaton.complement(self.budget, self.logger).trim()
            return self._record(phi, Compiled(inner.tracks, flipped))

        if isinstance(phi, (And, Or)):
            left, right = self.compile(phi.left), self.compile(phi.right)
            is_and = isinstance(phi, And)
            for a, b in ((left, right), (right, left)):
                if a.constant:
                    if a.value != is_and:
                        return self._record(phi, Compiled(value=a.value))
                    return self._record(phi, b)
            tracks = tuple(sorted(set(left.tracks) | set(right.tracks)))
            combined = self._align(left, tracks).combine(self._align(right, tracks), 'and' if is_and else 'or')
            return self._record(phi, Compiled(tracks, combined.trim()))

        if isinstance(phi, Exists):
            inner = self.compile(phi.body)
            if inner.constant or phi.var not in inner.tracks:
                # the domain is never empty: it holds the initial configuration
                return self._record(phi, inner)
            i = inner.tracks.index(phi.var)
            k = len(inner.tracks)
            guard = self.domain if k == 1 else self.domain.cylindrify(k, [i])
            body = inner.automaton.intersect(guard)
            if k == 1:
                return self._record(phi, Compiled(value=not body.is_empty().empty))
            rest = inner.tracks[:i] + inner.tracks[i + 1:]
            return self._record(phi, Compiled(rest, body.project(i)))

        return self._record(phi, self._atom(phi))

    def evaluate(self, phi: Formula) -> Verdict:
        """
        Raises:
            UnsupportedFormula: if phi has free variables or an atom shape the
                backend cannot compile
        """
        if free_vars(phi):
            raise UnsupportedFormula(f"formula has free variables {sorted(free_vars(phi))}; "
                                     f"use solutions instead")
        result = self.compile(phi)
        return Verdict(bool(result.value), VerdictSource.EXACT)


def eval_sentence_automata(spec: CpsSpec, phi: Formula,
                           constraints: Optional[Dict[str, RegularConstraint]] = None,
                           config: Optional[dict] = None, logger=None) -> Verdict:
    return AutomataEvaluator(spec, constraints, config, logger).evaluate(phi)


# ---------------------------------------------------------------------------
# bounded backend

class BoundedModel:
    """
    The reachable configurations whose encodings have at most ``bound`` nodes,
    taken from a bounded breadth-first exploration.

    Reachability atoms are decided inside the explored graph.
    """

    def __init__(self, spec: CpsSpec, bound: int, constraints: Optional[Dict[str, RegularConstraint]] = None,
                 config: Optional[dict] = None, logger=None):
        self.spec = spec
        self.bound = bound
        self.constraints = constraints or {}
        self.config = config or DEFAULT_CONFIG
        self.logger = logger or NullLogger()
        self.graph = bfs_graph(spec, ExplorationBounds.from_config(self.config), logger=self.logger)
        self.universe = [c for c in self.graph.vertices() if len(encode_config(c)) <= bound]
        self.init = spec.initial_config()
        self._regular_cache: Dict[Tuple[str, Configuration], FrozenSet[Configuration]] = {}
        self.logger.debug(f"bounded model: {len(self.universe)} configurations with at most {bound} nodes")
        if self.graph.truncated:
            self.logger.warning("exploration was truncated; the bounded universe may miss configurations")

    def value_of(self, term: str, env: Dict[str, Configuration]) -> Configuration:
        return self.init if term == INIT else env[term]

    def edge(self, name: str, c1: Configuration, c2: Configuration) -> bool:
        labels = _edge_labels(self.spec, name)
        return any(label in labels and nxt == c2 for label, nxt in successors(self.spec, c1))

    def reach(self, c1: Configuration, c2: Configuration) -> bool:
        if c1 == c2:
            return True
        g = self.graph.graph
        return g.has_node(c1) and g.has_node(c2) and nx.has_path(g, c1, c2)

    def reach_constrained(self, name: str, c1: Configuration, c2: Configuration) -> bool:
        key = (name, c1)
        if key not in self._regular_cache:
            constraint = _constraint(self.constraints, name)
            seen = {(c1, constraint.initial)}
            queue = deque(seen)
            while queue:
                c, p = queue.popleft()
                for rule, nxt in fire(self.spec, c):
                    if nxt not in self.graph:
                        continue
                    for p2 in constraint.successors(p, rule.name):
                        if (nxt, p2) not in seen:
                            seen.add((nxt, p2))
                            queue.append((nxt, p2))
            self._regular_cache[key] = frozenset(c for c, p in seen if p in constraint.finals)
        return c2 in self._regular_cache[key]

    def holds(self, phi: Formula, env: Dict[str, Configuration]) -> bool:
        if isinstance(phi, Exists):
            return any(self.holds(phi.body, {**env, phi.var: c}) for c in self.universe)
        if isinstance(phi, Forall):
            return all(self.holds(phi.body, {**env, phi.var: c}) for c in self.universe)
        if isinstance(phi, Not):
            return not self.holds(phi.body, env)
        if isinstance(phi, And):
            return self.holds(phi.left, env) and self.holds(phi.right, env)
        if isinstance(phi, Or):
            return self.holds(phi.left, env) or self.holds(phi.right, env)
        if isinstance(phi, Equal):
            return self.value_of(phi.left, env) == self.value_of(phi.right, env)
        source, target = self.value_of(phi.source, env), self.value_of(phi.target, env)
        if isinstance(phi, Edge):
            return self.edge(phi.name, source, target)
        if isinstance(phi, Reach):
            return self.reach(source, target)
        return self.reach_constrained(phi.constraint, source, target)

    def assignments(self, variables: Sequence[str]) -> Iterator[Dict[str, Configuration]]:
        for values in itertools.product(self.universe, repeat=len(variables)):
            yield dict(zip(variables, values))


def eval_sentence_bounded(spec: CpsSpec, phi: Formula, bound: Optional[int] = None,
                          constraints: Optional[Dict[str, RegularConstraint]] = None,
                          config: Optional[dict] = None, logger=None) -> Verdict:
    config = config or DEFAULT_CONFIG
    bound = bound if bound is not None else config.get('fo_bound', DEFAULT_CONFIG['fo_bound'])
    if free_vars(phi):
        raise UnsupportedFormula(f"formula has free variables {sorted(free_vars(phi))}; use solutions instead")
    model = BoundedModel(spec, bound, constraints, config, logger)
    return Verdict(model.holds(phi, {}), VerdictSource.BOUNDED, bound)


def solutions(spec: CpsSpec, phi: Formula, bound: Optional[int] = None,
              constraints: Optional[Dict[str, RegularConstraint]] = None,
              config: Optional[dict] = None, logger=None) -> List[Dict[str, Configuration]]:
    """All satisfying assignments of the free variables within the bound, in canonical order."""
    config = config or DEFAULT_CONFIG
    bound = bound if bound is not None else config.get('fo_bound', DEFAULT_CONFIG['fo_bound'])
    model = BoundedModel(spec, bound, constraints, config, logger)
    variables = sorted(free_vars(phi))
    return [env for env in model.assignments(variables) if model.holds(phi, env)]


def format_assignment(env: Dict[str, Configuration]) -> str:
    return " ".join(f"{v}={env[v]}" for v in sorted(env))
