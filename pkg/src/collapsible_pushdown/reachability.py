"""
Reachability through certificates.

Every run from the initial configuration to (q, s) passes all milestones of
s in order. A certificate labels each node of the stack tree (one node per
milestone) with a state of the run at that milestone; consecutive
milestones are joined by loop ∘ push ∘ loop, or by loop ∘ clone ∘ loop
followed by (pop ∘ loop)* down to the next milestone. Loops come from the
loop summaries of the path words, so checking and finding certificates is a
left-to-right pass over the tree.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from .constants import DEFAULT_CONFIG, EPSILON, ERROR_MESSAGES
from .cps import CpsSpec, Rule, Run
from .errors import SpecError, TreeError
from .logger import NullLogger
from .loops import (
    LoopSummaries, LoopsWordAutomaton, PathProfile, Relation, compose, image,
    loops_word_automaton,
)
from .stack import (
    Configuration, Glyph, Stack2, StackLetter, StackOp, is_constructible, is_substack, meet,
    milestones, stack_problems,
)
from .tree_automata import Nfta
from .tree_codec import Tree, decode, encode_stack, is_state, path_word, stack_part
from .tree_ops import ROOT_KIND, tree_alphabet, validity_step


class Presentation:
    """Loop summaries and transition relations of one system, shared by the deciders below."""

    def __init__(self, spec: CpsSpec, config: Optional[dict] = None, logger=None,
                 summaries: Optional[LoopSummaries] = None):
        self.spec = spec
        self.config = config or DEFAULT_CONFIG
        self.logger = logger or NullLogger()
        self.summaries = summaries or LoopSummaries(spec, self.config, self.logger)
        self.table = self.summaries.table

    def loops(self, word: Sequence[Glyph]) -> Relation:
        return self.summaries.loops(word)

    def pop_step(self, glyph: Glyph) -> Relation:
        return self.table.pop_step(StackLetter(glyph[0], glyph[1], 0))

    def push_segment(self, parent: Sequence[Glyph], glyph: Glyph) -> Relation:
        """Loops(parent) ∘ Push(glyph) ∘ Loops(parent · glyph)."""
        pushed = self.table.rel(parent[-1][0], StackOp.push(glyph[0], glyph[1]))
        return compose(compose(self.loops(parent), pushed), self.loops(tuple(parent) + (glyph,)))

    def clone_segment(self, word: Sequence[Glyph], down_to: int) -> Relation:
        """Loops ∘ Clone2 ∘ Loops on ``word``, then (pop ∘ Loops)* until ``down_to`` letters remain."""
        word = tuple(word)
        loops = self.loops(word)
        rel = compose(compose(loops, self.table.rel(word[-1][0], StackOp.clone2())), loops)
        while len(word) > down_to:
            rel = compose(compose(rel, self.pop_step(word[-1])), self.loops(word[:-1]))
            word = word[:-1]
        return rel

    def segment(self, t: Tree, previous: str, address: str) -> Relation:
        """State pairs joining the milestones of two lexicographically consecutive stack-tree nodes."""
        if address.endswith('0'):
            return self.push_segment(path_word(t, previous), t[address])
        return self.clone_segment(path_word(t, previous), len(path_word(t, address)))

    def start_states(self) -> FrozenSet[str]:
        return image({self.spec.initial}, self.loops(((self.spec.bottom, 1),)))


def _coerce(spec: CpsSpec, presentation: Optional[Presentation], config=None, logger=None) -> Presentation:
    return presentation if presentation is not None else Presentation(spec, config, logger)


def _propagate(pres: Presentation, t: Tree, start: int, states: Iterable[str]) -> List[FrozenSet[str]]:
    """Feasible state sets for every node from position ``start`` on, in lexicographic order."""
    nodes = t.addresses()
    feasible = [frozenset()] * len(nodes)
    feasible[start] = frozenset(states)
    for i in range(start + 1, len(nodes)):
        if not feasible[i - 1]:
            break
        feasible[i] = image(feasible[i - 1], pres.segment(t, nodes[i - 1], nodes[i]))
    return feasible


def _stack_ok(spec: CpsSpec, s: Stack2) -> bool:
    return not stack_problems(s, spec.bottom) and is_constructible(s)


def is_reachable(spec: CpsSpec, c: Configuration, presentation: Optional[Presentation] = None,
                 config=None, logger=None) -> bool:
    """True iff c is reachable from the initial configuration."""
    pres = _coerce(spec, presentation, config, logger)
    if c.state not in spec.states or not _stack_ok(spec, c.stack):
        return False
    t = encode_stack(c.stack)
    feasible = _propagate(pres, t, 0, pres.start_states())
    return c.state in feasible[-1]


def find_certificate(spec: CpsSpec, c: Configuration, presentation: Optional[Presentation] = None,
                     config=None, logger=None) -> Optional[Dict[str, str]]:
    """
    An explicit certificate for c keyed by configuration-tree addresses, or
    None when c is unreachable.
    """
    pres = _coerce(spec, presentation, config, logger)
    if c.state not in spec.states or not _stack_ok(spec, c.stack):
        return None
    t = encode_stack(c.stack)
    nodes = t.addresses()
    feasible = _propagate(pres, t, 0, pres.start_states())
    if c.state not in feasible[-1]:
        return None
    chosen = [None] * len(nodes)
    chosen[-1] = c.state
    for i in range(len(nodes) - 1, 0, -1):
        rel = pres.segment(t, nodes[i - 1], nodes[i])
        chosen[i - 1] = min(p for p in feasible[i - 1] if (p, chosen[i]) in rel)
    return {'0' + d: q for d, q in zip(nodes, chosen)}


def certificate_check(spec: CpsSpec, t: Tree, f: Dict[str, str],
                      presentation: Optional[Presentation] = None, config=None, logger=None) -> bool:
    """
    Check that ``f`` certifies the configuration tree ``t``.

    Raises:
        TreeError: if t is not a configuration tree or f is not total on its stack nodes
    """
    pres = _coerce(spec, presentation, config, logger)
    c = decode(t, spec.bottom)
    stack_nodes = [d for d in t.addresses() if d]
    if set(f) != set(stack_nodes):
        raise TreeError(ERROR_MESSAGES['invalid_tree'].format(
            detail="certificate must label exactly the stack nodes"))
    if any(q not in spec.states for q in f.values()):
        raise TreeError(ERROR_MESSAGES['invalid_tree'].format(detail="certificate uses an unknown state"))
    if not _stack_ok(spec, c.stack):
        return False
    stack = stack_part(t)
    nodes = stack.addresses()
    if f['0'] not in pres.start_states():
        return False
    for prev, cur in zip(nodes, nodes[1:]):
        if (f['0' + prev], f['0' + cur]) not in pres.segment(stack, prev, cur):
            return False
    return f['0' + nodes[-1]] == c.state


# ---------------------------------------------------------------------------
# descent and pair reachability

def _descent(pres: Presentation, s: Stack2, state: str) -> List[Tuple[Stack2, FrozenSet[str]]]:
    """
    The lowest stacks runs from (state, s) can reach, with the states they reach them in.

    Candidates are w1 … w(j-1) : v for every nonempty prefix v of a word wj of s.
    A run leaves one candidate for a lower one by Pop1, by leaving the word
    (``up``), by collapsing its top letter, or from a copy of its top word
    above it, popping copied letters until one of them collapses.
    """
    words = s.words
    table = pres.table
    summaries = pres.summaries
    found: Dict[Tuple[int, int], set] = {(len(words), len(words[-1])): {state}}

    def glyphs(j: int, k: int) -> Tuple[Glyph, ...]:
        return tuple(letter.glyph for letter in words[j - 1][:k])

    def add(position: Tuple[int, int], states: Iterable[str]) -> None:
        states = set(states)
        if states:
            found.setdefault(position, set()).update(states)

    def land(letter: StackLetter, states: Iterable[str]) -> None:
        if letter.level == 2 and letter.link >= 1:
            target = (letter.link, len(words[letter.link - 1]))
            add(target, image(states, table.rel(letter.sym, StackOp.collapse())))

    lowest = []
    for j in range(len(words), 0, -1):
        for k in range(len(words[j - 1]), 0, -1):
            states = found.get((j, k))
            if not states:
                continue
            lowest.append((Stack2(words[:j - 1] + (words[j - 1][:k],)), frozenset(states)))
            w = glyphs(j, k)
            top = words[j - 1][k - 1]
            looped = image(states, summaries.loops(w))
            if j >= 2:
                add((j - 1, len(words[j - 2])), image(looped, summaries.up(w)))
            if k >= 2:
                add((j, k - 1), image(looped, table.pop_step(top)))
            land(top, looped)

            copies = image(states, summaries.copy_up(w))
            i = k
            while copies:
                copies = image(copies, summaries.copy_closure(glyphs(j, i)))
                letter = words[j - 1][i - 1]
                land(letter, copies)
                if i == 1:
                    break
                copies = image(copies, table.pop_step(letter))
                i -= 1
    return lowest


def _milestone_segment(pres: Presentation, lower: Stack2, upper: Stack2) -> Relation:
    """State pairs joining two consecutive milestones."""
    below = tuple(letter.glyph for letter in lower.top_word)
    if upper.height == lower.height:
        letter = upper.top
        if letter.level == 2 and letter.link != upper.height - 1:
            return frozenset()
        return pres.push_segment(below, letter.glyph)
    return pres.clone_segment(below, len(upper.top_word))


def _climb(pres: Presentation, target: Stack2, x: Stack2, states: Iterable[str]) -> FrozenSet[str]:
    """
    States reached at ``target`` by runs from (q, x), q in ``states``, that never go below x.

    x is either a milestone of the target or lies inside the clone segment
    building one: it then has to push the missing letters first.
    """
    ms = milestones(target)
    entering = frozenset(states)
    if x in ms:
        index = ms.index(x)
        entering = image(entering, pres.loops([letter.glyph for letter in x.top_word]))
    else:
        j = x.height
        if not 2 <= j <= target.height or x.words[:-1] != target.words[:j - 1]:
            return frozenset()
        word = target.words[j - 1]
        k = len(x.top_word)
        if word[:k] != x.top_word:
            return frozenset()
        shared = len(meet(target.words[j - 2], word))
        for i in range(k, shared):
            letter = word[i]
            if letter.level == 2 and letter.link != j - 1:
                return frozenset()
            entering = image(entering, pres.push_segment([g.glyph for g in word[:i]], letter.glyph))
        index = ms.index(Stack2(target.words[:j - 1] + (word[:shared],)))
    for lower, upper in zip(ms[index:], ms[index + 1:]):
        if not entering:
            break
        entering = image(entering, _milestone_segment(pres, lower, upper))
    return entering


def _arrivals(pres: Presentation, c1: Configuration, target: Stack2) -> FrozenSet[str]:
    """All q' with a run from c1 to (q', target)."""
    arrived = set()
    for x, states in _descent(pres, c1.stack, c1.state):
        arrived |= _climb(pres, target, x, states)
    return frozenset(arrived)


def desc_of(spec: CpsSpec, s: Stack2, u: Stack2, config=None, logger=None,
            sources: Optional[Iterable[str]] = None,
            presentation: Optional[Presentation] = None) -> Relation:
    """All (q, q') with a run from (q, s) to (q', u)."""
    if stack_problems(s, spec.bottom) or stack_problems(u, spec.bottom):
        return frozenset()
    pres = _coerce(spec, presentation, config, logger)
    pairs = set()
    for q in (spec.states if sources is None else sources):
        for q2 in _arrivals(pres, Configuration(q, s), u):
            pairs.add((q, q2))
    return frozenset(pairs)


def common_milestone(s: Stack2, t: Stack2) -> Tuple[int, Stack2]:
    """The greatest milestone of t that is a substack of s, with its index."""
    best = (0, milestones(t)[0])
    for i, m in enumerate(milestones(t)):
        if is_substack(m, s):
            best = (i, m)
    return best


def reach(spec: CpsSpec, c1: Configuration, c2: Configuration, presentation: Optional[Presentation] = None,
          config=None, logger=None) -> bool:
    """
    True iff a run leads from c1 to c2.

    A run from c1 to c2 has a lowest stack x. Descending from c1 gives the
    states at every candidate x; climbing from x goes milestone by milestone
    through the stack of c2.
    """
    logger = logger or NullLogger()
    if c1 == c2:
        return True
    if c1.state not in spec.states or c2.state not in spec.states:
        return False
    if stack_problems(c1.stack, spec.bottom) or stack_problems(c2.stack, spec.bottom):
        return False
    pres = _coerce(spec, presentation, config, logger)
    index, _ = common_milestone(c1.stack, c2.stack)
    logger.debug(f"reach: greatest common milestone is number {index}")
    return c2.state in _arrivals(pres, c1, c2.stack)


def visits_milestones(run: Run, target: Optional[Stack2] = None) -> bool:
    """Every milestone of the target that is not below the start stack occurs on the run."""
    stacks = run.stacks()
    target = target or stacks[-1]
    seen = set(stacks)
    return all(m in seen for m in milestones(target) if not is_substack(m, stacks[0]))


# ---------------------------------------------------------------------------
# regular constraints

@dataclass(frozen=True)
class RegularConstraint:
    """A finite word automaton over transition names."""
    states: Tuple[str, ...]
    initial: str
    finals: FrozenSet[str]
    edges: Tuple[Tuple[str, str, str], ...]

    def successors(self, p: str, name: str) -> List[str]:
        return sorted({dst for src, n, dst in self.edges if src == p and n == name})

    @classmethod
    def universal(cls, spec: CpsSpec) -> "RegularConstraint":
        return cls(('u',), 'u', frozenset({'u'}), tuple(('u', n, 'u') for n in spec.names))

    @classmethod
    def word(cls, names: Sequence[str]) -> "RegularConstraint":
        """The constraint accepting exactly one sequence of transition names."""
        states = tuple(f"w{i}" for i in range(len(names) + 1))
        edges = tuple((states[i], n, states[i + 1]) for i, n in enumerate(names))
        return cls(states, states[0], frozenset({states[-1]}), edges)


def parse_constraint(document: Dict[str, Any], spec: CpsSpec) -> RegularConstraint:
    """
    Raises:
        SpecError: on missing fields, undeclared states or unknown transition names
    """
    for key in ('states', 'initial', 'finals', 'edges'):
        if key not in document:
            raise SpecError(f"Constraint lacks {key!r}")
    states = tuple(str(p) for p in document['states'])
    initial = str(document['initial'])
    finals = frozenset(str(p) for p in document['finals'])
    if initial not in states or not finals <= set(states):
        raise SpecError("Constraint references undeclared states")
    edges = []
    for entry in document['edges']:
        src, dst = str(entry.get('from')), str(entry.get('to'))
        name = str(entry.get('transition', entry.get('transition-name', '')))
        if src not in states or dst not in states:
            raise SpecError("Constraint edge references undeclared states")
        spec.rules_named(name)
        edges.append((src, name, dst))
    return RegularConstraint(states, initial, finals, tuple(sorted(set(edges))))


def load_constraint(path: Union[str, Path], spec: CpsSpec) -> RegularConstraint:
    constraint_file = Path(path)
    if not constraint_file.exists():
        raise FileNotFoundError(ERROR_MESSAGES['file_not_found'].format(path=path))
    with open(constraint_file, 'r', encoding='utf-8') as f:
        return parse_constraint(json.load(f), spec)


def product_state(q: str, p: str) -> str:
    return f"{q}/{p}"


def product_cps(spec: CpsSpec, constraint: RegularConstraint) -> CpsSpec:
    """
    The system over Q × P that runs ``spec`` while the constraint reads the transition names.

    Raises:
        SpecError: if the constraint names a transition ``spec`` lacks
    """
    for _, name, _ in constraint.edges:
        spec.rules_named(name)
    states = tuple(product_state(q, p) for q in spec.states for p in constraint.states)
    rules = []
    for rule in spec.rules:
        for p in constraint.states:
            for p2 in constraint.successors(p, rule.name):
                rules.append(Rule(rule.name, product_state(rule.source, p), rule.top,
                                  product_state(rule.target, p2), rule.op))
    return CpsSpec(spec.alphabet, states, product_state(spec.initial, constraint.initial), tuple(rules),
                   spec.bottom, spec.schema_count)


def reach_regular(spec: CpsSpec, c1: Configuration, c2: Configuration, constraint: RegularConstraint,
                  config=None, logger=None) -> bool:
    """True iff a run from c1 to c2 spells a word of transition names the constraint accepts."""
    product = product_cps(spec, constraint)
    pres = Presentation(product, config, logger)
    source = Configuration(product_state(c1.state, constraint.initial), c1.stack)
    for p in sorted(constraint.finals):
        if reach(product, source, Configuration(product_state(c2.state, p), c2.stack), pres, config, logger):
            return True
    return False


# ---------------------------------------------------------------------------
# domain automaton

class CertificateRelations:
    """Path classes of a loops word automaton and the segment relations between their milestones."""

    def __init__(self, pres: Presentation, word_automaton: Optional[LoopsWordAutomaton] = None):
        spec = pres.spec
        letters = [(sym, level) for sym in spec.alphabet if sym != spec.bottom for level in (1, 2)]
        self.wa = word_automaton or loops_word_automaton(spec, pres.summaries, letters, pres.config, pres.logger)
        table = pres.table
        wa = self.wa
        self.mus = wa.states()
        self.moves = {(mu, g): wa.step(mu, g) for mu in self.mus for g in wa.letters}
        self.loops = {mu: _loops_value(wa.value(mu)) for mu in self.mus}
        loops = self.loops
        self.clone_rel = {mu: compose(compose(loops[mu], table.rel(mu[1][0], StackOp.clone2())), loops[mu])
                          for mu in self.mus}
        self.push_rel = {(mu, g): compose(compose(loops[mu], table.rel(mu[1][0], StackOp.push(g[0], g[1]))),
                                          loops[self.moves[(mu, g)]])
                         for (mu, g) in self.moves}
        self.back_rel = {(g, mu): compose(pres.pop_step(g), loops[mu]) for mu in self.mus for g in wa.letters}
        self.parents: Dict[Any, List[Any]] = {}
        for (mu, g), child in self.moves.items():
            self.parents.setdefault(child, []).append(mu)

    def classes(self, label, left: Optional[Any], right: Optional[Any]) -> List[Any]:
        """Path classes a node labelled ``label`` may carry, given its children's classes."""
        if left is not None:
            candidates = self.parents.get(left, [])
        elif right is not None:
            candidates = [right]
        elif label == EPSILON:
            candidates = self.mus
        else:
            candidates = [mu for mu in self.mus if mu[1] == label]
        if right is not None:
            candidates = [mu for mu in candidates if mu == right]
        if label != EPSILON:
            candidates = [mu for mu in candidates if mu[1] == label]
        return candidates


def _loops_value(value: Union[Relation, PathProfile]) -> Relation:
    return value.loops if isinstance(value, PathProfile) else value


def domain_automaton(spec: CpsSpec, presentation: Optional[Presentation] = None,
                     word_automaton: Optional[LoopsWordAutomaton] = None,
                     config=None, logger=None) -> Nfta:
    """
    Tree automaton accepting exactly the encodings of reachable configurations.

    It guesses a certificate. The state of a stack subtree is (loops-automaton
    state of its path word, certificate value at its root, certificate value
    at its rightmost leaf, states reachable from that leaf by clone and pops
    back up to the subtree's root), paired with the EncTrees checker state.
    """
    pres = _coerce(spec, presentation, config, logger)
    config = pres.config
    rels = CertificateRelations(pres, word_automaton)
    wa = rels.wa
    states = spec.states
    start = pres.start_states()
    clone_rel, push_rel, back_rel = rels.clone_rel, rels.push_rel, rels.back_rel

    def certificate_states(label, left, right):
        """Candidate certificate parts for a stack node; children are (mu, a, b, Z) or None."""
        out = []
        for mu in rels.classes(label, left and left[0], right and right[0]):
            if left is not None:
                glyph = left[0][1]
                rel = push_rel[(mu, glyph)]
                a_options = sorted({p for p, q in rel if q == left[1]})
                zpre = image(left[3], back_rel[(glyph, mu)])
            else:
                a_options = list(states)
                zpre = None
            for a in a_options:
                pre = zpre if zpre is not None else image({a}, clone_rel[mu])
                if right is not None:
                    if right[1] not in pre:
                        continue
                    b, z = right[2], right[3]
                elif left is not None:
                    b, z = left[2], pre
                else:
                    b, z = a, pre
                out.append((mu, a, b, z))
        return out

    bottom = spec.bottom

    def step(label, left, right):
        v = validity_step(label, left and left[0], right and right[0], bottom)
        if v is None:
            return []
        if is_state(label):
            cert = left[1]
            if cert[0] != wa.initial or cert[1] not in start or cert[2] != label:
                return []
            return [(v, ('root',))]
        parts = certificate_states(label, left and left[1], right and right[1])
        return [(v, part) for part in parts]

    automaton = Nfta.from_step(tree_alphabet(spec), 1, step,
                               lambda q: q[0] == ROOT_KIND and q[1] == ('root',),
                               budget=config.get('automaton_state_budget',
                                                 DEFAULT_CONFIG['automaton_state_budget']),
                               logger=pres.logger)
    states_count, transitions = automaton.size()
    pres.logger.debug(f"domain automaton: {states_count} states, {transitions} transitions")
    return automaton


def regular_domain_automaton(spec: CpsSpec, constraint: RegularConstraint, config=None, logger=None) -> Nfta:
    """Encodings of configurations reachable from the initial one along a word the constraint accepts."""
    product = product_cps(spec, constraint)
    inner = domain_automaton(product, config=config, logger=logger)
    back = {}
    for q in spec.states:
        for p in constraint.finals:
            back[product_state(q, p)] = q
    delta = {}
    for (label, left, right), targets in inner.delta.items():
        if is_state(label):
            if label not in back:
                continue
            label = back[label]
        key = (label, left, right)
        delta[key] = delta.get(key, frozenset()) | targets
    return Nfta(frozenset(tree_alphabet(spec)), 1, delta, inner.finals).trim()
