"""
Reachability between two configurations as a two-track tree automaton.

A run from c1 to c2 has a lowest stack x. Over the convolution of c1, x and
c2 two automata run side by side, and the x track is projected away:

* the descent automaton reads c1 and x. It follows the walk ``reach`` takes
  over the lowest stacks of c1 and checks that the walk ends at x, in the
  state labelling x's root;
* the climb automaton reads x and c2 and certifies the milestones of c2
  above x, the way the domain automaton does from the bottom stack.

x is a cut of c1's stack tree: every node up to a marker node, plus one
extra epsilon leaf when x ends inside the clone segment of the next word.

The walk visits positions of c1's stack from the top down. Milestone
positions sit on tree nodes; a position inside a clone segment is reached
by popping from the segment's split node and is carried up the tree as a
pending walk until the letter on top of it.
"""

from typing import List, NamedTuple, Optional, Tuple

from .constants import DEFAULT_CONFIG, EPSILON
from .cps import CpsSpec
from .loops import EMPTY, compose, image, profile_word_automaton
from .reachability import (
    CertificateRelations, Presentation, RegularConstraint, _coerce, domain_automaton, product_cps,
    product_state,
)
from .stack import StackOp
from .tree_automata import PAD, Nfta
from .tree_codec import is_state
from .tree_ops import tree_alphabet, validity_automaton

NONE = 'none'
ALL = 'all'
Z = 'z'
ACCEPT = ('accept',)
PRE = ('pre', None, None, None)


def overlays(a, b, left, right, a_left: bool, a_right: bool) -> List[Tuple[object, bool]]:
    """
    How a cut track b lies over a tree track a at one node.

    Returns candidate (class, is_marker) pairs for the subtree. Classes are
    NONE (b absent), ALL (b equals a, marker elsewhere), Z (the extra leaf),
    ``('m', tail)`` and ``('mz', tail, hanging)`` for subtrees holding the
    marker without or with the extra leaf. ``tail`` is whether track a goes
    on after the marker; ``hanging`` whether the extra leaf hangs on the
    1-chain of the subtree's root. ``left``/``right`` are the children's
    classes, ``a_left``/``a_right`` whether track a has the children.
    """
    bare = left in (None, NONE) and right in (None, NONE)
    if b is PAD:
        return [(NONE, False)] if bare else []
    out = []
    if b == EPSILON and a in (PAD, EPSILON) and bare:
        out.append((Z, False))
    if a != b:
        return out
    if left in (None, NONE) and right in (None, NONE, Z):
        tail = a_left or a_right
        out.append((('mz', tail, True) if right == Z else ('m', tail), True))
    if isinstance(left, tuple) and (right in (None, NONE) or (right == Z and left[0] == 'm')):
        tail = left[1] or a_right
        if left[0] == 'mz':
            out.append((('mz', tail, False), False))
        elif right == Z:
            out.append((('mz', tail, True), False))
        else:
            out.append((('m', tail), False))
    if isinstance(right, tuple) and left in (None, ALL):
        out.append((right, False))
    if left in (None, ALL) and right in (None, ALL):
        out.append((ALL, False))
    return out


def _letters(spec: CpsSpec) -> List:
    return [(sym, level) for sym in spec.alphabet if sym != spec.bottom for level in (1, 2)]


def _labels(spec: CpsSpec) -> Tuple[List, List]:
    """Two-track labels of stack nodes, and of configuration roots."""
    values = [PAD, EPSILON, (spec.bottom, 1)] + _letters(spec)
    stack = [(u, v) for u in values for v in values if not (u is PAD and v is PAD)]
    roots = [(p, q) for p in spec.states for q in spec.states]
    return stack, roots


def _kind(a, b) -> Optional[int]:
    """0 for letters, 1 for epsilon, None when the tracks disagree."""
    kinds = {x == EPSILON for x in (a, b) if x is not PAD}
    if len(kinds) != 1:
        return None
    return 1 if kinds.pop() else 0


def _side(q) -> Optional[int]:
    return None if q == ACCEPT else q[0]


class _Node(NamedTuple):
    mu: tuple
    letter: bool
    root: bool
    marker: bool
    hanging: bool


class _Descent:
    """
    Step function of the descent automaton over c1 ⊗ x.

    A state is (kind, path class, cut class, walk). The walk is None when it
    never enters the subtree, else (state on entering at the subtree's
    rightmost leaf, exit). Exits:

    * ``('p', q)``: popped the subtree's root letter;
    * ``('l', q)``: left the word or collapsed; lands on the predecessor of
      the nearest split node above;
    * ``('i', q, popped, tagged, fresh)``: inside a clone segment, below
      the letter above the subtree;
    * ``('c', q)``: popping a copy of the top word, down to the letter above;
    * ``('e', q, kind)``: ended at x, on the marker (M) or inside the clone
      segment after it (I).
    """

    def __init__(self, pres: Presentation, rels: CertificateRelations):
        self.states = pres.spec.states
        self.bottom = (pres.spec.bottom, 1)
        self.rels = rels
        table = pres.table
        self.profiles = {mu: rels.wa.value(mu) for mu in rels.mus}
        self.copy_up = {mu: prof.copy_up for mu, prof in self.profiles.items()}
        self.copy_closure = {mu: prof.copy_closure for mu, prof in self.profiles.items()}
        self.pop_step = {mu: pres.pop_step(mu[1]) for mu in rels.mus}
        self.collapse = {mu: table.rel(mu[1][0], StackOp.collapse()) if mu[1][1] == 2 else EMPTY
                         for mu in rels.mus}
        self.pop = {mu: compose(rels.loops[mu], self.pop_step[mu]) for mu in rels.mus}
        self.up = {mu: compose(rels.loops[mu], prof.up) for mu, prof in self.profiles.items()}
        self.fall = {mu: compose(rels.loops[mu], self.collapse[mu]) for mu in rels.mus}

    # -- walk moves -----------------------------------------------------------

    def _copies(self, node: _Node, sources) -> List[tuple]:
        found = image(sources, self.copy_closure[node.mu])
        out = [('l', q) for q in image(found, self.collapse[node.mu])]
        if not node.root:
            out += [('c', q) for q in image(found, self.pop_step[node.mu])]
        return out

    def _escapes(self, node: _Node, q: str) -> List[tuple]:
        out = [('l', r) for r in image({q}, self.fall[node.mu])]
        return out + self._copies(node, image({q}, self.copy_up[node.mu]))

    def _milestone(self, node: _Node, q: str, word_end: bool) -> List[tuple]:
        out = [('e', q, 'M')] if node.marker else []
        if word_end:
            out += [('l', r) for r in image({q}, self.up[node.mu])]
        if not node.letter:
            out.append(('i', q, False, False, True))
            return out
        if not node.root:
            out += [('p', r) for r in image({q}, self.pop[node.mu])]
        return out + self._escapes(node, q)

    def _inner(self, node: _Node, q: str, popped: bool, tagged: bool) -> List[tuple]:
        if not node.letter:
            return [('i', q, popped, tagged, False)]
        out = [('e', q, 'I')] if node.hanging and popped and tagged else []
        if not node.root:
            out += [('i', r, True, tagged, False) for r in image({q}, self.pop[node.mu])]
        return out + self._escapes(node, q)

    def _copy(self, node: _Node, q: str) -> List[tuple]:
        return self._copies(node, {q}) if node.letter else [('c', q)]

    def _from_left(self, node: _Node, exit: tuple) -> List[tuple]:
        kind = exit[0]
        if kind == 'p':
            return self._milestone(node, exit[1], False)
        if kind == 'i':
            return self._inner(node, exit[1], exit[2], exit[3])
        if kind == 'c':
            return self._copy(node, exit[1])
        return [exit]

    def _walks(self, node: _Node, left, right, has_left: bool, tag_ok: bool) -> List[Optional[tuple]]:
        """Walk summaries of a subtree from those of its children (None: child absent or unvisited)."""
        if right is not None:
            entry, exit = right
            kind = exit[0]
            if kind == 'l':
                if has_left:
                    if left is None or left[0] != exit[1]:
                        return []
                    return [(entry, e) for e in self._from_left(node, left[1])]
                return [(entry, e) for e in self._milestone(node, exit[1], True)]
            if left is not None:
                return []
            if kind == 'e':
                return [right]
            if kind == 'i':
                tagged = exit[3] or (exit[4] and tag_ok)
                return [(entry, e) for e in self._inner(node, exit[1], exit[2], tagged)]
            if kind == 'c':
                return [(entry, e) for e in self._copy(node, exit[1])]
            return []
        if left is not None:
            return [(left[0], e) for e in self._from_left(node, left[1])]
        return []

    # -- steps ----------------------------------------------------------------

    def accept(self, a, b, left, right) -> List:
        if not (is_state(a) and is_state(b)) or left is None or right is not None or left == ACCEPT:
            return []
        _, mu, cut, walk = left
        if mu != self.rels.wa.initial or not isinstance(cut, tuple) or walk is None:
            return []
        kind = 'M' if cut[0] == 'm' else 'I'
        return [ACCEPT] if walk[0] == a and walk[1] == ('e', b, kind) else []

    def step(self, label, left, right) -> List:
        a, b = label
        if is_state(a) or is_state(b):
            return self.accept(a, b, left, right)
        side = _kind(a, b)
        if side is None:
            return []
        a_left = left is not None and left[1] is not None
        a_right = right is not None and right[1] is not None
        cuts = overlays(a, b, left and left[2], right and right[2], a_left, a_right)
        if a is PAD:
            return [] if a_left or a_right else [(side, None, cut, None) for cut, _ in cuts]
        walk_left = left[3] if a_left else None
        walk_right = right[3] if a_right else None
        out = set()
        for cut, marker in cuts:
            for mu in self.rels.classes(a, left[1] if a_left else None, right[1] if a_right else None):
                if cut == ALL:
                    if walk_left is None and walk_right is None:
                        out.add((side, mu, cut, None))
                    continue
                hanging = isinstance(cut, tuple) and cut[0] == 'mz' and cut[2]
                node = _Node(mu, a != EPSILON, a == self.bottom, marker, hanging)
                if not a_left and not a_right:
                    walks = [None] + [(q, e) for q in self.states for e in self._milestone(node, q, True)]
                elif walk_left is None and walk_right is None:
                    walks = [None]
                elif a_right and walk_right is None:
                    walks = []
                else:
                    tag_ok = left[2] == ('m', False) if a_left else marker
                    walks = self._walks(node, walk_left, walk_right, a_left, tag_ok)
                out.update((side, mu, cut, w) for w in walks)
        return list(out)


class _Climb:
    """
    Step function of the climb automaton over x ⊗ c2.

    A state is (kind, path class, cut class, certificate, lift, handoff).
    The certificate is PRE on nodes of x below the first milestone climbed,
    else (phase, value at the root, value at the rightmost leaf, states
    reached from that leaf by clone and pops back up to the root), phase
    'mid' when the subtree holds the first climbed node and 'post' after it.
    ``lift`` carries the state at a split node of c2 up through the letters
    x still has to push; ``handoff`` is (M or I, state at x) once known.
    """

    def __init__(self, pres: Presentation, rels: CertificateRelations):
        self.states = pres.spec.states
        self.rels = rels

    def _after(self, phase: str, v: str, mu, glyph, lp, rp) -> List[tuple]:
        rels = self.rels
        if (lp is not None and lp[0] != 'post') or (rp is not None and rp[0] != 'post'):
            return []
        if lp is not None:
            if (v, lp[1]) not in rels.push_rel[(mu, glyph)]:
                return []
            ahead = image(lp[3], rels.back_rel[(glyph, mu)])
        else:
            ahead = image({v}, rels.clone_rel[mu])
        if rp is not None:
            if rp[1] not in ahead:
                return []
            return [(phase, v, rp[2], rp[3])]
        if lp is not None:
            return [(phase, v, lp[2], ahead)]
        return [(phase, v, v, ahead)]

    def _before(self, mu, glyph, lp, rp) -> List[tuple]:
        if lp is None or lp[0] == 'pre':
            if rp is None or rp[0] == 'pre':
                return [PRE]
            if rp[0] == 'mid':
                return [('mid', None, rp[2], rp[3])]
            return []
        if lp[0] != 'mid':
            return []
        ahead = image(lp[3], self.rels.back_rel[(glyph, mu)])
        if rp is None:
            return [('mid', None, lp[2], ahead)]
        if rp[0] == 'post' and rp[1] in ahead:
            return [('mid', None, rp[2], rp[3])]
        return []

    def _certify(self, mu, a, here: bool, marker: bool, cut, left, right, a_left, a_right) -> List[tuple]:
        rels = self.rels
        lp = left[3] if a_left else None
        rp = right[3] if a_right else None
        glyph = left[1][1] if a_left else None
        carried = [c for c in (left, right) if c is not None and (c[4] is not None or c[5] is not None)]
        if len(carried) > 1:
            return []
        out = []
        if not here:
            if carried:
                return []
            if lp is not None and lp[0] == 'post':
                values = sorted({p for p, q in rels.push_rel[(mu, glyph)] if q == lp[1]})
            else:
                values = self.states
            for v in values:
                out += [(dp, None, None) for dp in self._after('post', v, mu, glyph, lp, rp)]
            if a == EPSILON and cut != Z:
                for v in self.states:
                    out += [(dp, v, None) for dp in self._after('mid', v, mu, glyph, lp, rp)]
            return out

        if marker and not carried:
            for q in self.states:
                for v in image({q}, rels.loops[mu]):
                    out += [(dp, None, ('M', q)) for dp in self._after('mid', v, mu, glyph, lp, rp)]
        for dp in self._before(mu, glyph, lp, rp):
            if not carried:
                out.append((dp, None, None))
                continue
            child = carried[0]
            if child[5] is not None:
                out.append((dp, None, child[5]))
            elif child is right:
                out.append((dp, child[4], None))
            elif glyph[1] == 1:
                sources = {p for p, q in rels.push_rel[(mu, glyph)] if q == child[4]}
                if right is not None and right[2] == Z:
                    out += [(dp, None, ('I', q)) for q in self.states if image({q}, rels.loops[mu]) & sources]
                else:
                    out += [(dp, p, None) for p in sorted(sources)]
        return out

    def accept(self, b, a, left, right) -> List:
        if not (is_state(a) and is_state(b)) or left is None or right is not None or left == ACCEPT:
            return []
        _, mu, cut, dp, lift, hand = left
        if mu != self.rels.wa.initial or not isinstance(cut, tuple) or dp is None or lift is not None:
            return []
        kind = 'M' if cut[0] == 'm' else 'I'
        return [ACCEPT] if dp[0] == 'mid' and dp[2] == a and hand == (kind, b) else []

    def step(self, label, left, right) -> List:
        b, a = label
        if is_state(a) or is_state(b):
            return self.accept(b, a, left, right)
        side = _kind(a, b)
        if side is None:
            return []
        a_left = left is not None and left[1] is not None
        a_right = right is not None and right[1] is not None
        cuts = overlays(a, b, left and left[2], right and right[2], a_left, a_right)
        if a is PAD:
            return [] if a_left or a_right else [(side, None, cut, None, None, None) for cut, _ in cuts]
        out = set()
        for cut, marker in cuts:
            here = b is not PAD and cut != Z
            for mu in self.rels.classes(a, left[1] if a_left else None, right[1] if a_right else None):
                for dp, lift, hand in self._certify(mu, a, here, marker, cut, left, right, a_left, a_right):
                    out.add((side, mu, cut, dp, lift, hand))
        return list(out)


def _automaton(pres: Presentation, part, labels: Tuple[List, List], budget: int) -> Nfta:
    stack, roots = labels
    initial = part.rels.wa.initial

    def labels_for(left, right):
        if left is not None and right is None and left[0] == 0 and left[1] == initial:
            return stack + roots
        return stack

    return Nfta.from_step(tree_alphabet(pres.spec), 2, part.step, lambda q: q == ACCEPT,
                          labels=stack, budget=budget, logger=pres.logger,
                          side_of=_side, labels_for=labels_for).trim()


def pair_automaton(pres: Presentation) -> Nfta:
    """
    Pairs c1 ⊗ c2 of configuration trees with a run from c1 to c2, trees
    outside the encodings included. Callers restrict the tracks.
    """
    spec = pres.spec
    config = pres.config
    budget = config.get('automaton_state_budget', DEFAULT_CONFIG['automaton_state_budget'])
    profiles = profile_word_automaton(spec, pres.summaries, _letters(spec), config, pres.logger)
    labels = _labels(spec)
    lower = _automaton(pres, _Descent(pres, CertificateRelations(pres, profiles)), labels, budget)
    upper = _automaton(pres, _Climb(pres, CertificateRelations(pres)), labels, budget)
    for name, part in (('descent', lower), ('climb', upper)):
        states, transitions = part.size()
        pres.logger.debug(f"{name} automaton: {states} states, {transitions} transitions")
    joined = lower.cylindrify(3, [0, 1]).intersect(upper.cylindrify(3, [1, 2])).trim()
    return joined.project(1)


def _unpair(spec: CpsSpec, constraint: RegularConstraint, pairs: Nfta) -> Nfta:
    """Read product roots back as states of ``spec``: initial constraint state left, final right."""
    sources = {product_state(q, constraint.initial): q for q in spec.states}
    targets = {product_state(q, p): q for q in spec.states for p in constraint.finals}
    delta = {}
    for (label, left, right), found in pairs.delta.items():
        a, b = label
        if is_state(a) or is_state(b):
            if a not in sources or b not in targets:
                continue
            label = (sources[a], targets[b])
        key = (label, left, right)
        delta[key] = delta.get(key, frozenset()) | found
    return Nfta(frozenset(tree_alphabet(spec)), 2, delta, pairs.finals).trim()


def reach_automaton(spec: CpsSpec, constraint: Optional[RegularConstraint] = None,
                    presentation: Optional[Presentation] = None, config=None, logger=None,
                    domain: bool = False) -> Nfta:
    """
    Two-track automaton accepting c1 ⊗ c2 iff a run leads from c1 to c2.

    Args:
        spec: The system
        constraint: When given, the run must spell a word of transition
            names the constraint accepts
        presentation: Shared loop summaries of ``spec``
        domain: Restrict both tracks to reachable configurations instead of
            valid ones

    Raises:
        NonConvergence: if a loop table or path quotient does not stabilise
        BudgetExceeded: if an automaton outgrows ``automaton_state_budget``
    """
    base = _coerce(spec, presentation, config, logger)
    if constraint is None:
        pairs = pair_automaton(base)
    else:
        pairs = _unpair(spec, constraint,
                        pair_automaton(Presentation(product_cps(spec, constraint), base.config, base.logger)))
    within = domain_automaton(spec, base) if domain else validity_automaton(spec)
    result = pairs.intersect(within.cylindrify(2, [0])).intersect(within.cylindrify(2, [1])).trim()
    states, transitions = result.size()
    base.logger.debug(f"reach automaton: {states} states, {transitions} transitions")
    return result
