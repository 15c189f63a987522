"""
Finite bottom-up tree automata over partial binary trees.

Trees are ``Tree`` values from tree_codec. A node may lack either child, so
a transition is keyed by ``(label, left, right)`` where ``left``/``right``
is the state of the child or ``None`` when the child is absent. k-track
automata read convolutions: labels are k-tuples over the base alphabet and
``PAD`` (the padding symbol), never all ``PAD``. One-track automata read
plain labels.
"""

import itertools
from collections import deque
from dataclasses import dataclass
from typing import (
    Any, Callable, Dict, FrozenSet, Hashable, Iterable, List, NamedTuple, Optional, Sequence, Tuple,
)

import networkx as nx

from .constants import DEFAULT_CONFIG, ERROR_MESSAGES
from .errors import BudgetExceeded, TreeError
from .logger import NullLogger
from .tree_codec import Tree, format_label

PAD = None

State = Hashable
Key = Tuple[Any, Optional[State], Optional[State]]


def canon(x) -> tuple:
    """A total, hash-seed independent sort key for labels and states."""
    if x is None:
        return (0,)
    if isinstance(x, bool):
        return (1, int(x))
    if isinstance(x, int):
        return (2, x)
    if isinstance(x, str):
        return (3, x)
    if isinstance(x, tuple):
        return (4, len(x), tuple(canon(e) for e in x))
    if isinstance(x, (frozenset, set)):
        return (5, len(x), tuple(sorted(canon(e) for e in x)))
    return (6, repr(x))


def track_labels(alphabet: Iterable, tracks: int) -> List:
    """Every label of the k-track convolution alphabet, in canonical order."""
    base = sorted(set(alphabet), key=canon)
    if tracks == 1:
        return base
    out = [t for t in itertools.product([PAD] + base, repeat=tracks) if any(x is not PAD for x in t)]
    return sorted(out, key=canon)


def as_tracks(label, tracks: int) -> tuple:
    return (label,) if tracks == 1 else label


def from_tracks(values: Sequence, tracks: int):
    return values[0] if tracks == 1 else tuple(values)


def _format_state(q) -> str:
    if isinstance(q, (frozenset, set)):
        return "{" + ",".join(_format_state(x) for x in sorted(q, key=canon)) + "}"
    if isinstance(q, tuple):
        return "(" + ",".join(_format_state(x) for x in q) + ")"
    return "-" if q is None else str(q)


def _format_conv_label(label) -> str:
    if isinstance(label, tuple) and not (len(label) == 2 and isinstance(label[1], int)):
        return "<" + ",".join("[]" if x is PAD else format_label(x) for x in label) + ">"
    return format_label(label)


class EmptinessResult(NamedTuple):
    """Outcome of an emptiness check; ``witness`` is a minimal accepted tree."""
    empty: bool
    witness: Optional[Tree]


@dataclass(frozen=True)
class Nfta:
    """
    A nondeterministic bottom-up tree automaton.

    ``delta`` maps ``(label, left, right)`` to the set of states the node may
    take; ``finals`` are the accepting root states. Automata are immutable.
    """
    alphabet: FrozenSet
    tracks: int
    delta: Dict[Key, FrozenSet[State]]
    finals: FrozenSet[State]
    deterministic: bool = False

    # -- construction -------------------------------------------------------

    @classmethod
    def from_step(cls, alphabet: Iterable, tracks: int,
                  step: Callable[[Any, Optional[State], Optional[State]], Iterable[State]],
                  is_final: Callable[[State], bool],
                  labels: Optional[Iterable] = None,
                  budget: int = DEFAULT_CONFIG['automaton_state_budget'],
                  logger=None,
                  side_of: Optional[Callable[[State], Optional[int]]] = None,
                  labels_for: Optional[Callable[[Optional[State], Optional[State]], Iterable]] = None) -> "Nfta":
        """
        Materialise the reachable part of an automaton given by a step function.

        Args:
            alphabet: Base alphabet
            tracks: Number of tracks read
            step: Maps (label, left state or None, right state or None) to target states
            is_final: Accepting-state predicate
            labels: Restrict the labels explored (defaults to the full k-track alphabet)
            budget: Maximum number of states
            side_of: Optional child position of a state: 0 (only ever a left
                child), 1 (only a right child) or None (never a child); pairs
                breaking it are not explored
            labels_for: Optional labels worth trying above a pair of children

        Raises:
            BudgetExceeded: if more than ``budget`` states are reachable
        """
        logger = logger or NullLogger()
        alphabet = frozenset(alphabet)
        labels = sorted(labels, key=canon) if labels is not None else track_labels(alphabet, tracks)
        delta: Dict[Key, FrozenSet[State]] = {}
        seen = set()
        queue = deque()

        def record(key, targets):
            targets = frozenset(targets)
            if not targets:
                return
            delta[key] = targets
            for t in sorted(targets, key=canon):
                if t not in seen:
                    seen.add(t)
                    queue.append(t)
                    if len(seen) > budget:
                        raise BudgetExceeded(ERROR_MESSAGES['budget'].format(
                            kind='automaton_state_budget', limit=budget), 'automaton_state_budget', budget)

        for label in labels:
            record((label, None, None), step(label, None, None))

        processed: List[State] = []
        sides: Dict[int, List[State]] = {0: [], 1: []}
        while queue:
            s = queue.popleft()
            if side_of is None:
                processed.append(s)
                pairs = [p for x in [None] + processed for p in ([(s, x)] if x == s else [(s, x), (x, s)])]
            else:
                side = side_of(s)
                if side is None:
                    continue
                sides[side].append(s)
                if side == 0:
                    pairs = [(s, x) for x in [None] + sides[1]]
                else:
                    pairs = [(x, s) for x in [None] + sides[0]]
            for left, right in pairs:
                for label in (labels if labels_for is None else labels_for(left, right)):
                    record((label, left, right), step(label, left, right))

        logger.log_budget('automaton_state_budget', len(seen), budget)
        return cls(alphabet, tracks, delta, frozenset(q for q in seen if is_final(q)))

    @classmethod
    def universal(cls, alphabet: Iterable, tracks: int = 1) -> "Nfta":
        """Accepts every tree over the alphabet."""
        return cls.from_step(alphabet, tracks, lambda label, l, r: ['u'], lambda q: True)

    @classmethod
    def empty(cls, alphabet: Iterable, tracks: int = 1) -> "Nfta":
        return cls(frozenset(alphabet), tracks, {}, frozenset())

    @classmethod
    def wellformed(cls, alphabet: Iterable, tracks: int) -> "Nfta":
        """Accepts exactly the convolutions of ``tracks`` trees: every track prefix-closed and rooted."""
        def step(label, left, right):
            present = tuple(x is not PAD for x in as_tracks(label, tracks))
            for child in (left, right):
                if child is not None and any(c and not p for c, p in zip(child, present)):
                    return []
            return [present]
        return cls.from_step(alphabet, tracks, step, lambda q: all(q))

    @classmethod
    def singleton(cls, alphabet: Iterable, t: Tree) -> "Nfta":
        """Accepts exactly the one-track tree t."""
        delta: Dict[Key, FrozenSet[State]] = {}
        for d in t.addresses():
            left = ('at', d + '0') if d + '0' in t else None
            right = ('at', d + '1') if d + '1' in t else None
            delta[(t[d], left, right)] = frozenset({('at', d)})
        return cls(frozenset(alphabet), 1, delta, frozenset({('at', '')}))

    @classmethod
    def diagonal(cls, alphabet: Iterable) -> "Nfta":
        """Two-track automaton accepting t ⊗ t for every tree t."""
        def step(label, left, right):
            a, b = label
            return ['eq'] if a is not PAD and a == b else []
        return cls.from_step(alphabet, 2, step, lambda q: True)

    # -- inspection ---------------------------------------------------------

    def states(self) -> FrozenSet[State]:
        out = set(self.finals)
        for (_, left, right), targets in self.delta.items():
            out.update(targets)
            out.update(x for x in (left, right) if x is not None)
        return frozenset(out)

    def size(self) -> Tuple[int, int]:
        """(number of states, number of transitions)."""
        return len(self.states()), sum(len(t) for t in self.delta.values())

    def labels(self) -> List:
        return track_labels(self.alphabet, self.tracks)

    def _by_label(self) -> Dict[Any, Dict[Tuple, FrozenSet[State]]]:
        index: Dict[Any, Dict[Tuple, FrozenSet[State]]] = {}
        for (label, left, right), targets in self.delta.items():
            index.setdefault(label, {})[(left, right)] = targets
        return index

    def _check_label(self, label) -> None:
        values = as_tracks(label, self.tracks)
        if len(values) != self.tracks or any(v is not PAD and v not in self.alphabet for v in values) \
                or all(v is PAD for v in values):
            raise TreeError(f"label {label!r} is not in the automaton alphabet")

    def run(self, t: Tree) -> FrozenSet[State]:
        """States the automaton can take at the root of t."""
        if not len(t):
            return frozenset()
        at: Dict[str, FrozenSet[State]] = {}
        for d in sorted(t.nodes, key=lambda a: -len(a)):
            label = t[d]
            self._check_label(label)
            lefts = at.get(d + '0') if d + '0' in t else None
            rights = at.get(d + '1') if d + '1' in t else None
            out = set()
            for left in ([None] if lefts is None else lefts):
                for right in ([None] if rights is None else rights):
                    out.update(self.delta.get((label, left, right), ()))
            at[d] = frozenset(out)
        return at['']

    def accepts(self, t: Tree) -> bool:
        """
        Raises:
            TreeError: if t uses a label outside the alphabet
        """
        return bool(self.run(t) & self.finals)

    # -- boolean operations -------------------------------------------------

    def _same_alphabet(self, other: "Nfta") -> None:
        if self.alphabet != other.alphabet or self.tracks != other.tracks:
            raise ValueError("automata over different alphabets cannot be combined")

    def _by_children(self) -> Dict[Tuple, Dict[Any, FrozenSet[State]]]:
        index: Dict[Tuple, Dict[Any, FrozenSet[State]]] = {}
        for (label, left, right), targets in self.delta.items():
            index.setdefault((left, right), {})[label] = targets
        return index

    def _siblings(self) -> Tuple[Dict, Dict]:
        as_left: Dict[Optional[State], set] = {}
        as_right: Dict[Optional[State], set] = {}
        for (_, left, right) in self.delta:
            as_left.setdefault(left, set()).add(right)
            as_right.setdefault(right, set()).add(left)
        return as_left, as_right

    def intersect(self, other: "Nfta") -> "Nfta":
        """Product automaton, materialised over reachable pairs of states only."""
        self._same_alphabet(other)
        mine, theirs = self._by_children(), other._by_children()
        (a_left, a_right), (b_left, b_right) = self._siblings(), other._siblings()
        delta: Dict[Key, FrozenSet[State]] = {}
        reached = set()
        done = set()
        queue = deque()

        def pair(x, y):
            if x is None and y is None:
                return None, True
            if x is None or y is None:
                return None, False
            return (x, y), True

        def visit(left, right):
            la, lb = (None, None) if left is None else left
            ra, rb = (None, None) if right is None else right
            rows_a, rows_b = mine.get((la, ra)), theirs.get((lb, rb))
            if not rows_a or not rows_b:
                return
            for label, ta in rows_a.items():
                tb = rows_b.get(label)
                if not tb:
                    continue
                targets = frozenset(itertools.product(ta, tb))
                delta[(label, left, right)] = targets
                for q in targets:
                    if q not in reached:
                        reached.add(q)
                        queue.append(q)

        visit(None, None)
        while queue:
            s = queue.popleft()
            done.add(s)
            sa, sb = s
            for ra in a_left.get(sa, ()):
                for rb in b_left.get(sb, ()):
                    partner, ok = pair(ra, rb)
                    if ok and (partner is None or partner in done):
                        visit(s, partner)
            for la in a_right.get(sa, ()):
                for lb in b_right.get(sb, ()):
                    partner, ok = pair(la, lb)
                    if ok and (partner is None or partner in done):
                        visit(partner, s)

        finals = frozenset(q for q in reached if q[0] in self.finals and q[1] in other.finals)
        return Nfta(self.alphabet, self.tracks, delta, finals).trim()

    def union(self, other: "Nfta") -> "Nfta":
        self._same_alphabet(other)
        delta: Dict[Key, FrozenSet[State]] = {}
        for side, automaton in ((0, self), (1, other)):
            for (label, left, right), targets in automaton.delta.items():
                key = (label, None if left is None else (side, left), None if right is None else (side, right))
                delta[key] = frozenset((side, q) for q in targets)
        finals = frozenset([(0, q) for q in self.finals] + [(1, q) for q in other.finals])
        return Nfta(self.alphabet, self.tracks, delta, finals)

    def combine(self, other: "Nfta", kind: str) -> "Nfta":
        """``kind`` is ``and`` (intersection) or ``or`` (union)."""
        if kind == 'and':
            return self.intersect(other)
        if kind == 'or':
            return self.union(other)
        raise ValueError(f"unknown combination {kind!r}")

    def determinize(self, budget: int = DEFAULT_CONFIG['automaton_state_budget'], logger=None) -> "Nfta":
        """
        Subset construction; the result has exactly one run on every tree.

        Raises:
            BudgetExceeded: if more than ``budget`` subsets are reachable
        """
        index = self._by_label()
        finals = self.finals

        def step(label, left, right):
            rows = index.get(label, {})
            out = set()
            for l in ([None] if left is None else left):
                for r in ([None] if right is None else right):
                    out.update(rows.get((l, r), ()))
            return [frozenset(out)]

        subsets = Nfta.from_step(self.alphabet, self.tracks, step, lambda S: bool(S & finals),
                                 budget=budget, logger=logger)
        return subsets.renumber(deterministic=True)

    def complement(self, budget: int = DEFAULT_CONFIG['automaton_state_budget'], logger=None) -> "Nfta":
        """All trees over the alphabet that the automaton rejects."""
        d = self.determinize(budget, logger)
        return Nfta(d.alphabet, d.tracks, d.delta, d.states() - d.finals, True)

    # -- track operations ---------------------------------------------------

    def project(self, i: int) -> "Nfta":
        """
        Existentially remove track ``i`` (0-based).

        Nodes where only track ``i`` was present disappear; the result guesses
        them as subtrees hanging below absent children.
        """
        if self.tracks < 2:
            raise ValueError("cannot project a one-track automaton")
        k = self.tracks

        def strip(label):
            values = as_tracks(label, k)
            return from_tracks(values[:i] + values[i + 1:], k - 1)

        def only_removed(label):
            return all(v is PAD for j, v in enumerate(label) if j != i)

        hanging = set()
        changed = True
        while changed:
            changed = False
            for (label, left, right), targets in self.delta.items():
                if not only_removed(label):
                    continue
                if all(c is None or c in hanging for c in (left, right)) and not targets <= hanging:
                    hanging |= targets
                    changed = True

        delta: Dict[Key, set] = {}
        for (label, left, right), targets in self.delta.items():
            if only_removed(label):
                continue
            new_label = strip(label)
            lefts = ([left] if left is not None else []) + ([None] if left is None or left in hanging else [])
            rights = ([right] if right is not None else []) + ([None] if right is None or right in hanging else [])
            for l in lefts:
                for r in rights:
                    delta.setdefault((new_label, l, r), set()).update(targets)
        return Nfta(self.alphabet, k - 1, {key: frozenset(v) for key, v in delta.items()}, self.finals).trim()

    def cylindrify(self, tracks: int, positions: Sequence[int]) -> "Nfta":
        """
        Read ``tracks``-track trees, running this automaton on the tracks at ``positions``.

        Other tracks are unconstrained; nodes absent from the read tracks take
        the fresh state ``OUT`` and count as absent children.
        """
        positions = list(positions)
        if len(positions) != self.tracks or len(set(positions)) != len(positions):
            raise ValueError("one distinct position per existing track is required")
        others = [p for p in range(tracks) if p not in positions]
        fillers = list(itertools.product([PAD] + sorted(self.alphabet, key=canon), repeat=len(others)))
        out_state = ('OUT',)

        def widen(mine, filler):
            values = [PAD] * tracks
            for p, v in zip(positions, mine):
                values[p] = v
            for p, v in zip(others, filler):
                values[p] = v
            if all(v is PAD for v in values):
                return None
            return from_tracks(values, tracks)

        def sides(child):
            return [('IN', child)] if child is not None else [None, out_state]

        delta: Dict[Key, set] = {}
        for (label, l, r), targets in self.delta.items():
            mine = as_tracks(label, self.tracks)
            for filler in fillers:
                wide = widen(mine, filler)
                for left in sides(l):
                    for right in sides(r):
                        delta.setdefault((wide, left, right), set()).update(('IN', q) for q in targets)
        for filler in fillers:
            wide = widen([PAD] * self.tracks, filler)
            if wide is None:
                continue
            for left in (None, out_state):
                for right in (None, out_state):
                    delta[(wide, left, right)] = {out_state}
        return Nfta(self.alphabet, tracks, {k: frozenset(v) for k, v in delta.items()},
                    frozenset(('IN', q) for q in self.finals))

    def relabel(self, mapping: Callable[[State], State]) -> "Nfta":
        """Rename states through ``mapping`` (which must be injective to preserve the language)."""
        delta = {(label, None if l is None else mapping(l), None if r is None else mapping(r)):
                 frozenset(mapping(q) for q in targets)
                 for (label, l, r), targets in self.delta.items()}
        return Nfta(self.alphabet, self.tracks, delta, frozenset(mapping(q) for q in self.finals),
                    self.deterministic)

    def renumber(self, deterministic: bool = False) -> "Nfta":
        """Replace states by integers in canonical order."""
        numbers = {q: n for n, q in enumerate(sorted(self.states(), key=canon))}
        return Nfta(self.alphabet, self.tracks, self.relabel(numbers.__getitem__).delta,
                    frozenset(numbers[q] for q in self.finals), deterministic or self.deterministic)

    def trim(self) -> "Nfta":
        """Keep only states that are reachable and can still lead to acceptance."""
        reachable = set()
        changed = True
        while changed:
            changed = False
            for (label, l, r), targets in self.delta.items():
                if (l is None or l in reachable) and (r is None or r in reachable) and not targets <= reachable:
                    reachable |= targets
                    changed = True

        useful = set(self.finals & reachable)
        changed = True
        while changed:
            changed = False
            for (label, l, r), targets in self.delta.items():
                if not (targets & useful):
                    continue
                if (l is not None and l not in reachable) or (r is not None and r not in reachable):
                    continue
                for child in (l, r):
                    if child is not None and child not in useful:
                        useful.add(child)
                        changed = True

        delta = {}
        for (label, l, r), targets in self.delta.items():
            if (l is None or l in useful) and (r is None or r in useful):
                kept = targets & useful
                if kept:
                    delta[(label, l, r)] = frozenset(kept)
        return Nfta(self.alphabet, self.tracks, delta, frozenset(self.finals & useful), self.deterministic)

    # -- decision -----------------------------------------------------------

    def is_empty(self) -> EmptinessResult:
        """Decide emptiness; a nonempty answer carries a smallest accepted tree (ties by tree text)."""
        best: Dict[State, Tuple[int, str, Dict[str, Any]]] = {}

        def shifted(nodes, prefix):
            return {prefix + d: lab for d, lab in nodes.items()}

        changed = True
        while changed:
            changed = False
            for (label, l, r), targets in sorted(self.delta.items(), key=lambda kv: canon(kv[0])):
                if (l is not None and l not in best) or (r is not None and r not in best):
                    continue
                nodes = {'': label}
                if l is not None:
                    nodes.update(shifted(best[l][2], '0'))
                if r is not None:
                    nodes.update(shifted(best[r][2], '1'))
                candidate = (len(nodes), _nodes_text(nodes), nodes)
                for q in targets:
                    if q not in best or candidate[:2] < best[q][:2]:
                        best[q] = candidate
                        changed = True

        accepted = [best[q] for q in self.finals if q in best]
        if not accepted:
            return EmptinessResult(True, None)
        size, _, nodes = min(accepted, key=lambda c: c[:2])
        return EmptinessResult(False, Tree(nodes))

    # -- presentation -------------------------------------------------------

    def dump(self) -> str:
        """Canonical text: tracks, finals, then one transition per line."""
        lines = [f"tracks {self.tracks}",
                 "finals " + " ".join(_format_state(q) for q in sorted(self.finals, key=canon))]
        rows = []
        for (label, l, r), targets in self.delta.items():
            for q in targets:
                rows.append((canon((label, l, r, q)),
                             f"{_format_conv_label(label)} {_format_state(l)} {_format_state(r)} -> {_format_state(q)}"))
        lines.extend(text for _, text in sorted(rows))
        return "\n".join(lines) + "\n"

    def to_networkx(self) -> nx.MultiDiGraph:
        """Graph view: an edge child -> target per transition, tagged with label and side."""
        g = nx.MultiDiGraph()
        for q in self.states():
            g.add_node(q, final=q in self.finals)
        for (label, l, r), targets in self.delta.items():
            for q in targets:
                for side, child in (('0', l), ('1', r)):
                    if child is not None:
                        g.add_edge(child, q, label=label, side=side)
        return g


def _nodes_text(nodes: Dict[str, Any]) -> str:
    return "\n".join(f"{d} {_format_conv_label(nodes[d])}" for d in sorted(nodes))


def convolve(*trees: Tree) -> Tree:
    """
    Overlay trees on the union of their domains, padding absent positions with ``PAD``.

    A single tree is returned unchanged.
    """
    if len(trees) == 1:
        return trees[0]
    domain = set()
    for t in trees:
        domain.update(t.nodes)
    return Tree({d: tuple(t.get(d, PAD) for t in trees) for d in domain}, check=False)


def strip_track(t: Tree, i: int) -> Tree:
    """Remove track i from a convolution, dropping nodes that become all padding."""
    nodes = {}
    for d, label in t.nodes.items():
        rest = label[:i] + label[i + 1:]
        if any(x is not PAD for x in rest):
            nodes[d] = rest[0] if len(rest) == 1 else rest
    return Tree(nodes, check=False)
