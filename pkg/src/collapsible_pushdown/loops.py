"""
Loop summaries.

Loops(s) is the set of state pairs (q, q') joined by a loop of s: a
composition of high loops (runs that stay strictly above s) and low loops
(pop one level-1 letter, loop below, push it back). It only depends on the
projected top word of s, so it is computed on the one-word stack holding that
word, with every level-2 link set to 0 (collapsing such a letter would leave
the loop).

High loops are solved as a least fixpoint over keys (u, c): top word u at
word count c. For each key:

* ``stay``: runs from (u, c) back to (u, c) that never leave the stacks
  above it;
* ``out``: runs from (u, c) that keep at least c words and then drop to
  r < c words, grouped by r.

Both are bounded by a word length and a word count; the bounds grow until two
consecutive answers agree.

The same fixpoint yields the other per-word relations a descent needs:

* ``up``: from a top word at word count 2, the first arrival at one word;
* ``copy_up``: from a top word, the states met while the top word is a copy
  of it above the base. It is read off a table where the top letter is
  replaced by a marker whose Collapse is a no-op that ends the run.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple, Union

from .constants import DEFAULT_CONFIG, ERROR_MESSAGES, OpKind
from .cps import CpsSpec, ExplorationBounds, StatePair, loops_oracle
from .errors import NonConvergence, ParseError, SpecError
from .logger import NullLogger
from .stack import LETTER_RE, Glyph, Stack2, StackLetter, StackOp

Relation = FrozenSet[StatePair]
Word = Tuple[StackLetter, ...]
EMPTY: Relation = frozenset()


def compose(a: Iterable[StatePair], b: Iterable[StatePair]) -> Relation:
    """Relational composition a ; b."""
    by_source: Dict[str, Set[str]] = {}
    for p, q in b:
        by_source.setdefault(p, set()).add(q)
    return frozenset((p, r) for p, q in a for r in by_source.get(q, ()))


def closure(pairs: Iterable[StatePair], states: Iterable[str]) -> Relation:
    """Reflexive-transitive closure over ``states``."""
    succ: Dict[str, Set[str]] = {q: {q} for q in states}
    for p, q in pairs:
        succ.setdefault(p, {p}).add(q)
    changed = True
    while changed:
        changed = False
        for p in list(succ):
            reach = set(succ[p])
            for q in list(succ[p]):
                reach |= succ.get(q, set())
            if reach != succ[p]:
                succ[p] = reach
                changed = True
    return frozenset((p, q) for p, qs in succ.items() for q in qs)


def image(sources: Iterable[str], rel: Iterable[StatePair]) -> FrozenSet[str]:
    sources = set(sources)
    return frozenset(q for p, q in rel if p in sources)


def format_relation(rel: Iterable[StatePair]) -> str:
    return "{" + ", ".join(f"({p},{q})" for p, q in sorted(rel)) + "}"


def format_glyphs(word: Sequence[Glyph]) -> str:
    return " ".join(f"{sym}^{level}" for sym, level in word)


def parse_glyphs(text: str) -> Tuple[Glyph, ...]:
    """
    Parse a projected word such as ``⊥ a^2 b``; a bare symbol is a level-1 letter.

    Raises:
        ParseError: on a malformed letter or a link annotation
    """
    glyphs = []
    for token in text.split():
        match = LETTER_RE.match(token)
        if not match or match.group("link") is not None:
            raise ParseError(ERROR_MESSAGES["parse_stack"].format(text=text, detail=f"bad letter {token!r}"), text)
        glyphs.append((match.group("sym"), int(match.group("level") or 1)))
    return tuple(glyphs)


def model_word(glyphs: Sequence[Glyph]) -> Word:
    """The one-word representative of a projected top word: positional level-1 links, level-2 links 0."""
    return tuple(StackLetter(sym, level, i if level == 1 else 0) for i, (sym, level) in enumerate(glyphs))


class TransitionTable:
    """State relations of the system indexed by top symbol and operation."""

    def __init__(self, spec: CpsSpec):
        self.states = spec.states
        self._rel: Dict[Tuple[str, StackOp], Set[StatePair]] = {}
        self._pushes: Dict[str, Set[Tuple[str, int]]] = {}
        for rule in spec.rules:
            self._rel.setdefault((rule.top, rule.op), set()).add((rule.source, rule.target))
            if rule.op.kind is OpKind.PUSH:
                self._pushes.setdefault(rule.top, set()).add((rule.op.sym, rule.op.level))
        self._frozen = {k: frozenset(v) for k, v in self._rel.items()}

    def rel(self, sym: str, op: StackOp) -> Relation:
        return self._frozen.get((sym, op), EMPTY)

    def pushes(self, sym: str) -> List[Tuple[str, int]]:
        return sorted(self._pushes.get(sym, ()))

    def pop_step(self, top: StackLetter) -> Relation:
        """Steps that remove the top letter within its word: Pop1, and Collapse on level-1 letters."""
        rel = self.rel(top.sym, StackOp.pop1())
        if top.level == 1:
            rel = rel | self.rel(top.sym, StackOp.collapse())
        return rel


MARK = "<copy>"


class _MarkedTable:
    """A transition table where ``MARK`` stands for ``glyph`` except under Collapse, which is a no-op."""

    def __init__(self, base: TransitionTable, glyph: Glyph):
        self.base = base
        self.glyph = glyph
        self.states = base.states
        self._identity = frozenset((q, q) for q in base.states)

    def rel(self, sym: str, op: StackOp) -> Relation:
        if sym != MARK:
            return self.base.rel(sym, op)
        if op.kind is OpKind.COLLAPSE:
            return self._identity
        return self.base.rel(self.glyph[0], op)

    def pushes(self, sym: str) -> List[Tuple[str, int]]:
        return self.base.pushes(self.glyph[0] if sym == MARK else sym)

    def pop_step(self, top: StackLetter) -> Relation:
        if top.sym == MARK:
            return self.base.pop_step(StackLetter(self.glyph[0], self.glyph[1], 0))
        return self.base.pop_step(top)


class _SummaryEngine:
    """The bounded fixpoint for one (max word length, max word count) pair."""

    def __init__(self, table: TransitionTable, max_len: int, max_count: int):
        self.table = table
        self.max_len = max_len
        self.max_count = max_count
        self.keys: List[Tuple[Word, int]] = []
        self.stay: Dict[Tuple[Word, int], Relation] = {}
        self.out: Dict[Tuple[Word, int], Dict[int, Relation]] = {}
        self.loops_memo: Dict[Word, Relation] = {}
        self.rounds = 0
        self._grew = False

    def _in_bounds(self, key) -> bool:
        word, count = key
        return 1 <= len(word) <= self.max_len and 1 <= count <= self.max_count

    def _register(self, key) -> bool:
        if key in self.stay:
            return True
        if not self._in_bounds(key):
            return False
        self.keys.append(key)
        self.stay[key] = EMPTY
        self.out[key] = {}
        self._grew = True
        return True

    def _stay(self, key) -> Relation:
        return self.stay[key] if self._register(key) else EMPTY

    def _out(self, key) -> Dict[int, Relation]:
        return self.out[key] if self._register(key) else {}

    def _pushed(self, word: Word, count: int, sym: str, level: int) -> Word:
        return word + (StackLetter(sym, level, len(word) if level == 1 else count - 1),)

    def _eval_stay(self, key) -> Relation:
        word, count = key
        t = self.table
        top = word[-1]
        pairs: Set[StatePair] = set()
        for sym, level in t.pushes(top.sym):
            child = self._pushed(word, count, sym, level)
            back = t.pop_step(child[-1])
            pushed = t.rel(top.sym, StackOp.push(sym, level))
            if pushed and back:
                pairs |= compose(compose(pushed, self._stay((child, count))), back)
        cloned = t.rel(top.sym, StackOp.clone2())
        if cloned:
            pairs |= compose(cloned, self._out((word, count + 1)).get(count, EMPTY))
        return closure(pairs, t.states)

    def _first_exit(self, key, direct: bool = True) -> Dict[int, Set[StatePair]]:
        """
        Ways to leave (u, c) for good: the first step away never returns to (u, c).

        With ``direct`` False, Pop2 and Collapse of the top letter itself are left out.
        """
        word, count = key
        t = self.table
        top = word[-1]
        exits: Dict[int, Set[StatePair]] = {}
        if count >= 2 and direct:
            exits.setdefault(count - 1, set()).update(t.rel(top.sym, StackOp.pop2()))
        if direct and top.level == 2 and 1 <= top.link < count:
            exits.setdefault(top.link, set()).update(t.rel(top.sym, StackOp.collapse()))
        for sym, level in t.pushes(top.sym):
            pushed = t.rel(top.sym, StackOp.push(sym, level))
            child = (self._pushed(word, count, sym, level), count)
            for r, rel in self._exit_up(child).items():
                exits.setdefault(r, set()).update(compose(pushed, rel))
        cloned = t.rel(top.sym, StackOp.clone2())
        if cloned:
            for r, rel in self._out((word, count + 1)).items():
                if r < count:
                    exits.setdefault(r, set()).update(compose(cloned, rel))
        return exits

    def _exit_up(self, key) -> Dict[int, Relation]:
        if not self._register(key):
            return {}
        stay = self.stay[key]
        return {r: compose(stay, rel) for r, rel in self._first_exit(key).items() if rel}

    def _eval_out(self, key) -> Dict[int, Relation]:
        word, count = key
        result: Dict[int, Set[StatePair]] = {r: set(rel) for r, rel in self._exit_up(key).items()}
        if len(word) >= 2:
            down = compose(self.stay[key], self.table.pop_step(word[-1]))
            if down:
                for r, rel in self._out((word[:-1], count)).items():
                    result.setdefault(r, set()).update(compose(down, rel))
        return {r: frozenset(rel) for r, rel in result.items() if rel}

    def solve(self) -> None:
        """Iterate every registered key to the least fixpoint."""
        changed = True
        while changed:
            self._grew = False
            changed = False
            self.rounds += 1
            for key in list(self.keys):
                stay = self._eval_stay(key)
                if stay != self.stay[key]:
                    self.stay[key] = stay
                    changed = True
                out = self._eval_out(key)
                if out != self.out[key]:
                    self.out[key] = out
                    changed = True
            changed = changed or self._grew

    def exits(self, key) -> Dict[int, Relation]:
        """``out`` of one key after solving."""
        self._register(key)
        self.solve()
        return self.out.get(key, {})

    def escapes(self, key, to: int) -> Relation:
        """Runs from ``key`` that return to it any number of times, then leave above it and drop to ``to`` words."""
        self._register(key)
        self.solve()
        if key not in self.stay:
            return EMPTY
        return compose(self.stay[key], self._first_exit(key, direct=False).get(to, EMPTY))

    def loops(self, word: Word) -> Relation:
        if word in self.loops_memo:
            return self.loops_memo[word]
        key = (word, 1)
        self._register(key)
        self.solve()
        pairs = set(self.stay.get(key, EMPTY))
        top = word[-1]
        if top.level == 1 and len(word) >= 2:
            below = self.loops(word[:-1])
            restore = self.table.rel(word[-2].sym, StackOp.push(top.sym, 1))
            pairs |= compose(compose(self.table.pop_step(top), below), restore)
        result = closure(pairs, self.table.states)
        self.loops_memo[word] = result
        return result


class PathProfile(NamedTuple):
    """Every per-word relation a descent through a stack tree reads."""
    loops: Relation
    up: Relation
    copy_up: Relation
    copy_closure: Relation


class LoopSummaries:
    """
    Memoised Loops tables of one system.

    Tables are frozen once computed; engines are cached per bound so
    queries of similar length share work.
    """

    def __init__(self, spec: CpsSpec, config: Optional[dict] = None, logger=None):
        config = config or DEFAULT_CONFIG
        self.spec = spec
        self.logger = logger or NullLogger()
        self.extra_start = config.get('loops_extra_start', DEFAULT_CONFIG['loops_extra_start'])
        self.extra_max = config.get('loops_extra_max', DEFAULT_CONFIG['loops_extra_max'])
        self.table = TransitionTable(spec)
        self._engines: Dict[Tuple, _SummaryEngine] = {}
        self._memo: Dict[Tuple[Glyph, ...], Relation] = {}
        self._relations: Dict[Tuple[str, Tuple[Glyph, ...]], Relation] = {}

    def engine(self, max_len: int, max_count: int, marked: Optional[Glyph] = None) -> _SummaryEngine:
        key = (max_len, max_count, marked)
        if key not in self._engines:
            table = self.table if marked is None else _MarkedTable(self.table, marked)
            self._engines[key] = _SummaryEngine(table, max_len, max_count)
        return self._engines[key]

    def _checked(self, glyphs: Sequence[Glyph]) -> Tuple[Glyph, ...]:
        glyphs = tuple(tuple(g) for g in glyphs)
        if not glyphs or glyphs[0] != (self.spec.bottom, 1) or \
                any(g[0] == self.spec.bottom for g in glyphs[1:]):
            raise SpecError(f"top word must start with ({self.spec.bottom},1): {format_glyphs(glyphs)}")
        return glyphs

    def _converge(self, what: str, glyphs: Tuple[Glyph, ...],
                  evaluate: Callable[[int], Tuple[Relation, _SummaryEngine]]) -> Relation:
        """Grow the bounds until two consecutive answers agree."""
        previous = None
        for extra in range(self.extra_start, self.extra_max + 1):
            current, engine = evaluate(extra)
            if current == previous:
                self.logger.log_fixpoint(what, extra - self.extra_start + 1, True,
                                         word=format_glyphs(glyphs), keys=len(engine.keys))
                return current
            previous = current

        self.logger.log_fixpoint(what, self.extra_max - self.extra_start + 1, False,
                                 word=format_glyphs(glyphs))
        raise NonConvergence(ERROR_MESSAGES['non_convergence'].format(
            what=f"{what} of {format_glyphs(glyphs)}", limit=self.extra_max), 'loops_extra_max', self.extra_max)

    def loops(self, glyphs: Sequence[Glyph]) -> Relation:
        """
        Loops for the projected top word ``glyphs``.

        Raises:
            SpecError: if the word does not start with the bottom letter
            NonConvergence: if no two consecutive bounds agree
        """
        glyphs = tuple(tuple(g) for g in glyphs)
        if glyphs in self._memo:
            return self._memo[glyphs]
        glyphs = self._checked(glyphs)
        word = model_word(glyphs)

        def evaluate(extra):
            engine = self.engine(len(word) + extra, 1 + extra)
            return engine.loops(word), engine

        self._memo[glyphs] = self._converge('loops', glyphs, evaluate)
        return self._memo[glyphs]

    def up(self, glyphs: Sequence[Glyph]) -> Relation:
        """
        (q, q') such that from top word ``glyphs`` at word count 2 a run staying
        on two words or more first reaches one word in state q'.
        """
        glyphs = self._checked(glyphs)
        if ('up', glyphs) not in self._relations:
            word = model_word(glyphs)

            def evaluate(extra):
                engine = self.engine(len(word) + extra, 2 + extra)
                return engine.exits((word, 2)).get(1, EMPTY), engine

            self._relations[('up', glyphs)] = self._converge('up', glyphs, evaluate)
        return self._relations[('up', glyphs)]

    def copy_up(self, glyphs: Sequence[Glyph]) -> Relation:
        """
        (q, q') such that from top word ``glyphs`` some run staying above the
        base stack meets state q' while the top word is a copy of ``glyphs``
        sitting on more words than the base, its top letter never popped.
        """
        glyphs = self._checked(glyphs)
        if ('copy_up', glyphs) not in self._relations:
            word = model_word(glyphs[:-1]) + (StackLetter(MARK, 2, 1),)

            def evaluate(extra):
                engine = self.engine(len(word) + extra, 3 + extra, marked=glyphs[-1])
                return engine.escapes((word, 3), 1), engine

            escapes = self._converge('copy_up', glyphs, evaluate)
            self._relations[('copy_up', glyphs)] = compose(self.loops(glyphs), escapes)
        return self._relations[('copy_up', glyphs)]

    def copy_closure(self, glyphs: Sequence[Glyph]) -> Relation:
        """Loops and moves to higher copies of the top word, in any number."""
        glyphs = self._checked(glyphs)
        return closure(self.loops(glyphs) | self.copy_up(glyphs), self.table.states)

    def profile(self, glyphs: Sequence[Glyph]) -> PathProfile:
        glyphs = self._checked(glyphs)
        return PathProfile(self.loops(glyphs), self.up(glyphs), self.copy_up(glyphs), self.copy_closure(glyphs))

    def dump_table(self) -> str:
        """Every memoised table, one word per line, in canonical order."""
        lines = [f"{format_glyphs(w)} -> {format_relation(rel)}" for w, rel in sorted(self._memo.items())]
        return "\n".join(lines) + ("\n" if lines else "")


def loops_of(spec: CpsSpec, glyphs: Sequence[Glyph], config: Optional[dict] = None,
             logger=None, summaries: Optional[LoopSummaries] = None) -> Relation:
    """Loops(s) for every stack s whose projected top word is ``glyphs``."""
    summaries = summaries or LoopSummaries(spec, config, logger)
    return summaries.loops(glyphs)


def loops_check(spec: CpsSpec, glyphs: Sequence[Glyph], bounds: ExplorationBounds,
                summaries: Optional[LoopSummaries] = None) -> Tuple[Relation, Relation]:
    """The summary answer next to the search answer on the one-word representative stack."""
    summaries = summaries or LoopSummaries(spec)
    stack = Stack2((model_word(glyphs),))
    return summaries.loops(glyphs), loops_oracle(spec, stack, bounds)


# ---------------------------------------------------------------------------
# word automaton

@dataclass
class LoopsWordAutomaton:
    """
    Deterministic automaton computing Loops from a projected top word.

    A state is (class, last letter); classes are the observed equivalence
    classes of words, identified by their tables on all short extensions.
    Values are Loops relations, or PathProfiles for a profile quotient.
    """
    bottom: Glyph
    letters: Tuple[Glyph, ...]
    representatives: List[Tuple[Glyph, ...]]
    values: List[Union[Relation, PathProfile]]
    moves: Dict[Tuple[int, Glyph], int]
    max_length: int
    suffix_length: int
    stabilized_at: int = 0
    metadata: Dict[str, int] = field(default_factory=dict)

    @property
    def initial(self) -> Tuple[int, Glyph]:
        return (0, self.bottom)

    def step(self, state: Tuple[int, Glyph], glyph: Glyph) -> Tuple[int, Glyph]:
        cls, _ = state
        try:
            return (self.moves[(cls, glyph)], glyph)
        except KeyError:
            raise SpecError(f"letter {glyph} is outside the automaton alphabet")

    def run(self, glyphs: Sequence[Glyph]) -> Tuple[int, Glyph]:
        if not glyphs or tuple(glyphs[0]) != self.bottom:
            raise SpecError(f"word must start with {self.bottom}")
        state = self.initial
        for glyph in glyphs[1:]:
            state = self.step(state, tuple(glyph))
        return state

    def value(self, state: Tuple[int, Glyph]) -> Union[Relation, PathProfile]:
        return self.values[state[0]]

    def loops(self, glyphs: Sequence[Glyph]) -> Relation:
        value = self.value(self.run(glyphs))
        return value.loops if isinstance(value, PathProfile) else value

    def states(self) -> List[Tuple[int, Glyph]]:
        return [self.initial] + [(c, g) for c in range(len(self.values)) for g in self.letters]


def _suffixes(letters: Sequence[Glyph], length: int) -> List[Tuple[Glyph, ...]]:
    out = [()]
    layer = [()]
    for _ in range(length):
        layer = [w + (x,) for w in layer for x in letters]
        out.extend(layer)
    return out


def _quotient(spec: CpsSpec, summaries: LoopSummaries, letters: Optional[Iterable[Glyph]],
              config: dict, logger, value: Callable[[Tuple[Glyph, ...]], object],
              what: str) -> LoopsWordAutomaton:
    max_length = config.get('loops_quotient_length', DEFAULT_CONFIG['loops_quotient_length'])
    suffix_length = config.get('loops_quotient_suffix', DEFAULT_CONFIG['loops_quotient_suffix'])
    bottom = (spec.bottom, 1)
    letters = tuple(sorted(set(spec.push_glyphs()) | set(tuple(g) for g in (letters or ()))))
    letters = tuple(g for g in letters if g[0] != spec.bottom)
    suffixes = _suffixes(letters, suffix_length)

    def signature(word):
        return tuple(value(word + z) for z in suffixes)

    def give_up(length):
        logger.log_fixpoint(what, length, False, classes=len(reps))
        return NonConvergence(ERROR_MESSAGES['non_convergence'].format(
            what=what.capitalize(), limit=max_length), 'loops_quotient_length', max_length)

    root = (bottom,)
    classes = {signature(root): 0}
    reps = [root]
    moves: Dict[Tuple[int, Glyph], int] = {}
    frontier = [0]
    length = 0
    while frontier:
        length += 1
        if length > max_length:
            raise give_up(length - 1)
        fresh = []
        for cls in frontier:
            for x in letters:
                sig = signature(reps[cls] + (x,))
                if sig not in classes:
                    classes[sig] = len(reps)
                    reps.append(reps[cls] + (x,))
                    fresh.append(classes[sig])
                moves[(cls, x)] = classes[sig]
        frontier = fresh

    # one more level: extensions of every representative must land in the predicted class
    for cls, rep in enumerate(reps):
        for x in letters:
            for y in letters:
                predicted = moves[(moves[(cls, x)], y)]
                if signature(rep + (x, y)) != signature(reps[predicted]):
                    raise give_up(length)

    logger.log_fixpoint(what, length, True, classes=len(reps))
    values = [value(rep) for rep in reps]
    return LoopsWordAutomaton(bottom, letters, reps, values, moves, max_length, suffix_length, length,
                              {'classes': len(reps), 'suffixes': len(suffixes)})


def loops_word_automaton(spec: CpsSpec, summaries: Optional[LoopSummaries] = None,
                         letters: Optional[Iterable[Glyph]] = None,
                         config: Optional[dict] = None, logger=None) -> LoopsWordAutomaton:
    """
    Build the quotient automaton by breadth-first exploration of class representatives.

    Raises:
        NonConvergence: if new classes still appear at the length bound, or a
            verification round finds two words of one class that differ
    """
    config = config or DEFAULT_CONFIG
    logger = logger or NullLogger()
    summaries = summaries or LoopSummaries(spec, config, logger)
    return _quotient(spec, summaries, letters, config, logger, summaries.loops, 'loops quotient')


def profile_word_automaton(spec: CpsSpec, summaries: Optional[LoopSummaries] = None,
                           letters: Optional[Iterable[Glyph]] = None,
                           config: Optional[dict] = None, logger=None) -> LoopsWordAutomaton:
    """
    Like loops_word_automaton, with words told apart by their whole PathProfile.

    Raises:
        NonConvergence: as loops_word_automaton
    """
    config = config or DEFAULT_CONFIG
    logger = logger or NullLogger()
    summaries = summaries or LoopSummaries(spec, config, logger)
    return _quotient(spec, summaries, letters, config, logger, summaries.profile, 'profile quotient')
