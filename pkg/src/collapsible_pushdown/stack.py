"""
Level-2 collapsible stacks.

Stacks are immutable values: a nonempty tuple of nonempty words, each word
a tuple of annotated letters ``(sym, level, link)``. Operations return new
stacks, or ``None`` when the operation is undefined.
"""

import re
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

from .constants import BOTTOM, ERROR_MESSAGES, OpKind
from .errors import ParseError, StackInvariantError


@dataclass(frozen=True, order=True)
class StackLetter:
    """One annotated stack letter: symbol, collapse level and collapse link."""
    sym: str
    level: int
    link: int

    @property
    def glyph(self) -> Tuple[str, int]:
        """The letter without its link, as used by tree labels and top-word abstractions."""
        return (self.sym, self.level)

    def __str__(self) -> str:
        return f"{self.sym}^{self.level}@{self.link}"


Word = Tuple[StackLetter, ...]
Glyph = Tuple[str, int]


@dataclass(frozen=True)
class Stack2:
    """A level-2 stack ``w_1 : ... : w_n``; the last word is the top."""
    words: Tuple[Word, ...]

    @property
    def height(self) -> int:
        """Number of words."""
        return len(self.words)

    @property
    def top_word(self) -> Word:
        """The topmost word."""
        return self.words[-1]

    @property
    def top(self) -> StackLetter:
        """The top letter of the top word."""
        return self.words[-1][-1]

    def size(self) -> int:
        """Total number of letters."""
        return sum(len(w) for w in self.words)

    def __str__(self) -> str:
        return format_stack(self)


@dataclass(frozen=True)
class StackOp:
    """One of Pop1, Pop2, Clone2, Push(sym, level) or Collapse."""
    kind: OpKind
    sym: Optional[str] = None
    level: Optional[int] = None

    @classmethod
    def pop1(cls) -> "StackOp":
        """Remove the top letter."""
        return cls(OpKind.POP1)

    @classmethod
    def pop2(cls) -> "StackOp":
        """Remove the top word."""
        return cls(OpKind.POP2)

    @classmethod
    def clone2(cls) -> "StackOp":
        """Duplicate the top word, links included."""
        return cls(OpKind.CLONE2)

    @classmethod
    def collapse(cls) -> "StackOp":
        """Cut the stack back to the top letter's link."""
        return cls(OpKind.COLLAPSE)

    @classmethod
    def push(cls, sym: str, level: int) -> "StackOp":
        """Push sym; a level-2 letter links to the words below the top one."""
        if level not in (1, 2):
            raise ValueError(ERROR_MESSAGES['bad_level'].format(level=level))
        return cls(OpKind.PUSH, sym, level)

    def sort_key(self) -> Tuple[str, str, int]:
        """Deterministic ordering key."""
        return (self.kind.value, self.sym or "", self.level or 0)

    def __str__(self) -> str:
        if self.kind is OpKind.PUSH:
            return f"push({self.sym},{self.level})"
        return self.kind.value


@dataclass(frozen=True)
class Configuration:
    """A control state paired with a stack."""
    state: str
    stack: Stack2

    def sort_key(self):
        return (self.stack.size(), self.stack.height, format_stack(self.stack), self.state)

    def __str__(self) -> str:
        return format_config(self)


class TopInfo(NamedTuple):
    """What ``inspect`` reports about the top of a stack."""
    top_word: Word
    sym: str
    level: int
    link: int


def initial_stack(bottom: str = BOTTOM) -> Stack2:
    """The stack ⊥₂ = [⊥₁]."""
    return Stack2(((StackLetter(bottom, 1, 0),),))


def stack_problems(s: Stack2, bottom: str = BOTTOM) -> List[str]:
    """List every broken stack law; an empty list means the stack is valid."""
    problems = []
    if not s.words:
        return ["stack has no words"]
    for j, word in enumerate(s.words):
        if not word:
            problems.append(f"word {j + 1} is empty")
            continue
        if word[0] != StackLetter(bottom, 1, 0):
            problems.append(f"word {j + 1} does not start with {bottom}^1@0")
        for i, letter in enumerate(word):
            if i > 0 and letter.sym == bottom:
                problems.append(f"word {j + 1} repeats {bottom} at position {i + 1}")
            if letter.level not in (1, 2):
                problems.append(f"word {j + 1} position {i + 1} has level {letter.level}")
            elif letter.level == 1 and letter.link != i:
                problems.append(f"word {j + 1} position {i + 1} level-1 link {letter.link} != {i}")
            elif letter.level == 2 and not 0 <= letter.link <= j:
                problems.append(f"word {j + 1} position {i + 1} level-2 link {letter.link} > {j}")
    return problems


def validate_stack(s: Stack2, bottom: str = BOTTOM) -> Stack2:
    """Return s unchanged, or raise StackInvariantError naming the first broken law."""
    problems = stack_problems(s, bottom)
    if problems:
        raise StackInvariantError(ERROR_MESSAGES['stack_invariant'].format(detail=problems[0]))
    return s


def apply_op(s: Stack2, op: StackOp, check: bool = False) -> Optional[Stack2]:
    """
    Apply one stack operation.

    Returns the new stack, or None when the operation is undefined on s.
    With ``check`` the result is revalidated and a broken law raises
    StackInvariantError.
    """
    words = s.words
    top = words[-1]
    kind = op.kind

    if kind is OpKind.POP1:
        if len(top) == 1:
            return None
        result = Stack2(words[:-1] + (top[:-1],))
    elif kind is OpKind.POP2:
        if len(words) == 1:
            return None
        result = Stack2(words[:-1])
    elif kind is OpKind.CLONE2:
        result = Stack2(words + (top,))
    elif kind is OpKind.PUSH:
        link = len(top) if op.level == 1 else len(words) - 1
        result = Stack2(words[:-1] + (top + (StackLetter(op.sym, op.level, link),),))
    elif kind is OpKind.COLLAPSE:
        letter = top[-1]
        if letter.level == 1:
            return apply_op(s, StackOp.pop1(), check)
        if letter.link == 0:
            return None
        result = Stack2(words[:letter.link])
    else:
        raise ValueError(ERROR_MESSAGES['unknown_op'].format(op=kind))

    if check:
        validate_stack(result, words[0][0].sym)
    return result


def inspect(s: Stack2) -> TopInfo:
    """TOP₂(s) together with Sym, Lvl and Lnk of the topmost letter."""
    letter = s.top
    return TopInfo(s.top_word, letter.sym, letter.level, letter.link)


def pi(word: Sequence[StackLetter]) -> Tuple[Glyph, ...]:
    """Project a word onto symbols and collapse levels."""
    return tuple(letter.glyph for letter in word)


def meet(u: Sequence[StackLetter], v: Sequence[StackLetter]) -> Word:
    """Longest common prefix of two words, comparing whole letters."""
    n = 0
    for a, b in zip(u, v):
        if a != b:
            break
        n += 1
    return tuple(u[:n])


def is_substack(s1: Stack2, s2: Stack2) -> bool:
    """True iff s1 = Pop1^a(Pop2^b(s2)) for some a, b >= 0."""
    n = s1.height
    if n > s2.height:
        return False
    if s1.words[:-1] != s2.words[:n - 1]:
        return False
    top = s1.top_word
    return s2.words[n - 1][:len(top)] == top


def milestones(s: Stack2) -> List[Stack2]:
    """All milestones of s in increasing substack order."""
    result = []
    words = s.words
    for i in range(len(words)):
        nxt = words[i]
        lower = 1 if i == 0 else len(meet(words[i - 1], nxt))
        for length in range(lower, len(nxt) + 1):
            result.append(Stack2(words[:i] + (nxt[:length],)))
    return result


def substacks(s: Stack2) -> List[Stack2]:
    """Every substack of s, from ⊥-most to s itself."""
    result = []
    for i, word in enumerate(s.words):
        for length in range(1, len(word) + 1):
            result.append(Stack2(s.words[:i] + (word[:length],)))
    return result


def is_constructible(s: Stack2) -> bool:
    """
    Check the clone-prefix law of stacks built from ⊥₂.

    Word j+1 must be a prefix of word j followed by letters pushed while
    j+1 words were present (level-2 links equal to j).
    """
    words = s.words
    for j in range(1, len(words)):
        shared = len(meet(words[j - 1], words[j]))
        for letter in words[j][shared:]:
            if letter.level == 2 and letter.link != j:
                return False
    return True


def build_ops(s: Stack2) -> List[StackOp]:
    """An operation sequence taking ⊥₂ to s; s must be constructible."""
    if not is_constructible(s):
        raise StackInvariantError(ERROR_MESSAGES['not_constructible'].format(stack=format_stack(s)))
    ops = [StackOp.push(letter.sym, letter.level) for letter in s.words[0][1:]]
    for j in range(1, s.height):
        prev, word = s.words[j - 1], s.words[j]
        shared = len(meet(prev, word))
        ops.append(StackOp.clone2())
        ops.extend(StackOp.pop1() for _ in range(len(prev) - shared))
        ops.extend(StackOp.push(letter.sym, letter.level) for letter in word[shared:])
    return ops


# ---------------------------------------------------------------------------
# text formats

LETTER_RE = re.compile(r"^(?P<sym>[^\s^@:|]+)(?:\^(?P<level>\d+))?(?:@(?P<link>\d+))?$")


def format_stack(s: Stack2) -> str:
    """Canonical text: letters as sym^level@link, words joined by ' : '."""
    return " : ".join(" ".join(str(letter) for letter in word) for word in s.words)


def format_config(c: Configuration) -> str:
    return f"{c.state}|{format_stack(c.stack)}"


def parse_stack(text: str, bottom: str = BOTTOM) -> Stack2:
    """
    Parse stack text.

    Letters may be written in full (``a^2@1``) or short: ``a`` is a level-1
    letter with its positional link, ``a^2`` a level-2 letter pushed in its
    own word (link = word index - 1).

    Raises:
        ParseError: on malformed tokens or a stack that breaks a stack law
    """
    if not text or not text.strip():
        raise ParseError(ERROR_MESSAGES['parse_stack'].format(text=text, detail="empty"), text)
    words = []
    for j, chunk in enumerate(text.split(':')):
        tokens = chunk.split()
        if not tokens:
            raise ParseError(ERROR_MESSAGES['parse_stack'].format(
                text=text, detail=f"word {j + 1} is empty"), text)
        word = []
        for i, token in enumerate(tokens):
            match = LETTER_RE.match(token)
            if not match:
                raise ParseError(ERROR_MESSAGES['parse_stack'].format(
                    text=text, detail=f"bad letter {token!r}"), text)
            level = int(match.group('level') or 1)
            if match.group('link') is not None:
                link = int(match.group('link'))
            else:
                link = i if level == 1 else j
            word.append(StackLetter(match.group('sym'), level, link))
        words.append(tuple(word))
    s = Stack2(tuple(words))
    problems = stack_problems(s, bottom)
    if problems:
        raise ParseError(ERROR_MESSAGES['parse_stack'].format(text=text, detail=problems[0]), text)
    return s


def parse_config(text: str, bottom: str = BOTTOM) -> Configuration:
    """Parse ``state|stack`` text."""
    if '|' not in text:
        raise ParseError(ERROR_MESSAGES['parse_stack'].format(
            text=text, detail="expected 'state|stack'"), text)
    state, _, rest = text.partition('|')
    state = state.strip()
    if not state:
        raise ParseError(ERROR_MESSAGES['parse_stack'].format(text=text, detail="missing state"), text)
    return Configuration(state, parse_stack(rest, bottom))
