"""
Tree encoding of level-2 stacks and configurations.

A stack is encoded by splitting its words into blocks (maximal runs of
words sharing their first two letters): the first block goes to the
0-subtree under the label of its second letter, the remaining words go
to the 1-subtree under an epsilon node. Configurations add a root
labelled by the control state above the stack tree.

Addresses are strings over ``0``/``1``; the empty string is the root.
Lexicographic order on addresses coincides with Python string order.
"""

from types import MappingProxyType
from typing import Dict, Iterable, Iterator, List, Mapping, NamedTuple, Optional, Tuple, Union

from .constants import BOTTOM, EPSILON, ERROR_MESSAGES, ROOT_ADDRESS_TEXT, VALIDATION_PATTERNS
from .errors import ParseError, TreeError
from .stack import (
    Configuration, Glyph, Stack2, StackLetter, is_substack, milestones,
)

Label = Union[str, Glyph]


def is_letter(label) -> bool:
    return isinstance(label, tuple)


def is_state(label) -> bool:
    return isinstance(label, str) and label != EPSILON


class Tree:
    """A finite prefix-closed binary tree; treated as an immutable value."""

    __slots__ = ('_nodes', '_hash')

    def __init__(self, nodes: Mapping[str, object], check: bool = True):
        self._nodes = dict(nodes)
        self._hash = None
        if check:
            for address in self._nodes:
                if address and address[:-1] not in self._nodes:
                    raise TreeError(ERROR_MESSAGES['invalid_tree'].format(
                        detail=f"address {address} has no parent"))

    @property
    def nodes(self) -> Mapping[str, object]:
        return MappingProxyType(self._nodes)

    def addresses(self) -> List[str]:
        """Addresses in lexicographic order."""
        return sorted(self._nodes)

    def __getitem__(self, address: str):
        return self._nodes[address]

    def get(self, address: str, default=None):
        return self._nodes.get(address, default)

    def __contains__(self, address: str) -> bool:
        return address in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def __iter__(self) -> Iterator[str]:
        return iter(self.addresses())

    def __eq__(self, other) -> bool:
        return isinstance(other, Tree) and self._nodes == other._nodes

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._nodes.items()))
        return self._hash

    def __repr__(self) -> str:
        return f"Tree({format_tree(self).strip()!r})"

    def lex_max(self) -> str:
        return max(self._nodes)

    def restrict(self, addresses: Iterable[str]) -> "Tree":
        return Tree({d: self._nodes[d] for d in addresses})

    def subtree(self, address: str) -> "Tree":
        """The subtree rooted at ``address``, rebased to the root."""
        n = len(address)
        return Tree({d[n:]: lab for d, lab in self._nodes.items() if d.startswith(address)},
                    check=False)

    def edit(self, remove: Iterable[str] = (), add: Optional[Mapping[str, object]] = None) -> "Tree":
        nodes = dict(self._nodes)
        for d in remove:
            del nodes[d]
        nodes.update(add or {})
        return Tree(nodes)

    def without_subtree(self, address: str) -> "Tree":
        return Tree({d: lab for d, lab in self._nodes.items() if not d.startswith(address)},
                    check=False)


class Violation(NamedTuple):
    """One broken EncTrees condition."""
    condition: int
    address: str
    message: str


# ---------------------------------------------------------------------------
# encoding

def _encode(words: List[Tuple[StackLetter, ...]], label, address: str, nodes: Dict[str, object]) -> None:
    nodes[address] = label
    first = words[0]
    if len(first) == 1:
        if len(words) > 1:
            _encode(words[1:], EPSILON, address + '1', nodes)
        return
    second = first[1]
    k = 1
    while k < len(words) and len(words[k]) > 1 and words[k][1] == second:
        k += 1
    _encode([w[1:] for w in words[:k]], second.glyph, address + '0', nodes)
    if k < len(words):
        _encode(words[k:], EPSILON, address + '1', nodes)


def encode_stack(s: Stack2) -> Tree:
    """The stack tree of s; its root carries (⊥, 1)."""
    nodes: Dict[str, object] = {}
    _encode(list(s.words), s.words[0][0].glyph, '', nodes)
    return Tree(nodes, check=False)


def config_tree(state: str, stack_tree: Tree) -> Tree:
    """Attach a state-labelled root above a stack tree."""
    nodes = {'': state}
    nodes.update({'0' + d: lab for d, lab in stack_tree.nodes.items()})
    return Tree(nodes, check=False)


def encode_config(c: Configuration) -> Tree:
    return config_tree(c.state, encode_stack(c.stack))


def stack_part(t: Tree) -> Tree:
    """The stack tree below the state root of a configuration tree."""
    return t.subtree('0')


# ---------------------------------------------------------------------------
# decoding

def _decode_words(t: Tree, address: str, prefix: List[str]) -> List[List[str]]:
    has0 = address + '0' in t
    has1 = address + '1' in t
    words: List[List[str]] = []
    if has0:
        words.extend(_decode_words(t, address + '0', prefix + [address + '0']))
    else:
        words.append(prefix)
    if has1:
        words.extend(_decode_words(t, address + '1', prefix))
    return words


def level2_link(t: Tree, address: str) -> int:
    """Number of addresses ending in 1 that are lexicographically at most ``address``."""
    return sum(1 for e in t.nodes if e.endswith('1') and e <= address)


def link_at(t: Tree, address: str) -> int:
    """
    The collapse link of the letter encoded at ``address`` of a stack tree.

    Level-1 letters link to their position, the number of 0s in the address;
    level-2 letters count the word boundaries lexicographically before them.
    """
    if address not in t:
        raise TreeError(ERROR_MESSAGES['invalid_tree'].format(detail=f"no node at {address or 'root'}"))
    label = t[address]
    if not address or not is_letter(label):
        raise TreeError(ERROR_MESSAGES['invalid_tree'].format(
            detail=f"node {address or 'root'} does not encode a pushed letter"))
    if label[1] == 1:
        return address.count('0')
    return level2_link(t, address)


def decode_stack(t: Tree) -> Stack2:
    """Rebuild the stack encoded by a stack tree, links included."""
    root = t['']
    if not is_letter(root) or root[1] != 1:
        raise TreeError(ERROR_MESSAGES['invalid_tree'].format(detail="stack root is not a level-1 bottom letter"))
    letters: Dict[str, StackLetter] = {'': StackLetter(root[0], 1, 0)}
    words = []
    for path in _decode_words(t, '', ['']):
        word = []
        for address in path:
            if address not in letters:
                label = t[address]
                letters[address] = StackLetter(label[0], label[1], link_at(t, address))
            word.append(letters[address])
        words.append(tuple(word))
    return Stack2(tuple(words))


def decode(t: Tree, bottom: str = BOTTOM) -> Configuration:
    """
    Decode a configuration tree.

    Raises:
        TreeError: if the tree violates an EncTrees condition
    """
    violations = validate_enctree(t, bottom)
    if violations:
        raise TreeError(ERROR_MESSAGES['invalid_tree'].format(
            detail="; ".join(f"condition {v.condition} at {v.address or 'root'}: {v.message}"
                             for v in violations)), violations)
    return Configuration(t[''], decode_stack(stack_part(t)))


# ---------------------------------------------------------------------------
# validation

def validate_enctree(t: Tree, bottom: str = BOTTOM, states: Optional[Iterable[str]] = None) -> List[Violation]:
    """Every violated EncTrees condition; an empty list means t is a valid configuration tree."""
    out: List[Violation] = []
    if '' not in t:
        return [Violation(1, '', "tree is empty")]

    root = t['']
    if not is_state(root) or (states is not None and root not in set(states)):
        out.append(Violation(1, '', f"root label {root!r} is not a control state"))

    if '1' in t:
        out.append(Violation(4, '1', "the root has a 1-child"))
    if '0' not in t:
        out.append(Violation(4, '0', "the root has no 0-child"))

    for d in t.addresses():
        if not d:
            continue
        label = t[d]
        if d.endswith('0'):
            if not is_letter(label) or label[1] not in (1, 2):
                out.append(Violation(2, d, f"0-successor carries {label!r}, not a letter"))
            elif d == '0':
                if label != (bottom, 1):
                    out.append(Violation(2, d, f"address 0 carries {label!r}, not ({bottom}, 1)"))
            elif label[0] == bottom:
                out.append(Violation(2, d, f"{bottom} occurs away from address 0"))
        elif label != EPSILON:
            out.append(Violation(3, d, f"1-successor carries {label!r}, not epsilon"))

    for d in t.addresses():
        zero, one_zero = t.get(d + '0'), t.get(d + '10')
        if is_letter(zero) and zero[1] == 1 and zero == one_zero:
            out.append(Violation(5, d, f"{d + '0'} and {d + '10'} both carry {zero!r}"))
    return out


def validate_stack_tree(t: Tree, bottom: str = BOTTOM) -> List[Violation]:
    """Conditions 2, 3 and 5 for a bare stack tree; addresses are stack-relative."""
    out = []
    for v in validate_enctree(config_tree('q', t), bottom):
        if v.condition in (1, 4):
            continue
        out.append(Violation(v.condition, v.address[1:], v.message))
    return out


# ---------------------------------------------------------------------------
# milestones and positional laws

def left_stack(t: Tree, address: str) -> Stack2:
    """The stack encoded by the lexicographically downward closed part of t up to ``address``."""
    if address not in t:
        raise TreeError(ERROR_MESSAGES['invalid_tree'].format(detail=f"no node at {address or 'root'}"))
    return decode_stack(t.restrict(d for d in t.nodes if d <= address))


def milestone_iso(t: Tree) -> List[Tuple[str, Stack2]]:
    """
    Pair every node with its left stack, in lexicographic order.

    Raises:
        TreeError: if the pairing is not an order isomorphism onto the milestones
    """
    pairs = [(d, left_stack(t, d)) for d in t.addresses()]
    expected = milestones(decode_stack(t))
    if [s for _, s in pairs] != expected:
        raise TreeError(ERROR_MESSAGES['invalid_tree'].format(detail="left stacks are not the milestones"))
    for (_, a), (_, b) in zip(pairs, pairs[1:]):
        if not is_substack(a, b) or a == b:
            raise TreeError(ERROR_MESSAGES['invalid_tree'].format(detail="left stacks are not increasing"))
    return pairs


def split_positions(t: Tree) -> List[str]:
    """The root and every address ending in 1, in lexicographic order; one per stack word."""
    return sorted([''] + [d for d in t.nodes if d.endswith('1')])


def path_word(t: Tree, address: str) -> Tuple[Glyph, ...]:
    """Non-epsilon labels on the path from the root to ``address``, inclusive."""
    if address not in t:
        raise TreeError(ERROR_MESSAGES['invalid_tree'].format(detail=f"no node at {address or 'root'}"))
    return tuple(t[address[:i]] for i in range(len(address) + 1) if is_letter(t[address[:i]]))


# ---------------------------------------------------------------------------
# text format

def format_label(label) -> str:
    if is_letter(label):
        return f"{label[0]}^{label[1]}"
    return str(label)


def format_tree(t: Tree) -> str:
    """One line per node, ``address label``, in lexicographic order."""
    lines = [f"{d or ROOT_ADDRESS_TEXT} {format_label(t[d])}" for d in t.addresses()]
    return "\n".join(lines) + "\n"


def parse_label(token: str):
    if token == EPSILON:
        return EPSILON
    if '^' in token:
        sym, _, level = token.rpartition('^')
        if not sym or level not in ('1', '2'):
            raise ValueError(f"bad letter label {token!r}")
        return (sym, int(level))
    return token


def parse_tree(text: str) -> Tree:
    """
    Parse tree text.

    Raises:
        ParseError: on malformed lines, duplicate or orphan addresses
    """
    nodes: Dict[str, object] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(ERROR_MESSAGES['parse_tree'].format(line=number, detail="expected 'address label'"), text)
        address = '' if parts[0] == ROOT_ADDRESS_TEXT else parts[0]
        if not VALIDATION_PATTERNS['address'].match(address):
            raise ParseError(ERROR_MESSAGES['parse_tree'].format(line=number, detail=f"bad address {parts[0]!r}"), text)
        if address in nodes:
            raise ParseError(ERROR_MESSAGES['parse_tree'].format(line=number, detail=f"duplicate address {parts[0]}"), text)
        try:
            nodes[address] = parse_label(parts[1])
        except ValueError as e:
            raise ParseError(ERROR_MESSAGES['parse_tree'].format(line=number, detail=str(e)), text)
    try:
        return Tree(nodes)
    except TreeError as e:
        raise ParseError(str(e), text)
