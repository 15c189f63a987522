"""
Stack operations acting directly on stack trees, and the tree automata
recognising valid encodings and single transitions.

All edits happen around the rightmost leaf: the lexicographically greatest
node, which encodes the topmost letter (or, when it is an epsilon node, the
end of a word that repeats a shorter prefix).
"""

from typing import Iterable, List, Optional, Tuple

from .constants import EPSILON, OpKind
from .cps import CpsSpec, EdgeLabel, format_label as format_edge_label
from .stack import StackOp, apply_op
from .tree_automata import PAD, Nfta
from .tree_codec import Tree, decode_stack, encode_stack, is_letter, is_state


def tree_alphabet(spec: CpsSpec) -> List:
    """Labels of configuration trees of ``spec``: states, letters and epsilon."""
    letters = [(sym, level) for sym in spec.alphabet for level in (1, 2)]
    return list(spec.states) + [EPSILON] + letters


# ---------------------------------------------------------------------------
# structural operations

def top_address(t: Tree) -> str:
    """Nearest non-epsilon ancestor-or-self of the rightmost leaf of a stack tree."""
    d = t.lex_max()
    while t[d] == EPSILON:
        d = d[:-1]
    return d


def _strip_zeros(address: str) -> str:
    return address.rstrip('0')


def _chain_end(t: Tree, address: str) -> str:
    while address + '1' in t:
        address += '1'
    return address


def tree_op_apply(t: Tree, op: StackOp) -> Optional[Tree]:
    """
    Apply a stack operation to a stack tree by local edits.

    Returns None exactly when the operation is undefined on the encoded stack.
    """
    leaf = t.lex_max()
    kind = op.kind

    if kind is OpKind.CLONE2:
        return t.edit(add={leaf + '1': EPSILON})

    if kind is OpKind.PUSH:
        glyph = (op.sym, op.level)
        if op.level == 1 and t[leaf] == EPSILON:
            host = leaf[:-1]
            if t.get(host + '0') == glyph:
                # the new word joins the block of the previous word
                end = _chain_end(t, host + '0')
                return t.edit(remove=[leaf], add={end + '1': EPSILON})
        return t.edit(add={leaf + '0': glyph})

    if kind is OpKind.COLLAPSE:
        top = t[top_address(t)]
        if top[1] == 1:
            return tree_op_apply(t, StackOp.pop1())
        g = _strip_zeros(top_address(t))
        return t.without_subtree(g) if g else None

    if kind is OpKind.POP1:
        if not leaf:
            return None
        if t[leaf] != EPSILON:
            return t.edit(remove=[leaf])
        y = top_address(t)
        if not y:
            return None
        return t.edit(remove=[leaf], add={y[:-1] + '1': EPSILON})

    if kind is OpKind.POP2:
        g = _strip_zeros(leaf)
        return t.without_subtree(g) if g else None

    raise ValueError(f"unknown operation {op}")


def tree_op_oracle(t: Tree, op: StackOp) -> Optional[Tree]:
    """Decode, apply, encode; the reference the local edits must agree with."""
    result = apply_op(decode_stack(t), op)
    return None if result is None else encode_stack(result)


# ---------------------------------------------------------------------------
# validity automaton

ROOT_KIND = ('root',)
BOTTOM_KIND = ('bottom',)
ABSENT = ('absent',)


def validity_step(label, left, right, bottom: str):
    """
    One bottom-up step of the EncTrees checker; None rejects.

    States: ('root',), ('bottom',), ('letter', own) and ('eps', zero) where
    ``own`` is the symbol of a level-1 letter and ``zero`` the level-1 symbol
    of an epsilon node's 0-child; these two carry what the block-merge
    condition compares.
    """
    if is_state(label):
        if left != BOTTOM_KIND or right is not None:
            return None
        return ROOT_KIND
    if left is not None and left[0] != 'letter':
        return None
    if right is not None and right[0] != 'eps':
        return None
    own_left = left[1] if left is not None else None
    if own_left is not None and right is not None and right[1] == own_left:
        return None
    if label == EPSILON:
        return ('eps', own_left)
    if not is_letter(label) or label[1] not in (1, 2):
        return None
    if label[0] == bottom:
        return BOTTOM_KIND if label[1] == 1 else None
    return ('letter', label[0] if label[1] == 1 else None)


def validity_automaton(spec: CpsSpec) -> Nfta:
    """Accepts exactly the configuration trees of ``spec`` (all five EncTrees conditions)."""
    bottom = spec.bottom

    def step(label, left, right):
        state = validity_step(label, left, right, bottom)
        return [] if state is None else [state]

    return Nfta.from_step(tree_alphabet(spec), 1, step, lambda q: q == ROOT_KIND)


def _track_validity(value, left, right, bottom):
    left = None if left in (None, ABSENT) else left
    right = None if right in (None, ABSENT) else right
    if value is PAD:
        return ABSENT if left is None and right is None else None
    return validity_step(value, left, right, bottom)


# ---------------------------------------------------------------------------
# relation automata

def _top_of(label):
    return label if is_letter(label) else None


def _resolve(top, label):
    return top if top is not None else _top_of(label)


def _pattern(op: StackOp, a, b, left, right) -> List[tuple]:
    """
    Difference roles of a convolution node (a, b) given its children's roles.

    ``changed`` marks a subtree on the rightmost path whose two tracks differ
    by exactly the edit of ``op``; it carries a family tag and the top letter
    seen so far. The remaining roles are partial edit shapes.
    """
    kind = op.kind
    roles: List[tuple] = []
    lrole = left[0] if left else None
    rrole = right[0] if right else None

    def is_same_or_absent(child):
        return child is None or child[0] == 'same'

    if a is not PAD and b is not PAD:
        if a == b:
            # unchanged subtree
            if is_same_or_absent(left) and is_same_or_absent(right):
                roles.append(('same', a))
            # spine propagation
            if rrole == 'changed' and is_same_or_absent(left):
                roles.append(('changed', right[1], _resolve(right[2], a)))
            if lrole == 'changed' and right is None:
                roles.append(('changed', left[1], _resolve(left[2], a)))

            if kind is OpKind.CLONE2 and left is None and rrole == 'new' and right[1] == EPSILON:
                roles.append(('changed', 'x', _top_of(a)))
            if kind is OpKind.PUSH:
                glyph = (op.sym, op.level)
                if right is None and lrole == 'new' and left[1] == glyph:
                    if a == EPSILON and op.level == 1:
                        roles.append(('push1_eps',))
                    else:
                        roles.append(('changed', 'x', _top_of(a)))
                if op.level == 1:
                    if rrole == 'push1_eps' and (left is None or (lrole == 'same' and left[1] != glyph)):
                        roles.append(('changed', 'x', _top_of(a)))
                    if rrole == 'del_eps' and lrole == 'chain_add' and left[1] == glyph:
                        roles.append(('changed', 'x', _top_of(a)))
                    if is_same_or_absent(left) and (
                            (rrole == 'new' and right[1] == EPSILON) or rrole == 'chain_add'):
                        roles.append(('chain_add', a))
            if kind in (OpKind.POP1, OpKind.COLLAPSE):
                if lrole == 'del_leaf' and right is None:
                    roles.append(('changed', 'p1', left[1]))
                if a == EPSILON and rrole == 'del_eps' and is_same_or_absent(left):
                    roles.append(('del_eps',))
                if is_letter(a) and rrole == 'del_eps' and is_same_or_absent(left):
                    roles.append(('need_z1', a))
                if lrole == 'need_z1' and rrole == 'new' and right[1] == EPSILON:
                    roles.append(('changed', 'p1', left[1]))
            if kind is OpKind.POP2 and rrole == 'del_chain' and is_same_or_absent(left):
                roles.append(('changed', 'x', _resolve(right[1], a)))
            if kind is OpKind.COLLAPSE and rrole in ('del_d', 'del_zchain') and is_same_or_absent(left):
                roles.append(('changed', 'c2', right[1]))
        return roles

    if a is PAD:
        if left is None and right is None:
            roles.append(('new', b))
        return roles

    # b is PAD: a node only present in the source tree
    if kind in (OpKind.POP1, OpKind.COLLAPSE, OpKind.PUSH):
        if left is None and right is None:
            if a == EPSILON:
                roles.append(('del_eps',))
            elif kind is not OpKind.PUSH and is_letter(a):
                roles.append(('del_leaf', a))
    if kind is OpKind.POP2 and right is None and (left is None or lrole == 'del_chain'):
        roles.append(('del_chain', _resolve(left[1] if left else None, a)))
    if kind is OpKind.COLLAPSE:
        if all(c is None or c[0] == 'del_any' for c in (left, right)):
            roles.append(('del_any',))
        eps_shape = (rrole == 'eps_tail' and (left is None or lrole == 'del_any')) or \
            (left is None and right is None)
        if a == EPSILON and eps_shape:
            roles.append(('eps_tail',))
        if is_letter(a) and a[1] == 2 and eps_shape:
            roles.append(('del_d', a))
        if lrole in ('del_d', 'del_zchain') and right is None:
            roles.append(('del_zchain', left[1]))
    return roles


def _root_accepts(spec: CpsSpec, label: EdgeLabel, a, b, left, right) -> bool:
    target, op = label
    if not (is_state(a) and is_state(b)) or b != target or right is not None:
        return False
    if left is None or left[0] != 'changed' or left[2] is None:
        return False
    family, (sym, level) = left[1], left[2]
    if op.kind is OpKind.COLLAPSE and family != ('p1' if level == 1 else 'c2'):
        return False
    return any(rule.target == target and rule.op == op for rule in spec.rules_for(a, sym))


def _relation_labels(spec: CpsSpec) -> List[Tuple]:
    alphabet = tree_alphabet(spec)
    non_states = [x for x in alphabet if not is_state(x)]
    labels = [(x, x) for x in non_states]
    labels += [(PAD, x) for x in non_states] + [(x, PAD) for x in non_states]
    labels += [(p, q) for p in spec.states for q in spec.states]
    return labels


def op_relation_automaton(spec: CpsSpec, label: EdgeLabel, logger=None) -> Nfta:
    """
    Two-track automaton accepting Encode(c1) ⊗ Encode(c2) iff c1 has a
    ``label`` edge to c2.

    A state is (validity of track 1, validity of track 2, difference role).
    """
    bottom = spec.bottom
    op = label[1]

    def step(conv, left, right):
        a, b = conv
        v1 = _track_validity(a, left and left[0], right and right[0], bottom)
        if v1 is None:
            return []
        v2 = _track_validity(b, left and left[1], right and right[1], bottom)
        if v2 is None:
            return []
        lrole = left[2] if left else None
        rrole = right[2] if right else None
        if is_state(a) or is_state(b):
            ok = _root_accepts(spec, label, a, b, lrole, rrole)
            return [(v1, v2, ('ok',))] if ok else []
        return [(v1, v2, role) for role in _pattern(op, a, b, lrole, rrole)]

    def is_final(q):
        return q[0] == ROOT_KIND and q[1] == ROOT_KIND and q[2] == ('ok',)

    automaton = Nfta.from_step(tree_alphabet(spec), 2, step, is_final,
                               labels=_relation_labels(spec), logger=logger)
    if logger:
        states, transitions = automaton.size()
        logger.debug(f"relation automaton {format_edge_label(label)}: {states} states, {transitions} transitions")
    return automaton


def edge_automaton(spec: CpsSpec, labels: Optional[Iterable[EdgeLabel]] = None, logger=None) -> Nfta:
    """Union of the relation automata of ``labels`` (all labels of the system by default)."""
    labels = list(spec.labels() if labels is None else labels)
    result = Nfta.empty(tree_alphabet(spec), 2)
    for label in labels:
        result = result.union(op_relation_automaton(spec, label, logger))
    return result.trim()
