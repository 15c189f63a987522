"""
Tests for the tree_codec module.
"""

import pytest

from collapsible_pushdown.constants import BOTTOM, EPSILON
from collapsible_pushdown.errors import ParseError, TreeError
from collapsible_pushdown.stack import Stack2, milestones
from collapsible_pushdown.tree_codec import (
    Tree, decode, decode_stack, encode_config, encode_stack, format_tree, left_stack, link_at,
    milestone_iso, parse_tree, path_word, split_positions, stack_part, validate_enctree,
    validate_stack_tree,
)
from collapsible_pushdown.tests.fixtures import config, enumerated_stacks, stack3, sys1, t3


class TestEncoding:
    """Test cases for encoding stacks and configurations as trees."""

    def test_sample_stack_tree(self):
        """Test the tree of the five-word sample stack node by node."""
        assert encode_stack(stack3()) == t3()

    def test_sample_decodes_back(self):
        """Test that decoding the sample tree restores every link."""
        assert decode_stack(t3()) == stack3()

    def test_configuration_tree(self):
        """Test that a configuration tree puts the state above the stack tree."""
        t = encode_config(config("2|⊥ : ⊥ a^2@1"))
        assert t.addresses() == ['', '0', '01', '010']
        assert t[''] == '2'
        assert t['01'] == EPSILON
        assert t['010'] == ('a', 2)
        assert stack_part(t) == encode_stack(config("2|⊥ : ⊥ a^2@1").stack)

    def test_reachable_stacks_round_trip(self):
        """Test decode after encode on every enumerated reachable stack."""
        for s in enumerated_stacks():
            t = encode_stack(s)
            assert decode_stack(t) == s
            assert validate_stack_tree(t) == []

    def test_node_count_matches_milestones(self):
        """Test that a stack tree has one node per milestone."""
        for s in [stack3()] + enumerated_stacks():
            assert len(encode_stack(s)) == len(milestones(s))

    def test_decode_configuration(self):
        """Test that decode returns the encoded configuration."""
        c = config("0|⊥ a : ⊥ a b^2")
        assert decode(encode_config(c)) == c


class TestPositionalLaws:
    """Test cases for links, splits and milestones read off the tree."""

    def setup_method(self):
        """Set up the sample stack tree."""
        self.tree = t3()

    @pytest.mark.parametrize("address, link", [
        ('0', 0), ('0010', 1), ('10', 2), ('100', 2), ('1010', 3), ('10100', 3),
    ])
    def test_link_at(self, address, link):
        """Test collapse links computed from addresses."""
        assert link_at(self.tree, address) == link

    def test_link_at_rejects_epsilon_and_root(self):
        """Test that only letter nodes carry links."""
        with pytest.raises(TreeError):
            link_at(self.tree, '1')
        with pytest.raises(TreeError):
            link_at(self.tree, '')
        with pytest.raises(TreeError):
            link_at(self.tree, '111')

    def test_split_positions(self):
        """Test that there is one split position per stack word."""
        assert split_positions(self.tree) == ['', '001', '1', '101', '1011']
        assert len(split_positions(self.tree)) == stack3().height

    def test_left_stack(self):
        """Test the stack encoded by a lexicographic prefix of the tree."""
        assert left_stack(self.tree, '0010') == Stack2(stack3().words[:2])
        assert left_stack(self.tree, self.tree.lex_max()) == stack3()

    def test_milestone_isomorphism(self):
        """Test that left stacks enumerate the milestones in order."""
        pairs = milestone_iso(self.tree)
        assert [d for d, _ in pairs] == self.tree.addresses()
        assert [s for _, s in pairs] == milestones(stack3())

    def test_path_word(self):
        """Test that epsilon nodes are skipped on a path."""
        assert path_word(self.tree, '1011') == ((BOTTOM, 1), ('a', 2))
        assert path_word(self.tree, '10100') == ((BOTTOM, 1), ('a', 2), ('d', 2), ('e', 1))


class TestValidation:
    """Test cases for the EncTrees conditions."""

    def setup_method(self):
        """Set up a valid configuration tree."""
        self.valid = encode_config(config("0|⊥ a : ⊥ a b^2"))

    def test_valid_tree(self):
        """Test that an encoded configuration has no violations."""
        assert validate_enctree(self.valid) == []
        assert validate_enctree(self.valid, states=sys1().states) == []

    def test_unknown_state_root(self):
        """Test condition 1 against a declared state set."""
        t = self.valid.edit(add={'': 'z'})
        assert [v.condition for v in validate_enctree(t, states=sys1().states)] == [1]

    def test_epsilon_at_zero_successor(self):
        """Test condition 2 for a 0-successor without a letter."""
        t = self.valid.edit(add={'00': EPSILON})
        assert 2 in [v.condition for v in validate_enctree(t)]

    def test_bottom_away_from_root(self):
        """Test that ⊥ may only label address 0."""
        t = self.valid.edit(add={'00': (BOTTOM, 1)})
        assert 2 in [v.condition for v in validate_enctree(t)]

    def test_letter_at_one_successor(self):
        """Test condition 3 for a 1-successor carrying a letter."""
        t = self.valid.edit(add={'01': ('a', 1)})
        assert 3 in [v.condition for v in validate_enctree(t)]

    def test_root_shape(self):
        """Test condition 4 for a root with a 1-child."""
        t = self.valid.edit(add={'1': EPSILON})
        assert [v.condition for v in validate_enctree(t)] == [4]

    def test_duplicated_level_one_letter(self):
        """Test condition 5 for a split that repeats a level-1 letter."""
        t = Tree({'': 'q', '0': (BOTTOM, 1), '00': ('a', 1), '01': EPSILON, '010': ('a', 1)})
        violations = validate_enctree(t)
        assert [(v.condition, v.address) for v in violations] == [(5, '0')]

    def test_decode_reports_violations(self):
        """Test that decode raises TreeError carrying the violations."""
        t = self.valid.edit(add={'1': EPSILON})
        with pytest.raises(TreeError) as info:
            decode(t)
        assert info.value.violations[0].condition == 4

    def test_orphan_address(self):
        """Test that a tree must be prefix closed."""
        with pytest.raises(TreeError, match="no parent"):
            Tree({'': 'q', '00': ('a', 1)})


class TestTreeText:
    """Test cases for the tree text format."""

    def test_format_and_parse(self):
        """Test printing and reading the sample tree."""
        text = format_tree(t3())
        assert text.splitlines()[0] == ". ⊥^1"
        assert "10100 e^1" in text
        assert "001 ~" in text
        assert parse_tree(text) == t3()

    def test_comments_and_blank_lines(self):
        """Test that comments and blank lines are skipped."""
        t = parse_tree("# config\n. 0\n\n0 ⊥^1\n")
        assert t.addresses() == ['', '0']

    @pytest.mark.parametrize("text", [
        ". q\n2 a^1\n",
        ". q\n. p\n",
        ". q\n00 a^1\n",
        ". q\n0 a^3\n",
        ". q extra\n",
    ])
    def test_parse_errors(self, text):
        """Test that malformed tree text raises ParseError."""
        with pytest.raises(ParseError):
            parse_tree(text)
