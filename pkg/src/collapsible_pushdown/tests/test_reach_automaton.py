"""
Tests for the reach_automaton module.
"""

import pytest

from collapsible_pushdown.constants import EPSILON
from collapsible_pushdown.cps import bfs_graph
from collapsible_pushdown.reach_automaton import ALL, NONE, Z, overlays, reach_automaton
from collapsible_pushdown.reachability import Presentation, RegularConstraint, reach, reach_regular
from collapsible_pushdown.tree_automata import PAD, convolve
from collapsible_pushdown.tree_codec import Tree, encode_config
from collapsible_pushdown.tests.fixtures import GRAPH_BOUNDS, config, sys1

A2 = ('a', 2)
UNREACHABLE_SOURCES = ["1|⊥", "2|⊥", "0|⊥ : ⊥", "1|⊥ : ⊥ a^2@1", "2|⊥ a^2@0 : ⊥"]


def pair(c1, c2):
    return convolve(encode_config(c1), encode_config(c2))


class TestOverlays:
    """Test cases for the cut classes of the middle track."""

    def test_leaf_may_be_marker(self):
        """Test that a shared leaf is either the marker or below it."""
        assert overlays(A2, A2, None, None, False, False) == [(('m', False), True), (ALL, False)]

    def test_absent_cut(self):
        """Test nodes the cut leaves out."""
        assert overlays(A2, PAD, None, None, False, False) == [(NONE, False)]
        assert overlays(A2, PAD, ALL, None, True, False) == []

    def test_extra_leaf(self):
        """Test the epsilon leaf the cut may add."""
        assert (Z, False) in overlays(PAD, EPSILON, None, None, False, False)
        assert overlays(PAD, A2, None, None, False, False) == []

    def test_extra_leaf_hangs_on_marker(self):
        """Test the marker with the extra leaf as its 1-child."""
        found = overlays(A2, A2, None, Z, False, False)
        assert (('mz', False, True), True) in found

    def test_marker_on_the_left(self):
        """Test that the tree track going on to the right is remembered."""
        assert overlays(A2, A2, ('m', False), NONE, True, True) == [(('m', True), False)]

    def test_cut_must_be_a_prefix(self):
        """Test that nodes after the marker stay out of the cut."""
        assert overlays(A2, A2, ('m', False), ALL, True, True) == []
        assert overlays(A2, A2, NONE, ('m', False), True, True) == []


@pytest.fixture(scope="module")
def sys1_pairs():
    """The reachability automaton of SYS1 with a shared presentation."""
    spec = sys1()
    pres = Presentation(spec)
    return spec, pres, reach_automaton(spec, presentation=pres)


@pytest.mark.slow
class TestReachAutomaton:
    """Test cases for the two-track reachability automaton."""

    def test_reflexive(self, sys1_pairs):
        """Test that every explored configuration reaches itself."""
        spec, _, automaton = sys1_pairs
        for c in bfs_graph(spec, GRAPH_BOUNDS).vertices():
            assert automaton.accepts(pair(c, c)), str(c)

    def test_examples(self, sys1_pairs):
        """Test runs through clone, push and collapse, and their absence."""
        spec, _, automaton = sys1_pairs
        c0 = spec.initial_config()
        assert automaton.accepts(pair(c0, config("2|⊥ : ⊥")))
        assert automaton.accepts(pair(config("2|⊥ : ⊥ a^2@1"), c0))
        assert not automaton.accepts(pair(config("2|⊥ : ⊥"), c0))
        assert not automaton.accepts(pair(config("2|⊥ : ⊥ a^2@1"), config("0|⊥ : ⊥")))

    def test_agrees_with_pointwise_reach(self, sys1_pairs):
        """Test every ordered pair of explored configurations against reach."""
        spec, pres, automaton = sys1_pairs
        vertices = bfs_graph(spec, GRAPH_BOUNDS).vertices()
        for c1 in vertices:
            for c2 in vertices:
                assert automaton.accepts(pair(c1, c2)) == reach(spec, c1, c2, pres), f"{c1} -> {c2}"

    @pytest.mark.parametrize("source", UNREACHABLE_SOURCES)
    def test_unreachable_sources(self, sys1_pairs, source):
        """Test valid sources no run produces against reach."""
        spec, pres, automaton = sys1_pairs
        c1 = config(source)
        targets = bfs_graph(spec, GRAPH_BOUNDS).vertices() + [config(text) for text in UNREACHABLE_SOURCES]
        for c2 in targets:
            assert automaton.accepts(pair(c1, c2)) == reach(spec, c1, c2, pres), f"{c1} -> {c2}"

    def test_invalid_tracks_rejected(self, sys1_pairs):
        """Test that both tracks must be configuration trees."""
        spec, _, automaton = sys1_pairs
        c0 = encode_config(spec.initial_config())
        broken = Tree({'': '0', '0': ('a', 1)})
        assert not automaton.accepts(convolve(broken, broken))
        assert not automaton.accepts(convolve(c0, broken))
        assert not automaton.accepts(convolve(broken, c0))

    def test_domain_restriction(self):
        """Test that the domain variant drops unreachable sources."""
        spec = sys1()
        automaton = reach_automaton(spec, domain=True)
        assert automaton.accepts(pair(config("2|⊥ : ⊥ a^2@1"), spec.initial_config()))
        assert not automaton.accepts(pair(config("1|⊥"), config("1|⊥")))

    def test_constrained_pairs(self):
        """Test the constraint variant against reach_regular."""
        spec = sys1()
        constraint = RegularConstraint.word(['a′', 'co'])
        automaton = reach_automaton(spec, constraint)
        vertices = bfs_graph(spec, GRAPH_BOUNDS).vertices()
        for c1 in vertices:
            for c2 in vertices:
                expected = reach_regular(spec, c1, c2, constraint)
                assert automaton.accepts(pair(c1, c2)) == expected, f"{c1} -> {c2}"
        assert automaton.accepts(pair(config("1|⊥ : ⊥"), spec.initial_config()))
