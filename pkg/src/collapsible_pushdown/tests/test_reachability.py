"""
Tests for the reachability module.
"""

import json

import pytest

from collapsible_pushdown.cps import bfs_graph, reach_oracle, reachable_set
from collapsible_pushdown.errors import SpecError, TreeError
from collapsible_pushdown.stack import Configuration, initial_stack, milestones
from collapsible_pushdown.tree_codec import config_tree, decode, encode_config, encode_stack, validate_enctree
from collapsible_pushdown.reachability import (
    Presentation, RegularConstraint, certificate_check, common_milestone,
    desc_of, domain_automaton, find_certificate, is_reachable, load_constraint,
    parse_constraint, product_cps, reach, reach_regular, regular_domain_automaton,
    visits_milestones,
)
from collapsible_pushdown.tests.fixtures import (
    GRAPH_BOUNDS, SMALL_BOUNDS, config, enumerated_stacks, mutations, stack, stress_a, sys1,
)

UNREACHABLE = ["1|⊥", "2|⊥", "0|⊥ : ⊥"]


def _domain_corpus(spec):
    """Valid trees of explored stacks over the system's symbols in every state, and their one-edit neighbours."""
    symbols = set(spec.alphabet)
    bases = [config_tree(q, encode_stack(s)) for s in enumerated_stacks()
             if all(letter.sym in symbols for word in s.words for letter in word)
             for q in spec.states]
    corpus = set(bases)
    for t in bases:
        corpus.update(mutations(t))
    return sorted(corpus, key=repr)


class TestMembership:
    """Test cases for reachability from the initial configuration."""

    def setup_method(self):
        """Share one presentation across queries."""
        self.spec = sys1()
        self.pres = Presentation(self.spec)

    def test_start_states(self):
        """Test the states available on ⊥₂ before the first push."""
        assert self.pres.start_states() == frozenset({'0'})

    def test_explored_configurations_are_reachable(self):
        """Test every configuration found by bounded search."""
        for c in reachable_set(self.spec, self.spec.initial_config(), SMALL_BOUNDS):
            assert is_reachable(self.spec, c, self.pres), str(c)

    @pytest.mark.parametrize("text", UNREACHABLE)
    def test_unreachable(self, text):
        """Test configurations no run can produce."""
        assert not is_reachable(self.spec, config(text), self.pres)
        assert find_certificate(self.spec, config(text), self.pres) is None

    def test_unknown_state_or_bad_stack(self):
        """Test that foreign states and unconstructible stacks are never reachable."""
        assert not is_reachable(self.spec, Configuration('9', initial_stack()), self.pres)
        assert not is_reachable(self.spec, config("2|⊥ : ⊥ a^2@0"), self.pres)

    def test_stress_system_agrees_with_search(self):
        """Test the two-state stress system on its explored configurations."""
        spec = stress_a()
        pres = Presentation(spec)
        for c in reachable_set(spec, spec.initial_config(), SMALL_BOUNDS):
            assert is_reachable(spec, c, pres), str(c)


class TestCertificates:
    """Test cases for finding and checking certificates."""

    def setup_method(self):
        """Share one presentation across queries."""
        self.spec = sys1()
        self.pres = Presentation(self.spec)
        self.target = config("2|⊥ : ⊥")

    def test_found_certificate_checks(self):
        """Test that found certificates pass the checker."""
        for c in bfs_graph(self.spec, SMALL_BOUNDS).vertices():
            f = find_certificate(self.spec, c, self.pres)
            assert f is not None
            assert certificate_check(self.spec, encode_config(c), f, self.pres)

    def test_certificate_keys(self):
        """Test that a certificate labels exactly the stack nodes."""
        t = encode_config(self.target)
        f = find_certificate(self.spec, self.target, self.pres)
        assert sorted(f) == [d for d in t.addresses() if d]
        assert f['0'] == '0'
        assert f[max(f)] == '2'

    def test_wrong_certificate_fails(self):
        """Test that changing the last value breaks the certificate."""
        t = encode_config(self.target)
        f = find_certificate(self.spec, self.target, self.pres)
        f[max(f)] = '1'
        assert not certificate_check(self.spec, t, f, self.pres)

    def test_partial_certificate_raises(self):
        """Test that a certificate missing a node is rejected."""
        t = encode_config(self.target)
        with pytest.raises(TreeError, match="exactly the stack nodes"):
            certificate_check(self.spec, t, {'0': '0'}, self.pres)

    def test_unknown_state_in_certificate(self):
        """Test that certificates only use declared states."""
        t = encode_config(self.target)
        f = {d: 'z' for d in t.addresses() if d}
        with pytest.raises(TreeError, match="unknown state"):
            certificate_check(self.spec, t, f, self.pres)


class TestPairReachability:
    """Test cases for reachability between two configurations."""

    def setup_method(self):
        """Share one presentation across queries."""
        self.spec = sys1()
        self.pres = Presentation(self.spec)

    def test_desc_of_collapse(self):
        """Test descents from a two-word stack back to ⊥₂."""
        rel = desc_of(self.spec, stack("⊥ : ⊥ a^2@1"), initial_stack())
        assert ('2', '0') in rel
        assert ('1', '1') not in rel

    def test_desc_of_unconstructible_source(self):
        """Test a descent that starts on a stack no run can build."""
        rel = desc_of(self.spec, stack("⊥ : ⊥ a^2@0"), stack("⊥ : ⊥"))
        assert ('2', '2') in rel
        assert ('2', '0') not in rel

    def test_common_milestone(self):
        """Test the greatest shared milestone."""
        index, m = common_milestone(stack("⊥ : ⊥ a^2@1"), stack("⊥ : ⊥"))
        assert m == stack("⊥ : ⊥")
        assert index == len(milestones(stack("⊥ : ⊥"))) - 1
        assert common_milestone(initial_stack(), stack("⊥ : ⊥"))[1] == initial_stack()

    def test_reach_examples(self):
        """Test the run to the stuck configuration and the lack of any run out of it."""
        stuck = config("2|⊥ : ⊥")
        assert reach(self.spec, self.spec.initial_config(), stuck, self.pres)
        assert reach(self.spec, stuck, stuck, self.pres)
        for other in ["0|⊥", "1|⊥ : ⊥", "2|⊥ : ⊥ a^2@1", "0|⊥ : ⊥ a^2@1"]:
            assert not reach(self.spec, stuck, config(other), self.pres)

    def test_reach_from_unconstructible(self):
        """Test that a valid stack no run can build is still a start point."""
        c = config("2|⊥ : ⊥ a^2@0")
        assert reach(self.spec, c, c, self.pres)
        assert reach(self.spec, c, config("2|⊥ : ⊥"), self.pres)
        assert not reach(self.spec, c, config("0|⊥"), self.pres)
        assert not reach(self.spec, c, self.spec.initial_config(), self.pres)

    def test_reach_rejects_foreign_input(self):
        """Test unknown states and invalid stacks on either side."""
        c0 = self.spec.initial_config()
        assert not reach(self.spec, c0, Configuration('9', initial_stack()), self.pres)
        assert not reach(self.spec, Configuration('9', initial_stack()), c0, self.pres)

    @pytest.mark.slow
    def test_reach_agrees_with_search(self):
        """Test every ordered pair of explored configurations against the search oracle."""
        vertices = bfs_graph(self.spec, GRAPH_BOUNDS).vertices()
        for c1 in vertices:
            for c2 in vertices:
                oracle = reach_oracle(self.spec, c1, c2, GRAPH_BOUNDS)
                answer = reach(self.spec, c1, c2, self.pres)
                if oracle.found:
                    assert answer, f"{c1} -> {c2}"
                    assert visits_milestones(oracle.run)
                elif oracle.exhausted:
                    assert not answer, f"{c1} -> {c2}"

    def test_stuck_configuration_reaches_nothing_else(self):
        """Test the stuck configuration against every explored configuration."""
        stuck = config("2|⊥ : ⊥")
        vertices = bfs_graph(self.spec, GRAPH_BOUNDS).vertices()
        assert stuck in vertices
        for c in vertices:
            assert reach(self.spec, stuck, c, self.pres) == (c == stuck), str(c)


class TestRegularConstraints:
    """Test cases for reachability along constrained transition words."""

    def setup_method(self):
        """Set up the three-state system."""
        self.spec = sys1()

    def test_cycle_through_collapse(self):
        """Test that clone, push and collapse return to the initial configuration."""
        c0 = self.spec.initial_config()
        assert reach_regular(self.spec, c0, c0, RegularConstraint.word(['cl', 'a′', 'co']))
        assert not reach_regular(self.spec, c0, c0, RegularConstraint.word(['cl', 'a′']))
        assert reach_regular(self.spec, c0, config("2|⊥ : ⊥ a^2@1"), RegularConstraint.word(['cl', 'a′']))

    def test_universal_constraint(self):
        """Test that the universal constraint matches plain reachability."""
        c0 = self.spec.initial_config()
        universal = RegularConstraint.universal(self.spec)
        assert reach_regular(self.spec, c0, config("2|⊥ : ⊥"), universal)
        assert not reach_regular(self.spec, c0, config("1|⊥"), universal)

    def test_product_states(self):
        """Test the product system naming."""
        product = product_cps(self.spec, RegularConstraint.word(['cl']))
        assert product.initial == "0/w0"
        assert len(product.states) == 3 * 2
        assert {r.name for r in product.rules} == {'cl'}

    def test_parse_constraint(self, tmp_path):
        """Test reading a constraint document from disk."""
        document = {
            "states": ["s", "t"], "initial": "s", "finals": ["t"],
            "edges": [{"from": "s", "transition": "cl", "to": "t"}],
        }
        path = tmp_path / "only-clone.json"
        path.write_text(json.dumps(document), encoding='utf-8')
        constraint = load_constraint(path, self.spec)
        assert constraint.successors('s', 'cl') == ['t']
        assert constraint.successors('t', 'cl') == []

    @pytest.mark.parametrize("document, message", [
        ({"states": ["s"], "initial": "s", "finals": ["s"]}, "edges"),
        ({"states": ["s"], "initial": "x", "finals": ["s"], "edges": []}, "undeclared"),
        ({"states": ["s"], "initial": "s", "finals": ["s"],
          "edges": [{"from": "s", "transition": "nope", "to": "s"}]}, "nope"),
    ])
    def test_invalid_constraints(self, document, message):
        """Test malformed constraint documents."""
        with pytest.raises(SpecError, match=message):
            parse_constraint(document, self.spec)


class TestDomainAutomaton:
    """Test cases for the automaton of reachable encodings."""

    def setup_method(self):
        """Build the domain automaton of the three-state system."""
        self.spec = sys1()
        self.automaton = domain_automaton(self.spec)

    def test_accepts_explored(self):
        """Test every configuration found by bounded search."""
        for c in bfs_graph(self.spec, SMALL_BOUNDS).vertices():
            assert self.automaton.accepts(encode_config(c)), str(c)

    @pytest.mark.parametrize("text", UNREACHABLE)
    def test_rejects_unreachable(self, text):
        """Test configurations no run can produce."""
        assert not self.automaton.accepts(encode_config(config(text)))

    def test_witness_is_initial(self):
        """Test that the smallest accepted tree is the initial configuration."""
        witness = self.automaton.is_empty().witness
        assert decode(witness) == self.spec.initial_config()

    def test_regular_domain(self):
        """Test the domain restricted to one transition word."""
        automaton = regular_domain_automaton(self.spec, RegularConstraint.word(['cl', 'a′']))
        assert automaton.accepts(encode_config(config("2|⊥ : ⊥ a^2@1")))
        assert not automaton.accepts(encode_config(self.spec.initial_config()))
        assert not automaton.accepts(encode_config(config("0|⊥ : ⊥ a^2@1")))

    def test_corpus_is_large(self):
        """Test that the mutation corpus holds both kinds of trees in quantity."""
        corpus = _domain_corpus(self.spec)
        assert len(corpus) >= 1000
        assert any(validate_enctree(t, self.spec.bottom, self.spec.states) for t in corpus)
        assert any(not validate_enctree(t, self.spec.bottom, self.spec.states) for t in corpus)

    @pytest.mark.slow
    def test_agrees_with_is_reachable_on_corpus(self):
        """Test acceptance against validation plus is_reachable on every corpus tree."""
        pres = Presentation(self.spec)
        for t in _domain_corpus(self.spec):
            valid = not validate_enctree(t, self.spec.bottom, self.spec.states)
            expected = valid and is_reachable(self.spec, decode(t, self.spec.bottom), pres)
            assert self.automaton.accepts(t) == expected, repr(t)
