"""
Tests for the validator module.
"""

import copy

import pytest

from collapsible_pushdown.constants import DEFAULT_CONFIG
from collapsible_pushdown.tests.fixtures import STRESS_B_DOC, SYS1_DOC
from collapsible_pushdown.validator import BoundsValidator, SystemValidator


class TestSystemValidator:
    """Test cases for SystemValidator class."""

    def setup_method(self):
        """Setup test environment."""
        self.validator = SystemValidator()
        self.document = copy.deepcopy(SYS1_DOC)

    def test_valid_documents(self):
        """Test that the shared systems validate cleanly."""
        for document in (SYS1_DOC, STRESS_B_DOC):
            result = self.validator.validate(document)
            assert result.is_valid
            assert result.errors == []
            assert result.warnings == []

    def test_not_an_object(self):
        """Test that a non-object document is rejected."""
        result = self.validator.validate(["states"])
        assert not result.is_valid
        assert "JSON object" in result.errors[0]

    @pytest.mark.parametrize("field", ["alphabet", "states", "initial", "transitions"])
    def test_missing_field(self, field):
        """Test that each required field is enforced."""
        del self.document[field]
        result = self.validator.validate(self.document)
        assert not result.is_valid
        assert f"Missing required field: {field}" in result.errors

    def test_wrong_type(self):
        """Test that fields must have the right JSON type."""
        self.document['states'] = "0 1 2"
        result = self.validator.validate(self.document)
        assert "Field states has the wrong type" in result.errors

    def test_reserved_characters(self):
        """Test that names must be printable in the text formats."""
        self.document['alphabet'] = ["a", "b|c"]
        result = self.validator.validate(self.document)
        assert any("reserved character" in e for e in result.errors)

    def test_duplicates(self):
        """Test duplicate states as errors and duplicate symbols as warnings."""
        self.document['states'] = ["0", "1", "2", "2"]
        self.document['alphabet'] = ["a", "a"]
        result = self.validator.validate(self.document)
        assert "State names are not unique" in result.errors
        assert "Alphabet lists a symbol twice" in result.warnings

    def test_unknown_initial(self):
        """Test that the initial state must be declared."""
        self.document['initial'] = "7"
        result = self.validator.validate(self.document)
        assert "Unknown control state: 7" in result.errors

    def test_transition_errors(self):
        """Test that every faulty transition is reported in one pass."""
        self.document['transitions'] = [
            {"name": "t", "from": "0", "to": "9", "op": "clone2"},
            {"name": "t", "from": "0", "to": "1", "op": "jump"},
            {"name": "u", "from": "0", "top": "z", "to": "1", "op": "pop1"},
            {"name": "v", "from": "0", "to": "1", "op": "push", "sym": "⊥"},
            {"name": "w", "from": "0", "to": "1", "op": "push", "sym": "a", "level": 3},
            {"name": "x", "to": "1", "op": "pop2"},
        ]
        errors = self.validator.validate(self.document).errors
        assert "Unknown control state: 9" in errors
        assert "Transition name 't' is used twice" in errors
        assert "Unknown stack operation: jump" in errors
        assert "Unknown stack symbol: z" in errors
        assert "Transition v pushes the bottom symbol" in errors
        assert "Collapse level must be 1 or 2, got 3" in errors
        assert "Transition x lacks 'from'" in errors

    def test_duplicate_transition_warning(self):
        """Test that a repeated rule under another name is only a warning."""
        again = dict(self.document['transitions'][0], name="cl2")
        self.document['transitions'].append(again)
        result = self.validator.validate(self.document)
        assert result.is_valid
        assert "Duplicate transition cl2" in result.warnings


class TestBoundsValidator:
    """Test cases for BoundsValidator class."""

    def setup_method(self):
        """Setup test environment."""
        self.validator = BoundsValidator()

    def test_defaults_are_valid(self):
        """Test that the shipped defaults validate."""
        result = self.validator.validate(dict(DEFAULT_CONFIG))
        assert result.is_valid
        assert result.warnings == []

    @pytest.mark.parametrize("value", [0, -3, "5", True, None])
    def test_budget_must_be_positive_int(self, value):
        """Test rejected budget values."""
        result = self.validator.validate(dict(DEFAULT_CONFIG, max_radius=value))
        assert not result.is_valid
        assert result.errors[0].startswith("Budget max_radius must be a positive integer")

    def test_log_mode(self):
        """Test that unknown log modes are rejected."""
        result = self.validator.validate(dict(DEFAULT_CONFIG, log_mode="syslog"))
        assert "Invalid log_mode: syslog" in result.errors

    def test_escalation_warning(self):
        """Test the warning when escalation cannot take a step."""
        result = self.validator.validate(dict(DEFAULT_CONFIG, loops_extra_start=9, loops_extra_max=4))
        assert result.is_valid
        assert len(result.warnings) == 1
