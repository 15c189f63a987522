"""
Validators for system documents and run budgets.

Both validators collect every problem they find instead of stopping at the
first one, so a user can fix a document in one pass.
"""

from typing import Dict, Any, List, NamedTuple

from .constants import (
    BOTTOM,
    BUDGET_KEYS,
    ERROR_MESSAGES,
    OP_NAMES,
    VALIDATION_PATTERNS,
    WILDCARD,
    LogMode,
)


class ValidationResult(NamedTuple):
    """Result of a validation pass."""
    is_valid: bool
    errors: List[str]
    warnings: List[str]


class SystemValidator:
    """Validates a system document before it is turned into a CpsSpec."""

    def __init__(self):
        """Initialize the validator."""
        self.errors = []
        self.warnings = []

    def validate(self, document: Dict[str, Any]) -> ValidationResult:
        """
        Validate a complete system document.

        Args:
            document: Parsed JSON system document

        Returns:
            ValidationResult with validation status and any errors/warnings
        """
        self.errors = []
        self.warnings = []

        if not isinstance(document, dict):
            self.errors.append("System document must be a JSON object")
            return self._result()

        self._validate_required_fields(document)
        if self.errors:
            return self._result()

        self._validate_names(document)
        self._validate_transitions(document)

        return self._result()

    def _result(self) -> ValidationResult:
        return ValidationResult(
            is_valid=len(self.errors) == 0,
            errors=self.errors.copy(),
            warnings=self.warnings.copy()
        )

    def _validate_required_fields(self, document: Dict[str, Any]) -> None:
        """Validate that required fields are present and well typed."""
        required_fields = {
            'alphabet': list,
            'states': list,
            'initial': (str, int),
            'transitions': list,
        }
        for field, expected in required_fields.items():
            if field not in document:
                self.errors.append(f"Missing required field: {field}")
            elif not isinstance(document[field], expected):
                self.errors.append(f"Field {field} has the wrong type")

    def _validate_names(self, document: Dict[str, Any]) -> None:
        """Symbols and states must be distinct, declared and printable in the text formats."""
        bottom = str(document.get('bottom', BOTTOM))
        states = [str(q) for q in document['states']]
        symbols = [str(a) for a in document['alphabet']]

        if not states:
            self.errors.append("System declares no states")
        for name in states + symbols + [bottom]:
            if not VALIDATION_PATTERNS['name'].match(name):
                self.errors.append(f"Name {name!r} contains a reserved character")
        if len(set(states)) != len(states):
            self.errors.append("State names are not unique")
        if len(set(symbols)) != len(symbols):
            self.warnings.append("Alphabet lists a symbol twice")
        if str(document['initial']) not in states:
            self.errors.append(ERROR_MESSAGES['unknown_state'].format(state=document['initial']))

    def _validate_transitions(self, document: Dict[str, Any]) -> None:
        """Every transition references declared names and a known operation."""
        bottom = str(document.get('bottom', BOTTOM))
        states = {str(q) for q in document['states']}
        symbols = {str(a) for a in document['alphabet']} | {bottom}
        seen_names = set()
        seen_rules = set()

        for i, entry in enumerate(document['transitions']):
            if not isinstance(entry, dict):
                self.errors.append(f"Transition {i} is not an object")
                continue
            name = str(entry.get('name', f"t{i}"))
            if name in seen_names:
                self.errors.append(f"Transition name {name!r} is used twice")
            seen_names.add(name)

            for key in ('from', 'to'):
                if key not in entry:
                    self.errors.append(f"Transition {name} lacks {key!r}")
                elif str(entry[key]) not in states:
                    self.errors.append(ERROR_MESSAGES['unknown_state'].format(state=entry[key]))

            top = str(entry.get('top', WILDCARD))
            if top != WILDCARD and top not in symbols:
                self.errors.append(ERROR_MESSAGES['unknown_symbol'].format(symbol=top))

            op = str(entry.get('op', '')).lower()
            if op not in OP_NAMES:
                self.errors.append(ERROR_MESSAGES['unknown_op'].format(op=entry.get('op')))
                continue
            if op == 'push':
                sym = str(entry.get('sym', ''))
                if sym == bottom:
                    self.errors.append(ERROR_MESSAGES['push_bottom'].format(name=name))
                elif sym not in symbols:
                    self.errors.append(ERROR_MESSAGES['unknown_symbol'].format(symbol=sym))
                if entry.get('level', 1) not in (1, 2):
                    self.errors.append(ERROR_MESSAGES['bad_level'].format(level=entry.get('level')))

            key = (str(entry.get('from')), top, str(entry.get('to')), op,
                   str(entry.get('sym', '')), entry.get('level', 1))
            if key in seen_rules:
                self.warnings.append(f"Duplicate transition {name}")
            seen_rules.add(key)


class BoundsValidator:
    """Validates the budget and logging part of a configuration."""

    def validate(self, config: Dict[str, Any]) -> ValidationResult:
        errors = []
        warnings = []
        for key in BUDGET_KEYS:
            value = config.get(key)
            if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
                errors.append(f"Budget {key} must be a positive integer, got {value!r}")
        log_mode = config.get('log_mode', LogMode.CONSOLE.value)
        if not VALIDATION_PATTERNS['log_mode'].match(str(log_mode)):
            errors.append(f"Invalid log_mode: {log_mode}")
        if isinstance(config.get('loops_extra_start'), int) and isinstance(config.get('loops_extra_max'), int):
            if config['loops_extra_start'] > config['loops_extra_max']:
                warnings.append("loops_extra_start exceeds loops_extra_max; no escalation will happen")
        return ValidationResult(len(errors) == 0, errors, warnings)
