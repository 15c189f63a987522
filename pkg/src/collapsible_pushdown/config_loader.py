"""
Configuration loader for the collapsible pushdown toolkit.

This module handles loading, merging, and managing budgets and logging
settings from JSON files, the CPK_BUDGET environment variable and
command line arguments.
"""

import json
import os
from pathlib import Path
from typing import Dict, Any, Mapping, Optional

from .constants import DEFAULT_CONFIG, BUDGET_ENV_VAR, ERROR_MESSAGES, VALIDATION_PATTERNS


class ConfigLoader:
    """Handles loading and merging configuration from multiple sources."""

    def __init__(self):
        """Initialize the ConfigLoader."""
        self.default_config = DEFAULT_CONFIG.copy()

    def get_default_config(self) -> Dict[str, Any]:
        """Get a copy of the default configuration."""
        return self.default_config.copy()

    def load_from_file(self, config_path: str) -> Dict[str, Any]:
        """
        Load configuration from a JSON file.

        Args:
            config_path: Path to the JSON configuration file

        Returns:
            Dict containing the defaults updated with the file's values

        Raises:
            FileNotFoundError: If the config file doesn't exist
            json.JSONDecodeError: If the config file is invalid JSON
            ValueError: If the file does not hold a JSON object
        """
        config_file = Path(config_path)

        if not config_file.exists():
            raise FileNotFoundError(ERROR_MESSAGES['file_not_found'].format(path=config_path))

        if not config_file.is_file():
            raise ValueError(f"Configuration path is not a file: {config_path}")

        with open(config_file, 'r', encoding='utf-8') as f:
            file_config = json.load(f)

        if not isinstance(file_config, dict):
            raise ValueError("Configuration file must contain a JSON object")

        config = self.default_config.copy()
        config.update(file_config)
        return config

    def apply_environment(self, config: Dict[str, Any],
                          environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
        """
        Apply budget overrides from the CPK_BUDGET environment variable.

        The value is a comma-separated list of ``key=int`` pairs, for example
        ``max_radius=8,fo_bound=10``.

        Raises:
            ValueError: If a pair is malformed or names an unknown key
        """
        environ = os.environ if environ is None else environ
        raw = environ.get(BUDGET_ENV_VAR, "").strip()
        if not raw:
            return config.copy()

        merged = config.copy()
        for pair in raw.split(','):
            if not pair.strip():
                continue
            match = VALIDATION_PATTERNS['budget_pair'].match(pair)
            if not match:
                raise ValueError(ERROR_MESSAGES['invalid_config'].format(
                    error=f"{BUDGET_ENV_VAR} entry {pair!r} is not key=int"))
            key, value = match.group(1), int(match.group(2))
            if key not in self.default_config:
                raise ValueError(ERROR_MESSAGES['invalid_config'].format(
                    error=f"{BUDGET_ENV_VAR} names unknown budget {key!r}"))
            merged[key] = value
        return merged

    def merge_cli_args(self, config: Dict[str, Any], cli_args: Dict[str, Any]) -> Dict[str, Any]:
        """
        Merge command line arguments into the configuration.

        Args:
            config: Base configuration dictionary
            cli_args: CLI arguments to merge in

        Returns:
            Dict containing the merged configuration
        """
        merged_config = config.copy()

        cli_mapping = {
            'max_words': 'max_words',
            'max_word_length': 'max_word_length',
            'radius': 'max_radius',
            'max_visited': 'max_visited',
            'state_budget': 'automaton_state_budget',
            'bound': 'fo_bound',
            'log_mode': 'log_mode',
            'log_path': 'log_path',
            'verbose': 'verbose',
        }

        for cli_key, config_key in cli_mapping.items():
            if cli_key in cli_args and cli_args[cli_key] is not None:
                merged_config[config_key] = cli_args[cli_key]

        return merged_config

    def save_config(self, config: Dict[str, Any], output_path: str) -> None:
        """
        Save configuration to a JSON file.

        Args:
            config: Configuration dictionary to save
            output_path: Path where to save the configuration
        """
        output_file = Path(output_path)
        output_file.parent.mkdir(parents=True, exist_ok=True)

        serializable_config = {}
        for key, value in config.items():
            serializable_config[key] = value.value if hasattr(value, 'value') else value

        with open(output_file, 'w', encoding='utf-8') as f:
            json.dump(serializable_config, f, indent=2, sort_keys=True)

    def load_and_prepare_config(self, config_path: Optional[str] = None,
                                cli_args: Optional[Dict[str, Any]] = None,
                                environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
        """
        Complete configuration loading workflow.

        Precedence is defaults, then the config file, then CPK_BUDGET,
        then explicit command line flags.
        """
        if config_path:
            config = self.load_from_file(config_path)
        else:
            config = self.get_default_config()

        config = self.apply_environment(config, environ)

        if cli_args:
            config = self.merge_cli_args(config, cli_args)

        return config
