"""
Configuration module for the homreg toolkit.
"""

import os
import yaml
import logging
from typing import Dict, Any, Optional

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

ENV_PREFIX = "HOMREG_"


class Config:
    """
    Configuration manager for the homreg toolkit.
    """

    def __init__(self, config_path: Optional[str] = None):
        """
        Initialize the configuration with values from YAML file and environment.

        Args:
            config_path: Path to the YAML configuration file.
                         If None, default to config/config.yaml.
        """
        self.config_path = config_path or os.path.join(
            os.path.dirname(os.path.dirname(os.path.dirname(__file__))),
            "config",
            "config.yaml"
        )
        load_dotenv()
        self.config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """
        Load configuration from YAML file and override with environment variables.

        Returns:
            Dict containing configuration values.
        """
        try:
            if os.path.exists(self.config_path):
                with open(self.config_path, 'r', encoding='utf-8') as file:
                    config = yaml.safe_load(file) or {}
            else:
                logger.warning(f"Config file {self.config_path} not found. Using default values.")
                config = {}

            self._override_from_env(config)
            return self._set_defaults(config)
        except Exception as e:
            logger.error(f"Error loading configuration: {str(e)}")
            return self._set_defaults({})

    def _override_from_env(self, config: Dict[str, Any]) -> None:
        """
        Override configuration values with environment variables.

        Args:
            config: Configuration dictionary to update.
        """
        # Logging settings
        config['logging'] = config.get('logging') or {}
        config['logging']['level'] = os.environ.get(f'{ENV_PREFIX}LOGGING_LEVEL',
                                                   config['logging'].get('level', 'INFO'))
        config['logging']['file'] = os.environ.get(f'{ENV_PREFIX}LOGGING_FILE',
                                                  config['logging'].get('file', ''))

        # Enumeration bounds
        config['enumeration'] = config.get('enumeration') or {}
        config['enumeration']['max_height'] = int(os.environ.get(
            f'{ENV_PREFIX}MAX_HEIGHT', config['enumeration'].get('max_height', 4)))

        # Linearization guard
        config['linearize'] = config.get('linearize') or {}
        config['linearize']['max_rules'] = int(os.environ.get(
            f'{ENV_PREFIX}LINEARIZE_MAX_RULES', config['linearize'].get('max_rules', 1000000)))

        # Tetris-freeness fallback oracle
        config['tetris'] = config.get('tetris') or {}
        config['tetris']['oracle_height'] = int(os.environ.get(
            f'{ENV_PREFIX}TETRIS_ORACLE_HEIGHT', config['tetris'].get('oracle_height', 3)))

        # LDP decision
        config['ldp'] = config.get('ldp') or {}
        config['ldp']['tight_pumping_constant'] = str(os.environ.get(
            f'{ENV_PREFIX}TIGHT_PUMPING_CONSTANT',
            config['ldp'].get('tight_pumping_constant', 'False'))).lower() == 'true'

    def _set_defaults(self, config: Dict[str, Any]) -> Dict[str, Any]:
        """
        Set default values for configuration.

        Args:
            config: Configuration dictionary to update.

        Returns:
            Updated configuration dictionary.
        """
        # Logging defaults
        config.setdefault('logging', {})
        config['logging'].setdefault('level', 'INFO')
        config['logging'].setdefault('format', '%(asctime)s - %(name)s - %(levelname)s - %(message)s')
        config['logging'].setdefault('file', '')

        config.setdefault('enumeration', {})
        config['enumeration'].setdefault('max_height', 4)

        config.setdefault('linearize', {})
        config['linearize'].setdefault('max_rules', 1000000)

        config.setdefault('tetris', {})
        config['tetris'].setdefault('oracle_height', 3)

        config.setdefault('ldp', {})
        config['ldp'].setdefault('tight_pumping_constant', False)

        # Output file names written by the decide command
        config.setdefault('output', {})
        config['output'].setdefault('certificate_name', 'certificate.wtg')
        config['output'].setdefault('report_name', 'report.txt')
        config['output'].setdefault('image_name', 'image.wtah')

        return config

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get a configuration value.

        Args:
            key: The configuration key, can be nested using dot notation
                 (e.g., 'enumeration.max_height').
            default: Default value to return if key is not found.

        Returns:
            The configuration value or default.
        """
        parts = key.split('.')
        value = self.config

        for part in parts:
            if isinstance(value, dict) and part in value:
                value = value[part]
            else:
                return default

        return value

    def save(self) -> None:
        """Save current configuration to file."""
        try:
            with open(self.config_path, 'w', encoding='utf-8') as file:
                yaml.dump(self.config, file, default_flow_style=False)
            logger.info(f"Configuration saved to {self.config_path}")
        except Exception as e:
            logger.error(f"Error saving configuration: {str(e)}")


# Create a global instance of Config
config = Config()

LOG_LEVEL = config.get('logging.level', 'INFO')
LOG_FORMAT = config.get('logging.format')
LOG_FILE = config.get('logging.file', '')
DEFAULT_MAX_HEIGHT = config.get('enumeration.max_height', 4)
MAX_LINEARIZE_RULES = config.get('linearize.max_rules', 1000000)
TETRIS_ORACLE_HEIGHT = config.get('tetris.oracle_height', 3)
TIGHT_PUMPING_CONSTANT = config.get('ldp.tight_pumping_constant', False)
CERTIFICATE_NAME = config.get('output.certificate_name', 'certificate.wtg')
REPORT_NAME = config.get('output.report_name', 'report.txt')
IMAGE_NAME = config.get('output.image_name', 'image.wtah')
