"""
Configuration Loader Service
Handles loading and accessing parser / knowledge-base defaults from ssparse_config.json
"""
import copy
import logging
import json
import os


logger = logging.getLogger(__name__)


class ConfigLoader:
    """Singleton configuration loader for the ssparse services"""

    _instance = None
    _config = None

    # Configuration file path relative to project root
    CONFIG_FILENAME = 'config/ssparse_config.json'

    # Used for any section or key missing from the file
    DEFAULTS = {
        'grammar': {
            'normalization_tolerance': 1e-9,
        },
        'parser': {
            'enumeration_cap': 10000,
            'max_enumeration_tokens': 12
        },
        'mebn': {
            'depth_limit': 10,
            'row_tolerance': 1e-9,
            'enumeration_state_cap': 2 ** 20
        },
        'semantic': {
            'mode': 'literal',
            'symmetric_query': False,
            'has_probability_name': 'hasProbability',
            'neutral_row': [0.5, 0.5],
        },
        'output': {
            'format': 'bracket',
            'significant_digits': 6,
        },
    }

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(ConfigLoader, cls).__new__(cls)
            cls._instance._load_config()
        return cls._instance

    def _get_config_path(self):
        """Get absolute path to configuration file"""
        # Go up one level from services/ to project root
        services_dir = os.path.dirname(os.path.abspath(__file__))
        project_root = os.path.dirname(services_dir)
        return os.path.join(project_root, 'config', 'ssparse_config.json')

    def _load_config(self):
        """Load configuration from JSON file, falling back to built-in defaults"""
        config_path = self._get_config_path()
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                self._config = json.load(f)
            logger.info(f"Successfully loaded {self.CONFIG_FILENAME} from {config_path}")
        except FileNotFoundError:
            logger.error(f"{self.CONFIG_FILENAME} not found. Using built-in defaults.")
            self._config = {}
        except json.JSONDecodeError:
            logger.error(f"{self.CONFIG_FILENAME} is not valid JSON. Using built-in defaults.")
            self._config = {}

    def reload(self):
        """Re-read the configuration file (used by tests that patch the path)"""
        self._load_config()

    @property
    def config(self):
        """Get the full configuration dictionary"""
        return self._config or {}

    def _section(self, name):
        merged = copy.deepcopy(self.DEFAULTS.get(name, {}))
        merged.update(copy.deepcopy(self.config.get(name, {})))
        return merged

    def get_grammar_config(self):
        """Get grammar loading settings"""
        return self._section('grammar')

    def get_parser_config(self):
        """Get CYK / enumeration settings"""
        return self._section('parser')

    def get_mebn_config(self):
        """Get SSBN construction and inference settings"""
        return self._section('mebn')

    def get_semantic_config(self):
        """Get ambiguity-resolution settings"""
        return self._section('semantic')

    def get_output_config(self):
        """Get CLI output settings"""
        return self._section('output')


# Global instance
config_loader = ConfigLoader()
