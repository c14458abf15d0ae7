import os
import logging
from dotenv import load_dotenv

from services.config_loader import config_loader
from services.errors import ConfigurationError
from utils.input_validator import validate_depth_limit

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)

VALID_MODES = ('literal', 'normalized')
VALID_FORMATS = ('tree', 'bracket', 'json')
TRUE_VALUES = ('1', 'true', 'yes', 'on')


def get_setting(env_var: str, default: str = None) -> str:
    """
    Retrieves a setting from the environment (a .env file is loaded at import).
    Empty values count as unset.
    """
    value = os.environ.get(env_var)
    if value is None or value.strip() == '':
        return default
    return value.strip()


class Config:
    """Runtime configuration: CLI flag > environment > config file > built-in default"""

    DEPTH_LIMIT_ENV = 'SSPARSE_DEPTH_LIMIT'
    MODE_ENV = 'SSPARSE_MODE'
    LOG_LEVEL_ENV = 'SSPARSE_LOG_LEVEL'
    SYMMETRIC_ENV = 'SSPARSE_SYMMETRIC_QUERY'

    @classmethod
    def depth_limit(cls, flag_value=None) -> int:
        """Resolve the SSBN grounding depth limit; must be an integer >= 1"""
        raw = flag_value
        if raw is None:
            raw = get_setting(cls.DEPTH_LIMIT_ENV)
        if raw is None:
            raw = config_loader.get_mebn_config()['depth_limit']
        is_valid, message = validate_depth_limit(raw)
        if not is_valid:
            raise ConfigurationError(message)
        return int(raw)

    @classmethod
    def mode(cls, flag_value=None) -> str:
        """Resolve the ambiguity-resolution mode"""
        value = flag_value or get_setting(cls.MODE_ENV) or config_loader.get_semantic_config()['mode']
        if value not in VALID_MODES:
            raise ConfigurationError(f"mode must be one of {', '.join(VALID_MODES)}, got {value!r}")
        return value

    @classmethod
    def symmetric_query(cls, flag_value=None) -> bool:
        """Resolve whether the two-query variant is enabled"""
        if flag_value:
            return True
        env_value = get_setting(cls.SYMMETRIC_ENV)
        if env_value is not None:
            return env_value.lower() in TRUE_VALUES
        return bool(config_loader.get_semantic_config()['symmetric_query'])

    @classmethod
    def output_format(cls, flag_value=None) -> str:
        value = flag_value or config_loader.get_output_config()['format']
        if value not in VALID_FORMATS:
            raise ConfigurationError(f"format must be one of {', '.join(VALID_FORMATS)}, got {value!r}")
        return value

    @classmethod
    def log_level(cls, flag_value=None) -> str:
        return (flag_value or get_setting(cls.LOG_LEVEL_ENV, 'WARNING')).upper()

    @staticmethod
    def significant_digits() -> int:
        return int(config_loader.get_output_config()['significant_digits'])
