import logging
import os

logger = logging.getLogger(__name__)

DEFAULT_THREADS = 1
DEFAULT_RESAMPLES = 1000
DEFAULT_LOG_LEVEL = "INFO"


def _get_env(name: str):
    value = os.getenv(name)
    if value is None:
        return None
    value = value.strip()
    if (value.startswith('"') and value.endswith('"')) or (value.startswith("'") and value.endswith("'")):
        value = value[1:-1].strip()
    return value or None


class MissingSetting(RuntimeError):
    pass


def require_env(name: str) -> str:
    value = _get_env(name)
    if not value:
        raise MissingSetting(f"{name} is not set")
    return value


def env_int(name: str, default: int, minimum: int = 1) -> int:
    value = _get_env(name)
    if value is None:
        return default
    try:
        parsed = int(value)
    except ValueError:
        logger.warning("Ignoring malformed %s=%r, using %s", name, value, default)
        return default
    return max(parsed, minimum)


def threads() -> int:
    return env_int("ICX_THREADS", DEFAULT_THREADS)


def resamples() -> int:
    return env_int("ICX_RESAMPLES", DEFAULT_RESAMPLES)


def log_level() -> str:
    value = (_get_env("ICX_LOG_LEVEL") or DEFAULT_LOG_LEVEL).upper()
    if not isinstance(logging.getLevelName(value), int):
        return DEFAULT_LOG_LEVEL
    return value


def study_state_file():
    return _get_env("ICX_STUDY_STATE_FILE")


def database_url():
    return _get_env("DATABASE_URL")
