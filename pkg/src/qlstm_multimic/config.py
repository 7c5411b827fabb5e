"""Runtime settings for qlstm-multimic."""

from pydantic_settings import BaseSettings, SettingsConfigDict


class HarnessSettings(BaseSettings):
    """Process-wide settings read from environment variables.

    Experiment parameters live in JSON config files (see models.config); these
    settings only cover how the process runs:
    1. Logging level and format
    2. Torch intra-op thread cap
    3. Debug-level numerical guards
    """

    log_level: str = "INFO"
    log_format: str = "%(asctime)s %(levelname)s %(name)s: %(message)s"
    num_threads: int | None = None  # None keeps torch's default
    debug_checks: bool = False  # non-finite recurrent state guard

    model_config = SettingsConfigDict(
        env_prefix="QLSTM_",
        env_file=".env",
        env_file_encoding="utf-8",
    )


def get_settings() -> HarnessSettings:
    """Load and return harness settings from environment variables."""
    return HarnessSettings()
