"""Logging configuration for the command-line surface."""

import logging

PACKAGE_LOGGER = "qlstm_multimic"


def configure_logging(level: str = "INFO", fmt: str | None = None) -> logging.Logger:
    """Install one stream handler on the package logger.

    Calling this twice replaces the handler instead of stacking a second one.

    Args:
        level: Logging level name
        fmt: Optional log record format

    Returns:
        The package logger
    """
    logger = logging.getLogger(PACKAGE_LOGGER)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)

    handler = logging.StreamHandler()
    handler.setFormatter(
        logging.Formatter(fmt or "%(asctime)s %(levelname)s %(name)s: %(message)s")
    )
    logger.addHandler(handler)
    logger.setLevel(level.upper())
    logger.propagate = False
    return logger
