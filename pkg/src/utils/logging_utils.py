import logging
import os
import sys
from logging.handlers import RotatingFileHandler

from src.config.config import LOG_LEVEL, LOG_FILE, LOG_FORMAT


def setup_logger(name, log_level=None, log_file=None):
    """
    Set up a logger with a console handler and an optional file handler.

    Console output goes to stderr; stdout is reserved for command results.

    Args:
        name (str): Name of the logger
        log_level (str, optional): Logging level. Defaults to value in config.
        log_file (str, optional): Path to log file. Defaults to value in config,
            an empty path disables the file handler.

    Returns:
        logging.Logger: Configured logger
    """
    if log_level is None:
        log_level = LOG_LEVEL
    if log_file is None:
        log_file = LOG_FILE

    # Convert string log level to logging constant
    numeric_level = getattr(logging, str(log_level).upper(), None)
    if not isinstance(numeric_level, int):
        numeric_level = logging.INFO

    logger = logging.getLogger(name)
    logger.setLevel(numeric_level)
    logger.propagate = False

    if logger.hasHandlers():
        logger.handlers.clear()

    console_formatter = logging.Formatter(LOG_FORMAT)
    file_formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(pathname)s:%(lineno)d - %(message)s'
    )

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(numeric_level)
    console_handler.setFormatter(console_formatter)
    logger.addHandler(console_handler)

    if not log_file:
        return logger

    try:
        directory = os.path.dirname(log_file)
        if directory:
            os.makedirs(directory, exist_ok=True)
        file_handler = RotatingFileHandler(
            log_file, maxBytes=10*1024*1024, backupCount=5  # 10MB with 5 backups
        )
        file_handler.setLevel(numeric_level)
        file_handler.setFormatter(file_formatter)
        logger.addHandler(file_handler)
    except Exception as e:
        logger.error(f"Failed to create file handler: {e}")

    return logger


def set_level(level):
    """
    Change the level of every logger created by setup_logger.

    Args:
        level (str): New logging level name (e.g. "DEBUG")
    """
    numeric_level = getattr(logging, str(level).upper(), logging.INFO)
    for name, logger in logging.Logger.manager.loggerDict.items():
        if isinstance(logger, logging.Logger) and name.startswith("src."):
            logger.setLevel(numeric_level)
            for handler in logger.handlers:
                handler.setLevel(numeric_level)
