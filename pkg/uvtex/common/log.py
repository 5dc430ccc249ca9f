"""
Logging setup.

Modules log with bracketed tags ("[nicp] alpha=100 iter=3 ...") through
loggers under the "uvtex" namespace. The CLI calls configure_logging once.
"""

import logging
import sys

_ROOT = "uvtex"


def get_logger(name: str) -> logging.Logger:
    """Get the package logger for a module name like 'uvtex.fusion.poisson'."""
    if not name.startswith(_ROOT):
        name = f"{_ROOT}.{name}"
    return logging.getLogger(name)


def configure_logging(verbose: bool = False) -> None:
    """Install a single stderr handler on the package logger."""
    logger = logging.getLogger(_ROOT)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("[%(name)s] %(message)s"))
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.WARNING)
    logger.propagate = False
